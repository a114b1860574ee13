"""Circuits over {CNOT, U_b, U_c} and their compilation into graphs.

A circuit on ``n`` qubits becomes ``2^n`` wires labelled by basis strings
(qubit 1 is the leftmost bit).  Each gate is one layer: a unit wire on every
wire followed by the gate's widgets, or by padding of equal effective length
on wires the gate does not touch.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import formulas
from .graph import (
    BASIS_CHANGE,
    FILTER,
    PHASE_SHIFT,
    SEPARATOR,
    GraphError,
    GraphTopology,
    Terminal,
    TruncatedGraph,
    Wire,
    build_widget,
    chain,
    disjoint_union,
    glue,
    truncate_leads,
)

GATE_NAMES = ("CNOT", "UB", "UC")
HADAMARD_EXPANSION = ("UB", "UB", "UC", "UB", "UB")

#: effective length at k = -pi/4 contributed by one layer of each gate
LAYER_LENGTH = {"CNOT": 2.0, "UB": 2.0, "UC": 3.0}


class CircuitError(ValueError):
    pass


class UnsoundTruncationError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]

    def __str__(self):
        return f"{self.name} {' '.join(map(str, self.qubits))}"


@dataclass(frozen=True)
class CircuitDescription:
    qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        arity = {"CNOT": 2, "UB": 1, "UC": 1, "H": 1}
        gates = tuple(g if isinstance(g, Gate) else Gate(g[0], tuple(g[1:])) for g in self.gates)
        for g in gates:
            if g.name not in arity:
                raise CircuitError(f"unknown gate {g.name!r}")
            if len(g.qubits) != arity[g.name]:
                raise CircuitError(f"{g.name} takes {arity[g.name]} qubit(s), got {g.qubits}")
            for q in g.qubits:
                if not 1 <= q <= self.qubits:
                    raise CircuitError(f"{g}: qubit {q} outside 1..{self.qubits}")
            if g.name == "CNOT" and g.qubits[0] == g.qubits[1]:
                raise CircuitError(f"{g}: control and target must differ")
        object.__setattr__(self, "gates", gates)

    def expanded(self) -> "CircuitDescription":
        gates = []
        for g in self.gates:
            if g.name == "H":
                gates.extend(Gate(name, g.qubits) for name in HADAMARD_EXPANSION)
            else:
                gates.append(g)
        return CircuitDescription(self.qubits, tuple(gates))

    @property
    def basis(self) -> list[str]:
        return ["".join(bits) for bits in itertools.product("01", repeat=self.qubits)]


def parse_circuit(text: str, qubits: int | None = None) -> CircuitDescription:
    """Read the line format ``CNOT c t`` / ``UB q`` / ``UC q`` / ``H q``.

    ``#`` starts a comment.  An optional ``QUBITS n`` line fixes the register
    size; otherwise it is the largest qubit index used (at least 1).
    """
    gates = []
    declared = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name = parts[0].upper()
        try:
            args = tuple(int(p) for p in parts[1:])
        except ValueError:
            raise CircuitError(f"line {lineno}: qubit indices must be integers: {raw!r}") from None
        if name == "QUBITS":
            if len(args) != 1:
                raise CircuitError(f"line {lineno}: QUBITS takes one integer")
            declared = args[0]
            continue
        if name not in ("CNOT", "UB", "UC", "H"):
            raise CircuitError(f"line {lineno}: unknown gate {parts[0]!r}")
        gates.append(Gate(name, args))
    n = qubits or declared or max((q for g in gates for q in g.qubits), default=1)
    try:
        return CircuitDescription(n, tuple(gates))
    except CircuitError as exc:
        raise CircuitError(f"invalid circuit: {exc}") from None


def load_circuit(path, qubits: int | None = None) -> CircuitDescription:
    with open(path) as fh:
        return parse_circuit(fh.read(), qubits)


def gate_matrix(gate: Gate, n: int) -> np.ndarray:
    """Full 2^n x 2^n unitary of one gate, basis ordered by wire label."""
    dim = 2**n
    if gate.name == "CNOT":
        c, t = gate.qubits
        u = np.zeros((dim, dim), dtype=complex)
        for i in range(dim):
            bits = [(i >> (n - q)) & 1 for q in range(1, n + 1)]
            if bits[c - 1]:
                bits[t - 1] ^= 1
            j = int("".join(map(str, bits)), 2)
            u[j, i] = 1
        return u
    single = {"UB": formulas.U_B, "UC": formulas.U_C, "H": formulas.HADAMARD}[gate.name]
    (q,) = gate.qubits
    return np.kron(np.kron(np.eye(2 ** (q - 1)), single), np.eye(2 ** (n - q)))


def circuit_unitary(circuit: CircuitDescription) -> np.ndarray:
    u = np.eye(2**circuit.qubits, dtype=complex)
    for g in circuit.expanded().gates:
        u = gate_matrix(g, circuit.qubits) @ u
    return u


def ideal_distribution(circuit: CircuitDescription) -> dict[str, float]:
    amps = circuit_unitary(circuit)[:, 0]
    return {s: float(abs(a) ** 2) for s, a in zip(circuit.basis, amps)}


# --------------------------------------------------------------------------
# Compilation
# --------------------------------------------------------------------------

def _io_names(s: str) -> dict[str, str]:
    return {"in": f"{s}_in", "out": f"{s}_out"}


def _wire(s: str, length: int = 1) -> GraphTopology:
    return build_widget(Wire(length)).renamed(_io_names(s))


def _flip(s: str, q: int) -> str:
    return s[: q - 1] + ("1" if s[q - 1] == "0" else "0") + s[q:]


def _gate_part(gate: Gate, basis: list[str]) -> GraphTopology:
    if gate.name == "UB":
        (q,) = gate.qubits
        parts = [
            build_widget(PHASE_SHIFT).renamed(_io_names(s)) if s[q - 1] == "1" else _wire(s)
            for s in basis
        ]
        return disjoint_union(parts)
    if gate.name == "UC":
        (q,) = gate.qubits
        parts = []
        for s in basis:
            if s[q - 1] == "0":
                s1 = _flip(s, q)
                parts.append(
                    build_widget(BASIS_CHANGE).renamed(
                        {"0_in": f"{s}_in", "0_out": f"{s}_out", "1_in": f"{s1}_in", "1_out": f"{s1}_out"}
                    )
                )
        return disjoint_union(parts)
    if gate.name == "CNOT":
        c, t = gate.qubits
        index = {s: i for i, s in enumerate(basis)}
        dim = len(basis)
        edges, terms = [], []
        for s in basis:
            dest = _flip(s, t) if s[c - 1] == "1" else s
            edges.append((index[s], dim + index[dest]))
            terms.append(Terminal(f"{s}_in", index[s], "input"))
        terms += [Terminal(f"{s}_out", dim + index[s], "output") for s in basis]
        return GraphTopology(2 * dim, tuple(edges), tuple(terms))
    raise CircuitError(f"gate {gate.name} must be expanded before compilation")


def _series(g1: GraphTopology, g2: GraphTopology, basis: list[str]) -> GraphTopology:
    return glue(g1, g2, [(f"{s}_out", f"{s}_in") for s in basis])


def _ordered(g: GraphTopology, basis: list[str]) -> GraphTopology:
    order = [f"{s}_in" for s in basis] + [f"{s}_out" for s in basis]
    rest = [t for t in g.terminals if t.name not in order]
    return g.with_terminals([g.terminal(n) for n in order] + rest)


def gate_layer(gate: Gate, basis: list[str]) -> GraphTopology:
    spacer = disjoint_union([_wire(s) for s in basis])
    return _ordered(_series(spacer, _gate_part(gate, basis), basis), basis)


def compile_circuit(circuit: CircuitDescription) -> GraphTopology:
    """Graph of the circuit with ``{s}_in``/``{s}_out`` terminals on every wire."""
    circuit = circuit.expanded()
    basis = circuit.basis
    g = disjoint_union([_wire(s, 0) for s in basis])
    for gate in circuit.gates:
        g = _series(g, gate_layer(gate, basis), basis)
    return _ordered(g, basis)


def circuit_effective_length(circuit: CircuitDescription) -> float:
    return sum(LAYER_LENGTH[g.name] for g in circuit.expanded().gates)


# --------------------------------------------------------------------------
# Assembly of the full machine
# --------------------------------------------------------------------------

def default_filter_count(gate_count: int) -> int:
    return 2 * math.ceil(math.log2(gate_count + 2))


def evolution_time(x: float, ell: float) -> float:
    return math.pi * math.floor((x + ell) / (math.sqrt(2) * math.pi))


def input_prefix(m_d: int) -> GraphTopology:
    """``m_d`` filters one edge apart, then a unit wire, then the separator."""
    parts: list = []
    for _ in range(m_d):
        parts += [FILTER, Wire(1)]
    parts.append(SEPARATOR)
    return chain(parts)


def prefix_effective_length(m_d: int) -> float:
    return 3.0 * m_d + formulas.SEPARATOR_LENGTH_DESIGN


@dataclass(frozen=True)
class CompiledMachine:
    circuit: CircuitDescription
    scattering_graph: GraphTopology
    finite: TruncatedGraph
    wire_labels: dict[str, tuple[str, str]]
    total_effective_length: float
    start_offset: int
    evolution_time: float
    filter_count: int
    truncation_length: int
    unsound: bool = False
    drains: tuple[str, ...] = field(default=())

    @property
    def graph(self) -> GraphTopology:
        return self.finite.graph

    @property
    def input_lead(self) -> str:
        return self.wire_labels[self.circuit.basis[0]][0]

    def describe(self) -> dict:
        return {
            "qubits": self.circuit.qubits,
            "gates": [str(g) for g in self.circuit.gates],
            "vertices": self.graph.vertex_count,
            "edges": len(self.graph.edges),
            "total_effective_length": self.total_effective_length,
            "start_offset": self.start_offset,
            "evolution_time": self.evolution_time,
            "filter_count": self.filter_count,
            "truncation_length": self.truncation_length,
            "unsound": self.unsound,
        }


def assemble_computer(
    circuit: CircuitDescription,
    x: int = 400,
    m_d: int | None = None,
    truncation: int | str | None = "auto",
    allow_unsound: bool = False,
) -> CompiledMachine:
    """Filters and separator on wire 0, the compiled circuit, truncated leads."""
    if x < 1:
        raise CircuitError("start offset x must be at least 1")
    expanded = circuit.expanded()
    if m_d is None:
        m_d = default_filter_count(len(expanded.gates))
    if m_d < 0:
        raise CircuitError("m_d must be non-negative")
    basis = expanded.basis
    zero = basis[0]

    body = compile_circuit(expanded)
    prefix = input_prefix(m_d)
    g = glue(prefix, body, [("out", f"{zero}_in")])
    g = g.renamed({"in": f"{zero}_in"})
    g = _ordered(g, basis)
    if g.max_degree(with_leads=True) > 3:
        raise GraphError(f"assembled graph has degree {g.max_degree()} > 3")

    ell = prefix_effective_length(m_d) + circuit_effective_length(expanded)
    t = evolution_time(x, ell)
    needed = 2 * (x + ell)
    if truncation in (None, "auto"):
        length = math.ceil(needed)
        unsound = False
    else:
        length = int(truncation)
        unsound = length < needed
        if unsound and not allow_unsound:
            raise UnsoundTruncationError(
                f"unsound truncation: lead length {length} < 2(x + l) = {needed:.3f}"
            )
    if length < x:
        raise UnsoundTruncationError(f"unsound truncation: start vertex x={x} beyond lead length {length}")
    finite = truncate_leads(g, length)
    drains = tuple(t.name for t in g.terminals_of_kind("drain"))
    return CompiledMachine(
        circuit=expanded,
        scattering_graph=g,
        finite=finite,
        wire_labels={s: (f"{s}_in", f"{s}_out") for s in basis},
        total_effective_length=float(ell),
        start_offset=x,
        evolution_time=t,
        filter_count=m_d,
        truncation_length=length,
        unsound=unsound,
        drains=drains,
    )


def bell_circuit() -> CircuitDescription:
    """Hadamard on qubit 2 then CNOT with qubit 2 as control."""
    return CircuitDescription(2, (Gate("H", (2,)), Gate("CNOT", (2, 1))))


def layers_of(circuit: CircuitDescription) -> Iterable[GraphTopology]:
    basis = circuit.basis
    return (gate_layer(g, basis) for g in circuit.expanded().gates)
