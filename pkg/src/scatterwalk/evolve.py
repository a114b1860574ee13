"""Continuous-time quantum walk on finite graphs and the end-to-end run."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.special as special

from .bound import BoundState, find_bound_states
from .circuit import CompiledMachine, ideal_distribution
from .graph import GraphTopology, TruncatedGraph
from .scattering import s_matrix

DENSE_LIMIT = 2000
CHEBYSHEV_TAIL = 1e-14


class ConvergenceWarning(RuntimeWarning):
    pass


def evolve_state(g: GraphTopology | TruncatedGraph, psi: np.ndarray, t: float, method: str = "auto") -> np.ndarray:
    """Apply ``exp(-i A t)`` where ``A`` is the adjacency matrix of ``g``."""
    if isinstance(g, TruncatedGraph):
        g = g.graph
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    psi = np.asarray(psi, dtype=complex)
    if t == 0:
        return psi.copy()
    if method == "auto":
        method = "dense" if g.vertex_count <= DENSE_LIMIT else "chebyshev"
    if method == "dense":
        evals, evecs = np.linalg.eigh(g.adjacency())
        return evecs @ (np.exp(-1j * evals * t) * (evecs.T @ psi))
    if method == "chebyshev":
        return chebyshev_propagate(g, psi, t)
    raise ValueError(f"unknown method {method!r}")


def chebyshev_propagate(g: GraphTopology, psi: np.ndarray, t: float) -> np.ndarray:
    """Chebyshev expansion of ``exp(-i A t)`` with Bessel-function coefficients.

    ``A / a`` with ``a`` the maximum degree has spectrum inside ``[-1, 1]``, and
    ``exp(-i a t z) = J_0(at) + 2 sum_n (-i)^n J_n(at) T_n(z)``.
    """
    a = float(max(g.max_degree(with_leads=False), 1))
    h = g.sparse_adjacency() / a
    order = math.ceil(math.e * a * t / 2) + 40
    coeffs = special.jv(np.arange(order + 1), a * t)
    # drop the tail once the coefficients have decayed past the argument
    tail = np.nonzero((np.abs(coeffs) >= CHEBYSHEV_TAIL) | (np.arange(order + 1) <= a * t))[0]
    order = int(tail[-1]) + 1 if tail.size else 1
    prev = psi
    cur = h @ psi
    out = coeffs[0] * prev + 2 * (-1j) * coeffs[1] * cur
    phase = -1j
    for n in range(2, order + 1):
        nxt = 2 * (h @ cur) - prev
        phase *= -1j
        out += 2 * phase * coeffs[n] * nxt
        prev, cur = cur, nxt
    return out


def basis_state(size: int, index: int) -> np.ndarray:
    psi = np.zeros(size, dtype=complex)
    psi[index] = 1
    return psi


# --------------------------------------------------------------------------
# Wave packets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PacketSpec:
    wire: str
    center: int
    width: float
    momentum: float = -math.pi / 4

    def __post_init__(self):
        if self.width < 2:
            raise ValueError("packet width must be at least 2")
        if not -math.pi < self.momentum < 0:
            raise ValueError("packet momentum must lie in (-pi, 0)")


def make_packet(tg: TruncatedGraph, spec: PacketSpec) -> np.ndarray:
    """Gaussian packet on a lead, moving toward the graph.

    Amplitude ``exp(-i k0 x) exp(-(x - x0)^2 / (4 sigma^2))`` at distance ``x``
    from the attachment vertex, i.e. an incoming wave of momentum ``k0``.
    """
    length = tg.lead_length(spec.wire)
    if spec.center < 5 * spec.width:
        raise ValueError(
            f"packet would overlap widgets: center {spec.center} closer than 5 sigma = {5 * spec.width} to the graph"
        )
    if length - spec.center < 5 * spec.width:
        raise ValueError(f"packet center {spec.center} within 5 sigma of the end of lead {spec.wire!r} ({length})")
    x = np.arange(1, length + 1)
    amp = np.exp(-1j * spec.momentum * x - (x - spec.center) ** 2 / (4 * spec.width**2))
    psi = np.zeros(tg.vertex_count, dtype=complex)
    psi[list(tg.leads[spec.wire][1:])] = amp
    return psi / np.linalg.norm(psi)


def lead_profile(tg: TruncatedGraph, psi: np.ndarray, lead: str) -> np.ndarray:
    return np.asarray(psi)[list(tg.leads[lead])]


# --------------------------------------------------------------------------
# Propagator from scattering and bound states
# --------------------------------------------------------------------------

def _scattering_integral(g: GraphTopology, j: str, jp: str, distance: int, t: float, n: int) -> complex:
    ks = -np.pi + (np.arange(n) + 0.5) * np.pi / n
    names = g.terminal_names
    a, b = names.index(j), names.index(jp)
    total = 0j
    for k in ks:
        s = s_matrix(g, k).entries
        total += np.exp(-2j * t * np.cos(k)) * (
            s[a, b] * np.exp(1j * k * distance) + np.conj(s[b, a]) * np.exp(-1j * k * distance)
        )
    return total / (2 * n)


def bound_state_sum(states: list[BoundState], x: int, j: str, y: int, jp: str, t: float) -> complex:
    total = 0j
    for st in states:
        total += (
            np.exp(-1j * st.energy * t)
            * st.lead_amplitudes[jp]
            * np.conj(st.lead_amplitudes[j])
            * st.ratio ** (x + y)
        )
    return total


def reconstruct_propagator(
    g: GraphTopology,
    x: int,
    j: str,
    y: int,
    jp: str,
    t: float,
    k_grid_size: int = 2048,
    bound_states: list[BoundState] | None = None,
    include_bound: bool = True,
) -> complex:
    """``<y, j'| exp(-iHt) |x, j>`` for ``j != j'`` from the eigenfunction expansion."""
    if j == jp:
        raise ValueError("reconstruction needs two different leads")
    if x < 1 or y < 1:
        raise ValueError("positions must be at least 1")
    coarse = _scattering_integral(g, j, jp, x + y, t, k_grid_size)
    fine = _scattering_integral(g, j, jp, x + y, t, 2 * k_grid_size)
    if abs(fine - coarse) > 1e-4:
        warnings.warn(
            f"quadrature not converged: doubling the grid changed the result by {abs(fine - coarse):.2e}",
            ConvergenceWarning,
            stacklevel=2,
        )
    if not include_bound:
        return fine
    states = find_bound_states(g) if bound_states is None else bound_states
    return fine + bound_state_sum(states, x, j, y, jp, t)


def line_propagator(distance: int, t: float) -> complex:
    return (-1j) ** (distance % 4) * special.jv(distance, 2 * t)


# --------------------------------------------------------------------------
# End-to-end run
# --------------------------------------------------------------------------

@dataclass
class RunReport:
    valid_probability: float
    conditional_distribution: dict[str, float]
    ideal_distribution: dict[str, float]
    total_variation: float
    evolution_time: float
    parameters: dict
    vertex_probabilities: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("vertex_probabilities")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def vertex_table(machine: CompiledMachine, probabilities: np.ndarray) -> list[tuple[int, str, int, float]]:
    """Rows ``(vertex, wire label, position, probability)``; interior vertices have label ``-``."""
    label = {}
    for name, path in machine.finite.leads.items():
        for pos, v in enumerate(path[1:], 1):
            label[v] = (name, pos)
    return [
        (v, *label.get(v, ("-", 0)), float(p))
        for v, p in enumerate(probabilities)
    ]


def run_computer(
    machine: CompiledMachine,
    input_mode: str | PacketSpec = "vertex",
    method: str = "auto",
) -> RunReport:
    tg = machine.finite
    start_lead = machine.input_lead
    if isinstance(input_mode, PacketSpec):
        psi0 = make_packet(tg, input_mode)
        mode = {"mode": "packet", **asdict(input_mode)}
    elif input_mode == "vertex":
        psi0 = basis_state(tg.vertex_count, tg.lead_vertex(start_lead, machine.start_offset))
        mode = {"mode": "vertex"}
    else:
        raise ValueError(f"unknown input mode {input_mode!r}")
    psi = evolve_state(tg, psi0, machine.evolution_time, method)
    prob = np.abs(psi) ** 2
    per_wire = {}
    for s, (_, out) in machine.wire_labels.items():
        per_wire[s] = float(prob[list(tg.leads[out][1:])].sum())
    valid = sum(per_wire.values())
    cond = {s: p / valid for s, p in per_wire.items()} if valid > 0 else {s: 0.0 for s in per_wire}
    ideal = ideal_distribution(machine.circuit)
    tv = 0.5 * sum(abs(cond[s] - ideal[s]) for s in cond)
    params = {**machine.describe(), **mode, "method": method}
    return RunReport(
        valid_probability=float(valid),
        conditional_distribution=cond,
        ideal_distribution=ideal,
        total_variation=float(tv),
        evolution_time=machine.evolution_time,
        parameters=params,
        vertex_probabilities=prob,
    )
