from __future__ import annotations

import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scatterwalk import formulas
from scatterwalk.circuit import (
    CircuitDescription,
    CircuitError,
    Gate,
    UnsoundTruncationError,
    assemble_computer,
    bell_circuit,
    circuit_unitary,
    compile_circuit,
    default_filter_count,
    evolution_time,
    gate_layer,
    ideal_distribution,
    layers_of,
    parse_circuit,
)
from scatterwalk.compose import extract_block
from scatterwalk.scattering import effective_length


def circuit_block(c: CircuitDescription, k: float) -> np.ndarray:
    g = compile_circuit(c)
    b = c.basis
    return extract_block(g, k, [f"{s}_in" for s in b], [f"{s}_out" for s in b]).forward


def test_hadamard_identity():
    assert formulas.global_phase_distance(formulas.hadamard_from_gates(), formulas.HADAMARD) < 1e-12


def test_parse_circuit():
    c = parse_circuit("# bell\nH 2\ncnot 2 1  # entangle\n")
    assert c.qubits == 2
    assert [str(g) for g in c.gates] == ["H 2", "CNOT 2 1"]
    assert parse_circuit("QUBITS 3\nUB 1").qubits == 3
    assert parse_circuit("").gates == ()


@pytest.mark.parametrize(
    "text,msg",
    [("CNOT 1 1", "differ"), ("UB 3\nQUBITS 2", "outside"), ("SWAP 1 2", "unknown gate"), ("UB x", "integers"), ("UC 1 2", "takes")],
)
def test_parse_errors(text, msg):
    with pytest.raises(CircuitError, match=msg):
        parse_circuit(text)


def test_hadamard_macro_expansion():
    c = CircuitDescription(1, (Gate("H", (1,)),)).expanded()
    assert [g.name for g in c.gates] == ["UB", "UB", "UC", "UB", "UB"]


def test_empty_circuit_bare_terminals():
    g = compile_circuit(CircuitDescription(1))
    assert g.vertex_count == 2 and g.edges == ()
    assert g.terminal("0_in").vertex == g.terminal("0_out").vertex


def test_single_uc_is_one_basis_change():
    g = compile_circuit(parse_circuit("UC 1"))
    # two unit spacers in front of one basis-change core
    assert g.vertex_count == 8 and len(g.edges) == 8


def test_entangler_shape():
    c = bell_circuit()
    layers = list(layers_of(c))
    assert len(layers) == 6
    g = compile_circuit(c)
    assert g.max_degree(with_leads=True) <= 3
    h = nx.Graph(list(g.edges))
    # basis changes couple 00 with 01 and 10 with 11; the crossing only relabels outputs
    assert nx.number_connected_components(h) == 2
    assert nx.has_path(h, g.terminal("00_in").vertex, g.terminal("11_out").vertex)
    assert not nx.has_path(h, g.terminal("00_in").vertex, g.terminal("01_out").vertex)


@pytest.mark.parametrize(
    "text",
    ["UB 1", "UC 1", "H 1", "CNOT 1 2", "CNOT 2 1", "H 2\nCNOT 2 1", "UC 1\nUB 2\nCNOT 1 2"],
)
def test_compiled_block_is_circuit_unitary(text):
    c = parse_circuit(text, qubits=2)
    t = circuit_block(c, -math.pi / 4)
    assert formulas.global_phase_distance(t.T, circuit_unitary(c)) < 1e-9


@pytest.mark.parametrize("name", ["UB", "UC", "CNOT"])
def test_layers_have_equal_lengths(name):
    basis = ["00", "01", "10", "11"]
    g = gate_layer(Gate(name, (1, 2) if name == "CNOT" else (2,)), basis)
    b = extract_block(g, -math.pi / 4, [f"{s}_in" for s in basis], [f"{s}_out" for s in basis])
    # every nonzero entry carries the same phase slope
    lengths = set()
    for i, s in enumerate(basis):
        for j, s2 in enumerate(basis):
            if abs(b.forward[i, j]) > 1e-6:
                lengths.add(round(effective_length(g, f"{s}_in", f"{s2}_out", -math.pi / 4), 6))
    assert len(lengths) == 1


@given(st.lists(st.sampled_from(["UB 1", "UB 2", "UC 1", "UC 2", "CNOT 1 2", "CNOT 2 1", "H 1"]), max_size=4))
@settings(max_examples=25, deadline=None)
def test_compile_property(lines):
    c = parse_circuit("\n".join(lines), qubits=2)
    g = compile_circuit(c)
    assert g.max_degree(with_leads=True) <= 3
    assert formulas.global_phase_distance(circuit_block(c, -math.pi / 4).T, circuit_unitary(c)) < 1e-8


def test_ideal_distribution_bell():
    p = ideal_distribution(bell_circuit())
    assert p["00"] == pytest.approx(0.5) and p["11"] == pytest.approx(0.5)


def test_empty_machine_time():
    m = assemble_computer(CircuitDescription(1), x=200, m_d=0)
    ell = 4 * (3 - 2 * math.sqrt(2))
    assert m.total_effective_length == pytest.approx(ell, abs=1e-12)
    assert m.evolution_time == pytest.approx(math.pi * math.floor((200 + ell) / (math.sqrt(2) * math.pi)))
    assert m.truncation_length == math.ceil(2 * (200 + ell))


def test_machine_length_matches_numerical():
    m = assemble_computer(parse_circuit("UC 1"), x=50, m_d=2)
    ell = effective_length(m.scattering_graph, "0_in", "0_out", -math.pi / 4)
    assert ell == pytest.approx(m.total_effective_length, abs=1e-4)


def test_bell_machine_degree():
    m = assemble_computer(bell_circuit(), x=400, m_d=8)
    assert m.graph.max_degree() == 3
    assert m.scattering_graph.max_degree(with_leads=True) == 3
    assert len(m.drains) == 8
    # every lead, drains included, reaches 2(x + l)
    assert all(len(p) - 1 >= 2 * (400 + m.total_effective_length) for p in m.finite.leads.values())


def test_unsound_truncation():
    with pytest.raises(UnsoundTruncationError, match="unsound truncation"):
        assemble_computer(bell_circuit(), x=400, truncation=10)
    m = assemble_computer(bell_circuit(), x=400, truncation=500, allow_unsound=True)
    assert m.unsound


def test_time_choice_phase():
    for x in (100, 400, 1234):
        t = evolution_time(x, 7.5)
        assert abs(np.exp(2j * t) - np.exp(-2j * t)) < 1e-9


def test_default_filter_count():
    assert default_filter_count(0) == 2
    assert default_filter_count(6) == 6
    assert default_filter_count(100) == 14
