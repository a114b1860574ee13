from __future__ import annotations

import json
import math
import warnings

import numpy as np
import pytest
import scipy.special as sps
from hypothesis import given, settings, strategies as st

from scatterwalk.circuit import CircuitDescription, assemble_computer, bell_circuit, parse_circuit
from scatterwalk.evolve import (
    ConvergenceWarning,
    PacketSpec,
    basis_state,
    evolve_state,
    line_propagator,
    make_packet,
    reconstruct_propagator,
    run_computer,
    vertex_table,
)
from scatterwalk.graph import PHASE_SHIFT, build_widget, split_line, star_graph, truncate_leads


@pytest.fixture(scope="module")
def long_line():
    return truncate_leads(split_line(), 2000)


def line_position(tg, x):
    """Signed position on a truncated split line: negative on ``in``."""
    return tg.lead_vertex("in", -x) if x < 0 else tg.lead_vertex("out", x)


def test_time_zero_is_identity():
    tg = truncate_leads(build_widget(PHASE_SHIFT), 20)
    psi = np.random.default_rng(1).normal(size=tg.vertex_count) + 0j
    assert np.array_equal(evolve_state(tg, psi, 0.0), psi)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        evolve_state(truncate_leads(split_line(), 5), np.ones(11), -1.0)


def test_line_propagator(long_line):
    t = 100.0
    out = evolve_state(long_line, basis_state(long_line.vertex_count, 0), t)
    for d in range(-300, 301):
        assert abs(out[line_position(long_line, d)] - line_propagator(abs(d), t)) < 1e-6
    # magnitudes agree with |J| directly
    ys = np.arange(1, 301)
    assert np.max(np.abs(np.abs(out[[long_line.lead_vertex("out", y) for y in ys]]) - np.abs(sps.jv(ys, 2 * t)))) < 1e-6


@pytest.mark.parametrize("t", [20.0, 30.0, 100.0])
def test_wavefront(long_line, t):
    out = evolve_state(long_line, basis_state(long_line.vertex_count, 0), t)
    far = [line_position(long_line, d) for d in range(-2000, 2001) if abs(d) > 2.5 * t]
    tail = np.sum(np.abs(out[far]) ** 2)
    n = np.arange(math.floor(2.5 * t) + 1, 2001)
    exact = 2 * np.sum(sps.jv(n, 2 * t) ** 2)
    assert abs(tail - exact) < 1e-12
    # the exact tail is 2.7e-7 at t = 20 and drops below 1e-8 from t ~ 28 on
    if t >= 30:
        assert tail < 1e-8


def test_dense_and_chebyshev_agree():
    tg = truncate_leads(build_widget(PHASE_SHIFT), 300)
    psi = basis_state(tg.vertex_count, tg.lead_vertex("in", 40))
    a = evolve_state(tg, psi, 50.0, "dense")
    b = evolve_state(tg, psi, 50.0, "chebyshev")
    assert np.max(np.abs(a - b)) < 1e-9


@given(st.floats(0, 200), st.integers(0, 2**31 - 1), st.sampled_from(["dense", "chebyshev"]))
@settings(max_examples=20, deadline=None)
def test_norm_preserved(t, seed, method):
    tg = truncate_leads(star_graph(3), 60)
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=tg.vertex_count) + 1j * rng.normal(size=tg.vertex_count)
    psi /= np.linalg.norm(psi)
    assert abs(np.linalg.norm(evolve_state(tg, psi, t, method)) - 1) < 1e-10


def test_packet_momentum_concentration():
    tg = truncate_leads(split_line(), 1000)
    psi = make_packet(tg, PacketSpec("in", 500, 10.0))
    amp = psi[list(tg.leads["in"][1:])]
    x = np.arange(1, len(amp) + 1)
    ks = np.linspace(-math.pi, math.pi, 4001)
    # the packet moves toward x = 0, i.e. in the e^{-ikx} direction with k = -pi/4
    spec = np.abs(np.exp(1j * np.outer(ks, x)) @ amp) ** 2
    near = np.abs(ks + math.pi / 4) <= 5 / 10
    assert spec[near].sum() / spec.sum() >= 0.99


def _center(tg, psi, lead):
    p = np.abs(psi[list(tg.leads[lead][1:])]) ** 2
    x = np.arange(1, len(p) + 1)
    return (p * x).sum() / p.sum()


@pytest.mark.parametrize("k0,speed", [(-math.pi / 4, math.sqrt(2)), (-math.pi / 2, 2.0)])
def test_packet_group_velocity(k0, speed):
    tg = truncate_leads(split_line(), 1500)
    t = 200.0
    psi = make_packet(tg, PacketSpec("in", 1000, 20.0, k0))
    out = evolve_state(tg, psi, t)
    moved = _center(tg, psi, "in") - _center(tg, out, "in")
    assert moved == pytest.approx(speed * t, rel=0.02)


def test_packet_spec_invariants():
    tg = truncate_leads(split_line(), 200)
    with pytest.raises(ValueError, match="overlap"):
        make_packet(tg, PacketSpec("in", 20, 10.0))
    with pytest.raises(ValueError, match="end of lead"):
        make_packet(tg, PacketSpec("in", 180, 10.0))
    with pytest.raises(ValueError):
        PacketSpec("in", 100, 1.0)
    with pytest.raises(ValueError):
        PacketSpec("in", 100, 5.0, 0.5)
    psi = make_packet(tg, PacketSpec("in", 100, 10.0))
    assert abs(np.linalg.norm(psi) - 1) < 1e-12


@pytest.mark.parametrize("x,y", [(1, 1), (7, 12)])
def test_reconstruct_line(x, y):
    t = 30.0
    got = reconstruct_propagator(split_line(), x, "in", y, "out", t, k_grid_size=1024)
    assert abs(got - line_propagator(x + y, t)) < 1e-4


def test_reconstruct_star_needs_bound_states():
    g = star_graph(3)
    tg = truncate_leads(g, 600)
    t = 100.0
    out = evolve_state(tg, basis_state(tg.vertex_count, tg.lead_vertex("leaf1", 1)), t, "dense")
    direct = out[tg.lead_vertex("leaf2", 2)]
    assert abs(reconstruct_propagator(g, 1, "leaf1", 2, "leaf2", t) - direct) < 1e-3
    assert abs(reconstruct_propagator(g, 1, "leaf1", 2, "leaf2", t, include_bound=False) - direct) > 1e-3


def test_reconstruct_time_zero():
    assert abs(reconstruct_propagator(star_graph(3), 1, "leaf1", 1, "leaf3", 0.0)) < 1e-6


def test_reconstruct_flags_coarse_grid():
    with pytest.warns(ConvergenceWarning):
        reconstruct_propagator(split_line(), 1, "in", 1, "out", 100.0, k_grid_size=16)


def test_reconstruct_preconditions():
    with pytest.raises(ValueError):
        reconstruct_propagator(split_line(), 1, "in", 1, "in", 1.0)
    with pytest.raises(ValueError):
        reconstruct_propagator(split_line(), 0, "in", 1, "out", 1.0)


@pytest.mark.slow
@pytest.mark.parametrize(
    "circuit,ideal",
    [
        (CircuitDescription(1), {"0": 1.0, "1": 0.0}),
        (parse_circuit("UC 1"), {"0": 0.5, "1": 0.5}),
        (bell_circuit(), {"00": 0.5, "01": 0.0, "10": 0.0, "11": 0.5}),
    ],
)
def test_run_packet_mode(circuit, ideal):
    m = assemble_computer(circuit, x=400)
    r = run_computer(m, PacketSpec(m.input_lead, 400, 25.0))
    assert r.valid_probability > 0
    assert sum(r.conditional_distribution.values()) == pytest.approx(1.0, abs=1e-9)
    for s, p in ideal.items():
        assert abs(r.conditional_distribution[s] - p) <= 0.05
    assert r.total_variation <= 0.05
    assert r.conditional_distribution.get("01", 0) < 0.02 and r.conditional_distribution.get("10", 0) < 0.02


@pytest.mark.slow
def test_run_truncation_soundness():
    c = parse_circuit("UB 1\nUC 1")
    m = assemble_computer(c, x=150, m_d=2)
    m2 = assemble_computer(c, x=150, m_d=2, truncation=2 * m.truncation_length)
    r, r2 = run_computer(m), run_computer(m2)
    assert abs(r.valid_probability - r2.valid_probability) < 1e-6
    for s in r.conditional_distribution:
        assert abs(r.conditional_distribution[s] - r2.conditional_distribution[s]) < 1e-6


def test_report_serialization():
    m = assemble_computer(parse_circuit("UC 1"), x=60, m_d=1)
    r = run_computer(m)
    doc = json.loads(r.to_json())
    assert set(doc) >= {"valid_probability", "conditional_distribution", "evolution_time", "parameters"}
    assert doc["parameters"]["mode"] == "vertex"
    rows = vertex_table(m, r.vertex_probabilities)
    assert len(rows) == m.graph.vertex_count
    assert sum(row[3] for row in rows) == pytest.approx(1.0, abs=1e-10)
    labelled = [row for row in rows if row[1] == "0_out"]
    assert sorted(row[2] for row in labelled) == list(range(1, m.truncation_length + 1))
