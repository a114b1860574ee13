from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.special as sps
from hypothesis import given, settings, strategies as st

from scatterwalk import formulas
from scatterwalk.compose import gate_chain
from scatterwalk.graph import (
    BASIS_CHANGE,
    CATALOG,
    FILTER,
    PHASE_SHIFT,
    SEPARATOR,
    Wire,
    build_widget,
    chain,
    split_line,
    truncate_leads,
)
from scatterwalk.scattering import (
    MomentumError,
    UndefinedLengthError,
    check_momentum,
    curvature,
    effective_length,
    group_velocity,
    s_matrix,
    solve_scattering,
    stationary_phase_predict,
    stationary_phase_sum,
    transmission,
)

# frozen closed-form values: k -> (T_b, T_c straight, T_c cross, R_c, T_e, y)
FROZEN = {
    -0.3: (
        0.05402964934357363 + 0.22607619586189098j,
        0.4639874422172585 - 0.42096467638807106j,
        -0.4913490469083475 - 0.12544446972673154j,
        -0.4180118960249428 + 0.020932073221197573j,
        0.3708231182865531 + 0.4830251890230882j,
        -1.5769464573962708 - 2.3050162455353j,
    ),
    -1.0: (
        0.9745545086448597 - 0.1574738655296036j,
        -0.11137181908092073 - 0.41911427359956427j,
        -0.6516741249490605 + 0.42235671120833224j,
        -0.0013732368435946524 - 0.3231651399749181j,
        0.9858987370706553 - 0.11790851247107706j,
        0.44969019073230576 - 0.20580411291035752j,
    ),
    -2.7: (
        0.4417474519668222 - 0.49659504694231726j,
        -0.3966941710320787 - 0.5796119726963957j,
        0.5073779709849825 - 0.152232092462566j,
        -0.33243132476352866 - 0.05027677889307353j,
        0.407656288416409 + 0.49139865580907577j,
        1.1476162957528533 - 0.9425690478267998j,
    ),
}


@pytest.mark.parametrize("k", sorted(FROZEN))
def test_frozen_solver_values(k):
    tb, tc0, tc1, rc, te, y = FROZEN[k]
    basis = build_widget(BASIS_CHANGE)
    assert abs(transmission(build_widget(PHASE_SHIFT), "in", "out", k) - tb) < 1e-12
    assert abs(transmission(basis, "0_in", "0_out", k) - tc0) < 1e-12
    assert abs(transmission(basis, "0_in", "1_out", k) - tc1) < 1e-12
    assert abs(transmission(basis, "0_in", "0_in", k) - rc) < 1e-12
    assert abs(transmission(build_widget(SEPARATOR), "in", "out", k) - te) < 1e-12
    assert abs(formulas.filter_decoration(k) - y) < 1e-12


def test_wire_one_s_matrix():
    k = -1.234
    s = s_matrix(build_widget(Wire(1)), k).entries
    assert np.allclose(s, [[0, np.exp(1j * k)], [np.exp(1j * k), 0]], atol=1e-13)


@given(st.floats(-3.13, -0.01), st.integers(0, 6))
@settings(max_examples=40, deadline=None)
def test_wire_transmission(k, length):
    sol = solve_scattering(build_widget(Wire(length)), k, "in")
    assert abs(sol.transmissions["out"] - np.exp(1j * k * length)) < 1e-10
    assert abs(sol.reflection) < 1e-10


def test_phase_shift_design_point():
    sol = solve_scattering(build_widget(PHASE_SHIFT), -math.pi / 4, "in")
    assert abs(sol.transmissions["out"] - 1) < 1e-10
    assert abs(sol.reflection) < 1e-10


def test_basis_change_design_point():
    sol = solve_scattering(build_widget(BASIS_CHANGE), -math.pi / 4, "0_in")
    assert abs(sol.transmissions["0_out"] + 1j / math.sqrt(2)) < 1e-10
    assert abs(sol.transmissions["1_out"] + 1 / math.sqrt(2)) < 1e-10
    assert abs(sol.reflection) < 1e-10


@pytest.mark.parametrize("k", [-math.pi / 4, -math.pi / 2, -3 * math.pi / 4])
def test_separator_perfect_transmission(k):
    assert abs(abs(transmission(build_widget(SEPARATOR), "in", "out", k)) - 1) < 1e-10


@pytest.mark.parametrize(
    "widget,channel",
    [
        (PHASE_SHIFT, ("in", "out")),
        (SEPARATOR, ("in", "out")),
        (BASIS_CHANGE, ("0_in", "0_out")),
        (BASIS_CHANGE, ("0_in", "1_out")),
        (BASIS_CHANGE, ("0_in", "0_in")),
        (BASIS_CHANGE, ("0_in", "1_in")),
        (Wire(4), ("in", "out")),
    ],
)
def test_closed_forms_match_solver(widget, channel, band_grid):
    g = build_widget(widget)
    solved = transmission(g, channel[0], channel[1], band_grid)
    ref = formulas.reference_coefficient(widget, channel, band_grid)
    assert np.max(np.abs(solved - ref)) < 1e-10


def test_reference_coefficient_rejects_unknown():
    with pytest.raises(ValueError):
        formulas.reference_coefficient(FILTER, ("in", "out"), -1.0)


@pytest.mark.parametrize("kind", CATALOG, ids=lambda k: k.label)
def test_unitarity_reciprocity_flux(kind, band_grid):
    g = build_widget(kind)
    for k in band_grid[::5]:
        s = s_matrix(g, k)
        assert s.unitarity_defect() < 1e-10
        assert s.reciprocity_defect() < 1e-10
        sol = solve_scattering(g, k, g.terminal_names[0])
        assert sol.flux_defect() < 1e-10
        assert sol.residual < 1e-10


@pytest.mark.parametrize("kind", [k for k in CATALOG if k != SEPARATOR], ids=lambda k: k.label)
def test_bipartite_symmetry(kind, band_grid):
    g = build_widget(kind)
    for k in band_grid[::10]:
        a = np.abs(s_matrix(g, k).entries)
        b = np.abs(s_matrix(g, -math.pi - k).entries)
        assert np.max(np.abs(a - b)) < 1e-10


def test_separator_breaks_bipartite_symmetry(band_grid):
    g = build_widget(SEPARATOR)
    dev = max(
        abs(abs(transmission(g, "in", "out", k)) - abs(transmission(g, "in", "out", -math.pi - k))) for k in band_grid
    )
    assert dev > 1e-3


def test_singular_momentum_with_embedded_eigenstate():
    # the diamond carries an eigenvector at energy 0 that vanishes on the wire
    sol = solve_scattering(build_widget(PHASE_SHIFT), -math.pi / 2, "in")
    assert abs(sol.reflection + 1) < 1e-10
    assert sol.residual < 1e-10


@pytest.mark.parametrize("k", [0.0, -math.pi, 0.3, -1e-8])
def test_momentum_outside_band(k):
    with pytest.raises(MomentumError):
        check_momentum(k)


@pytest.mark.parametrize(
    "widget,channel,expected",
    [
        (PHASE_SHIFT, ("in", "out"), 1.0),
        (BASIS_CHANGE, ("0_in", "0_out"), 2.0),
        (BASIS_CHANGE, ("0_in", "1_out"), 2.0),
        (SEPARATOR, ("in", "out"), formulas.SEPARATOR_LENGTH_DESIGN),
        (Wire(7), ("in", "out"), 7.0),
    ],
)
def test_effective_lengths(widget, channel, expected):
    assert abs(effective_length(build_widget(widget), *channel, -math.pi / 4) - expected) < 1e-4


def test_separator_mirror_length():
    ell = effective_length(build_widget(SEPARATOR), "in", "out", -3 * math.pi / 4)
    assert abs(ell - formulas.SEPARATOR_LENGTH_MIRROR) < 1e-4


def test_undefined_length_for_blocked_channel():
    # nothing crosses between the two inputs of the basis change at -pi/4
    with pytest.raises(UndefinedLengthError):
        effective_length(build_widget(BASIS_CHANGE), "0_in", "1_in", -math.pi / 4)


def test_effective_lengths_add():
    parts = [PHASE_SHIFT, Wire(1), SEPARATOR, Wire(2), PHASE_SHIFT]
    g = chain(parts)
    total = sum(effective_length(build_widget(p), "in", "out", -math.pi / 4) for p in parts)
    assert abs(effective_length(g, "in", "out", -math.pi / 4) - total) < 1e-6


def test_group_velocity():
    assert group_velocity(-math.pi / 2) == pytest.approx(2.0)
    assert group_velocity(-math.pi / 4) == pytest.approx(math.sqrt(2))


@given(st.floats(-3.0, -0.15), st.floats(1, 300))
@settings(max_examples=25, deadline=None)
def test_wire_curvature_is_free(k, t):
    assert abs(curvature(build_widget(Wire(5)), "in", "out", k, t) - 2 * t * math.cos(k)) < 1e-3


def test_stationary_point_on_line():
    t = 200.0
    d = 2 * t * math.sin(math.pi / 4)
    k, amp = stationary_phase_predict(split_line(), "in", "out", d / 2, d / 2, t)
    assert abs(k + math.pi / 4) < 1e-8
    assert amp == pytest.approx(1 / math.sqrt(2 * math.pi * 2 * t * math.cos(math.pi / 4)), rel=1e-6)


@pytest.mark.parametrize("t", [200.0, 400.0])
def test_stationary_phase_against_bessel(t):
    d = round(math.sqrt(2) * t)
    _, amp = stationary_phase_predict(split_line(), "in", "out", d // 2, d - d // 2, t)
    envelope = max(abs(sps.jv(n, 2 * t)) for n in range(d - 5, d + 6))
    # two stationary points (k and -pi-k) of equal weight make up the envelope
    assert abs(2 * amp - envelope) < 0.15 * envelope
    total = stationary_phase_sum(split_line(), "in", "out", d // 2, d - d // 2, t)
    exact = (-1j) ** (d % 4) * sps.jv(d, 2 * t)
    assert abs(total - exact) < 0.15 * envelope


def test_no_stationary_point():
    with pytest.raises(ValueError, match="no stationary point"):
        stationary_phase_predict(split_line(), "in", "out", 500, 500, 10.0)


@pytest.mark.slow
def test_stationary_phase_phase_chain_against_evolution():
    from scatterwalk.evolve import evolve_state

    g = gate_chain("phase", 10)
    tg = truncate_leads(g, 2000)
    x = y = 500
    t = 700.0
    psi = np.zeros(tg.vertex_count, complex)
    psi[tg.lead_vertex("0_in", x)] = 1
    out = evolve_state(tg, psi, t)
    amps = np.abs(out[list(tg.leads["0_out"][1:])])
    peak = amps[y - 11 : y + 10].max()
    _, amp = stationary_phase_predict(g, "0_in", "0_out", x, y, t)
    assert abs(2 * amp - peak) < 0.2 * peak
