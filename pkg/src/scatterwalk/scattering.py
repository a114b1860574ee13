"""Scattering states of graphs with semi-infinite leads.

For momentum ``k`` in the band ``(-pi, 0)`` the incoming scattering state from
lead ``j`` reads ``delta_{jj'} e^{-ikx} + S_{jj'} e^{ikx}`` on lead ``j'``,
with ``x = 0`` at the attachment vertex.  Substituting this ansatz into the
eigenvalue equation leaves one linear equation per graph vertex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .graph import GraphTopology

BAND_GUARD = 1e-6
CONDITION_LIMIT = 1e12
TRANSMISSION_FLOOR = 1e-6
FIRST_DIFF_STEP = 1e-5
SECOND_DIFF_STEP = 1e-4


class MomentumError(ValueError):
    """Momentum outside the open band (-pi, 0) or too close to its edges."""


class ScatteringError(RuntimeError):
    """The scattering system could not be solved reliably."""


class UndefinedLengthError(ValueError):
    """The transmission is too small for its phase to carry information."""


def check_momentum(k: float) -> float:
    k = float(k)
    if not -np.pi < k < 0:
        raise MomentumError(f"momentum k={k!r} outside the band (-pi, 0)")
    if abs(np.sin(k)) <= BAND_GUARD:
        raise MomentumError(f"momentum k={k!r} within {BAND_GUARD} of a band edge")
    return k


def group_velocity(k):
    return -2 * np.sin(k)


def scattering_matrix_system(g: GraphTopology, k: float) -> np.ndarray:
    """Matrix ``A + e^{ik} L - 2 cos k`` with ``L`` the diagonal lead counts."""
    m = g.adjacency().astype(complex)
    m[np.diag_indices_from(m)] += np.exp(1j * k) * g.lead_counts() - 2 * np.cos(k)
    return m


def _solve(m: np.ndarray, rhs: np.ndarray, terminal_vertices: np.ndarray, k: float) -> np.ndarray:
    n = m.shape[0]
    if n == 0:
        return np.zeros_like(rhs)
    cond = np.linalg.cond(m, 1) if n <= 400 else _cond1_estimate(m)
    if cond < CONDITION_LIMIT:
        return sla.solve(m, rhs)
    # An eigenvector confined to the interior (zero on every attachment vertex)
    # makes the system singular without affecting the S-matrix.
    u, s, vh = np.linalg.svd(m)
    null = vh[s < s[0] * 1e-10].conj()
    if null.size and np.max(np.abs(null[:, terminal_vertices])) > 1e-8:
        raise ScatteringError(
            f"scattering system singular at k={k!r} (condition {cond:.3g}) "
            "and the degeneracy reaches the leads"
        )
    inv_s = np.where(s > s[0] * 1e-10, 1 / s, 0.0)
    psi = vh.conj().T @ (inv_s[:, None] * (u.conj().T @ rhs))
    if np.linalg.norm(m @ psi - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        raise ScatteringError(f"scattering system inconsistent at k={k!r} (condition {cond:.3g})")
    return psi


def _cond1_estimate(m: np.ndarray) -> float:
    from scipy.sparse.linalg import LinearOperator, onenormest

    lu = sla.lu_factor(m, check_finite=False)
    if np.any(np.abs(np.diag(lu[0])) == 0):
        return np.inf
    n = m.shape[0]
    inv = LinearOperator(
        (n, n),
        matvec=lambda v: sla.lu_solve(lu, v),
        rmatvec=lambda v: sla.lu_solve(lu, v, trans=2),
        dtype=complex,
    )
    return float(np.abs(m).sum(axis=0).max() * onenormest(inv))


@dataclass(frozen=True)
class ScatteringSolution:
    k: float
    input: str
    reflection: complex
    transmissions: dict[str, complex]
    interior: np.ndarray
    residual: float

    @property
    def energy(self) -> float:
        return 2 * np.cos(self.k)

    def flux_defect(self) -> float:
        total = abs(self.reflection) ** 2 + sum(abs(t) ** 2 for t in self.transmissions.values())
        return abs(total - 1)


@dataclass(frozen=True)
class SMatrix:
    k: float
    terminals: tuple[str, ...]
    entries: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> complex:
        a, b = pair
        return self.entries[self.terminals.index(a), self.terminals.index(b)]

    def unitarity_defect(self) -> float:
        s = self.entries
        return float(np.max(np.abs(s.conj().T @ s - np.eye(len(s))))) if s.size else 0.0

    def reciprocity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T))) if self.entries.size else 0.0


def _scattering_columns(g: GraphTopology, k: float, inputs: list[int]):
    terms = g.terminals
    tv = np.array([t.vertex for t in terms], dtype=int)
    m = scattering_matrix_system(g, k)
    rhs = np.zeros((g.vertex_count, len(inputs)), dtype=complex)
    for col, j in enumerate(inputs):
        rhs[tv[j], col] = 2j * np.sin(k)
    psi = _solve(m, rhs, tv, k)
    s = psi[tv, :].T.copy()  # row = input lead, column = every lead
    for col, j in enumerate(inputs):
        s[col, j] -= 1
    resid = np.linalg.norm(m @ psi - rhs, axis=0)
    return s, psi, resid


def solve_scattering(g: GraphTopology, k: float, input: str) -> ScatteringSolution:
    k = check_momentum(k)
    names = g.terminal_names
    j = names.index(g.terminal(input).name)
    s, psi, resid = _scattering_columns(g, k, [j])
    row = s[0]
    return ScatteringSolution(
        k=k,
        input=input,
        reflection=complex(row[j]),
        transmissions={n: complex(row[i]) for i, n in enumerate(names) if i != j},
        interior=psi[:, 0],
        residual=float(resid[0]),
    )


def s_matrix(g: GraphTopology, k: float) -> SMatrix:
    """Full S-matrix; ``entries[j, j']`` is the amplitude from lead j into lead j'."""
    k = check_momentum(k)
    n = len(g.terminals)
    s, _, _ = _scattering_columns(g, k, list(range(n)))
    return SMatrix(k, tuple(g.terminal_names), s)


def transmission(g: GraphTopology, source: str, target: str, k) -> np.ndarray | complex:
    """``S[source, target]`` at one momentum or along an array of momenta."""
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    names = g.terminal_names
    j, jp = names.index(source), names.index(target)
    out = np.empty(len(ks), dtype=complex)
    for i, kk in enumerate(ks):
        s, _, _ = _scattering_columns(g, check_momentum(kk), [j])
        out[i] = s[0, jp]
    return out if np.ndim(k) else complex(out[0])


def s_matrix_sweep(g: GraphTopology, ks) -> np.ndarray:
    """S-matrices on a grid of momenta, shape ``(len(ks), N, N)``."""
    return np.array([s_matrix(g, k).entries for k in ks])


def _checked_transmission(g, j, jp, ks):
    t = transmission(g, j, jp, np.asarray(ks))
    if np.min(np.abs(t)) <= TRANSMISSION_FLOOR:
        raise UndefinedLengthError(
            f"|T_{j},{jp}| = {np.min(np.abs(t)):.3g} near k={ks[len(ks) // 2]!r}; effective length undefined"
        )
    return t


def effective_length(g: GraphTopology, j: str, jp: str, k: float, h: float = FIRST_DIFF_STEP) -> float:
    """d/dk arg T_{j,j'} by central differences."""
    k = check_momentum(k)
    tm, _, tp = _checked_transmission(g, j, jp, [k - h, k, k + h])
    return float(np.angle(tp / tm) / (2 * h))


def phase_second_derivative(g: GraphTopology, j: str, jp: str, k: float, h: float = SECOND_DIFF_STEP) -> float:
    k = check_momentum(k)
    tm, t0, tp = _checked_transmission(g, j, jp, [k - h, k, k + h])
    return float((np.angle(tp / t0) - np.angle(t0 / tm)) / h**2)


def curvature(g: GraphTopology, j: str, jp: str, k: float, t: float) -> float:
    return 2 * t * np.cos(k) + phase_second_derivative(g, j, jp, k)


def unwrapped_phase(values) -> np.ndarray:
    """Continuous phase along a sorted momentum grid."""
    return np.unwrap(np.angle(np.asarray(values)))


# --------------------------------------------------------------------------
# Stationary phase
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StationaryPoint:
    k: float
    transmission: complex
    curvature: float

    @property
    def amplitude(self) -> float:
        return abs(self.transmission) / np.sqrt(2 * np.pi * abs(self.curvature))


def _stationary_roots(g, j, jp, distance, t, lo, hi, points=2000):
    def f(k):
        try:
            return distance + effective_length(g, j, jp, k) + 2 * t * np.sin(k)
        except UndefinedLengthError:
            return np.nan

    grid = np.linspace(lo, hi, points)
    vals = np.array([f(k) for k in grid])
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if np.isnan(fa) or np.isnan(fb) or np.sign(fa) == np.sign(fb):
            continue
        for _ in range(60):
            mid = 0.5 * (a + b)
            fm = f(mid)
            if np.isnan(fm):
                break
            if np.sign(fm) == np.sign(fa):
                a, fa = mid, fm
            else:
                b = mid
            if b - a < 1e-13:
                break
        roots.append(0.5 * (a + b))
    return roots


def stationary_points(g: GraphTopology, j: str, jp: str, x: int, y: int, t: float, points: int = 2000):
    """All momenta in the band where ``x + y + l(k) = v(k) t``."""
    eps = 1e-3
    roots = _stationary_roots(g, j, jp, x + y, t, -np.pi + eps, -eps, points)
    return [StationaryPoint(k, transmission(g, j, jp, k), curvature(g, j, jp, k, t)) for k in roots]


def stationary_phase_predict(g: GraphTopology, j: str, jp: str, x: int, y: int, t: float) -> tuple[float, float]:
    """Stationary momentum on the branch ``-pi/2 < k < 0`` and the amplitude estimate."""
    eps = 1e-3
    roots = _stationary_roots(g, j, jp, x + y, t, -np.pi / 2, -eps)
    if not roots:
        raise ValueError(f"no stationary point in (-pi/2, 0) for x+y={x + y}, t={t}")
    pts = [StationaryPoint(k, transmission(g, j, jp, k), curvature(g, j, jp, k, t)) for k in roots]
    best = max(pts, key=lambda p: p.amplitude)
    return best.k, best.amplitude


def stationary_phase_sum(g: GraphTopology, j: str, jp: str, x: int, y: int, t: float) -> complex:
    """Asymptotic propagator: coherent sum over every stationary point in the band."""
    total = 0j
    for p in stationary_points(g, j, jp, x, y, t):
        phase = p.k * (x + y) - 2 * t * np.cos(p.k)
        total += (
            p.transmission
            * np.exp(1j * phase + 1j * np.sign(p.curvature) * np.pi / 4)
            / np.sqrt(2 * np.pi * abs(p.curvature))
        )
    return total
