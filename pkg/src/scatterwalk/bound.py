"""Bound states of graphs with semi-infinite leads.

On every lead a bound state decays as ``(z)^x`` with ``z = +e^{-kappa}``
(energy ``2 cosh kappa``) or ``z = -e^{-kappa}`` (energy ``-2 cosh kappa``).
Eliminating the leads leaves the real symmetric matrix
``B(kappa) = A + z L - (z + 1/z)`` on the graph vertices, and bound states are
its null vectors.  Its eigenvalues are strictly monotone in ``kappa`` (all
decreasing for ``+``, all increasing for ``-``), so each one crosses zero at
most once; the scan follows sign changes of the sorted eigenvalues, which is
the determinant sign change resolved eigenvalue by eigenvalue.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphTopology

KAPPA_MIN = 1e-8
GRID_STEP = 1e-4
KAPPA_TOL = 1e-12


@dataclass(frozen=True)
class BoundState:
    kappa: float
    sign: int
    lead_amplitudes: dict[str, complex]
    interior: np.ndarray
    residual: float

    @property
    def energy(self) -> float:
        return self.sign * 2 * np.cosh(self.kappa)

    @property
    def ratio(self) -> float:
        """Amplitude ratio between successive lead vertices."""
        return self.sign * np.exp(-self.kappa)

    def lead_amplitude(self, lead: str, x: int) -> float:
        return self.lead_amplitudes[lead] * self.ratio**x


def boundary_matrix(g: GraphTopology, kappa, sign: int) -> np.ndarray:
    """``B(kappa)`` for one or many decay rates (stacked along axis 0)."""
    kappa = np.asarray(kappa, dtype=float)
    z = sign * np.exp(-kappa)
    e = z + 1 / z
    a = g.adjacency()
    leads = g.lead_counts().astype(float)
    n = g.vertex_count
    diag = z[..., None] * leads - e[..., None]
    out = np.broadcast_to(a, kappa.shape + (n, n)).copy()
    idx = np.arange(n)
    out[..., idx, idx] += diag
    return out


def boundary_determinant(g: GraphTopology, kappa, sign: int):
    return np.linalg.det(boundary_matrix(g, kappa, sign))


def kappa_limit(g: GraphTopology) -> float:
    d = max(g.max_degree(with_leads=True), 2)
    return float(np.arccosh(d / 2)) + 0.1


def _eigs(g, kappas, sign, chunk=512):
    out = []
    for i in range(0, len(kappas), chunk):
        out.append(np.linalg.eigvalsh(boundary_matrix(g, kappas[i : i + chunk], sign)))
    return np.concatenate(out)


def _bisect(g, sign, index, lo, hi, flo):
    while hi - lo > KAPPA_TOL:
        mid = 0.5 * (lo + hi)
        fm = np.linalg.eigvalsh(boundary_matrix(g, mid, sign))[index]
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _normalized_states(g: GraphTopology, kappa: float, sign: int, count: int) -> list[BoundState]:
    b = boundary_matrix(g, kappa, sign)
    w, v = np.linalg.eigh(b)
    order = np.argsort(np.abs(w))[:count]
    vecs = v[:, order]
    q = np.exp(-2 * kappa)
    tv = [t.vertex for t in g.terminals]
    # norm = interior part + geometric tails x >= 1 on each lead
    weight = np.ones(g.vertex_count)
    for vert in tv:
        weight[vert] += q / (1 - q)
    gram = vecs.T @ (weight[:, None] * vecs)
    evals, evecs = np.linalg.eigh(gram)
    vecs = vecs @ evecs / np.sqrt(evals)
    states = []
    for col in range(vecs.shape[1]):
        psi = vecs[:, col]
        pivot = np.argmax(np.abs(psi))
        psi = psi * np.sign(psi[pivot])
        resid = float(np.linalg.norm(b @ psi))
        states.append(
            BoundState(
                kappa=kappa,
                sign=sign,
                lead_amplitudes={t.name: complex(psi[t.vertex]) for t in g.terminals},
                interior=psi.astype(complex),
                residual=resid,
            )
        )
    return states


def find_bound_states(
    g: GraphTopology, grid_step: float = GRID_STEP, kappa_max: float | None = None
) -> list[BoundState]:
    """Bound states of ``g`` with its leads, sorted by sign then decay rate."""
    if g.vertex_count == 0:
        return []
    hi = kappa_limit(g) if kappa_max is None else kappa_max
    kappas = np.arange(KAPPA_MIN, hi + grid_step, grid_step)
    kappas[-1] = min(kappas[-1], hi)
    found: list[BoundState] = []
    for sign in (1, -1):
        eig = _eigs(g, kappas, sign)
        roots: list[float] = []
        crossing = np.where(np.sign(eig[:-1]) * np.sign(eig[1:]) < 0)
        for gi, idx in zip(*crossing):
            roots.append(_bisect(g, sign, idx, kappas[gi], kappas[gi + 1], eig[gi, idx]))
        # an eigenvalue that is exactly zero on a grid point
        for gi, idx in zip(*np.where(eig[1:-1] == 0)):
            roots.append(float(kappas[gi + 1]))
        roots.sort()
        groups: list[list[float]] = []
        for r in roots:
            if groups and r - groups[-1][-1] < 1e-9:
                groups[-1].append(r)
            else:
                groups.append([r])
        for grp in groups:
            found.extend(_normalized_states(g, float(np.mean(grp)), sign, len(grp)))
    return found


def truncated_residual(g: GraphTopology, state: BoundState, length: int = 200) -> float:
    """Eigen-residual of the state written out on leads truncated at ``length``.

    The last vertex of each lead is excluded, since the truncation itself
    breaks the equation there.
    """
    from .graph import truncate_leads

    tg = truncate_leads(g, length)
    psi = np.zeros(tg.vertex_count, dtype=complex)
    psi[: g.vertex_count] = state.interior
    for t in g.terminals:
        path = tg.leads[t.name]
        psi[list(path)] = state.lead_amplitudes[t.name] * state.ratio ** np.arange(len(path))
    r = tg.graph.sparse_adjacency() @ psi - state.energy * psi
    ends = [path[-1] for path in tg.leads.values()]
    r[ends] = 0
    return float(np.linalg.norm(r))
