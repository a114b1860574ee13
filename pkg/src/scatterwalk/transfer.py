"""Transfer matrices for a line decorated at consecutive vertices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphTopology, GraphError, Terminal, build_widget, chain, FILTER, Wire
from .scattering import _solve, check_momentum, scattering_matrix_system


@dataclass(frozen=True)
class TransferMatrix:
    k: float
    y: complex
    entries: np.ndarray

    @property
    def determinant(self) -> complex:
        return complex(np.linalg.det(self.entries))

    def eigenvalue_magnitudes(self) -> tuple[float, float]:
        lam = np.abs(np.linalg.eigvals(self.entries))
        return float(lam.max()), float(lam.min())


@dataclass(frozen=True)
class ChainResult:
    m_d: int
    k: float
    a: complex
    b: complex
    c: complex
    d: complex
    transmission: complex
    relative_transmission: complex
    eigenvalue_magnitudes: tuple[float, float]


def filter_decoration_graph() -> GraphTopology:
    """The filter's pendant: attachment vertex 0 plus the claw and drain above it."""
    g = build_widget(FILTER)
    return GraphTopology(g.vertex_count, g.edges, (Terminal("attach", 0, "input"), g.terminal("drain")))


def decoration_ratio(decoration: GraphTopology | None, k: float) -> complex:
    """Ratio of the amplitude on the attached neighbour to the wire vertex.

    ``decoration`` has a terminal named ``attach`` whose vertex is the wire
    vertex; the remaining terminals are drains carrying outgoing waves only.
    ``None`` means nothing is attached.
    """
    k = check_momentum(k)
    if decoration is None:
        return 0j
    root = decoration.terminal("attach").vertex
    drains = [t for t in decoration.terminals if t.name != "attach"]
    others = [v for v in range(decoration.vertex_count) if v != root]
    if not others:
        return 0j
    # wire vertex fixed to 1; solve the pendant with outgoing drains
    sub = GraphTopology(
        decoration.vertex_count,
        decoration.edges,
        tuple(drains),
    )
    m = scattering_matrix_system(sub, k)
    idx = np.array(others)
    rhs = -m[np.ix_(idx, [root])][:, 0]
    tv = np.array([others.index(t.vertex) for t in drains], dtype=int)
    psi = _solve(m[np.ix_(idx, idx)], rhs[:, None], tv, k)[:, 0]
    neighbours = [v for u, v in decoration.edges if u == root] + [u for u, v in decoration.edges if v == root]
    if len(neighbours) != 1:
        raise GraphError("decoration must attach to the wire by exactly one edge")
    return complex(psi[others.index(neighbours[0])])


def transfer_step(y: complex, k: float) -> TransferMatrix:
    k = check_momentum(k)
    m = np.array([[2 * np.cos(k) - y, -1], [1, 0]], dtype=complex)
    return TransferMatrix(k, complex(y), m)


def chain_transmission(decoration: GraphTopology | complex | None, m_d: int, k: float) -> ChainResult:
    """Transmission through ``m_d`` equally decorated consecutive line vertices.

    ``relative_transmission`` is the closed form built from the entries of
    ``M^{m_d}``; it excludes the free propagation over the chain.
    ``transmission`` restores it, ``e^{ik(m_d-1)}``, giving the amplitude
    with leads attached at the first and last decorated vertex, i.e. what a
    direct scattering solve of the chained graph returns.
    """
    if m_d < 1:
        raise ValueError("m_d must be at least 1")
    k = check_momentum(k)
    y = decoration if isinstance(decoration, (complex, float, int)) else decoration_ratio(decoration, k)
    step = transfer_step(y, k)
    power = np.eye(2, dtype=complex)
    for _ in range(m_d):
        power = step.entries @ power
    a, b, c, d = power.ravel()
    rel = 2j * np.exp(-1j * k * m_d) * np.sin(k) / (-a * np.exp(-1j * k) - b + c + d * np.exp(1j * k))
    return ChainResult(
        m_d=m_d,
        k=k,
        a=complex(a),
        b=complex(b),
        c=complex(c),
        d=complex(d),
        transmission=complex(rel * np.exp(1j * k * (m_d - 1))),
        relative_transmission=complex(rel),
        eigenvalue_magnitudes=step.eigenvalue_magnitudes(),
    )


def filter_chain_graph(m_d: int) -> GraphTopology:
    """``m_d`` filter widgets one edge apart, leads at the first and last."""
    parts = []
    for i in range(m_d):
        if i:
            parts.append(Wire(1))
        parts.append(FILTER)
    return chain(parts)
