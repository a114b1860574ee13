"""Graphs with named lead attachment points, the widget catalog and gluing.

A :class:`GraphTopology` is a simple undirected graph whose terminals mark the
vertices where semi-infinite lines (leads) are attached.  Several terminals may
share a vertex; each one is a separate lead.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

TERMINAL_KINDS = ("input", "output", "drain")


class GraphError(ValueError):
    """Raised for invalid graph structure or an invalid gluing request."""


class GraphFormatError(GraphError):
    """Raised when a graph document cannot be parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


@dataclass(frozen=True)
class Terminal:
    name: str
    vertex: int
    kind: str = "input"

    def __post_init__(self):
        if self.kind not in TERMINAL_KINDS:
            raise GraphError(f"terminal {self.name!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class GraphTopology:
    vertex_count: int
    edges: tuple[tuple[int, int], ...] = ()
    terminals: tuple[Terminal, ...] = ()

    def __post_init__(self):
        if self.vertex_count < 0:
            raise GraphError("vertex_count must be non-negative")
        normalized = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise GraphError(f"edge ({u}, {v}) references a missing vertex")
            normalized.append((min(u, v), max(u, v)))
        if len(set(normalized)) != len(normalized):
            dup = next(e for e in normalized if normalized.count(e) > 1)
            raise GraphError(f"duplicate edge {dup}")
        object.__setattr__(self, "edges", tuple(sorted(normalized)))
        terminals = tuple(self.terminals)
        names = [t.name for t in terminals]
        if len(set(names)) != len(names):
            raise GraphError(f"duplicate terminal names in {names}")
        for t in terminals:
            if not 0 <= t.vertex < self.vertex_count:
                raise GraphError(f"terminal {t.name!r} references missing vertex {t.vertex}")
        object.__setattr__(self, "terminals", terminals)

    @property
    def terminal_names(self) -> list[str]:
        return [t.name for t in self.terminals]

    def terminal(self, name: str) -> Terminal:
        for t in self.terminals:
            if t.name == name:
                return t
        raise KeyError(f"no terminal named {name!r}; have {self.terminal_names}")

    def terminals_of_kind(self, kind: str) -> list[Terminal]:
        return [t for t in self.terminals if t.kind == kind]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count))
        if self.edges:
            u, v = np.array(self.edges).T
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def sparse_adjacency(self) -> sp.csr_matrix:
        n = self.vertex_count
        if not self.edges:
            return sp.csr_matrix((n, n))
        u, v = np.array(self.edges).T
        data = np.ones(2 * len(u))
        return sp.csr_matrix((data, (np.r_[u, v], np.r_[v, u])), shape=(n, n))

    def lead_counts(self) -> np.ndarray:
        counts = np.zeros(self.vertex_count, dtype=int)
        for t in self.terminals:
            counts[t.vertex] += 1
        return counts

    def degrees(self, with_leads: bool = True) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        if with_leads:
            deg += self.lead_counts()
        return deg

    def max_degree(self, with_leads: bool = True) -> int:
        if self.vertex_count == 0:
            return 0
        return int(self.degrees(with_leads).max())

    def is_bipartite(self) -> bool:
        color = -np.ones(self.vertex_count, dtype=int)
        nbrs = _neighbors(self)
        for start in range(self.vertex_count):
            if color[start] >= 0:
                continue
            color[start] = 0
            stack = [start]
            while stack:
                u = stack.pop()
                for w in nbrs[u]:
                    if color[w] < 0:
                        color[w] = 1 - color[u]
                        stack.append(w)
                    elif color[w] == color[u]:
                        return False
        return True

    def renamed(self, mapping: dict[str, str]) -> "GraphTopology":
        terms = tuple(Terminal(mapping.get(t.name, t.name), t.vertex, t.kind) for t in self.terminals)
        return GraphTopology(self.vertex_count, self.edges, terms)

    def with_terminals(self, terminals: Iterable[Terminal]) -> "GraphTopology":
        return GraphTopology(self.vertex_count, self.edges, tuple(terminals))


def _neighbors(g: GraphTopology) -> list[list[int]]:
    nbrs: list[list[int]] = [[] for _ in range(g.vertex_count)]
    for u, v in g.edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    return nbrs


# --------------------------------------------------------------------------
# Widget catalog
# --------------------------------------------------------------------------

class WidgetType(str, Enum):
    WIRE = "wire"
    CNOT = "cnot"
    PHASE_SHIFT = "phase"
    BASIS_CHANGE = "basis"
    FILTER = "filter"
    SEPARATOR = "separator"


@dataclass(frozen=True)
class WidgetKind:
    type: WidgetType
    length: int = 1

    def __post_init__(self):
        object.__setattr__(self, "type", WidgetType(self.type))
        if self.type is WidgetType.WIRE and self.length < 0:
            raise GraphError("wire length must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "WidgetKind":
        """Parse names like ``phase``, ``basis`` or ``wire3``."""
        text = text.strip().lower()
        aliases = {"phaseshift": "phase", "basischange": "basis", "sep": "separator"}
        text = aliases.get(text, text)
        if text.startswith("wire"):
            rest = text[4:].lstrip("(").rstrip(")")
            return cls(WidgetType.WIRE, int(rest) if rest else 1)
        return cls(WidgetType(text))

    @property
    def label(self) -> str:
        if self.type is WidgetType.WIRE:
            return f"wire{self.length}"
        return self.type.value


Wire = lambda length=1: WidgetKind(WidgetType.WIRE, length)  # noqa: E731
CNOT = WidgetKind(WidgetType.CNOT)
PHASE_SHIFT = WidgetKind(WidgetType.PHASE_SHIFT)
BASIS_CHANGE = WidgetKind(WidgetType.BASIS_CHANGE)
FILTER = WidgetKind(WidgetType.FILTER)
SEPARATOR = WidgetKind(WidgetType.SEPARATOR)

CATALOG = (Wire(1), CNOT, PHASE_SHIFT, BASIS_CHANGE, FILTER, SEPARATOR)


def _io(vertex_in: int, vertex_out: int, name_in="in", name_out="out") -> list[Terminal]:
    return [Terminal(name_in, vertex_in, "input"), Terminal(name_out, vertex_out, "output")]


def build_widget(kind: WidgetKind | str) -> GraphTopology:
    """Return the fixed topology of a catalog widget.

    Leads attach directly to the widget's core vertices, so that the
    scattering coefficients of the bare widget are the closed forms in
    :mod:`scatterwalk.formulas`.  Single-wire widgets other than ``Wire`` have
    ``in`` and ``out`` on the same vertex; place a ``Wire(1)`` between two of
    them when chaining to keep the degree at most 3.
    """
    if isinstance(kind, str):
        kind = WidgetKind.parse(kind)
    t = kind.type
    if t is WidgetType.WIRE:
        n = kind.length + 1
        edges = [(i, i + 1) for i in range(kind.length)]
        return GraphTopology(n, tuple(edges), tuple(_io(0, kind.length)))
    if t is WidgetType.CNOT:
        # inputs 0..3 = 00,01,10,11; outputs 4..7; |10> and |11> exchanged
        labels = ["00", "01", "10", "11"]
        target = {"00": "00", "01": "01", "10": "11", "11": "10"}
        edges = [(i, 4 + labels.index(target[s])) for i, s in enumerate(labels)]
        terms = [Terminal(f"{s}_in", i, "input") for i, s in enumerate(labels)]
        terms += [Terminal(f"{s}_out", 4 + i, "output") for i, s in enumerate(labels)]
        return GraphTopology(8, tuple(edges), tuple(terms))
    if t is WidgetType.PHASE_SHIFT:
        # core c=0 with pendant diamond: c-d, d-e-f-g-d
        edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 1)]
        return GraphTopology(5, tuple(edges), tuple(_io(0, 0)))
    if t is WidgetType.BASIS_CHANGE:
        # rails a1-a2 (0,1), b1-b2 (2,3); rungs a1-m1-b1, a2-m2-b2 with m1=4, m2=5
        edges = [(0, 1), (2, 3), (0, 4), (4, 2), (1, 5), (5, 3)]
        terms = [
            Terminal("0_in", 0, "input"),
            Terminal("1_in", 2, "input"),
            Terminal("0_out", 1, "output"),
            Terminal("1_out", 3, "output"),
        ]
        return GraphTopology(6, tuple(edges), tuple(terms))
    if t is WidgetType.FILTER:
        # v0=0 on the wire, v1=1 carries the drain, claw v1-w1, w1-w2, w1-w3
        edges = [(0, 1), (1, 2), (2, 3), (2, 4)]
        terms = _io(0, 0) + [Terminal("drain", 1, "drain")]
        return GraphTopology(5, tuple(edges), tuple(terms))
    if t is WidgetType.SEPARATOR:
        # v0=0 on the wire, pendant path v0-v1-v2-v3, u=4 closing the triangle v1-u-v2
        edges = [(0, 1), (1, 2), (2, 3), (1, 4), (2, 4)]
        return GraphTopology(5, tuple(edges), tuple(_io(0, 0)))
    raise GraphError(f"unknown widget {kind}")


def disjoint_union(graphs: Sequence[GraphTopology], prefixes: Sequence[str] | None = None) -> GraphTopology:
    """Place graphs side by side; terminal names get the given prefixes."""
    offset = 0
    edges: list[tuple[int, int]] = []
    terms: list[Terminal] = []
    for i, g in enumerate(graphs):
        pre = prefixes[i] if prefixes else ""
        edges.extend((u + offset, v + offset) for u, v in g.edges)
        terms.extend(Terminal(pre + t.name, t.vertex + offset, t.kind) for t in g.terminals)
        offset += g.vertex_count
    return GraphTopology(offset, tuple(edges), tuple(terms))


def glue(
    g1: GraphTopology,
    g2: GraphTopology,
    pairing: Sequence[tuple[str, str]] | None = None,
    prefixes: tuple[str, str] = ("a.", "b."),
) -> GraphTopology:
    """Join ``g2`` after ``g1`` by merging paired terminal vertices.

    ``pairing`` lists ``(g1 terminal, g2 terminal)``; by default every output
    of ``g1`` is paired with the input of ``g2`` of the same position.  Both
    terminals of a pair disappear and their vertices become one interior
    vertex.  Surviving terminal names are kept unless they collide, in which
    case they get ``prefixes``.
    """
    if pairing is None:
        outs = [t.name for t in g1.terminals_of_kind("output")]
        ins = [t.name for t in g2.terminals_of_kind("input")]
        if len(outs) != len(ins):
            raise GraphError(f"cannot pair {len(outs)} outputs with {len(ins)} inputs")
        pairing = list(zip(outs, ins))
    used1 = [a for a, _ in pairing]
    used2 = [b for _, b in pairing]
    if len(set(used1)) != len(used1) or len(set(used2)) != len(used2):
        raise GraphError("each terminal may be paired at most once")
    for a in used1:
        g1.terminal(a)
    for b in used2:
        g2.terminal(b)

    # union-find over the combined vertex set
    n1 = g1.vertex_count
    parent = list(range(n1 + g2.vertex_count))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in pairing:
        ra, rb = find(g1.terminal(a).vertex), find(n1 + g2.terminal(b).vertex)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(v) for v in range(len(parent))})
    index = {r: i for i, r in enumerate(roots)}
    relabel = [index[find(v)] for v in range(len(parent))]

    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for u, v in list(g1.edges) + [(u + n1, v + n1) for u, v in g2.edges]:
        a, b = relabel[u], relabel[v]
        if a == b:
            raise GraphError(f"gluing would create a self-loop at merged vertex {a}")
        e = (min(a, b), max(a, b))
        if e in seen:
            raise GraphError(f"gluing would create a duplicate edge {e}")
        seen.add(e)
        edges.append(e)

    survivors1 = [t for t in g1.terminals if t.name not in used1]
    survivors2 = [t for t in g2.terminals if t.name not in used2]
    clash = {t.name for t in survivors1} & {t.name for t in survivors2}
    terms = [
        Terminal((prefixes[0] if t.name in clash else "") + t.name, relabel[t.vertex], t.kind)
        for t in survivors1
    ]
    terms += [
        Terminal((prefixes[1] if t.name in clash else "") + t.name, relabel[n1 + t.vertex], t.kind)
        for t in survivors2
    ]
    return GraphTopology(len(roots), tuple(edges), tuple(terms))


def chain(widgets: Iterable[GraphTopology | WidgetKind | str]) -> GraphTopology:
    """Glue single-wire widgets in series (``out`` of one onto ``in`` of the next).

    Drain terminals are renamed ``drain0``, ``drain1``, ... in order.
    """
    result: GraphTopology | None = None
    drains = 0
    for w in widgets:
        g = w if isinstance(w, GraphTopology) else build_widget(w)
        rename = {}
        for t in g.terminals_of_kind("drain"):
            rename[t.name] = f"drain{drains}"
            drains += 1
        g = g.renamed(rename)
        result = g if result is None else glue(result, g, [("out", "in")])
    if result is None:
        raise GraphError("chain needs at least one widget")
    return result


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def graph_to_dict(g: GraphTopology) -> dict:
    return {
        "vertices": g.vertex_count,
        "edges": [list(e) for e in g.edges],
        "terminals": [{"name": t.name, "vertex": t.vertex, "kind": t.kind} for t in g.terminals],
    }


def serialize_graph(g: GraphTopology) -> str:
    d = graph_to_dict(g)
    edges = ",\n    ".join(json.dumps(e) for e in d["edges"])
    terms = ",\n    ".join(json.dumps(t) for t in d["terminals"])
    return (
        "{\n"
        f'  "vertices": {d["vertices"]},\n'
        f'  "edges": [{"" if not edges else chr(10) + "    " + edges + chr(10) + "  "}],\n'
        f'  "terminals": [{"" if not terms else chr(10) + "    " + terms + chr(10) + "  "}]\n'
        "}\n"
    )


def _locate(text: str, needle_index: int, key: str) -> tuple[int | None, int | None]:
    """Best-effort line/column of the ``needle_index``-th item of list ``key``."""
    start = text.find(f'"{key}"')
    if start < 0:
        return None, None
    pos = text.find("[", start) + 1
    depth = 0
    item = 0
    for i in range(pos, len(text)):
        c = text[i]
        if c in "[{":
            if depth == 0 and item == needle_index:
                line = text.count("\n", 0, i) + 1
                return line, i - text.rfind("\n", 0, i)
            depth += 1
        elif c in "]}":
            if depth == 0:
                break
            depth -= 1
        elif c == "," and depth == 0:
            item += 1
    return None, None


def parse_graph(text: str) -> GraphTopology:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed graph document: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise GraphFormatError("graph document must be an object", 1, 1)
    for key in ("vertices", "edges", "terminals"):
        if key not in doc:
            raise GraphFormatError(f"missing field {key!r}")
    n = doc["vertices"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise GraphFormatError("'vertices' must be a non-negative integer")
    edges = []
    for i, e in enumerate(doc["edges"]):
        line, col = _locate(text, i, "edges")
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
            raise GraphFormatError(f"edges[{i}] must be a pair of integers", line, col)
        u, v = e
        if u == v:
            raise GraphFormatError(f"edges[{i}] is a self-loop at vertex {u}", line, col)
        if u > v:
            raise GraphFormatError(f"edges[{i}] must be written with u < v", line, col)
        edges.append((u, v))
    terms = []
    for i, t in enumerate(doc["terminals"]):
        line, col = _locate(text, i, "terminals")
        try:
            terms.append(Terminal(str(t["name"]), int(t["vertex"]), str(t.get("kind", "input"))))
        except (KeyError, TypeError) as exc:
            raise GraphFormatError(f"terminals[{i}] is malformed: {exc}", line, col) from None
        except GraphError as exc:
            raise GraphFormatError(f"terminals[{i}]: {exc}", line, col) from None
    try:
        return GraphTopology(n, tuple(edges), tuple(terms))
    except GraphError as exc:
        raise GraphFormatError(str(exc)) from None


def load_graph(path) -> GraphTopology:
    with open(path) as fh:
        return parse_graph(fh.read())


def save_graph(g: GraphTopology, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_graph(g))


# --------------------------------------------------------------------------
# Small reference graphs used in analysis and tests
# --------------------------------------------------------------------------

def star_graph(arms: int = 3) -> GraphTopology:
    """K_{1,arms} with a lead on every leaf."""
    edges = tuple((0, i) for i in range(1, arms + 1))
    terms = tuple(Terminal(f"leaf{i}", i, "input") for i in range(1, arms + 1))
    return GraphTopology(arms + 1, edges, terms)


def split_line() -> GraphTopology:
    """A single vertex carrying two leads: the infinite line."""
    return GraphTopology(1, (), (Terminal("in", 0, "input"), Terminal("out", 0, "output")))


@dataclass(frozen=True)
class TruncatedGraph:
    """A finite graph obtained by replacing every lead with a path.

    ``leads[name][x]`` is the vertex at distance ``x`` from the attachment
    point along that lead (``x = 0`` is the attachment vertex itself).
    """

    graph: GraphTopology
    leads: dict[str, tuple[int, ...]] = field(default_factory=dict)
    kinds: dict[str, str] = field(default_factory=dict)

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count

    def lead_vertex(self, name: str, x: int) -> int:
        path = self.leads[name]
        if not 0 <= x < len(path):
            raise IndexError(f"position {x} outside lead {name!r} of length {len(path) - 1}")
        return path[x]

    def lead_length(self, name: str) -> int:
        return len(self.leads[name]) - 1


def truncate_leads(g: GraphTopology, length: int | dict[str, int]) -> TruncatedGraph:
    """Replace each lead of ``g`` by a path of ``length`` extra vertices."""
    n = g.vertex_count
    edges = list(g.edges)
    leads: dict[str, tuple[int, ...]] = {}
    for t in g.terminals:
        L = length[t.name] if isinstance(length, dict) else length
        if L < 1:
            raise GraphError("lead length must be positive")
        path = [t.vertex] + list(range(n, n + L))
        edges.extend(zip(path[:-1], path[1:]))
        n += L
        leads[t.name] = tuple(path)
    finite = GraphTopology(n, tuple(edges), ())
    return TruncatedGraph(finite, leads, {t.name: t.kind for t in g.terminals})
