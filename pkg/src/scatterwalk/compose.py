"""Channel blocks: widgets seen as scatterers from N input to N output wires."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import (
    GraphTopology,
    WidgetKind,
    WidgetType,
    build_widget,
    disjoint_union,
    glue,
    Wire,
)
from .scattering import s_matrix


class CompositionError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelBlock:
    k: float
    forward: np.ndarray  # T:    inputs -> outputs
    reflect: np.ndarray  # R:    inputs -> inputs
    backward: np.ndarray  # Tbar: outputs -> inputs
    reflect_back: np.ndarray  # Rbar: outputs -> outputs

    @property
    def channels(self) -> int:
        return self.forward.shape[0]

    def full_matrix(self) -> np.ndarray:
        """Channel S-matrix with rows/columns ordered (inputs, outputs)."""
        return np.block([[self.reflect, self.forward], [self.backward, self.reflect_back]])

    def unitarity_defect(self) -> float:
        s = self.full_matrix()
        return float(np.max(np.abs(s.conj().T @ s - np.eye(len(s)))))

    def loss(self) -> np.ndarray:
        """Probability per channel (inputs then outputs) that leaves through drains."""
        s = self.full_matrix()
        return 1 - np.sum(np.abs(s) ** 2, axis=1)

    def delta(self) -> float:
        return max(opnorm(self.reflect), opnorm(self.reflect_back))


def opnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def extract_block(g: GraphTopology, k: float, inputs: Sequence[str], outputs: Sequence[str]) -> ChannelBlock:
    """Populate the four channel matrices from the S-matrix of ``g``."""
    inputs, outputs = list(inputs), list(outputs)
    if len(inputs) != len(outputs):
        raise CompositionError("need as many output channels as input channels")
    drains = {t.name for t in g.terminals_of_kind("drain")}
    channel_names = set(inputs) | set(outputs)
    expected = set(g.terminal_names) - drains
    if channel_names != expected or len(channel_names) != 2 * len(inputs):
        raise CompositionError(
            f"inputs/outputs {inputs}/{outputs} must partition the non-drain terminals {sorted(expected)}"
        )
    s = s_matrix(g, k)
    ii = [s.terminals.index(n) for n in inputs]
    oo = [s.terminals.index(n) for n in outputs]
    e = s.entries
    return ChannelBlock(
        k=s.k,
        forward=e[np.ix_(ii, oo)],
        reflect=e[np.ix_(ii, ii)],
        backward=e[np.ix_(oo, ii)],
        reflect_back=e[np.ix_(oo, oo)],
    )


def compose_blocks(b1: ChannelBlock, b2: ChannelBlock) -> ChannelBlock:
    """Blocks of ``b1`` followed by ``b2`` (outputs of 1 feed inputs of 2)."""
    if b1.k != b2.k:
        raise CompositionError(f"momenta differ: {b1.k} vs {b2.k}")
    if b1.channels != b2.channels:
        raise CompositionError(f"channel counts differ: {b1.channels} vs {b2.channels}")
    eye = np.eye(b1.channels)
    loop_fwd = b2.reflect @ b1.reflect_back
    loop_bwd = b1.reflect_back @ b2.reflect
    if opnorm(loop_fwd) >= 1 - 1e-9:
        raise CompositionError(f"non-convergent composition at k={b1.k}: ||R2 Rbar1|| = {opnorm(loop_fwd):.6g}")
    # X (1 - Y)^{-1} computed as solve((1 - Y)^T, X^T)^T
    t1_inv = np.linalg.solve((eye - loop_fwd).T, b1.forward.T).T
    t2b_inv = np.linalg.solve((eye - loop_bwd).T, b2.backward.T).T
    return ChannelBlock(
        k=b1.k,
        forward=t1_inv @ b2.forward,
        reflect=b1.reflect + t1_inv @ b2.reflect @ b1.backward,
        backward=t2b_inv @ b1.backward,
        reflect_back=b2.reflect_back + t2b_inv @ b1.reflect_back @ b2.forward,
    )


def reflection_bound(b1: ChannelBlock, b2: ChannelBlock) -> float:
    d1, d2 = b1.delta(), b2.delta()
    return d1 + (1 + d1 * d2) * d2


def product_bound(b1: ChannelBlock, b2: ChannelBlock) -> float:
    d1, d2 = b1.delta(), b2.delta()
    return d1 * d2 * (1 + d1 * d2)


# --------------------------------------------------------------------------
# Multi-wire layers built from catalog widgets
# --------------------------------------------------------------------------

def channel_names(g: GraphTopology) -> tuple[list[str], list[str]]:
    """Input and output terminal names in matching order."""
    ins = [t.name for t in g.terminals_of_kind("input")]
    outs = [t.name for t in g.terminals_of_kind("output")]
    return ins, outs


NATIVE_CHANNELS = {WidgetType.BASIS_CHANGE: 2, WidgetType.CNOT: 4}


def native_channels(kind: WidgetKind) -> int:
    return NATIVE_CHANNELS.get(kind.type, 1)


def widget_layer(kind: WidgetKind | str, channels: int | None = None) -> GraphTopology:
    """A catalog widget as an N-channel scatterer.

    A widget with fewer channels than requested occupies the last wires and
    ``Wire(1)`` pads the others, which is how a phase shift next to a unit
    wire realizes the phase gate.  Terminals are named ``{wire}_in`` and
    ``{wire}_out`` with wires numbered from 0.
    """
    if isinstance(kind, str):
        kind = WidgetKind.parse(kind)
    g = build_widget(kind)
    native = native_channels(kind)
    channels = native if channels is None else channels
    if channels < native:
        raise CompositionError(f"cannot place {kind.label} in a {channels}-channel layer")
    ins, outs = channel_names(g) if native > 1 else (["in"], ["out"])
    offset = channels - native
    mapping = {}
    for i, (a, b) in enumerate(zip(ins, outs)):
        mapping[a] = f"{offset + i}_in"
        mapping[b] = f"{offset + i}_out"
    parts = [build_widget(Wire(1)).renamed({"in": f"{i}_in", "out": f"{i}_out"}) for i in range(offset)]
    parts.append(g.renamed(mapping))
    return parts[0] if len(parts) == 1 else disjoint_union(parts)


def glue_layers(g1: GraphTopology, g2: GraphTopology) -> GraphTopology:
    ins1, outs1 = channel_names(g1)
    ins2, _ = channel_names(g2)
    pairing = list(zip(outs1, ins2))
    return glue(g1, g2, pairing)


def block_of(g: GraphTopology, k: float) -> ChannelBlock:
    ins, outs = channel_names(g)
    return extract_block(g, k, ins, outs)


def composition_deviation(g1: GraphTopology, g2: GraphTopology, k: float) -> dict[str, float]:
    """Compare composed blocks against a direct solve of the glued graph."""
    b1, b2 = block_of(g1, k), block_of(g2, k)
    composed = compose_blocks(b1, b2)
    glued = glue_layers(g1, g2)
    ins1, _ = channel_names(g1)
    _, outs2 = channel_names(g2)
    direct = extract_block(glued, k, ins1, outs2)
    dev = max(
        float(np.max(np.abs(getattr(composed, f) - getattr(direct, f))))
        for f in ("forward", "reflect", "backward", "reflect_back")
    )
    return {
        "deviation": dev,
        "reflection_slack": reflection_bound(b1, b2) - opnorm(composed.reflect),
        "reflection_back_slack": reflection_bound(b2, b1) - opnorm(composed.reflect_back),
        "product_slack": product_bound(b1, b2) - opnorm(composed.forward - b1.forward @ b2.forward),
    }


def gate_chain(kind: WidgetKind | str, count: int) -> GraphTopology:
    """``count`` copies of a widget layer separated by unit wires on every channel."""
    layer = widget_layer(kind)
    ins, _ = channel_names(layer)
    spacer = disjoint_union(
        [build_widget(Wire(1)).renamed({"in": n, "out": n.replace("_in", "_out")}) for n in ins]
    )
    g = layer
    for _ in range(count - 1):
        g = glue_layers(glue_layers(g, spacer), layer)
    return g

