"""Closed-form scattering coefficients of the catalog widgets and gate constants.

All coefficients are referenced to leads attached directly at the widget's
core vertices (see :func:`scatterwalk.graph.build_widget`).  Every function
accepts scalar or array momenta.
"""
from __future__ import annotations

import numpy as np

from .graph import WidgetKind, WidgetType

SQRT2 = np.sqrt(2.0)

#: phase gate implemented by a phase-shift widget next to a unit wire
U_B = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)
#: basis-changing gate implemented by the two-rail widget
U_C = -np.array([[1j, 1], [1, 1j]], dtype=complex) / SQRT2
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2

#: effective lengths at k = -pi/4 (edge units)
SEPARATOR_LENGTH_DESIGN = 4 * (3 - 2 * SQRT2)
SEPARATOR_LENGTH_MIRROR = 4 * (3 + 2 * SQRT2)
DESIGN_EFFECTIVE_LENGTH = {
    WidgetType.PHASE_SHIFT: 1.0,
    WidgetType.BASIS_CHANGE: 2.0,
    WidgetType.FILTER: 2.0,
    WidgetType.SEPARATOR: SEPARATOR_LENGTH_DESIGN,
    WidgetType.CNOT: 1.0,
}


def phase_shift_transmission(k):
    return 8 / (8 + 1j * np.cos(2 * k) / (np.sin(k) ** 3 * np.cos(k)))


def _basis_denominator(k):
    return 2 * np.cos(k) + 1j * (np.sin(3 * k) - np.sin(k))


def basis_change_straight(k):
    """T from 0_in to 0_out."""
    return np.exp(1j * k) * (np.cos(k) + 1j * np.sin(3 * k)) / _basis_denominator(k)


def basis_change_cross(k):
    """T from 0_in to 1_out."""
    return -1 / _basis_denominator(k)


def basis_change_reflection(k):
    """R at 0_in, which also equals T from 0_in to 1_in."""
    return -np.exp(1j * k) * np.cos(2 * k) / _basis_denominator(k)


def separator_transmission(k):
    num = 1j * (np.cos(k) + np.cos(3 * k))
    den = np.sin(k) + 2 * np.sin(2 * k) + np.sin(3 * k) - np.sin(5 * k)
    return 1 / (1 + num / den)


def filter_decoration(k):
    """Amplitude ratio y(k) between the filter's upper vertex and the wire vertex."""
    return 1j * np.exp(2j * k) * np.cos(2 * k) / np.sin(k)


def wire_transmission(k, length: int = 1):
    return np.exp(1j * k * length)


# channel aliases accepted by reference_coefficient
_BASIS_CHANNELS = {
    ("0_in", "0_out"): basis_change_straight,
    ("0_in", "1_out"): basis_change_cross,
    ("0_in", "0_in"): basis_change_reflection,
    ("0_in", "1_in"): basis_change_reflection,
}


def reference_coefficient(widget: WidgetKind | str, channel: tuple[str, str] | str, k):
    """Evaluate a closed-form coefficient.

    ``channel`` is a ``(from, to)`` terminal pair; ``from == to`` asks for the
    reflection coefficient.  For the filter the only channel is ``"y"``, the
    decoration ratio.
    """
    if isinstance(widget, str):
        widget = WidgetKind.parse(widget)
    if isinstance(channel, str):
        channel = tuple(channel.split(":")) if ":" in channel else (channel,)
    t = widget.type
    if t is WidgetType.PHASE_SHIFT and channel in (("in", "out"), ("out", "in")):
        return phase_shift_transmission(k)
    if t is WidgetType.SEPARATOR and channel in (("in", "out"), ("out", "in")):
        return separator_transmission(k)
    if t is WidgetType.WIRE and channel in (("in", "out"), ("out", "in")):
        return wire_transmission(k, widget.length)
    if t is WidgetType.FILTER and channel == ("y",):
        return filter_decoration(k)
    if t is WidgetType.BASIS_CHANGE and channel in _BASIS_CHANNELS:
        return _BASIS_CHANNELS[channel](k)
    raise ValueError(f"no closed form for {widget.label} channel {channel}")


def global_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise |a - e^{i phi} b| after aligning the global phase."""
    inner = np.vdot(b, a)
    phase = inner / abs(inner) if abs(inner) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))


def hadamard_from_gates() -> np.ndarray:
    ub2 = U_B @ U_B
    return ub2 @ U_C @ ub2
