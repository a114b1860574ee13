"""Scattering on graphs and a quantum-walk universal computer built from it."""
from __future__ import annotations

from .graph import (
    GraphError,
    GraphFormatError,
    GraphTopology,
    Terminal,
    TruncatedGraph,
    WidgetKind,
    WidgetType,
    build_widget,
    chain,
    glue,
    parse_graph,
    serialize_graph,
    truncate_leads,
)
from .scattering import (
    MomentumError,
    ScatteringError,
    SMatrix,
    effective_length,
    s_matrix,
    solve_scattering,
    stationary_phase_predict,
    transmission,
)
from .bound import BoundState, find_bound_states
from .transfer import chain_transmission
from .compose import ChannelBlock, compose_blocks, extract_block
from .circuit import CircuitDescription, assemble_computer, compile_circuit, parse_circuit
from .evolve import PacketSpec, RunReport, evolve_state, make_packet, reconstruct_propagator, run_computer

__version__ = "0.1.0"
