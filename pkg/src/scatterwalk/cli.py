"""Command-line entry point: ``scatterwalk <command> ...``.

Tables are tab-separated text.  The first line is ``# generated <timestamp>``,
the second names the columns; numbers use ``%.12e`` so that repeated runs are
byte-identical apart from the timestamp line.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .bound import find_bound_states, truncated_residual
from .circuit import CircuitError, UnsoundTruncationError, assemble_computer, load_circuit
from .compose import CompositionError, channel_names, composition_deviation, glue_layers, native_channels, widget_layer
from .evolve import PacketSpec, evolve_state, make_packet, reconstruct_propagator, run_computer, vertex_table
from .graph import GraphError, GraphTopology, WidgetKind, WidgetType, build_widget, load_graph, truncate_leads
from .scattering import MomentumError, ScatteringError, check_momentum, s_matrix
from .transfer import chain_transmission, filter_decoration_graph

# --------------------------------------------------------------------------
# Table output
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.12e" % float(v)


def write_table(path: str | None, columns: list[str], rows, comments: list[str] = ()) -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    lines = [f"# generated {stamp}"]
    lines += [f"# {c}" for c in comments]
    lines.append("# " + "\t".join(columns))
    lines += ["\t".join(_fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Columns and numeric body of a table written by :func:`write_table`."""
    header = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            header = line[1:].strip().split("\t")
            continue
        rows.append([float(x) for x in line.split("\t")])
    return header, np.array(rows)


def momentum_grid(k_min: float, k_max: float, points: int) -> np.ndarray:
    if points < 2:
        raise ValueError("points must be at least 2")
    return np.linspace(k_min, k_max, points)


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

DEFAULT_CHANNELS = {
    WidgetType.WIRE: ["in:out"],
    WidgetType.PHASE_SHIFT: ["in:out"],
    WidgetType.SEPARATOR: ["in:out"],
    WidgetType.FILTER: ["in:out", "in:drain"],
    WidgetType.BASIS_CHANGE: ["0_in:0_out", "0_in:1_out", "0_in:1_in"],
    WidgetType.CNOT: ["00_in:00_out", "10_in:11_out"],
}


def _parse_channels(text: str | None, g: GraphTopology, kind: WidgetKind | None) -> list[tuple[str, str]]:
    if text:
        specs = [c for c in text.split(",") if c]
    elif kind is not None:
        specs = DEFAULT_CHANNELS[kind.type]
    else:
        ins, outs = channel_names(g)
        specs = [f"{a}:{b}" for a in ins for b in outs]
    pairs = []
    for s in specs:
        if ":" not in s:
            raise ValueError(f"channel {s!r} must look like source:target")
        a, b = s.split(":", 1)
        g.terminal(a), g.terminal(b)
        pairs.append((a, b))
    return pairs


def sweep_rows(g: GraphTopology, pairs, ks):
    rows = []
    for k in ks:
        try:
            check_momentum(k)
            s = s_matrix(g, k)
        except (MomentumError, ScatteringError) as exc:
            warnings.warn(f"skipping k={k:.12g}: {exc}", stacklevel=2)
            continue
        vals = [s[a, b] for a, b in pairs]
        rows.append([k] + [c.real for c in vals] + [c.imag for c in vals] + [abs(c) ** 2 for c in vals])
    return rows


def sweep_columns(pairs) -> list[str]:
    names = [f"{a}:{b}" for a, b in pairs]
    return ["k"] + [f"re[{n}]" for n in names] + [f"im[{n}]" for n in names] + [f"abs2[{n}]" for n in names]


def _graph_source(args) -> tuple[GraphTopology, WidgetKind | None]:
    if getattr(args, "graph", None):
        return load_graph(args.graph), None
    kind = WidgetKind.parse(args.widget)
    return build_widget(kind), kind


def cmd_sweep(args) -> int:
    g, kind = _graph_source(args)
    pairs = _parse_channels(args.channels, g, kind)
    ks = momentum_grid(args.k_min, args.k_max, args.points)
    write_table(args.output, sweep_columns(pairs), sweep_rows(g, pairs, ks))
    return 0


def transfer_rows(m_d: int, ks):
    rows = []
    for k in ks:
        try:
            r = chain_transmission(filter_decoration_graph(), m_d, k)
        except MomentumError as exc:
            warnings.warn(f"skipping k={k:.12g}: {exc}", stacklevel=2)
            continue
        t = r.transmission
        rows.append([k, r.eigenvalue_magnitudes[0], r.eigenvalue_magnitudes[1], t.real, t.imag, abs(t), abs(t) ** 2])
    return rows


TRANSFER_COLUMNS = ["k", "abs_lambda_max", "abs_lambda_min", "re[T]", "im[T]", "abs[T]", "abs2[T]"]


def cmd_transfer(args) -> int:
    ks = momentum_grid(args.k_min, args.k_max, args.points)
    write_table(args.output, TRANSFER_COLUMNS, transfer_rows(args.md, ks), [f"m_d={args.md}"])
    return 0


def cmd_bound(args) -> int:
    g, _ = _graph_source(args)
    states = find_bound_states(g, grid_step=args.grid_step)
    names = g.terminal_names
    cols = ["sign", "kappa", "energy", "residual", "truncated_residual"] + [f"amp[{n}]" for n in names]
    rows = []
    for st in states:
        rows.append(
            [st.sign, st.kappa, st.energy, st.residual, truncated_residual(g, st)]
            + [st.lead_amplitudes[n].real for n in names]
        )
    write_table(args.output, cols, rows, [f"bound states: {len(states)}"])
    return 0


def compose_check_rows(widgets: list[str], ks):
    kinds = [WidgetKind.parse(w) for w in widgets]
    native = max(native_channels(k) for k in kinds)
    layers = [widget_layer(k, native) for k in kinds]
    rows = []
    for k in ks:
        g = layers[0]
        worst = {"deviation": 0.0, "reflection_slack": np.inf, "reflection_back_slack": np.inf, "product_slack": np.inf}
        for nxt in layers[1:]:
            d = composition_deviation(g, nxt, k)
            worst["deviation"] = max(worst["deviation"], d["deviation"])
            for key in ("reflection_slack", "reflection_back_slack", "product_slack"):
                worst[key] = min(worst[key], d[key])
            g = glue_layers(g, nxt)
        rows.append([k, worst["deviation"], worst["reflection_slack"], worst["reflection_back_slack"], worst["product_slack"]])
    return rows


def cmd_compose_check(args) -> int:
    widgets = [w for w in args.widgets.split(",") if w]
    if len(widgets) < 2:
        raise ValueError("compose-check needs at least two widgets")
    if args.k is not None:
        ks = [check_momentum(args.k)]
    else:
        ks = []
        for k in momentum_grid(args.k_min, args.k_max, args.points):
            try:
                ks.append(check_momentum(k))
            except MomentumError as exc:
                warnings.warn(f"skipping k={k:.12g}: {exc}", stacklevel=2)
    rows = compose_check_rows(widgets, ks)
    dev = max(r[1] for r in rows)
    cols = ["k", "max_deviation", "reflection_slack", "reflection_back_slack", "product_slack"]
    write_table(args.output, cols, rows, [f"widgets={','.join(widgets)}", f"max deviation {dev:.3e}"])
    print(f"max deviation {dev:.3e} ({'ok' if dev < 1e-8 else 'FAILED'})", file=sys.stderr)
    return 0 if dev < 1e-8 else 1


def cmd_evolve(args) -> int:
    g, _ = _graph_source(args)
    tg = truncate_leads(g, args.length)
    lead = args.lead or g.terminal_names[0]
    if args.packet_width is not None:
        psi = make_packet(tg, PacketSpec(lead, args.x, args.packet_width, args.momentum))
    else:
        psi = np.zeros(tg.vertex_count, dtype=complex)
        psi[tg.lead_vertex(lead, args.x)] = 1
    out = evolve_state(tg, psi, args.t, args.method)
    prob = np.abs(out) ** 2
    label = {v: (name, pos) for name, path in tg.leads.items() for pos, v in enumerate(path[1:], 1)}
    rows = [(v, *label.get(v, ("-", 0)), p) for v, p in enumerate(prob)]
    comments = [f"t={args.t!r} lead={lead} x={args.x} method={args.method}", f"norm={np.linalg.norm(out):.15f}"]
    if args.reconstruct:
        target, y = args.reconstruct.split(":")
        amp = reconstruct_propagator(g, args.x, lead, int(y), target, args.t, args.k_grid)
        direct = out[tg.lead_vertex(target, int(y))]
        comments.append(f"reconstructed={amp.real:.12e}{amp.imag:+.12e}j direct={direct.real:.12e}{direct.imag:+.12e}j")
    write_table(args.output, ["vertex", "lead", "position", "probability"], rows, comments)
    return 0


# --------------------------------------------------------------------------
# Full runs
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    circuit: str = ""
    qubits: int = 0
    x: int = 400
    m_d: int = -1  # negative: derived from the gate count
    truncation: str = "auto"
    input_mode: str = "vertex"
    packet_center: int = 0  # 0: use x
    packet_width: float = 25.0
    packet_momentum: float = -math.pi / 4
    k_grid_size: int = 2048
    method: str = "auto"
    report: str = "-"
    vertices: str = ""

    def validate(self) -> "RunConfig":
        if not self.circuit:
            raise ValueError("config: 'circuit' is required")
        if self.x < 1:
            raise ValueError("config: 'x' must be positive")
        if self.truncation != "auto" and int(self.truncation) < 1:
            raise ValueError("config: 'truncation' must be 'auto' or a positive integer")
        if self.input_mode not in ("vertex", "packet"):
            raise ValueError("config: 'input_mode' must be vertex or packet")
        if self.packet_width <= 0 or self.k_grid_size < 1:
            raise ValueError("config: packet_width and k_grid_size must be positive")
        if self.method not in ("auto", "dense", "chebyshev"):
            raise ValueError("config: 'method' must be auto, dense or chebyshev")
        return self


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    types = {f.name: f.type for f in fields(RunConfig)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        setattr(cfg, key, _coerce(types[key], value, lineno))
    return cfg


def _coerce(typ: str, value: str, lineno: int | None = None):
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
        return value
    except ValueError:
        where = f"config line {lineno}: " if lineno else ""
        raise ValueError(f"{where}cannot read {value!r} as {typ}") from None


def cmd_run(args) -> int:
    cfg = RunConfig()
    if args.config:
        cfg = parse_config(Path(args.config).read_text(), cfg)
        base = Path(args.config).parent
        if cfg.circuit and not Path(cfg.circuit).is_absolute():
            cfg.circuit = str(base / cfg.circuit)
    types = {f.name: f.type for f in fields(RunConfig)}
    for key in types:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, _coerce(types[key], str(val)))
    cfg.validate()
    circuit = load_circuit(cfg.circuit, cfg.qubits or None)
    machine = assemble_computer(
        circuit,
        x=cfg.x,
        m_d=None if cfg.m_d < 0 else cfg.m_d,
        truncation=cfg.truncation,
    )
    if cfg.input_mode == "packet":
        spec = PacketSpec(machine.input_lead, cfg.packet_center or cfg.x, cfg.packet_width, cfg.packet_momentum)
        report = run_computer(machine, spec, cfg.method)
    else:
        report = run_computer(machine, "vertex", cfg.method)
    text = report.to_json()
    if cfg.report in ("", "-"):
        sys.stdout.write(text)
    else:
        Path(cfg.report).write_text(text)
    if cfg.vertices:
        write_table(cfg.vertices, ["vertex", "wire", "position", "probability"], vertex_table(machine, report.vertex_probabilities))
    return 0


# --------------------------------------------------------------------------
# Figure data
# --------------------------------------------------------------------------

FIGURES = {
    "phase_shift": ("phase", ["in:out"]),
    "basis_change": ("basis", ["0_in:0_out", "0_in:1_out", "0_in:1_in"]),
    "filter": ("filter", ["in:out", "in:drain"]),
    "separator": ("separator", ["in:out"]),
}


def cmd_figures(args) -> int:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    ks = momentum_grid(-math.pi, 0.0, args.points)
    for name, (widget, chans) in FIGURES.items():
        g = build_widget(widget)
        pairs = [tuple(c.split(":")) for c in chans]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rows = sweep_rows(g, pairs, ks)
        write_table(str(out / f"{name}.tsv"), sweep_columns(pairs), rows, [f"widget={widget}"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = transfer_rows(args.md, ks)
    write_table(str(out / "transfer_eigenvalues.tsv"), TRANSFER_COLUMNS, rows, [f"m_d={args.md}"])
    return 0


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------

def _add_source(p, required=True):
    grp = p.add_mutually_exclusive_group(required=required)
    grp.add_argument("--widget", help="catalog widget: phase, basis, filter, separator, cnot, wireN")
    grp.add_argument("--graph", help="graph file (JSON)")


def _add_grid(p, points=501):
    p.add_argument("--k-min", type=float, default=-math.pi)
    p.add_argument("--k-max", type=float, default=0.0)
    p.add_argument("--points", type=int, default=points)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scatterwalk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="scattering coefficients over a momentum grid")
    _add_source(p)
    p.add_argument("--channels", help="comma-separated source:target terminal pairs")
    _add_grid(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("transfer", help="filter-chain transmission and transfer-matrix eigenvalues")
    p.add_argument("--md", type=int, default=10)
    _add_grid(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("bound", help="bound states of a graph with leads")
    _add_source(p)
    p.add_argument("--grid-step", type=float, default=1e-4)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("compose-check", help="compare composed blocks with the glued graph")
    p.add_argument("--widgets", required=True, help="comma-separated widget list, e.g. phase,basis")
    p.add_argument("--k", type=float, default=None, help="single momentum (otherwise a grid)")
    _add_grid(p, points=100)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_compose_check)

    p = sub.add_parser("evolve", help="evolve a vertex or packet state on a graph with truncated leads")
    _add_source(p)
    p.add_argument("--length", type=int, default=300, help="truncated lead length")
    p.add_argument("--lead", help="starting lead (default: first terminal)")
    p.add_argument("--x", type=int, default=20, help="start position, or packet center")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--packet-width", type=float, default=None, help="Gaussian packet width (vertex start if omitted)")
    p.add_argument("--momentum", type=float, default=-math.pi / 4)
    p.add_argument("--method", choices=("auto", "dense", "chebyshev"), default="auto")
    p.add_argument("--reconstruct", help="TARGET:Y, compare with the scattering reconstruction")
    p.add_argument("--k-grid", type=int, default=2048)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("run", help="compile, assemble and run a circuit")
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--circuit")
    p.add_argument("--qubits", type=int)
    p.add_argument("--x", type=int)
    p.add_argument("--m-d", dest="m_d", type=int)
    p.add_argument("--truncation")
    p.add_argument("--input-mode", dest="input_mode", choices=("vertex", "packet"))
    p.add_argument("--packet-center", dest="packet_center", type=int)
    p.add_argument("--packet-width", dest="packet_width", type=float)
    p.add_argument("--packet-momentum", dest="packet_momentum", type=float)
    p.add_argument("--k-grid-size", dest="k_grid_size", type=int)
    p.add_argument("--method", choices=("auto", "dense", "chebyshev"))
    p.add_argument("--report", help="report path ('-' for stdout)")
    p.add_argument("--vertices", help="vertex-distribution table path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("figures", help="write the five figure datasets")
    p.add_argument("--outdir", default="figures")
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--md", type=int, default=10)
    p.set_defaults(func=cmd_figures)
    return ap


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    warnings.showwarning = _show_warning
    try:
        return args.func(args)
    except (
        OSError,
        GraphError,
        CircuitError,
        UnsoundTruncationError,
        CompositionError,
        ScatteringError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"scatterwalk {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
