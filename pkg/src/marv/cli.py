"""Command line entry points.

    marv ingest <manifest>             validate a study and print its shape
    marv stats <manifest>              per-attribute stats and drift table
    marv scene <manifest> --chart ...  write a scene document
    marv serve <manifest> --port ...   run the wire service (+ HTTP bridge)
    marv replay <manifest> <log>       re-apply a recorded request log
    marv synth <outdir>                write a synthetic demo study
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .charts import MddMode, build_chrono, build_mdd, build_tet
from .ingest import IngestError, demo_spec, generate_synthetic, load_manifest, write_study
from .palette import write_palette
from .scene import Scene, serialize_scene
from .scenebuild import chart_root, chrono_nodes, mdd_nodes, sk_panel_nodes, tet_nodes
from .session import Session, read_request_log, replay
from .server import WireServer
from .skmapper import SKMapperState
from .stats import attribute_stats


def _add_delimiter(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--delimiter", default=",",
                        help="table cell delimiter (default: ',')")


def cmd_ingest(args: argparse.Namespace) -> int:
    series, binding = load_manifest(args.manifest, delimiter=args.delimiter)
    print(f"study: {series.name}")
    print(f"time steps: {len(series.time_steps)}")
    print(f"attributes: {len(series.attributes)}")
    for t, step in enumerate(series.time_steps):
        print(f"  [{t}] {step.label}: {step.record_count} records "
              f"at {step.load_newtons:g} N")
    print(f"geometry binding: {', '.join(binding.fields())}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    series, _ = load_manifest(args.manifest, delimiter=args.delimiter)
    stats = attribute_stats(series, drift_norm=args.drift_norm)
    if args.format == "machine":
        doc = {
            "study": series.name,
            "attributes": [a.name for a in series.attributes],
            "perStep": [
                [
                    {
                        "median": st.median,
                        "iqr": st.iqr,
                        "skewness": st.skewness,
                        "kurtosisExcess": st.kurtosis_excess,
                        "modality": st.modality.name.lower(),
                        "peakCount": st.peak_count,
                        "normMin": st.norm_min,
                        "normMax": st.norm_max,
                    }
                    for st in step
                ]
                for step in stats.per_step
            ],
            "drift": None if stats.drift is None else {
                "raw": [list(row) for row in stats.drift.raw],
                "normalized": [list(row) for row in stats.drift.normalized],
            },
        }
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
        return 0
    for t, step in enumerate(stats.per_step):
        print(f"time step {t} ({series.time_steps[t].label}):")
        print(f"  {'attribute':<16} {'median':>12} {'iqr':>12} "
              f"{'skew':>9} {'kurt':>9}  modality")
        for a, st in enumerate(step):
            name = series.attributes[a].name
            skew = f"{st.skewness:9.3f}" if st.skewness is not None else "      n/a"
            kurt = (f"{st.kurtosis_excess:9.3f}"
                    if st.kurtosis_excess is not None else "      n/a")
            print(f"  {name:<16} {st.median:12.4f} {st.iqr:12.4f} "
                  f"{skew} {kurt}  {st.modality.name.lower()}"
                  f" ({st.peak_count} peaks)")
    if stats.drift is not None:
        print("drift (normalized chi-square between consecutive steps):")
        names = [a.name for a in series.attributes]
        print("  pair " + " ".join(f"{n[:8]:>8}" for n in names))
        for t, row in enumerate(stats.drift.normalized):
            print(f"  {t}->{t + 1} " + " ".join(f"{v:8.3f}" for v in row))
    return 0


def cmd_scene(args: argparse.Namespace) -> int:
    series, binding = load_manifest(args.manifest, delimiter=args.delimiter)
    stats = attribute_stats(series)
    sk_state = SKMapperState()
    chart = args.chart
    if chart == "mdd":
        mode = (MddMode.MULTI_DATASET if len(series.time_steps) > 1
                else MddMode.SINGLE_DATASET)
        layout = build_mdd(series, stats, sk_state, mode)
        children = mdd_nodes("mdd0", layout, series) + sk_panel_nodes("mdd0", sk_state)
        root = chart_root("mdd0", anchor=_origin(), children=children)
    elif chart == "tet":
        if stats.drift is None:
            print("error: temporal tracker needs at least 2 time steps",
                  file=sys.stderr)
            return 2
        layout = build_tet(stats.drift, tuple(a.name for a in series.attributes))
        children = tet_nodes("mdd0", layout, series)
        root = chart_root("mdd0", anchor=_origin(), children=children)
    elif chart.startswith("chrono:"):
        attribute = chart.split(":", 1)[1]
        attr_index = series.attribute_index(attribute)
        edges = stats.edges[attr_index]
        if edges is None:
            print(f"error: attribute {attribute!r} is constant", file=sys.stderr)
            return 2
        layout = build_chrono(series, attribute, edges)
        chart_id = f"chrono-a{attr_index:03d}"
        root = chart_root(chart_id, anchor=_origin(),
                          children=chrono_nodes(chart_id, layout))
    else:
        print(f"error: unknown chart {chart!r} (use mdd|tet|chrono:<attr>)",
              file=sys.stderr)
        return 2
    data = serialize_scene(Scene(nodes=(root,)).canonical())
    Path(args.out).write_bytes(data + b"\n")
    print(f"wrote {args.out} ({len(data)} bytes)")
    return 0


def _origin():
    from .scene import Transform
    return Transform()


def cmd_serve(args: argparse.Namespace) -> int:
    session = Session.open_study(args.manifest, delimiter=args.delimiter,
                                 drift_norm=args.drift_norm)
    static_dir = args.static
    if static_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static_dir = str(bundled) if bundled.is_dir() else None
    if args.http_port is not None:
        http_port = args.http_port
    else:
        http_port = args.port + 1 if args.port else 0  # ephemeral stays ephemeral
    server = WireServer(session, host=args.host, port=args.port,
                        http_port=http_port, static_dir=static_dir,
                        record_path=args.record)
    print(f"wire protocol on {args.host}:{server.port}", flush=True)
    if server.http_port is not None:
        print(f"viewer + websocket bridge on http://{args.host}:{server.http_port}/",
              flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    series, binding = load_manifest(args.manifest, delimiter=args.delimiter)
    requests = read_request_log(args.log)
    snapshots = replay(series, binding, requests)
    for version, data in snapshots:
        print(f"version {version}: {len(data)} bytes")
    if args.out:
        final = snapshots[-1][1]
        Path(args.out).write_bytes(final + b"\n")
        print(f"wrote final snapshot to {args.out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec, binding = demo_spec(steps=args.steps, records=args.records)
    series = generate_synthetic(spec, seed=args.seed)
    manifest = write_study(series, binding, args.outdir)
    print(f"wrote {manifest}")
    return 0


def cmd_palette(args: argparse.Namespace) -> int:
    write_palette(args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="marv",
        description="engine for charting time series of per-fiber datasets",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and summarize a study")
    p.add_argument("manifest")
    _add_delimiter(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="print per-attribute statistics")
    p.add_argument("manifest")
    p.add_argument("--drift-norm", choices=["global", "per-attribute"],
                   default="global")
    p.add_argument("--format", choices=["table", "machine"], default="table")
    _add_delimiter(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("scene", help="write a chart scene document")
    p.add_argument("manifest")
    p.add_argument("--chart", required=True,
                   help="mdd | tet | chrono:<attribute>")
    p.add_argument("--out", required=True)
    _add_delimiter(p)
    p.set_defaults(func=cmd_scene)

    p = sub.add_parser("serve", help="run the wire service")
    p.add_argument("manifest")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--http-port", type=int, default=None,
                   help="HTTP/WebSocket bridge port (default: port+1)")
    p.add_argument("--static", default=None,
                   help="viewer bundle directory (default: bundled frontend)")
    p.add_argument("--record", default=None,
                   help="append successful mutating requests to this log")
    p.add_argument("--drift-norm", choices=["global", "per-attribute"],
                   default="global")
    _add_delimiter(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="replay a recorded request log")
    p.add_argument("manifest")
    p.add_argument("log")
    p.add_argument("--out", default=None, help="write the final snapshot here")
    _add_delimiter(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("synth", help="generate a synthetic demo study")
    p.add_argument("outdir")
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--records", type=int, default=2000)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("palette", help="export the color palette as JSON")
    p.add_argument("out")
    p.set_defaults(func=cmd_palette)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
