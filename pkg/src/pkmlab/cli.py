"""pkmlab command line.

Exit codes: 0 success, 1 a handshake party rejected (auth run), 2 usage
error, 3 partial state-space analysis.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import adversary, protocols
from .cpn import (Net, MonitorLog, explore, liveness, scc, simulate, statespace_report,
                  timed_stats)
from .cpn.stats import stats_header
from .crypto import FIXTURE_ENV, load_group
from .messages import render_entry
from .nets import CATALOG

EXIT_OK, EXIT_REJECTED, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2, 3

EPILOG = f"""\
exit codes: 0 success, 1 handshake rejected (auth run), 2 usage error,
3 partial state space (cpn statespace).
The DH group files are read from ${FIXTURE_ENV}/groups/ when that variable is set.
"""


def _dump(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _figures(args) -> Optional[Path]:
    return Path(args.figures) if getattr(args, "figures", None) else None


# --------------------------------------------------------------------------
# auth

def cmd_auth_run(args, out) -> int:
    world = protocols.make_world(0, group=load_group(args.group))
    result = protocols.run_protocol(args.protocol, world, args.seed)
    if args.format == "json":
        doc = {"protocol": args.protocol, "seed": args.seed,
               "transcript": json.loads(result.transcript.to_json())["messages"],
               "verdicts": {r: str(v) for r, v in result.verdicts.items()},
               "keys_agree": result.keys_agree}
        out.write(_dump(doc))
    else:
        for e in result.transcript:
            if args.trace:
                out.write(render_entry(e) + "\n")
            else:
                out.write(f"{e.step}|{e.sender}|{e.receiver}|{e.message.variant}\n")
        for role, v in result.verdicts.items():
            out.write(f"verdict {role}: {v}\n")
        if protocols.protocol_spec(args.protocol).key_roles:
            out.write(f"keys agree: {'yes' if result.keys_agree else 'no'}\n")
    return EXIT_OK if result.all_accepted else EXIT_REJECTED


def cmd_auth_attack(args, out) -> int:
    o = adversary.run_attack(args.protocol, args.attack, args.seed)
    if args.format == "json":
        out.write(_dump({"protocol": o.protocol, "attack": o.attack, "seed": o.seed,
                         **o.as_dict()}))
    else:
        out.write(f"protocol: {adversary.ROW_LABELS.get(o.protocol, o.protocol)}\n"
                  f"attack: {o.attack}\n"
                  f"broken: {'yes' if o.broken else 'no'}\n"
                  f"rating: {o.rating}\n"
                  f"evidence: {o.evidence}\n")
        for name, ok in o.checks:
            out.write(f"check: {name}: {'yes' if ok else 'no'}\n")
    return EXIT_OK


def cmd_auth_matrix(args, out) -> int:
    m = adversary.attack_matrix(args.seed)
    out.write(m.to_json() if args.format == "json" else m.to_text())
    fig = _figures(args)
    if fig:
        from .plotting import plot_matrix
        plot_matrix(m, fig / "attack_matrix.png")
    return EXIT_OK


# --------------------------------------------------------------------------
# cpn

def _load_net(spec: str, parser) -> Net:
    if spec in CATALOG:
        return CATALOG[spec].net
    path = Path(spec)
    if path.is_file():
        try:
            return Net.from_json(path.read_text())
        except (ValueError, KeyError) as exc:
            parser.error(f"cannot load net from {path}: {exc}")
    parser.error(f"unknown net {spec!r}; use one of {', '.join(CATALOG)} or a JSON file")


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return CATALOG[args.net].canonical_seed if args.net in CATALOG else 0


def cmd_cpn_statespace(args, out, parser) -> int:
    net = _load_net(args.net, parser)
    t0 = time.perf_counter()
    graph = explore(net, limit=args.max_nodes)
    t1 = time.perf_counter()
    sccg = scc(graph)
    t2 = time.perf_counter()
    live = liveness(net, graph, sccg) if graph.status == "Full" else None
    if args.format == "json":
        doc = {"net": net.name, "state_space": {"nodes": len(graph.nodes), "arcs": len(graph.arcs),
                                                "status": graph.status},
               "scc_graph": {"nodes": sccg.node_count, "arcs": sccg.arc_count}}
        if live:
            doc["liveness"] = {"dead_markings": live.dead_markings,
                               "dead_transitions": live.dead_transitions,
                               "live_transitions": live.live_transitions}
        out.write(_dump(doc))
    else:
        out.write(statespace_report(graph, sccg, live, t1 - t0, t2 - t1))
    fig = _figures(args)
    if fig:
        from .plotting import plot_statespace
        plot_statespace(graph, fig / f"{net.name}_statespace.png",
                        live.dead_markings if live else (), title=net.name)
    return EXIT_OK if graph.status == "Full" else EXIT_PARTIAL


def cmd_cpn_simulate(args, out, parser) -> int:
    net = _load_net(args.net, parser)
    res = simulate(net, args.max_steps, _default_seed(args))
    if args.format == "json":
        doc = {"net": net.name, "steps": res.steps, "model_time": res.model_time,
               "firings": [{"step": f.step, "time": f.time, "transition": f.transition,
                            "binding": {k: v for k, v in f.binding}} for f in res.firings]}
        out.write(_dump(doc))
    else:
        if args.trace:
            for f in res.firings:
                out.write(f"{f.step}\t{float(f.time):.1f}\t{f.label()}\n")
        out.write(res.summary())
    if args.log:
        d = Path(args.log)
        d.mkdir(parents=True, exist_ok=True)
        for log in res.monitors.values():
            (d / f"{log.name}.log").write_text(log.to_text())
    fig = _figures(args)
    if fig:
        from .plotting import plot_monitors
        plot_monitors(res.monitors, fig / f"{net.name}_monitors.png", title=net.name)
    return EXIT_OK


def cmd_cpn_stats(args, out, parser) -> int:
    rows = []
    for path in args.log:
        try:
            log = MonitorLog.from_text(Path(path).read_text())
            rows.append(timed_stats(log, args.count))
        except (OSError, ValueError) as exc:
            parser.error(f"{path}: {exc}")
    if args.format == "json":
        out.write(_dump([r.as_dict() for r in rows]))
    else:
        out.write(stats_header() + "\n")
        for r in rows:
            out.write(r.row() + "\n")
    return EXIT_OK


def cmd_cpn_export(args, out, parser) -> int:
    out.write(_load_net(args.net, parser).to_json())
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pkmlab", epilog=EPILOG,
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                description="Run, attack and model-check the 802.16 handshakes.")
    top = p.add_subparsers(dest="area", required=True)

    def common(sp, seed_default: Optional[int] = 0):
        sp.add_argument("--seed", type=int, default=seed_default)
        sp.add_argument("--format", choices=("text", "json"), default="text")

    auth = top.add_parser("auth", help="handshake runs and attacks").add_subparsers(
        dest="cmd", required=True)
    r = auth.add_parser("run", help="run one honest handshake")
    r.add_argument("--protocol", required=True, choices=protocols.PROTOCOLS)
    r.add_argument("--group", default="desk", help="DH group fixture name (desk, realistic)")
    r.add_argument("--trace", action="store_true", help="print every message field")
    common(r)
    a = auth.add_parser("attack", help="run one scripted attack")
    a.add_argument("--protocol", required=True, choices=protocols.PROTOCOLS)
    a.add_argument("--attack", required=True, choices=adversary.ATTACKS)
    common(a)
    mx = auth.add_parser("matrix", help="attack x protocol resistance matrix")
    mx.add_argument("--figures", metavar="DIR")
    common(mx)

    cpn = top.add_parser("cpn", help="Petri-net analysis").add_subparsers(dest="cmd", required=True)
    s = cpn.add_parser("simulate", help="automatic simulation with marking-size monitors")
    s.add_argument("--net", required=True, help=f"{', '.join(CATALOG)} or a net JSON file")
    s.add_argument("--max-steps", type=int, default=1000)
    s.add_argument("--trace", action="store_true", help="print each firing")
    s.add_argument("--log", metavar="DIR", help="write one monitor log per place")
    s.add_argument("--figures", metavar="DIR")
    common(s, seed_default=None)
    ss = cpn.add_parser("statespace", help="state space, SCC graph and liveness report")
    ss.add_argument("--net", required=True)
    ss.add_argument("--max-nodes", type=int, default=100_000)
    ss.add_argument("--figures", metavar="DIR")
    common(ss)
    st = cpn.add_parser("stats", help="time-weighted statistics of monitor logs")
    st.add_argument("--log", required=True, nargs="+", metavar="FILE")
    st.add_argument("--count", type=int, default=None,
                    help="override the observation count (defaults to samples in the log)")
    common(st)
    ex = cpn.add_parser("export", help="print a net as JSON")
    ex.add_argument("--net", required=True)
    return p


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_steps", 0) is not None and getattr(args, "max_steps", 0) < 0:
        parser.error("--max-steps must be >= 0")
    if args.area == "auth":
        try:
            load_group(getattr(args, "group", "desk"))
        except (OSError, ValueError) as exc:
            parser.error(f"cannot load DH group: {exc}")
        return {"run": cmd_auth_run, "attack": cmd_auth_attack,
                "matrix": cmd_auth_matrix}[args.cmd](args, out)
    handler = {"simulate": cmd_cpn_simulate, "statespace": cmd_cpn_statespace,
               "stats": cmd_cpn_stats, "export": cmd_cpn_export}[args.cmd]
    return handler(args, out, parser)


if __name__ == "__main__":
    sys.exit(main())
