"""Command-line entry point: ``reliaplace <command> ...``."""

from __future__ import annotations

import argparse
import sys
from itertools import combinations
from pathlib import Path

from . import _kernels
from . import formats as fm
from . import harness as hs
from . import placement as pl
from . import routing as rt
from .availability import brute_force_availability, monte_carlo_availability, multi_group_availability
from .errors import ReliaplaceError, SchemaError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_list(text):
    return [x for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reliaplace", description="Reliable VM placement and availability-based routing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("place", help="solve one placement request")
    p.add_argument("--infra", required=True)
    p.add_argument("--request", required=True)
    p.add_argument("--algo", choices=pl.SOLVERS, default="dsr")
    p.add_argument("--H", type=int, help="override the request's group limit")
    p.add_argument("--alpha", type=float, help="override the request's DSR weight (default 1.0)")
    p.add_argument("--failure-model", choices=pl.FAILURE_MODELS, default=pl.MULTI)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    r = sub.add_parser("route", help="solve one routing request")
    r.add_argument("--net", required=True)
    r.add_argument("--request", required=True)
    r.add_argument("--algo", choices=rt.ALGORITHMS + ("single-link",), default="exact")
    r.add_argument("--w", type=int, help="override the request's path limit")
    r.add_argument("--M", type=int, help="label budget for heuristics (default w*N)")
    r.add_argument("--out")

    c = sub.add_parser("compat", help="derive pairwise compatibility frontiers from a network")
    c.add_argument("--net", required=True)
    c.add_argument("--infra", help="infrastructure whose compat section is filled in")
    c.add_argument("--eta", type=float, nargs="+", required=True)
    c.add_argument("--delay", type=float, nargs="+", required=True)
    c.add_argument("--w", type=int, default=1)
    c.add_argument("--tadra", action="store_true", help="use the bounded heuristic instead of the exact search")
    c.add_argument("--M", type=int)
    c.add_argument("--out")

    s = sub.add_parser("simulate", help="run a generated workload and write CSV")
    ssub = s.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    sp = ssub.add_parser("placement")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--algos", type=_csv_list, default=["dsr", "gp", "rp"])
    sp.add_argument("--H", type=int, nargs="+")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--failure-model", choices=pl.FAILURE_MODELS, default=pl.MULTI)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--no-timing", action="store_true", help="write runtime_us as 0 (byte-identical reruns)")
    sr = ssub.add_parser("routing")
    sr.add_argument("--spec", required=True)
    sr.add_argument("--algos", type=_csv_list, default=list(rt.ALGORITHMS))
    sr.add_argument("--w", type=int)
    sr.add_argument("--M", type=int)
    sr.add_argument("--seed", type=int)
    sr.add_argument("--out")
    sr.add_argument("--no-timing", action="store_true")

    o = sub.add_parser("oracle", help="independent reference computations")
    osub = o.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    oa = osub.add_parser("avail")
    oa.add_argument("--groups", required=True)
    oa.add_argument("--method", choices=("closed", "brute", "mc"), default="closed")
    oa.add_argument("--samples", type=int, default=1_000_000)
    oa.add_argument("--seed", type=int, default=0)
    orr = osub.add_parser("route")
    orr.add_argument("--net", required=True)
    orr.add_argument("--request", required=True)
    orr.add_argument("--w", type=int)
    orr.add_argument("--out")
    return parser


def _print(out, text=""):
    print(text, file=out)


def _cmd_place(args, out):
    infra = fm.parse_infrastructure(fm.load_json(args.infra))
    request = fm.parse_placement_request(fm.load_json(args.request))
    if args.H is not None:
        request = request.with_H(args.H)
    if args.alpha is not None:
        request = pl.PlacementRequest(request.vms, request.delay_matrix, request.avail_matrix,
                                      request.delta, request.H, args.alpha)
    if args.failure_model != pl.MULTI and args.algo != "exact":
        raise UsageError("--failure-model single-node is supported by --algo exact only")
    _kernels.warmup()
    outcome = pl.solve(infra, request, args.algo, args.failure_model, seed=args.seed)
    _print(out, f"algorithm: {args.algo}")
    _print(out, f"accepted: {'yes' if outcome.accepted else 'no'}")
    if outcome.accepted:
        _print(out, f"used nodes: {outcome.used_nodes}")
        _print(out, f"availability: {outcome.achieved_availability:.12g}")
        for h, g in enumerate(outcome.assignment.describe(infra, request), 1):
            _print(out, f"group {h}: " + ", ".join(f"{v}->{n}" for v, n in g.items()))
    _print(out, f"runtime: {outcome.runtime * 1e6:.0f} us")
    if args.out:
        fm.dump_json(fm.placement_result(infra, request, outcome), args.out)
    return 0


def _print_route(outcome, out):
    _print(out, f"accepted: {'yes' if outcome.accepted else 'no'}")
    if outcome.accepted:
        ps = outcome.path_set
        _print(out, f"availability: {ps.availability:.12g}")
        for p, d in zip(ps.paths, ps.delays):
            _print(out, f"path: {'-'.join(map(str, p))} (delay {d:g})")


def _route_inputs(args):
    net = fm.parse_network(fm.load_json(args.net))
    req = fm.parse_route_request(fm.load_json(args.request), net)
    if args.w is not None:
        req = rt.RouteRequest(req.s, req.t, req.eta, req.max_delay, args.w)
    return net, req


def _cmd_route(args, out):
    net, req = _route_inputs(args)
    if args.algo == "single-link" and req.w != 1:
        raise UsageError("the single-link algorithm requires w = 1")
    _kernels.warmup()
    outcome = rt.solve(net, req, args.algo, args.M)
    rt.check_sound(net, req, outcome)
    _print(out, f"algorithm: {args.algo}")
    _print_route(outcome, out)
    if args.out:
        fm.dump_json(fm.route_result(outcome), args.out)
    return 0


def _cmd_compat(args, out):
    net = fm.parse_network(fm.load_json(args.net))
    infra = fm.parse_infrastructure(fm.load_json(args.infra)) if args.infra else None
    ids = [n.id for n in infra.nodes] if infra else list(net.nodes)
    missing = [n for n in ids if n not in net.adjacency]
    if missing:
        raise SchemaError("$.nodes", f"infrastructure nodes missing from the network: {missing}")
    compat = rt.compat_oracle(net, list(combinations(ids, 2)), args.eta, args.delay, args.w,
                              use_tadra=args.tadra, M=args.M)
    if infra is None:
        infra = pl.Infrastructure(tuple(pl.ServerNode(n, 1.0, 1.0) for n in ids), (), compat)
        doc = {"compat": fm.serialize_infrastructure(infra)["compat"]}
    else:
        infra = pl.Infrastructure(infra.nodes, infra.srng_events, compat)
        doc = fm.serialize_infrastructure(infra)
    nonempty = sum(1 for f in compat.values() if f)
    _print(out, f"pairs: {len(compat)} ({nonempty} with a non-empty frontier)")
    text = fm.dump_json(doc, args.out)
    if not args.out:
        out.write(text)
    return 0


def _write_report(report, args, out):
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8", newline="")
    else:
        out.write(csv_text)
    for algo, agg in report.summary().items():
        ar = "n/a" if agg["AR"] is None else f"{agg['AR']:.4f}"
        anun = "n/a" if agg["ANUN"] is None else f"{agg['ANUN']:.4f}"
        print(f"{algo}: AR={ar} ANUN={anun} accepted={agg['accepted']}/{agg['total']}", file=sys.stderr)


def _cmd_simulate(args, out):
    doc = fm.load_json(args.spec)
    base = Path(args.spec).parent
    if args.kind == "placement":
        spec = fm.parse_placement_spec(doc)
        if args.seed is not None:
            spec.seed = args.seed
        if args.alpha is not None:
            spec.alpha = args.alpha
        if args.failure_model != pl.MULTI and set(args.algos) - {"exact"}:
            raise UsageError("--failure-model single-node is supported by the exact algorithm only")
        infra, requests = hs.gen_placement_workload(spec)
        report = hs.run_placement_experiment(infra, requests, args.algos, args.H or [spec.H], spec.seed,
                                             args.failure_model, timing=not args.no_timing)
    else:
        spec = fm.parse_routing_spec(doc, base)
        if args.seed is not None:
            spec.seed = args.seed
        if args.w is not None:
            spec.w = args.w
        if args.M is not None:
            spec.M = args.M
        net, requests = hs.gen_routing_workload(spec)
        report = hs.run_routing_experiment(net, requests, args.algos, spec.w, spec.M, spec.seed,
                                           timing=not args.no_timing)
    _write_report(report, args, out)
    return 0


def _cmd_oracle(args, out):
    if args.kind == "avail":
        universe, groups = fm.parse_groups(fm.load_json(args.groups))
        if args.method == "closed":
            value = multi_group_availability(universe, groups)
        elif args.method == "brute":
            value = brute_force_availability(universe, groups)
        else:
            value = monte_carlo_availability(universe, groups, args.samples, args.seed)
        _print(out, f"{value:.12g}")
        return 0
    net, req = _route_inputs(args)
    outcome = rt.brute_force_route(net, req)
    _print(out, "algorithm: brute-force")
    _print_route(outcome, out)
    if args.out:
        fm.dump_json(fm.route_result(outcome), args.out)
    return 0


_COMMANDS = {"place": _cmd_place, "route": _cmd_route, "compat": _cmd_compat,
             "simulate": _cmd_simulate, "oracle": _cmd_oracle}


def dispatch(argv=None, out=None) -> int:
    """Run one command; returns the exit status (0 ok, 1 input/solver error, 2 usage error)."""
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ReliaplaceError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
