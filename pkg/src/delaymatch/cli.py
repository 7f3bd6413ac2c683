"""Command line interface.

Subcommands: gen, linearize, embed, forest, simulate, oracle, ratio.
Everything prints canonical JSON (or CSV for ratio reports) so that reruns
with identical inputs produce byte-identical output.  Exit codes: 0 success,
2 when an audited inequality or strict assertion fails, 1 on any other error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import instances
from .delay import (
    PiecewiseLinearDelay,
    linearize,
    parse_delay_spec,
    verify_sandwich,
)
from .embedding import Hst, frt_embed
from .engine import run_bpma, run_bpsla, run_greedy, run_ma, run_sla
from .errors import AuditFailure, BadParams, DelayMatchError, ParseError, ZeroDerivative
from .experiment import ExperimentConfig, run_ratio_experiment
from .forest import build_forest
from .instances import Instance
from .numeric import format_number, parse_number
from .oracle import opt_bichromatic, opt_mono


def _emit(data: bytes, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def _load_instance(path: str) -> Instance:
    if path == "-":
        try:
            obj = json.load(sys.stdin)
        except json.JSONDecodeError as exc:
            raise ParseError(f"cannot parse instance on stdin: {exc}") from exc
        return instances.from_json_dict(obj)
    return instances.load(path)


def _horizon(inst: Instance, override):
    if override is not None:
        return override
    h = inst.span * 2
    return h if h >= 1 else 1


def _require_exact(args, inst: Optional[Instance], f: Optional[PiecewiseLinearDelay]) -> None:
    if not getattr(args, "exact", False):
        return
    if inst is not None and inst.arithmetic != "exact":
        raise BadParams("--exact given but the instance carries float data")
    if f is not None and not f.exact:
        raise BadParams("--exact given but the delay linearization is not rational")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument(
        "--format", choices=("json", "csv"), default="json", help="output format"
    )
    common.add_argument(
        "--exact",
        action="store_true",
        help="refuse to run unless all arithmetic is rational",
    )

    p = argparse.ArgumentParser(
        prog="delaymatch",
        description="simulation lab for online min-cost matching with delays",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    gsub = g.add_subparsers(dest="generator", required=True)
    gb = gsub.add_parser(
        "bad", parents=[common], help="adversarial stream for instant matching"
    )
    gb.add_argument("--m", type=int, required=True)
    gb.add_argument("--eps", required=True, help="gap parameter in (0,1), e.g. 1/100")
    gb.add_argument("--bichromatic", action="store_true")
    gr = gsub.add_parser("random", parents=[common], help="seeded random instance")
    gr.add_argument("--points", type=int, required=True)
    gr.add_argument("--requests", type=int, required=True)
    gr.add_argument("--seed", type=int, required=True)
    gr.add_argument("--mode", choices=("mono", "bichromatic"), default="mono")
    gr.add_argument(
        "--metric",
        choices=("uniform", "random_tree", "euclidean_plane"),
        default="uniform",
    )
    gr.add_argument("--span", default="10", help="arrival window length")

    ln = sub.add_parser(
        "linearize", parents=[common], help="piecewise-linear lower approximation"
    )
    ln.add_argument("--delay", required=True)
    ln.add_argument("--horizon", required=True, help="largest wait the run can see")
    ln.add_argument(
        "--grid-check",
        type=int,
        default=0,
        metavar="N",
        help="verify the two-sided bound on an N-point grid",
    )

    em = sub.add_parser("embed", parents=[common], help="random tree embedding of the metric")
    em.add_argument("--seed", type=int, default=0)
    em.add_argument("instance")

    fo = sub.add_parser("forest", parents=[common], help="counter forest for a tree and delay")
    fo.add_argument("--delay", required=True)
    fo.add_argument("--seed", type=int, default=0)
    fo.add_argument("--horizon", default=None)
    fo.add_argument("instance")

    si = sub.add_parser("simulate", parents=[common], help="run an online algorithm")
    si.add_argument("--alg", choices=("sla", "ma", "bpsla", "bpma", "greedy"), required=True)
    si.add_argument("--delay", required=True)
    si.add_argument("--seed", type=int, default=0, help="embedding seed")
    si.add_argument("--horizon", default=None)
    si.add_argument(
        "--assert",
        dest="assert_",
        choices=("strict",),
        default=None,
        help="raise on any internal audit violation",
    )
    si.add_argument("--trace", action="store_true", help="include the event log")
    si.add_argument("instance")

    orc = sub.add_parser("oracle", parents=[common], help="offline optimum")
    orc.add_argument("--delay", required=True)
    orc.add_argument("--on-tree", default=None, help="cost with this tree's distances")
    orc.add_argument("--limit", type=int, default=14)
    orc.add_argument("instance")

    ra = sub.add_parser("ratio", parents=[common], help="competitive-ratio experiment")
    ra.add_argument("--alg", choices=("sla", "ma", "bpsla", "bpma", "greedy"), required=True)
    ra.add_argument("--delay", required=True)
    ra.add_argument("--seeds", default="0", help="comma-separated embedding seeds")
    ra.add_argument("--limit", type=int, default=14)
    ra.add_argument(
        "--assert", dest="assert_", choices=("strict",), default=None
    )
    ra.add_argument("instance")
    return p


def _cmd_gen(args) -> int:
    if args.generator == "bad":
        inst = instances.gen_greedy_bad(
            args.m, parse_number(args.eps), bichromatic=args.bichromatic
        )
    else:
        inst = instances.gen_random(
            args.points,
            args.requests,
            args.seed,
            mode=args.mode,
            time_span=parse_number(args.span),
            metric_kind=args.metric,
        )
    _require_exact(args, inst, None)
    _emit(inst.to_canonical_bytes(), args.out)
    return 0


def _cmd_linearize(args) -> int:
    spec = parse_delay_spec(args.delay)
    horizon = parse_number(args.horizon)
    f = linearize(spec, horizon)
    _require_exact(args, None, f)
    _emit(
        (json.dumps(f.to_json_dict(), separators=(",", ":")) + "\n").encode(),
        args.out,
    )
    if args.grid_check:
        report = verify_sandwich(spec, f, grid_size=args.grid_check, horizon=horizon)
        if report["max_violation"] > 1e-9:
            print(
                "two-sided bound violated: worst "
                + format_number(report["max_violation"]),
                file=sys.stderr,
            )
            return 2
    return 0


def _cmd_embed(args) -> int:
    inst = _load_instance(args.instance)
    _require_exact(args, inst, None)
    hst = frt_embed(inst.metric, args.seed)
    _emit(hst.to_canonical_bytes(), args.out)
    return 0


def _cmd_forest(args) -> int:
    inst = _load_instance(args.instance)
    spec = parse_delay_spec(args.delay)
    f = linearize(spec, _horizon(inst, None if args.horizon is None else parse_number(args.horizon)))
    _require_exact(args, inst, f)
    hst = frt_embed(inst.metric, args.seed)
    forest = build_forest(hst, f)
    _emit(forest.to_canonical_bytes(), args.out)
    return 0


def _cmd_simulate(args) -> int:
    inst = _load_instance(args.instance)
    spec = parse_delay_spec(args.delay)
    strict = args.assert_ == "strict"
    horizon = _horizon(inst, None if args.horizon is None else parse_number(args.horizon))
    f = None
    try:
        f = linearize(spec, horizon)
    except ZeroDerivative:
        if args.alg != "greedy":
            raise
    _require_exact(args, inst, f)
    if args.alg == "greedy":
        res = run_greedy(inst, f, spec, strict=strict, trace=args.trace)
    elif args.alg == "sla":
        res = run_sla(inst, f, spec, strict=strict, trace=args.trace)
    elif args.alg == "bpsla":
        res = run_bpsla(inst, f, spec, strict=strict, trace=args.trace)
    else:
        hst = frt_embed(inst.metric, args.seed)
        forest = build_forest(hst, f)
        if args.alg == "ma":
            res = run_ma(inst, hst, forest, spec, strict=strict, trace=args.trace)
        else:
            res = run_bpma(inst, hst, forest, spec, strict=strict, trace=args.trace)
    _emit(res.to_canonical_bytes(), args.out)
    return 0


def _cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    spec = parse_delay_spec(args.delay)
    _require_exact(args, inst, None)
    dist_fn = None
    if args.on_tree is not None:
        try:
            with open(args.on_tree, "r", encoding="utf-8") as fh:
                hst_obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read tree {args.on_tree}: {exc}") from exc
        hst = Hst.from_json_dict(hst_obj, want_float=inst.arithmetic == "float")
        dist_fn = hst.tree_distance
    if inst.mode == "bichromatic":
        sol = opt_bichromatic(inst, dist_fn, spec.value)
    else:
        sol = opt_mono(inst, dist_fn, spec.value, limit=args.limit)
    _emit(sol.to_canonical_bytes(), args.out)
    return 0


def _cmd_ratio(args) -> int:
    inst = _load_instance(args.instance)
    seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    config = ExperimentConfig(
        args.alg,
        args.delay,
        inst,
        seeds=seeds,
        oracle_limit=args.limit,
        strict=args.assert_ == "strict",
        fmt=args.format,
    )
    report = run_ratio_experiment(config)
    data = report.to_csv_bytes() if args.format == "csv" else report.to_json_bytes()
    _emit(data, args.out)
    return 0 if report.audit_ok else 2


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen": _cmd_gen,
        "linearize": _cmd_linearize,
        "embed": _cmd_embed,
        "forest": _cmd_forest,
        "simulate": _cmd_simulate,
        "oracle": _cmd_oracle,
        "ratio": _cmd_ratio,
    }
    try:
        if args.format == "csv" and args.command != "ratio":
            raise BadParams("csv output is only available for ratio reports")
        return handlers[args.command](args)
    except AuditFailure as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return 2
    except DelayMatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
