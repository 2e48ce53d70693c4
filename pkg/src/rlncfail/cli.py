"""Command-line surface.

Subcommands: `gen` writes network files, `bounds` prints the bound report,
`simulate` runs the Monte Carlo estimator, `exact` runs the exhaustive
enumeration, and `sweep` emits one CSV row per field order.

Reports go to stdout, diagnostics to stderr.  Exit codes: 0 success,
2 usage/config error, 3 infeasible rate, 4 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from decimal import Decimal, localcontext
from fractions import Fraction

from . import bounds as bnd
from . import netmodel, rlncsim
from .flowpaths import InfeasibleRateError, min_cut
from .galois import make_field_of_order
from .netmodel import Network
from .rlncsim import DEFAULT_ENUMERATION_BUDGET, EnumerationBudgetError


class UsageError(ValueError):
    pass


def decimal_str(x: Fraction, digits: int = 10) -> str:
    """x rendered with the given number of significant digits."""
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(x.numerator) / Decimal(x.denominator)
    return str(d)


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_gen_spec(spec: str) -> Network:
    """Inline generator spec: plait:w=2,r=3 | butterfly | random:internal=5,w=2,density=0.4,seed=7"""
    name, _, rest = spec.partition(":")
    kv: dict[str, str] = {}
    if rest:
        for part in rest.split(","):
            k, sep, v = part.partition("=")
            if not sep:
                raise UsageError(f"bad generator parameter {part!r} in {spec!r}")
            kv[k] = v
    try:
        if name == "plait":
            return netmodel.plait(int(kv.pop("w")), int(kv.pop("r")))
        if name == "butterfly":
            if kv:
                raise UsageError(f"butterfly takes no parameters, got {sorted(kv)}")
            return netmodel.butterfly()
        if name == "random":
            return netmodel.random_dag(
                int(kv.pop("internal")),
                int(kv.pop("w")),
                float(kv.pop("density")),
                int(kv.pop("seed")),
            )
    except KeyError as exc:
        raise UsageError(f"generator {name!r} is missing parameter {exc}") from None
    except ValueError as exc:
        raise UsageError(f"bad generator spec {spec!r}: {exc}") from None
    raise UsageError(f"unknown generator {name!r} (expected plait, butterfly, or random)")


def _load_network(args) -> tuple[Network, str]:
    if bool(args.network) == bool(args.gen):
        raise UsageError("provide exactly one of --network FILE or --gen SPEC")
    if args.network:
        return netmodel.read_network(args.network), args.network
    return parse_gen_spec(args.gen), args.gen


def _resolve_sink(net: Network, sink: str | None) -> str:
    if sink is not None:
        if sink not in net.sinks:
            raise UsageError(f"{sink} is not a sink of this network")
        return sink
    if len(net.sinks) == 1:
        return next(iter(net.sinks))
    raise UsageError(f"network has sinks {sorted(net.sinks)}; choose one with --sink")


def _resolve_rate(net: Network, rate: int | None) -> int:
    if rate is not None:
        if rate < 1:
            raise UsageError("--rate must be >= 1")
        return rate
    if net.rate_hint:
        return net.rate_hint
    raise UsageError("network carries no rate hint; set --rate")


def _field(args):
    try:
        return make_field_of_order(args.field)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_format(args, allowed=("text", "json")) -> str:
    if args.format not in allowed:
        raise UsageError(f"--format must be one of {allowed} for this command")
    return args.format


# --- subcommands ---------------------------------------------------------------

def _cmd_gen(args) -> int:
    if args.kind == "plait":
        net = netmodel.plait(args.w, args.r)
    elif args.kind == "butterfly":
        net = netmodel.butterfly()
    else:
        net = netmodel.random_dag(args.internal, args.w, args.density, args.seed)
    text = netmodel.network_to_text(net)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    cuts = " ".join(
        f"min_cut[{t}]={min_cut(net, t)}" for t in sorted(net.sinks)
    )
    print(
        f"nodes={len(net.nodes)} channels={len(net.channels)} {cuts}",
        file=sys.stderr,
    )
    return 0


def _report_header(name: str, sink: str, q: int, w: int) -> dict:
    return {"network": name, "sink": sink, "q": q, "w": w}


def _cmd_bounds(args) -> int:
    fmt = _check_format(args)
    net, name = _load_network(args)
    sink = _resolve_sink(net, args.sink)
    w = _resolve_rate(net, args.rate)
    field = _field(args)
    report = bnd.full_report(net, sink, w, field, rt_mode=args.rt, order=args.order)
    if fmt == "json":
        doc = _report_header(name, sink, field.q, w)
        doc.update({k: v for k, v in report.as_dict().items() if k not in doc})
        print(json.dumps(doc, indent=2))
        return 0
    rt_tag = "exact" if report.r_min_exact else "heuristic"
    print(f"network: {name}")
    print(f"sink: {sink}")
    print(f"q: {report.q}  w: {report.w}  C_t: {report.c_t}  delta_t: {report.delta_t}")
    print(f"r: {report.r}  R_t: {report.r_min} ({rt_tag})  J: {report.j_count}")
    print(f"cut out-profile: {list(report.cut_out_sizes)}  order: {report.order_mode}")
    print("bounds:")
    for label, value in (
        ("lower", report.lower),
        ("thm1", report.thm1),
        ("thm2", report.thm2),
        ("cor1", report.cor1),
        ("thm3", report.thm3),
    ):
        print(f"  {label:<6} {frac_str(value):<16} {decimal_str(value)}")
    return 0


def _cmd_simulate(args) -> int:
    fmt = _check_format(args)
    if args.seed is None:
        raise UsageError("simulate requires an explicit --seed")
    if args.trials is None or args.trials < 1:
        raise UsageError("simulate requires --trials >= 1")
    net, name = _load_network(args)
    sink = _resolve_sink(net, args.sink)
    w = _resolve_rate(net, args.rate)
    field = _field(args)
    est = rlncsim.estimate_failure(
        net, w, field, sink, args.trials, args.seed, workers=args.workers
    )
    if fmt == "json":
        doc = _report_header(name, sink, field.q, w)
        doc["estimate"] = {
            "trials": est.trials,
            "failures": est.failures,
            "p_hat": est.p_hat,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "seed": est.seed,
        }
        print(json.dumps(doc, indent=2))
        return 0
    p_hat = Fraction(est.failures, est.trials)
    print(f"network: {name}")
    print(f"sink: {sink}")
    print(f"q: {field.q}  w: {w}")
    print(f"trials: {est.trials}  failures: {est.failures}  p_hat: {decimal_str(p_hat)}")
    print(f"wilson99: [{est.ci_low:.10g}, {est.ci_high:.10g}]")
    print(f"seed: {est.seed}")
    return 0


def _cmd_exact(args) -> int:
    fmt = _check_format(args)
    net, name = _load_network(args)
    sink = _resolve_sink(net, args.sink)
    w = _resolve_rate(net, args.rate)
    field = _field(args)
    result = rlncsim.exact_failure(net, w, field, sink, budget=args.budget)
    if fmt == "json":
        doc = _report_header(name, sink, field.q, w)
        doc["exact"] = {
            "num": str(result.numerator),
            "den": str(result.denominator),
            "failures": str(result.failures),
            "assignments": str(result.assignments),
            "slots": result.num_slots,
        }
        print(json.dumps(doc, indent=2))
        return 0
    frac = result.fraction
    print(f"network: {name}")
    print(f"sink: {sink}")
    print(f"q: {field.q}  w: {w}")
    print(f"exact: {frac_str(frac)} = {decimal_str(frac)}")
    print(
        f"slots: {result.num_slots}  assignments: {result.assignments}"
        f"  failing: {result.failures}"
    )
    return 0


SWEEP_COLUMNS = [
    "network", "sink", "q", "w", "C_t", "delta_t", "r", "R_t", "rt_mode", "J",
    "lower_frac", "lower", "thm1_frac", "thm1", "thm2_frac", "thm2",
    "cor1_frac", "cor1", "thm3_frac", "thm3",
    "exact_frac", "exact", "estimate", "ci_low", "ci_high", "trials", "seed",
]


def _cmd_sweep(args) -> int:
    if args.format not in ("csv",):
        raise UsageError("sweep always emits CSV; drop --format or pass --format csv")
    if not args.fields:
        raise UsageError("sweep requires --fields Q1,Q2,...")
    if args.trials is not None and args.seed is None:
        raise UsageError("sweep with --trials requires an explicit --seed")
    try:
        orders = [int(x) for x in args.fields.split(",") if x]
    except ValueError as exc:
        raise UsageError(f"bad --fields list: {exc}") from None
    if not orders:
        raise UsageError("sweep requires a nonempty --fields list")
    fields = []
    for q in orders:
        try:
            fields.append(make_field_of_order(q))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    net, name = _load_network(args)
    sink = _resolve_sink(net, args.sink)
    w = _resolve_rate(net, args.rate)
    slots = rlncsim.coefficient_count(net, w)

    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for field in fields:
        report = bnd.full_report(net, sink, w, field, rt_mode=args.rt, order=args.order)
        row = {
            "network": name,
            "sink": sink,
            "q": field.q,
            "w": w,
            "C_t": report.c_t,
            "delta_t": report.delta_t,
            "r": report.r,
            "R_t": report.r_min,
            "rt_mode": "exact" if report.r_min_exact else "heuristic",
            "J": report.j_count,
        }
        for label, value in (
            ("lower", report.lower),
            ("thm1", report.thm1),
            ("thm2", report.thm2),
            ("cor1", report.cor1),
            ("thm3", report.thm3),
        ):
            row[f"{label}_frac"] = frac_str(value)
            row[label] = decimal_str(value)
        if field.q**slots <= args.budget:
            result = rlncsim.exact_failure(net, w, field, sink, budget=args.budget)
            row["exact_frac"] = frac_str(result.fraction)
            row["exact"] = decimal_str(result.fraction)
        if args.trials is not None:
            est = rlncsim.estimate_failure(
                net, w, field, sink, args.trials, args.seed, workers=args.workers
            )
            row["estimate"] = decimal_str(Fraction(est.failures, est.trials))
            row["ci_low"] = f"{est.ci_low:.10g}"
            row["ci_high"] = f"{est.ci_high:.10g}"
            row["trials"] = est.trials
            row["seed"] = est.seed
        writer.writerow(row)
    sys.stdout.write(out.getvalue())
    return 0


# --- parser --------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser, fields: bool = False) -> None:
    parser.add_argument("--network", help="network file to read")
    parser.add_argument("--gen", help="inline generator spec, e.g. plait:w=2,r=3")
    parser.add_argument("--sink", help="sink node id (default: the only sink)")
    parser.add_argument("--rate", type=int, help="information rate w (default: file hint)")
    if fields:
        parser.add_argument("--fields", help="comma-separated field orders to sweep")
    else:
        parser.add_argument("--field", type=int, required=True, help="field order q (prime power)")
    parser.add_argument("--trials", type=int, help="Monte Carlo trial count")
    parser.add_argument("--seed", type=int, help="master seed for all randomness")
    parser.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
    parser.add_argument(
        "--budget", type=int, default=DEFAULT_ENUMERATION_BUDGET,
        help="max q^N assignments for exact enumeration",
    )
    parser.add_argument("--rt", choices=("exact", "heuristic"), default="exact",
                        help="search mode for the minimal path-node count R_t")
    parser.add_argument("--order", choices=("canonical", "minimize"), default="canonical",
                        help="internal-node order for the cut-profile bound")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rlncfail",
        description="Failure probability of random linear network coding at a sink node",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a network file")
    gen_sub = gen.add_subparsers(dest="kind", required=True)
    g_plait = gen_sub.add_parser("plait", help="chain with w parallel channels per stage")
    g_plait.add_argument("--w", type=int, required=True)
    g_plait.add_argument("--r", type=int, required=True)
    gen_sub.add_parser("butterfly", help="the standard two-sink butterfly")
    g_rand = gen_sub.add_parser("random", help="seeded random DAG with min-cut >= w")
    g_rand.add_argument("--internal", type=int, required=True)
    g_rand.add_argument("--w", type=int, required=True)
    g_rand.add_argument("--density", type=float, required=True)
    g_rand.add_argument("--seed", type=int, required=True)
    for sp in gen_sub.choices.values():
        sp.add_argument("--out", help="write the network file here instead of stdout")
        sp.set_defaults(func=_cmd_gen)

    b = sub.add_parser("bounds", help="compute the bound report")
    _add_common(b)
    b.set_defaults(func=_cmd_bounds)

    sim = sub.add_parser("simulate", help="Monte Carlo failure estimate")
    _add_common(sim)
    sim.set_defaults(func=_cmd_simulate)

    ex = sub.add_parser("exact", help="exhaustive exact failure probability")
    _add_common(ex)
    ex.set_defaults(func=_cmd_exact)

    sw = sub.add_parser("sweep", help="bounds/exact/estimate across field orders (CSV)")
    _add_common(sw, fields=True)
    sw.set_defaults(func=_cmd_sweep)

    for sp in (b, sim, ex):
        sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
    sw.add_argument("--format", choices=("text", "json", "csv"), default="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleRateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EnumerationBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (netmodel.NetworkFormatError, netmodel.NetworkValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
