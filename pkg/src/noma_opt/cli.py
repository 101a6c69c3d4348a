"""Command-line entry point: ``noma-opt {solve,sweep,check}``.

Exit codes: 0 on success, 1 for a malformed config, bad usage or a solver
failure, 2 when ``solve`` meets an infeasible instance.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .cluster import feasibility_check
from .energy import dinkelbach_solve, full_power_condition
from .errors import InfeasibleError, NomaError
from .instance import instance_from_dict
from .sim.config import ConfigError, ScenarioConfig, load_json
from .sim.montecarlo import format_csv, run_monte_carlo
from .sumrate import equal_power_optimality, maximize_sum_rate, to_virtual_oma

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser():
    p = _Parser(prog="noma-opt", description="Power allocation for downlink multicarrier NOMA.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="solve one instance and print a JSON report")
    solve.add_argument("--config", required=True, help="instance JSON file")
    solve.add_argument("--objective", choices=["sumrate", "ee"], default="sumrate")
    solve.add_argument("--inner", choices=["subgradient", "barrier"], default="subgradient")
    solve.add_argument("--out", help="write the report here instead of stdout")

    sweep = sub.add_parser("sweep", help="Monte-Carlo scheme comparison, CSV output")
    sweep.add_argument("--config", help="scenario JSON file (defaults apply when omitted)")
    sweep.add_argument("--seed", type=_u64)
    sweep.add_argument("--realizations", type=_positive_int)
    sweep.add_argument("--scheme", help="comma-separated scheme list, e.g. SC-NOMA,FD-NOMA(4),FDMA")
    sweep.add_argument("--inner", choices=["subgradient", "barrier"])
    sweep.add_argument("--workers", type=_positive_int,
                       help="process count (default: NOMA_OPT_THREADS or 1)")
    sweep.add_argument("--out", help="CSV path (default stdout)")

    check = sub.add_parser("check", help="feasibility and optimality diagnostics")
    check.add_argument("--config", required=True, help="instance JSON file")
    return p


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _report_dict(clusters, params, report, objective):
    rows = []
    for c, powers, rates in zip(clusters, report.allocation.powers_w, report.rates_bps):
        rows.append({
            "subchannel": c.subchannel_index,
            "user_ids": list(c.user_ids),
            "powers_w": list(powers),
            "rates_bps": list(rates),
            "budget_w": math.fsum(powers),
        })
    total = report.total_power_w
    return {
        "status": str(report.status),
        "objective": objective,
        "sum_rate_bps": report.sum_rate_bps,
        "ee_bps_per_joule": report.ee_bps_per_joule,
        "total_power_w": total,
        "p_max_w": params.p_max_w,
        "budget_fraction_used": total / params.p_max_w,
        "iterations": dict(report.iterations),
        "clusters": rows,
    }


def _load_instance(path):
    return instance_from_dict(load_json(path))


def cmd_solve(args):
    clusters, params = _load_instance(args.config)
    try:
        if args.objective == "sumrate":
            report = maximize_sum_rate(clusters, params)
        else:
            report = dinkelbach_solve(clusters, params, inner=args.inner)
    except InfeasibleError as exc:
        sys.stderr.write(f"noma-opt: {exc}\n")
        return EXIT_INFEASIBLE
    out = _report_dict(clusters, params, report, args.objective)
    _emit(json.dumps(out, indent=2, sort_keys=True, default=_jsonable) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args):
    if args.config:
        cfg = ScenarioConfig.from_dict(load_json(args.config))
    else:
        cfg = ScenarioConfig()
    changes = {}
    if args.seed is not None:
        changes["rng_seed"] = args.seed
    if args.realizations is not None:
        changes["n_realizations"] = args.realizations
    if args.scheme:
        changes["schemes"] = tuple(s.strip() for s in args.scheme.split(",") if s.strip())
    if args.inner:
        changes["inner"] = args.inner
    if changes:
        cfg = cfg.with_overrides(**changes)
    rows = []
    for scenario in cfg.expand():
        rows.extend(run_monte_carlo(scenario, workers=args.workers))
    _emit(format_csv(rows), args.out)
    return EXIT_OK


def cmd_check(args):
    clusters, params = _load_instance(args.config)
    status = feasibility_check(clusters, params)
    lines = [f"clusters: {len(clusters)}", f"feasibility: {status.describe()}"]
    lines.append(f"total minimum power: {status.total_q_min_w!r} W of {params.p_max_w!r} W")
    for pos, sub, q, mask in status.mask_violations:
        lines.append(f"violating cluster: {pos} (subchannel {sub}) q_min={q!r} W mask={mask!r} W")
    if status.shortfall_w > 0.0:
        lines.append(f"budget shortfall: {status.shortfall_w!r} W")
    if status.feasible:
        verdict = equal_power_optimality(clusters, params)
        text = verdict.status + (f" ({verdict.reason})" if verdict.reason else "")
        lines.append(f"equal inter-cluster split: {text}")
        try:
            report = dinkelbach_solve(clusters, params)
        except NomaError as exc:
            lines.append(f"full-budget condition: not evaluated ({exc})")
        else:
            virtual = to_virtual_oma(clusters, params)
            lam = report.ee_bps_per_joule
            holds = full_power_condition(virtual, params.subchannel_bandwidth_hz, lam)
            lines.append(f"max energy efficiency: {lam!r} bit/J")
            lines.append(
                "full-budget condition at optimum: " + ("holds" if holds else "does not hold")
            )
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"solve": cmd_solve, "sweep": cmd_sweep, "check": cmd_check}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        sys.stderr.write(f"noma-opt: config error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, NomaError) as exc:
        sys.stderr.write(f"noma-opt: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
