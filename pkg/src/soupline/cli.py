"""Command-line entry point: ``soupline {curve,audit,welfare,verify,ethereum}``.

Exit codes: 0 ok, 2 invalid input, 3 I/O failure, 10 audited point is
underperforming, 11 a verification suite recorded a failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .benchmark import poisson_frontier
from .bounds import (
    FAMILY_NAMES,
    OptimalRelu,
    SupplyContext,
    family_from_name,
    throughput_floor,
    unavailability_ceiling,
)
from .curves import SCHEMA_VERSION, CurveData, default_alpha_grid
from .errors import SouplineError
from .oracle import run_chain_suite, run_soundness_suite
from .prophet import run_prophet_suite, welfare_curve

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_UNDERPERFORMING = 10
EXIT_VERIFY_FAILED = 11

CURVE_FAMILIES = FAMILY_NAMES + ("poisson-benchmark",)


class UsageError(Exception):
    pass


def _default_tolerance() -> float:
    raw = os.environ.get("SOUPLINE_TOL")
    if raw is None:
        return 1e-9
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"SOUPLINE_TOL is not a number: {raw!r}") from None


def _float_list(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _emit(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_curve(args) -> int:
    if args.kappa <= 0:
        raise UsageError("--kappa must be positive")
    if args.family == "poisson-benchmark":
        if args.n is not None:
            raise UsageError("the Poisson benchmark has no finite-n mode")
        if args.alpha_grid is not None:
            raise UsageError("the Poisson benchmark is sampled on --mu-grid")
        curve = poisson_frontier(args.kappa, args.mu_grid)
    else:
        if args.mu_grid is not None:
            raise UsageError("--mu-grid only applies to the Poisson benchmark")
        grid = default_alpha_grid(args.points) if args.alpha_grid is None else args.alpha_grid
        if grid.size == 0:
            raise UsageError("alpha grid is empty")
        if np.any((grid < 0) | (grid > 1)):
            raise UsageError("alpha values must lie in [0, 1]")
        ctx = SupplyContext(args.kappa, args.n)
        family = family_from_name(args.family)
        rows = [(float(a), throughput_floor(ctx, float(a), family)) for a in grid]
        meta = {"family": args.family, "kappa": float(args.kappa),
                "n_mode": "poisson" if args.n is None else f"binomial:{args.n}",
                "negative_rows": any(y < 0 for _, y in rows)}
        curve = CurveData("availability", "throughput_floor", rows, meta)
    curve.meta["tolerance"] = args.tolerance
    _emit(curve.dumps(args.format), args.output)
    return EXIT_OK


def audit_point(kappa: float, availability: float, throughput: float, n=None,
                tolerance: float = 1e-9) -> dict:
    """Compare a reported (availability, throughput) pair with every family's floor."""
    if not 0.0 <= availability <= 1.0 or not 0.0 <= throughput <= 1.0:
        raise UsageError("availability and throughput must lie in [0, 1]")
    ctx = SupplyContext(kappa, n)
    families = {}
    for name in FAMILY_NAMES:
        try:
            floor = throughput_floor(ctx, availability, family_from_name(name))
        except SouplineError as exc:
            families[name] = {"verdict": "inconclusive", "floor": None, "detail": str(exc)}
            continue
        verdict = "underperforming" if throughput < floor - tolerance else "performant-possible"
        families[name] = {"verdict": verdict, "floor": floor, "margin": throughput - floor}
    scored = [(v["floor"], k) for k, v in families.items() if v["floor"] is not None]
    best_floor, binding = max(scored) if scored else (None, None)
    if any(v["verdict"] == "underperforming" for v in families.values()):
        overall = "underperforming"
    elif scored:
        overall = "performant-possible"
    else:
        overall = "inconclusive"
    return {"schema_version": SCHEMA_VERSION, "kappa": float(kappa), "n": n,
            "availability": availability, "throughput": throughput, "tolerance": tolerance,
            "verdict": overall, "binding_family": binding,
            "margin": None if best_floor is None else throughput - best_floor,
            "families": families}


def cmd_audit(args) -> int:
    if args.kappa <= 0:
        raise UsageError("--kappa must be positive")
    report = audit_point(args.kappa, args.availability, args.throughput, args.n, args.tolerance)
    _emit(_dump_json(report), args.output)
    return EXIT_UNDERPERFORMING if report["verdict"] == "underperforming" else EXIT_OK


def cmd_welfare(args) -> int:
    if args.K <= 1:
        raise UsageError("K must exceed 1")
    if args.delta_grid is not None and args.delta_grid.size == 0:
        raise UsageError("delta grid is empty")
    curve = welfare_curve(args.K, args.delta_grid, args.family)
    curve.meta["tolerance"] = args.tolerance
    _emit(curve.dumps(args.format), args.output)
    return EXIT_OK


def _summarize(cases):
    verdicts = [c["verdict"] for c in cases]
    return {"cases": len(cases), "failures": verdicts.count("fail"),
            "inconclusive": verdicts.count("inconclusive"),
            "not_applicable": verdicts.count("not-applicable")}


def run_verify(suite: str, seed: int, budget: int, tolerance: float = 1e-9) -> dict:
    suites = ["chain", "soundness", "prophet"] if suite == "all" else [suite]
    doc = {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "suite": suite,
           "seed": seed, "budget": budget, "tolerance": tolerance, "results": {}}
    for name in suites:
        if name == "chain":
            cases = [r.to_dict() for r in run_chain_suite(seed)]
        elif name == "soundness":
            cases = [r.to_dict() for r in run_soundness_suite(seed, mc_samples=budget)]
        else:
            cases = run_prophet_suite(seed, slack=tolerance)
        doc["results"][name] = {"summary": _summarize(cases), "cases": cases}
    doc["failures"] = sum(r["summary"]["failures"] for r in doc["results"].values())
    return doc


def cmd_verify(args) -> int:
    if args.budget < 1:
        raise UsageError("--budget must be positive")
    doc = run_verify(args.suite, args.seed, args.budget, args.tolerance)
    _emit(_dump_json(doc), args.output)
    for name, res in doc["results"].items():
        s = res["summary"]
        print(f"{name}: {s['cases']} cases, {s['failures']} failures, "
              f"{s['inconclusive']} inconclusive", file=sys.stderr)
    return EXIT_VERIFY_FAILED if doc["failures"] else EXIT_OK


def ethereum_summary(gas_limit: float, max_tx_gas: float, target_tau: float) -> dict:
    if gas_limit <= 0 or max_tx_gas <= 0:
        raise UsageError("gas limits must be positive")
    if not 0.0 <= target_tau <= 1.0:
        raise UsageError("target throughput must lie in [0, 1]")
    kappa = gas_limit / max_tx_gas
    ceiling = unavailability_ceiling(SupplyContext(kappa), target_tau, OptimalRelu())
    unavailable = min(1.0, ceiling.value)
    floor = 1.0 - unavailable
    return {"kappa": kappa, "target_throughput": target_tau, "availability_floor": floor,
            "knee": ceiling.witness,
            "blocks_per_emergency": None if unavailable == 0 else 1.0 / unavailable}


def cmd_ethereum(args) -> int:
    out = ethereum_summary(args.gas_limit, args.max_tx_gas, args.target_tau)
    if args.format == "json":
        _emit(_dump_json({"schema_version": SCHEMA_VERSION, **out}), args.output)
        return EXIT_OK
    every = out["blocks_per_emergency"]
    lines = [
        f"effective supply kappa      {out['kappa']:.6g} transactions per block",
        f"target throughput           {out['target_throughput']:.4g}",
        f"availability floor          {100 * out['availability_floor']:.4f}%",
        "congestion at most once per " + ("(never)" if every is None else f"{every:.0f} blocks"),
    ]
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", default=None, help="write here instead of stdout")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--tolerance", type=float, default=None,
                        help="decision tolerance (default $SOUPLINE_TOL or 1e-9)")

    parser = argparse.ArgumentParser(
        prog="soupline",
        description="Availability/throughput floors for capacity-limited supply.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", parents=[common], help="floor or benchmark curve")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--family", choices=CURVE_FAMILIES, default="optimal-relu")
    p.add_argument("--n", type=int, default=None, help="finite number of demanders")
    p.add_argument("--points", type=int, default=600)
    p.add_argument("--alpha-grid", type=_float_list, default=None)
    p.add_argument("--mu-grid", type=_float_list, default=None)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("audit", parents=[common], help="check one reported pair")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--availability", type=float, required=True)
    p.add_argument("--throughput", type=float, required=True)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("welfare", parents=[common], help="welfare floor against delta")
    p.add_argument("--K", type=float, required=True, help="real supply")
    p.add_argument("--family", choices=FAMILY_NAMES, default="optimal-relu")
    p.add_argument("--delta-grid", type=_float_list, default=None)
    p.set_defaults(func=cmd_welfare)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", choices=("chain", "soundness", "prophet", "all"), default="all")
    p.add_argument("--budget", type=int, default=1_000_000, help="Monte Carlo samples per demand profile")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ethereum", parents=[common], help="block gas scenario")
    p.add_argument("--gas-limit", type=float, default=30e6)
    p.add_argument("--max-tx-gas", type=float, default=750_000)
    p.add_argument("--target-tau", type=float, default=0.6)
    p.set_defaults(func=cmd_ethereum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.tolerance is None:
            args.tolerance = _default_tolerance()
        if not (math.isfinite(args.tolerance) and args.tolerance >= 0):
            raise UsageError("--tolerance must be a non-negative number")
        return args.func(args)
    except (UsageError, SouplineError, ValueError) as exc:
        print(f"soupline: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"soupline: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
