"""Command-line interface.

Five subcommands: `constants` extracts regime constants, `exact-dist`
builds dense exact tables, `simulate` runs Monte Carlo campaigns,
`verify` compares simulation against the finite-size Poisson law and the
limiting CDFs on an x grid, and `oracle` cross-checks the independent
exact routes against each other and reports the residuals.

Output discipline: reports are deterministic functions of the flags
(sorted keys, shortest round-trip floats, no timestamps, no worker count),
so identical invocations produce identical bytes; --workers may change
only the wall-clock time.  Exit codes: 0 success, 2 usage, 3
regime/precondition error, 4 resource budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Optional

from . import __version__
from .core import (
    BudgetError,
    ModelParams,
    PreconditionError,
    Regime,
    RegimeError,
    ResourceLimitError,
    classify,
    constant_c1,
    constant_c2,
    constant_c3,
    kappa,
)
from .exact import (
    EXACT_CATALAN_MAX,
    OVERLAP_WINDOW,
    _int_log,
    build_cluster_table,
    build_run_table,
    cluster_pmf,
    cluster_pmf_binomial_form,
    cluster_tail,
    estimate_c4,
    generalized_catalan,
    log_generalized_catalan,
    run_cdf_recursion,
    run_tail_series,
)
from .limits import (
    centering_fractional,
    chen_stein_g_bound,
    constant_c_cluster,
    constant_c_run,
    critical_cluster_cdf,
    critical_run_cdf,
    lambda_cluster,
    lambda_run,
    lattice_cluster_law,
    lattice_run_law,
    mu_d,
    nu_d,
)
from .rng import GENERATOR_ID
from .sim import (
    SimConfig,
    enumerate_small_pmf,
    enumerate_small_run_cdf,
    run_simulation,
)

# Largest threshold the verify command will evaluate an exact tail at;
# keeps the streaming tail pass to a few seconds.
_VERIFY_TAIL_LIMIT = 50_000_000

_THEOREM_CLAIMS = {
    1: "critical largest cluster: P(log_r K_d <= 2d + x) -> exp(-c1 r^(-x/2))",
    2: "subcritical largest cluster: K_d - mu_d is tight with a lattice limit law",
    3: "critical longest run: P(log_r R_d <= d + x) -> exp(-c3 r^(-x))",
    4: "subcritical longest run: R_d - nu_d is tight with a lattice limit law",
}


def _parse_p(text: str):
    if "/" in text:
        return Fraction(text)
    return text  # decimal string; ModelParams converts exactly


def _params_from(args) -> ModelParams:
    return ModelParams(r=args.r, p=_parse_p(args.p))


def _json_sanitize(obj):
    if isinstance(obj, dict):
        return {k: _json_sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        if math.isnan(obj):
            return "nan"
        return "inf" if obj > 0 else "-inf"
    return obj


def _flatten(obj, prefix: str, rows: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k), rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(v, f"{prefix}[{i}]", rows)
    elif isinstance(obj, bool):
        rows.append((prefix, "true" if obj else "false"))
    elif obj is None:
        rows.append((prefix, "null"))
    elif isinstance(obj, float):
        rows.append((prefix, repr(obj)))
    else:
        rows.append((prefix, str(obj)))


def _emit(report: dict, fmt: str, out: Optional[str]) -> None:
    report = _json_sanitize(report)
    if fmt == "json":
        text = json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"
    else:
        rows = []
        _flatten(report, "", rows)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        text = buf.getvalue()
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _base_report(params: ModelParams) -> dict:
    return {
        "schema_version": 1,
        "tool_version": __version__,
        "generator": GENERATOR_ID,
        "params": params.describe(),
    }


# ----------------------------------------------------------------------
# constants
# ----------------------------------------------------------------------


def _try_constant(fn, *a) -> dict:
    try:
        return {"value": fn(*a)}
    except (RegimeError, PreconditionError) as e:
        return {"error": str(e)}


def cmd_constants(args) -> int:
    params = _params_from(args)
    regime = classify(params)
    report = _base_report(params)
    report["kappa"] = kappa(params)
    report["regime"] = regime.value
    consts = {}
    if regime is Regime.CRITICAL:
        consts["c1"] = _try_constant(constant_c1, params)
        consts["c3"] = _try_constant(constant_c3, params)
    elif regime is Regime.SUBCRITICAL:
        consts["c2"] = _try_constant(constant_c2, params)
        consts["c_cluster"] = _try_constant(constant_c_cluster, params)
        est = estimate_c4(params)
        consts["c4"] = {
            "value": est.value,
            "last_increment": est.last_increment,
            "h_max": est.h_max,
            "converged": est.converged,
        }
        consts["c_run"] = _try_constant(constant_c_run, params)
    report["constants"] = consts
    _emit(report, args.format, args.out)
    return 0


# ----------------------------------------------------------------------
# exact-dist
# ----------------------------------------------------------------------


def cmd_exact_dist(args) -> int:
    params = _params_from(args)
    if args.statistic == "cluster":
        table = build_cluster_table(params, args.n_max)
    else:
        table = build_run_table(params, args.n_max)
    table.validate()
    if args.format == "csv":
        if args.out:
            table.to_csv(args.out)
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["n", "pmf", "tail", "log_pmf", "log_tail"])
            for n in range(len(table.pmf)):
                w.writerow(
                    [
                        n,
                        repr(float(table.pmf[n])),
                        repr(float(table.tail[n])),
                        repr(float(table.log_pmf[n])),
                        repr(float(table.log_tail[n])),
                    ]
                )
            sys.stdout.write(buf.getvalue())
        return 0
    report = _base_report(params)
    report["table"] = table.to_json_dict()
    _emit(report, "json", args.out)
    return 0


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------


def cmd_simulate(args) -> int:
    params = _params_from(args)
    config = SimConfig(
        params=params,
        d=args.d,
        reps=args.reps,
        seed=args.seed,
        statistic=args.statistic,
        cap_nodes=args.cap,
        cap_height=args.cap_height,
    )
    outcome = run_simulation(config, workers=args.workers)
    if args.format == "csv":
        cols = sorted(outcome.values)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", *cols, "work", "censored"])
        for i in range(config.reps):
            w.writerow(
                [i, *(int(outcome.values[c][i]) for c in cols),
                 int(outcome.work[i]), "true" if outcome.censored[i] else "false"]
            )
        text = buf.getvalue()
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    report = _base_report(params)
    report["result"] = outcome.to_json_dict()
    _emit(report, "json", args.out)
    return 0


# ----------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------


def _verify_thresholds(theorem: int, params: ModelParams, d: int, xs: list) -> list:
    if theorem == 1:
        return [min(int(params.r ** (2 * d + x)), _VERIFY_TAIL_LIMIT) for x in xs]
    if theorem == 3:
        return [min(int(params.r ** (d + x)), _VERIFY_TAIL_LIMIT) for x in xs]
    if theorem == 2:
        base = math.floor(mu_d(params, d))
    else:
        base = math.floor(nu_d(params, d))
    return [max(base + x, 0) for x in xs]


def cmd_verify(args) -> int:
    params = _params_from(args)
    theorem = args.theorem
    regime = classify(params)
    if theorem in (1, 3) and regime is not Regime.CRITICAL:
        raise RegimeError(
            f"theorem {theorem} concerns the critical regime; got {regime.value} "
            f"(p = {params.p}, 1/r = {1.0 / params.r})"
        )
    if theorem in (2, 4) and regime is not Regime.SUBCRITICAL:
        raise RegimeError(
            f"theorem {theorem} concerns the subcritical regime; got {regime.value}"
        )
    xs = args.x_grid
    kind = "cluster" if theorem in (1, 2) else "run"
    thresholds = _verify_thresholds(theorem, params, args.d, xs)
    if max(thresholds) > _VERIFY_TAIL_LIMIT:
        raise ResourceLimitError("threshold grid exceeds the exact-tail evaluation limit")

    config = SimConfig(
        params=params,
        d=args.d,
        reps=args.reps,
        seed=args.seed,
        statistic=kind,
        cap_nodes=args.cap,
        cap_height=args.cap_height,
    )
    outcome = run_simulation(config, workers=args.workers)
    values = outcome.values[kind]

    report = _base_report(params)
    report.update(
        {
            "theorem": theorem,
            "claim": _THEOREM_CLAIMS[theorem],
            "statistic": kind,
            "d": args.d,
            "reps": args.reps,
            "seed": args.seed,
            "tolerance": args.tolerance,
            "censored_count": outcome.censored_count,
        }
    )
    if theorem == 2:
        center = mu_d(params, args.d)
        law = lattice_cluster_law(params, centering_fractional(params, args.d, "cluster"))
        report["centering"] = {"mu_d": center, "fractional": center - math.floor(center)}
    elif theorem == 4:
        center = nu_d(params, args.d)
        law = lattice_run_law(params, centering_fractional(params, args.d, "run"))
        report["centering"] = {"nu_d": center, "fractional": center - math.floor(center)}
    else:
        center = None
        law = None

    rows = []
    all_pass = True
    for x, thr in zip(xs, thresholds):
        lam = lambda_cluster(params, args.d, thr) if kind == "cluster" else lambda_run(
            params, args.d, thr
        )
        poisson = math.exp(-lam)
        emp = float((values <= thr).mean())
        if theorem == 1:
            limit_value = critical_cluster_cdf(params, x)
        elif theorem == 3:
            limit_value = critical_run_cdf(params, x)
        else:
            limit_value = law.cdf(thr - center)
        hw = 3.0 * math.sqrt(max(emp * (1.0 - emp), 1e-12) / args.reps)
        err = abs(emp - poisson)
        ok = err <= args.tolerance
        all_pass = all_pass and ok
        row = {
            "x": x,
            "threshold": thr,
            "empirical": emp,
            "lambda": lam,
            "poisson": poisson,
            "limit_cdf": limit_value,
            "ci_halfwidth_3sigma": hw,
            "abs_error": err,
            "pass": ok,
        }
        if kind == "cluster":
            g = chen_stein_g_bound(params, args.d, thr)
            row["g_bound"] = g.value
            row["g_bound_flagged"] = g.flagged
        else:
            row["g_bound"] = None
        rows.append(row)
    report["rows"] = rows
    report["pass"] = all_pass
    _emit(report, args.format, args.out)
    return 0


# ----------------------------------------------------------------------
# oracle
# ----------------------------------------------------------------------


def cmd_oracle(args) -> int:
    params = _params_from(args)
    report = _base_report(params)
    checks = {}

    n_small = min(args.n_max, 12)
    enum = enumerate_small_pmf(params, n_small)
    d_enum = max(
        abs(cluster_pmf(params, n).prob - float(enum[n])) for n in range(n_small + 1)
    )
    checks["pmf_vs_enumeration"] = {"n_max": n_small, "max_abs_delta": d_enum, "ok": d_enum <= 1e-12}

    d_forms = 0.0
    for n in range(1, 51):
        a = cluster_pmf(params, n).log
        b = cluster_pmf_binomial_form(params, n).log
        d_forms = max(d_forms, abs(a - b))
    checks["pmf_closed_forms_log_delta"] = {"n_max": 50, "max_abs_delta": d_forms, "ok": d_forms <= 1e-12}

    h_small = min(args.h_max, 8)
    worst_gap = 0.0
    inside = True
    for h in range(h_small + 1):
        phi = run_cdf_recursion(params, h).tail
        bracket = run_tail_series(params, h, n_max=200)
        lo, hi = bracket.lower.prob, bracket.upper.prob
        inside = inside and (lo - 1e-10 <= phi <= hi + 1e-10)
        worst_gap = max(worst_gap, hi - lo)
    checks["run_recursion_vs_series"] = {
        "h_max": h_small,
        "bracket_contains_recursion": inside,
        "max_bracket_width": worst_gap,
        "ok": inside,
    }

    if params.p_rational is not None:
        exact_u = enumerate_small_run_cdf(params, h_small)
        d_run = max(
            abs(run_cdf_recursion(params, h).cdf - float(exact_u[h])) for h in range(h_small + 1)
        )
        checks["run_recursion_vs_rational"] = {"h_max": h_small, "max_abs_delta": d_run, "ok": d_run <= 1e-12}

    lo_w, hi_w = OVERLAP_WINDOW
    worst_rel = 0.0
    for n in range(lo_w, hi_w + 1):
        exact_log = _int_log(generalized_catalan(params.r, n))
        smooth = (
            math.lgamma(params.r * n + 1)
            - math.lgamma(n + 1)
            - math.lgamma((params.r - 1) * n + 2)
        )
        worst_rel = max(worst_rel, abs(exact_log - smooth) / abs(exact_log))
    checks["catalan_log_overlap"] = {
        "window": [lo_w, hi_w],
        "exact_max": EXACT_CATALAN_MAX,
        "max_rel_delta": worst_rel,
        "ok": worst_rel <= 1e-9,
    }

    report["checks"] = checks
    report["all_ok"] = all(c["ok"] for c in checks.values())
    _emit(report, args.format, args.out)
    return 0


# ----------------------------------------------------------------------
# parser / entry
# ----------------------------------------------------------------------


def _add_common(sp, *, d: bool = False, sim: bool = False) -> None:
    sp.add_argument("--r", type=int, required=True, help="branching factor (integer >= 2)")
    sp.add_argument("--p", type=str, required=True, help="open probability: decimal or a/b rational")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", type=str, default=None, help="write the report to this path")
    if d:
        sp.add_argument("--d", type=int, required=True, help="slab depth (generations)")
    if sim:
        sp.add_argument("--reps", type=int, required=True, help="number of replicates")
        sp.add_argument("--seed", type=int, required=True, help="master seed (64-bit)")
        sp.add_argument("--cap", type=int, default=None, help="continuation node cap per walker")
        sp.add_argument("--cap-height", type=int, default=None, help="continuation height cap per walker")
        sp.add_argument("--workers", type=int, default=1, help="worker threads (throughput only)")


def _x_grid(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad x grid {text!r}: {e}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treeperc",
        description="Exact and simulated percolation statistics on rooted r-ary trees.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("constants", help="regime constants and their diagnostics")
    _add_common(sp)
    sp.set_defaults(fn=cmd_constants)

    sp = sub.add_parser("exact-dist", help="dense exact pmf/tail table")
    _add_common(sp)
    sp.add_argument("--statistic", choices=("cluster", "run"), required=True)
    sp.add_argument("--n-max", type=int, required=True, help="largest value tabulated")
    sp.set_defaults(fn=cmd_exact_dist)

    sp = sub.add_parser("simulate", help="Monte Carlo campaign over the depth-d slab")
    _add_common(sp, d=True, sim=True)
    sp.add_argument("--statistic", choices=("cluster", "run", "both"), default="both")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("verify", help="simulation vs exact Poisson law vs limit CDF")
    _add_common(sp, d=True, sim=True)
    sp.add_argument("--theorem", type=int, choices=(1, 2, 3, 4), required=True)
    sp.add_argument("--x-grid", type=_x_grid, default=None, help="comma-separated integer offsets")
    sp.add_argument("--tolerance", type=float, default=0.05)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("oracle", help="cross-check the independent exact routes")
    _add_common(sp)
    sp.add_argument("--n-max", type=int, default=7)
    sp.add_argument("--h-max", type=int, default=8)
    sp.set_defaults(fn=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "x_grid", "absent") is None:
        args.x_grid = [-2, -1, 0, 1, 2] if args.theorem in (1, 3) else [-6, -3, 0, 3, 6]
    try:
        return args.fn(args)
    except (BudgetError, ResourceLimitError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 4
    except (PreconditionError, RegimeError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
