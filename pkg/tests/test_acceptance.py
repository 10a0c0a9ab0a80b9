"""Acceptance suite: eleven criteria, one pass/fail line each.

Every test prints its verdict through record_criterion, so a plain pytest
run ends with an "acceptance criteria" section listing A1..A11.  The
Monte Carlo criteria all use the frozen master seed; the generator is
counter-based, so every number here is bit-reproducible.
"""

import json
import math
import time

import numpy as np
import pytest

from treeperc import (
    ModelParams,
    chen_stein_g_bound,
    cluster_pmf,
    cluster_pmf_binomial_form,
    cluster_tail,
    cluster_tail_asymptotic,
    cluster_tail_many,
    estimate_c4,
    lambda_cluster,
    lambda_run,
    mu_d,
    nu_d,
    run_cdf_recursion,
    run_tail_series,
)
from treeperc.cli import main as cli_main
from treeperc.sim import SimConfig, enumerate_small_pmf, run_simulation

from conftest import record_criterion

SEED = 20260816
PARAM_GRID = [(2, "0.2"), (2, "0.3"), (2, "1/2"), (3, "0.2"), (3, "0.3"), (3, "1/3")]


@pytest.fixture(scope="session")
def slab20_joint():
    # one depth-20 subcritical simulation serves both finite-d law checks
    params = ModelParams(2, "0.3")
    cfg = SimConfig(params, 20, 2000, SEED, "both")
    return run_simulation(cfg, workers=1)


@pytest.fixture(scope="session")
def critical_sims():
    params = ModelParams(2, "1/2")
    cap = 10_000_000
    out = {}
    for d in (6, 8, 10):
        cfg = SimConfig(params, d, 2000, SEED, "cluster", cap_nodes=cap)
        out[("cluster", d)] = run_simulation(cfg, workers=1)
    for d in (8, 10, 12):
        cfg = SimConfig(params, d, 2000, SEED, "run", cap_nodes=cap, cap_height=cap)
        out[("run", d)] = run_simulation(cfg, workers=1)
    return out


def test_a1_enumeration_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for r, p in PARAM_GRID:
        params = ModelParams(r, p)
        coeffs = enumerate_small_pmf(params, 7)
        for n in range(8):
            delta = abs(cluster_pmf(params, n).prob - float(coeffs[n]))
            worst = max(worst, delta)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    record_criterion(
        "A1", ok,
        f"pmf vs exact-rational enumeration, n<=7: worst abs delta {worst:.3e} "
        f"(<=1e-12), {elapsed:.2f}s",
    )
    assert ok


def test_a2_closed_form_crosscheck():
    t0 = time.perf_counter()
    worst = 0.0
    for r, p in PARAM_GRID:
        params = ModelParams(r, p)
        for n in range(1, 51):
            a = cluster_pmf(params, n).log
            b = cluster_pmf_binomial_form(params, n).log
            worst = max(worst, abs(a - b) / abs(a))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    record_criterion(
        "A2", ok,
        f"catalan-weight vs binomial-point pmf forms, n<=50: worst rel delta "
        f"{worst:.3e} (<=1e-12), {elapsed:.2f}s",
    )
    assert ok


def test_a3_subcritical_tail_asymptotic():
    t0 = time.perf_counter()
    params = ModelParams(2, "0.3")
    dists = []
    for n in (50, 100, 200, 300):
        ratio = cluster_tail(params, n).prob / cluster_tail_asymptotic(params, n)
        dists.append(abs(ratio - 1.0))
    final_ratio = cluster_tail(params, 300).prob / cluster_tail_asymptotic(params, 300)
    elapsed = time.perf_counter() - t0
    ok = (
        0.95 <= final_ratio <= 1.05
        and all(x > y for x, y in zip(dists, dists[1:]))
        and elapsed < 5.0
    )
    record_criterion(
        "A3", ok,
        f"tail/asymptotic ratio at n=300: {final_ratio:.4f} (in [0.95,1.05]), "
        f"|ratio-1| shrinking over n=50..300: {['%.3f' % x for x in dists]}, {elapsed:.2f}s",
    )
    assert ok


def test_a4_critical_constant():
    t0 = time.perf_counter()
    params = ModelParams(2, "1/2")
    val = math.sqrt(1e4) * cluster_tail(params, 10**4).prob
    elapsed = time.perf_counter() - t0
    ok = 0.536 <= val <= 0.593 and elapsed < 30.0
    record_criterion(
        "A4", ok,
        f"critical sqrt(n) tail at n=1e4: {val:.6f} (in [0.536,0.593], "
        f"target 1/sqrt(pi)={1/math.sqrt(math.pi):.6f}), {elapsed:.2f}s",
    )
    assert ok


def test_a5_run_tail_consistency():
    t0 = time.perf_counter()
    params = ModelParams(2, "0.3")
    worst_gap = 0.0
    contained = True
    for h in range(0, 9):
        bracket = run_tail_series(params, h, 700)
        rec = run_cdf_recursion(params, h).tail
        contained = contained and bracket.contains(rec)
        worst_gap = max(worst_gap, bracket.remainder, abs(rec - bracket.lower.prob))
    crit = ModelParams(2, "1/2")
    hphi = 1000 * run_cdf_recursion(crit, 1000).tail
    elapsed = time.perf_counter() - t0
    ok = contained and worst_gap <= 1e-10 and 1.8 <= hphi <= 2.2 and elapsed < 10.0
    record_criterion(
        "A5", ok,
        f"series bracket vs recursion h<=8: contained={contained}, worst gap "
        f"{worst_gap:.2e} (<=1e-10); critical h*tail at h=1e3: {hphi:.4f} "
        f"(in [1.8,2.2]), {elapsed:.2f}s",
    )
    assert ok


def test_a6_subcritical_cluster_law(slab20_joint):
    params = slab20_joint.config.params
    k = slab20_joint.values["cluster"]
    base = math.floor(mu_d(params, 20))
    worst = 0.0
    for x in (-6, -3, 0, 3, 6):
        t = base + x
        emp = float(np.mean(k <= t))
        approx = math.exp(-lambda_cluster(params, 20, t))
        worst = max(worst, abs(emp - approx))
    ok = worst <= 0.05 and slab20_joint.censored_count == 0
    record_criterion(
        "A6", ok,
        f"largest-cluster law at d=20, 2000 reps: worst |emp-exp(-lambda)| "
        f"{worst:.4f} (<=0.05) over thresholds floor(mu)+{{-6..6}}, mu={mu_d(params, 20):.2f}",
    )
    assert ok


def test_a7_subcritical_run_law(slab20_joint):
    params = slab20_joint.config.params
    rv = slab20_joint.values["run"]
    base = math.floor(nu_d(params, 20))
    worst = 0.0
    for x in (-6, -3, 0, 3, 6):
        t = base + x
        emp = float(np.mean(rv <= t))
        approx = math.exp(-lambda_run(params, 20, t))
        worst = max(worst, abs(emp - approx))
    ok = worst <= 0.05
    record_criterion(
        "A7", ok,
        f"longest-run law at d=20, 2000 reps: worst |emp-exp(-lambda)| "
        f"{worst:.4f} (<=0.05) over thresholds floor(nu)+{{-6..6}}, nu={nu_d(params, 20):.2f}",
    )
    assert ok


def test_a8_critical_trends(critical_sims):
    params = ModelParams(2, "1/2")
    cap = 10_000_000
    # cluster growth exponent: median log2(K_d)/d increasing toward 2.
    # Censored replicates carry lower bounds above the cap, far beyond the
    # medians probed here, so the medians are exact.
    k_medians = []
    for d in (6, 8, 10):
        vals = critical_sims[("cluster", d)].values["cluster"]
        k_medians.append(float(np.median(np.log2(np.maximum(vals, 1)))) / d)
    k_ok = (
        all(x < y for x, y in zip(k_medians, k_medians[1:]))
        and all(1.5 <= m <= 2.5 for m in k_medians)
    )
    r_medians = []
    for d in (8, 10, 12):
        vals = critical_sims[("run", d)].values["run"]
        r_medians.append(float(np.median(np.log2(np.maximum(vals, 1)))) / d)
    r_ok = all(0.7 <= m <= 1.3 for m in r_medians)
    # boundary-cluster maximum vs the exact product law, DKW at 99.9%;
    # queries stay below the cap so censoring cannot bias the comparison
    out = critical_sims[("cluster", 10)]
    kb = out.values["cluster_boundary"]
    qs = np.unique(kb[kb < cap]).astype(int)
    tails = cluster_tail_many(params, qs.tolist())
    exact_cdf = np.exp((2**10) * np.log1p(-tails))
    emp_cdf = np.searchsorted(np.sort(kb), qs, side="right") / kb.size
    sup = float(np.max(np.abs(emp_cdf - exact_cdf)))
    band = math.sqrt(math.log(2 / 0.001) / (2 * kb.size))
    dkw_ok = sup < band
    ok = k_ok and r_ok and dkw_ok
    record_criterion(
        "A8", ok,
        f"critical trends: cluster medians/d {['%.4f' % m for m in k_medians]} "
        f"increasing in [1.5,2.5]={k_ok}; run medians/d {['%.4f' % m for m in r_medians]} "
        f"in [0.7,1.3]={r_ok}; boundary DKW sup {sup:.4f} < band {band:.4f}={dkw_ok}",
    )
    assert ok


def test_a9_g_bound_decay():
    t0 = time.perf_counter()
    params = ModelParams(2, "0.3")
    g20 = chen_stein_g_bound(params, 10, 20).value
    g60 = chen_stein_g_bound(params, 10, 60).value
    elapsed = time.perf_counter() - t0
    ok = g60 < 0.01 * g20 and elapsed < 5.0
    record_criterion(
        "A9", ok,
        f"poisson-error bound decay: G(n=60)={g60:.3e} < 1% of G(n=20)={g20:.3e} "
        f"(ratio {g60 / g20:.2e}), {elapsed:.2f}s",
    )
    assert ok


def test_a10_cli_determinism(tmp_path):
    argv = [
        "verify", "--theorem", "2", "--r", "2", "--p", "0.3",
        "--d", "10", "--reps", "300", "--seed", str(SEED),
    ]
    paths = [tmp_path / f"run{i}.json" for i in range(3)]
    assert cli_main(argv + ["--workers", "1", "--out", str(paths[0])]) == 0
    assert cli_main(argv + ["--workers", "1", "--out", str(paths[1])]) == 0
    assert cli_main(argv + ["--workers", "4", "--out", str(paths[2])]) == 0
    blobs = [p.read_bytes() for p in paths]
    ok = blobs[0] == blobs[1] == blobs[2] and len(blobs[0]) > 0
    doc = json.loads(blobs[0])
    record_criterion(
        "A10", ok,
        f"verify output byte-identical across repeat and worker counts "
        f"({len(blobs[0])} bytes, theorem 2, d=10, reps=300, pass={doc['pass']})",
    )
    assert ok


def test_a11_c4_estimator():
    t0 = time.perf_counter()
    params = ModelParams(2, "0.3")
    est = estimate_c4(params, h_max=300)
    phi = run_cdf_recursion(params, 350).tail
    ratio = phi / (est.value * 0.6**350)
    elapsed = time.perf_counter() - t0
    ok = (
        est.converged
        and est.last_increment < 1e-8
        and 0.999 <= ratio <= 1.001
        and elapsed < 1.0
    )
    record_criterion(
        "A11", ok,
        f"run-prefactor estimator: increment {est.last_increment:.2e} (<1e-8) at "
        f"h=300, value {est.value:.12f}, tail/(c4 (rp)^h) at h=350: {ratio:.6f} "
        f"(in [0.999,1.001]), {elapsed:.2f}s",
    )
    assert ok
