"""Monte Carlo simulation of percolation statistics on finite tree slabs.

A replicate realizes the open/closed field on the depth-d slab of the
r-ary tree plus, below every open boundary vertex, an aggregated frontier
continuation, and reports four coupled statistics of that one realization:
the largest cluster over all slab vertices, the largest cluster rooted on
the boundary, and the two run-length analogues.

Reproducibility contract: a result is a pure function of (params, d,
statistic, seed, caps, replicate count).  Replicate i draws from a key
derived as (seed, phase-of-statistic, i), so any scheduling of replicates
over workers produces identical arrays, element for element.  Worker count
is a throughput knob only and is deliberately kept out of result metadata.

Censoring: walkers stop at the node/height caps and flag the replicate;
flagged values are certified lower bounds, never silently clamped copies.
Supercritical parameters require an explicit node cap because continuation
clusters are infinite with positive probability.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels, _pysampler
from .core import (
    BudgetError,
    ModelParams,
    PreconditionError,
    Regime,
    ResourceLimitError,
    classify,
    tree_size,
)
from .exact import DistTable
from .rng import (
    GENERATOR_ID,
    PHASE_SINGLE_CLUSTER,
    PHASE_SINGLE_RUN,
    PHASE_TREE_CLUSTER,
    PHASE_TREE_JOINT,
    PHASE_TREE_RUN,
    derive_key,
)

__all__ = [
    "DEFAULT_HEIGHT_CAP",
    "DEFAULT_NODE_CAP",
    "MAX_TREE_NODES",
    "NODE_BUDGET",
    "SampleBatch",
    "SampleResult",
    "SimConfig",
    "SimOutcome",
    "empirical_table",
    "enumerate_small_pmf",
    "enumerate_small_run_cdf",
    "run_simulation",
    "sample_cluster_size",
    "sample_cluster_sizes",
    "sample_run_length",
    "sample_run_lengths",
]

DEFAULT_NODE_CAP = 10_000_000
DEFAULT_HEIGHT_CAP = 10_000_000

# One slab buffer must fit comfortably; 2^24 int64 nodes is 128 MiB.
MAX_TREE_NODES = 1 << 24

# Slab work alone (ignoring continuations) is size * reps vertex draws.
NODE_BUDGET = 20_000_000_000

_STATISTICS = ("cluster", "run", "both")

_SEED_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    """Validated description of one simulation request."""

    params: ModelParams
    d: int
    reps: int
    seed: int
    statistic: str = "both"
    cap_nodes: Optional[int] = None
    cap_height: Optional[int] = None

    def __post_init__(self) -> None:
        if not isinstance(self.d, int) or isinstance(self.d, bool) or self.d < 0:
            raise PreconditionError(f"d must be an integer >= 0, got {self.d!r}")
        if not isinstance(self.reps, int) or self.reps < 1:
            raise PreconditionError(f"reps must be an integer >= 1, got {self.reps!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed <= _SEED_MAX):
            raise PreconditionError("seed must be an integer in [0, 2^64)")
        if self.statistic not in _STATISTICS:
            raise PreconditionError(f"statistic must be one of {_STATISTICS}, got {self.statistic!r}")
        for name in ("cap_nodes", "cap_height"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or v < 1):
                raise PreconditionError(f"{name} must be a positive integer when given")
        size = tree_size(self.params.r, self.d)
        if size > MAX_TREE_NODES:
            raise ResourceLimitError(
                f"slab of {size} nodes exceeds the {MAX_TREE_NODES} node buffer limit"
            )
        if size * self.reps > NODE_BUDGET:
            raise BudgetError(
                f"slab work {size}*{self.reps} exceeds the {NODE_BUDGET} vertex-draw budget; "
                "reduce d or reps"
            )
        if classify(self.params) is Regime.SUPERCRITICAL and self.cap_nodes is None:
            raise PreconditionError(
                "supercritical continuations are infinite with positive probability; "
                "pass an explicit cap_nodes (results will be censored lower bounds)"
            )

    @property
    def size(self) -> int:
        return tree_size(self.params.r, self.d)

    @property
    def first_boundary(self) -> int:
        return tree_size(self.params.r, self.d - 1) if self.d > 0 else 0

    def effective_caps(self) -> tuple[int, int]:
        return (
            self.cap_nodes if self.cap_nodes is not None else DEFAULT_NODE_CAP,
            self.cap_height if self.cap_height is not None else DEFAULT_HEIGHT_CAP,
        )


@dataclass
class SimOutcome:
    """Arrays of per-replicate statistics from one simulation."""

    config: SimConfig
    values: dict = field(default_factory=dict)
    work: np.ndarray = None
    censored: np.ndarray = None

    @property
    def censored_count(self) -> int:
        return int(np.count_nonzero(self.censored))

    @property
    def total_work(self) -> int:
        return int(np.sum(self.work))

    def empirical_table(self, which: str, support_max: Optional[int] = None) -> DistTable:
        if which not in self.values:
            raise PreconditionError(
                f"statistic {which!r} not present; have {sorted(self.values)}"
            )
        kind = "cluster_size" if which.startswith("cluster") else "run_length"
        return empirical_table(self.values[which], kind, self.config.params, support_max)

    def to_json_dict(self) -> dict:
        cap_n, cap_h = self.config.effective_caps()
        return {
            "schema_version": 1,
            "generator": GENERATOR_ID,
            "params": self.config.params.describe(),
            "d": self.config.d,
            "statistic": self.config.statistic,
            "seed": self.config.seed,
            "reps": self.config.reps,
            "cap_nodes": cap_n,
            "cap_height": cap_h,
            "values": {k: [int(x) for x in v] for k, v in self.values.items()},
            "work": [int(x) for x in self.work],
            "censored": [bool(x) for x in self.censored],
            "censored_count": self.censored_count,
            "total_work": self.total_work,
        }


def _chunks(n: int, workers: int) -> list:
    w = max(1, min(workers, n))
    step = -(-n // w)
    return [(lo, min(lo + step, n)) for lo in range(0, n, step)]


def _replicate_keys(seed: int, phase: int, reps: int) -> np.ndarray:
    keys = np.empty(reps, dtype=np.uint64)
    for i in range(reps):
        keys[i] = derive_key(seed, phase, i)
    return keys


def run_simulation(config: SimConfig, workers: int = 1) -> SimOutcome:
    """Run all replicates; workers only partitions them across threads.

    The compiled batch kernels release the GIL, so threads scale on real
    cores, and every replicate writes to its own index: outputs are
    byte-identical for any worker count.
    """
    if not isinstance(workers, int) or workers < 1:
        raise PreconditionError(f"workers must be an integer >= 1, got {workers!r}")
    p = config.params.p
    r = config.params.r
    size = config.size
    fb = config.first_boundary
    cap_n, cap_h = config.effective_caps()
    reps = config.reps
    phase = {
        "cluster": PHASE_TREE_CLUSTER,
        "run": PHASE_TREE_RUN,
        "both": PHASE_TREE_JOINT,
    }[config.statistic]
    keys = _replicate_keys(config.seed, phase, reps)
    work = np.zeros(reps, dtype=np.int64)
    cens = np.zeros(reps, dtype=np.bool_)
    spans = _chunks(reps, workers)

    if config.statistic == "cluster":
        full = np.zeros(reps, dtype=np.int64)
        bnd = np.zeros(reps, dtype=np.int64)

        def job(lo, hi):
            buf = np.zeros(size, dtype=np.int64)
            _kernels.cluster_batch(
                keys[lo:hi], r, size, fb, p, cap_n, buf,
                full[lo:hi], bnd[lo:hi], work[lo:hi], cens[lo:hi],
            )

        values = {"cluster": full, "cluster_boundary": bnd}
    elif config.statistic == "run":
        full = np.zeros(reps, dtype=np.int64)
        bnd = np.zeros(reps, dtype=np.int64)

        def job(lo, hi):
            buf = np.zeros(size, dtype=np.int64)
            _kernels.run_batch(
                keys[lo:hi], r, size, fb, p, cap_n, cap_h, buf,
                full[lo:hi], bnd[lo:hi], work[lo:hi], cens[lo:hi],
            )

        values = {"run": full, "run_boundary": bnd}
    else:
        out_k = np.zeros(reps, dtype=np.int64)
        out_kb = np.zeros(reps, dtype=np.int64)
        out_r = np.zeros(reps, dtype=np.int64)
        out_rb = np.zeros(reps, dtype=np.int64)

        def job(lo, hi):
            buf_s = np.zeros(size, dtype=np.int64)
            buf_r = np.zeros(size, dtype=np.int64)
            _kernels.joint_batch(
                keys[lo:hi], r, size, fb, p, cap_n, cap_h, buf_s, buf_r,
                out_k[lo:hi], out_kb[lo:hi], out_r[lo:hi], out_rb[lo:hi],
                work[lo:hi], cens[lo:hi],
            )

        values = {
            "cluster": out_k,
            "cluster_boundary": out_kb,
            "run": out_r,
            "run_boundary": out_rb,
        }

    if len(spans) == 1:
        job(*spans[0])
    else:
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            futures = [pool.submit(job, lo, hi) for lo, hi in spans]
            for f in futures:
                f.result()
    return SimOutcome(config=config, values=values, work=work, censored=cens)


# ----------------------------------------------------------------------
# Single-vertex sampling.
# ----------------------------------------------------------------------


class SampleResult(NamedTuple):
    value: int
    censored: bool


class SampleBatch(NamedTuple):
    values: np.ndarray
    censored: np.ndarray


def _single_caps(params: ModelParams, cap_nodes, cap_height) -> tuple[int, int]:
    if classify(params) is Regime.SUPERCRITICAL and cap_nodes is None:
        raise PreconditionError(
            "supercritical clusters are infinite with positive probability; "
            "pass an explicit cap_nodes"
        )
    return (
        cap_nodes if cap_nodes is not None else DEFAULT_NODE_CAP,
        cap_height if cap_height is not None else DEFAULT_HEIGHT_CAP,
    )


def sample_cluster_size(
    params: ModelParams, seed: int, replicate: int = 0, cap_nodes: Optional[int] = None
) -> SampleResult:
    """Draw the cluster size of a single vertex (0 when it is closed)."""
    cap_n, _ = _single_caps(params, cap_nodes, None)
    key = derive_key(seed, PHASE_SINGLE_CLUSTER, replicate)
    v, c = _pysampler.gw_cluster(key, params.r, params.p, cap_n)
    return SampleResult(v, c)


def sample_run_length(
    params: ModelParams,
    seed: int,
    replicate: int = 0,
    cap_nodes: Optional[int] = None,
    cap_height: Optional[int] = None,
) -> SampleResult:
    """Draw the run length of a single vertex (0 when it is closed)."""
    cap_n, cap_h = _single_caps(params, cap_nodes, cap_height)
    key = derive_key(seed, PHASE_SINGLE_RUN, replicate)
    v, c = _pysampler.gw_run(key, params.r, params.p, cap_n, cap_h)
    return SampleResult(v, c)


def sample_cluster_sizes(
    params: ModelParams, seed: int, reps: int, cap_nodes: Optional[int] = None
) -> SampleBatch:
    """Batch of single-vertex cluster sizes; replicate i under any batch
    size equals sample_cluster_size(..., replicate=i)."""
    if not isinstance(reps, int) or reps < 1:
        raise PreconditionError(f"reps must be an integer >= 1, got {reps!r}")
    cap_n, _ = _single_caps(params, cap_nodes, None)
    keys = _replicate_keys(seed, PHASE_SINGLE_CLUSTER, reps)
    vals = np.zeros(reps, dtype=np.int64)
    cens = np.zeros(reps, dtype=np.bool_)
    _kernels.gw_cluster_batch(keys, params.r, params.p, cap_n, vals, cens)
    return SampleBatch(vals, cens)


def sample_run_lengths(
    params: ModelParams,
    seed: int,
    reps: int,
    cap_nodes: Optional[int] = None,
    cap_height: Optional[int] = None,
) -> SampleBatch:
    """Batch of single-vertex run lengths; same per-replicate law and
    bytes as sample_run_length."""
    if not isinstance(reps, int) or reps < 1:
        raise PreconditionError(f"reps must be an integer >= 1, got {reps!r}")
    cap_n, cap_h = _single_caps(params, cap_nodes, cap_height)
    keys = _replicate_keys(seed, PHASE_SINGLE_RUN, reps)
    vals = np.zeros(reps, dtype=np.int64)
    cens = np.zeros(reps, dtype=np.bool_)
    _kernels.gw_run_batch(keys, params.r, params.p, cap_n, cap_h, vals, cens)
    return SampleBatch(vals, cens)


# ----------------------------------------------------------------------
# Exact-rational enumeration (independent of the closed-form route).
# ----------------------------------------------------------------------

ENUM_MAX = 24


def _require_rational(params: ModelParams) -> Fraction:
    if params.p_rational is None:
        raise PreconditionError(
            "exact enumeration needs a rational p; construct ModelParams with a "
            "Fraction or a decimal string"
        )
    return params.p_rational


def enumerate_small_pmf(params: ModelParams, n_max: int) -> list:
    """Exact rational P(cluster size = n) for n = 0..n_max via the size
    recursion A(x) = (1-p) + p x A(x)^r, truncated coefficient-wise.

    Uses Fraction arithmetic throughout and no closed-form combinatorics,
    so it is an independent oracle for the pmf route.
    """
    if not isinstance(n_max, int) or n_max < 0:
        raise PreconditionError(f"n_max must be an integer >= 0, got {n_max!r}")
    if n_max > ENUM_MAX:
        raise ResourceLimitError(f"exact enumeration is capped at n_max={ENUM_MAX}")
    p = _require_rational(params)
    q = 1 - p
    r = params.r
    coeffs = [q] + [Fraction(0)] * n_max
    for _ in range(n_max + 1):
        powed = [Fraction(1)] + [Fraction(0)] * n_max
        for _k in range(r):
            nxt = [Fraction(0)] * (n_max + 1)
            for i, ai in enumerate(powed):
                if ai == 0:
                    continue
                for j in range(n_max + 1 - i):
                    if coeffs[j] != 0:
                        nxt[i + j] += ai * coeffs[j]
            powed = nxt
        coeffs = [q] + [p * powed[n - 1] for n in range(1, n_max + 1)]
    return coeffs


def enumerate_small_run_cdf(params: ModelParams, h_max: int) -> list:
    """Exact rational P(run <= h) for h = 0..h_max via the closure
    recursion in Fraction arithmetic."""
    if not isinstance(h_max, int) or h_max < 0:
        raise PreconditionError(f"h_max must be an integer >= 0, got {h_max!r}")
    if h_max > 64:
        raise ResourceLimitError("exact rational run cdf is capped at h_max=64")
    p = _require_rational(params)
    q = 1 - p
    out = [q]
    u = q
    for _ in range(h_max):
        u = q + p * u**params.r
        out.append(u)
    return out


# ----------------------------------------------------------------------
# Empirical tables.
# ----------------------------------------------------------------------


def empirical_table(
    values: np.ndarray,
    kind: str,
    params: ModelParams,
    support_max: Optional[int] = None,
) -> DistTable:
    """Dense empirical pmf/tail table from integer samples.

    Counts are accumulated exactly and divided once, so the tail
    decrements match the pmf to float precision.
    """
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise PreconditionError("values must be a nonempty 1-d integer array")
    if np.any(arr < 0):
        raise PreconditionError("values must be >= 0")
    top = int(arr.max()) if support_max is None else int(support_max)
    # Samples above the requested support stay in the final tail value
    # rather than being folded into the last pmf bin.
    counts = np.bincount(arr, minlength=top + 1).astype(np.int64)[: top + 1]
    n = arr.size
    pmf = counts / n
    above = n - np.cumsum(counts)
    tail = above / n
    with np.errstate(divide="ignore"):
        log_pmf = np.log(pmf)
        log_tail = np.log(tail)
    return DistTable(
        kind=kind,
        source="empirical",
        params=params,
        pmf=pmf,
        tail=tail,
        log_pmf=log_pmf,
        log_tail=log_tail,
        sample_count=n,
    )
