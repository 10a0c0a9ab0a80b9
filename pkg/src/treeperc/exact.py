"""Exact finite-size distributions for rooted-tree percolation.

Two statistics of the cluster rooted at a single vertex are computed
exactly: its size (number of vertices in the open cluster hanging from an
open root) and its run length (number of generations an open path from the
root survives, counting the root).

Size law.  The probability of size n factors through the number of rooted
subtree shapes of the r-ary tree with n vertices, a generalized Catalan
count, times p^n for the open vertices, times (1-p)^((r-1)n+1) for the
closed frontier: every n-vertex subtree has exactly (r-1)n+1 child slots
sticking out of it.  An equivalent point-probability form through a
binomial random walk is provided as an independent evaluation route.

Run law.  P(run <= h) satisfies u_0 = 1-p, u_{h+1} = (1-p) + p u_h^r; the
tail recursion is carried directly so deep tails are not lost to rounding.
A second, series route sums subtree counts refined by height and brackets
the truncated remainder rigorously; the two routes must agree and tests
hold them to that.

Numbers below about 1e-15 are carried in log space; linear partial sums
are compensated and only used while all terms are comfortably
representable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom as _scipy_binom

from .core import (
    LOG_ZERO,
    LogProb,
    ModelParams,
    PreconditionError,
    Regime,
    RegimeError,
    ResourceLimitError,
    classify,
    constant_c1,
    constant_c2,
    kappa,
    log_add,
)

__all__ = [
    "CatalanTable",
    "DistTable",
    "EXACT_CATALAN_MAX",
    "OVERLAP_WINDOW",
    "POLY_DEGREE_CAP",
    "C4Estimate",
    "RunCdfPoint",
    "TailSeriesBracket",
    "build_cluster_table",
    "build_run_table",
    "cluster_pmf",
    "cluster_pmf_binomial_form",
    "cluster_tail",
    "cluster_tail_asymptotic",
    "cluster_tail_many",
    "estimate_c4",
    "generalized_catalan",
    "log_generalized_catalan",
    "run_cdf_recursion",
    "run_cdf_table",
    "run_tail_series",
    "subtree_count_size_height",
]

# Exact integer Catalan values are used up to this index; beyond it the
# log-gamma route takes over.  Tests cross-check the two on the overlap.
EXACT_CATALAN_MAX = 512
OVERLAP_WINDOW = (480, 512)

# Degree cap for the exact truncated polynomial recursion on size-height
# counts; the coefficients grow like 4^n so this is a time guard, not a
# correctness limit.
POLY_DEGREE_CAP = 1024

# Largest dense distribution table that will be materialized.
DENSE_TABLE_MAX = 1 << 21

_LN2 = math.log(2.0)

# Forward tails below this magnitude have lost too much to cancellation
# against 1; the log-space backward sum takes over there.
_FORWARD_TAIL_FLOOR = 1e-8


def _int_log(n: int) -> float:
    """Natural log of a positive integer of any size."""
    if n <= 0:
        raise ValueError("log of a non-positive integer")
    if n.bit_length() <= 900:
        return math.log(n)
    shift = n.bit_length() - 64
    return math.log(n >> shift) + shift * _LN2


def generalized_catalan(r: int, n: int) -> int:
    """Number of n-vertex rooted subtrees of the r-ary tree, exactly.

    Equals C(rn, n) / ((r-1)n + 1); the n = 0 value is taken to be 1 so
    that the size law assigns the closed-root event its (1-p) weight.
    """
    if not isinstance(r, int) or r < 2:
        raise PreconditionError(f"r must be an integer >= 2, got {r!r}")
    if not isinstance(n, int) or n < 0:
        raise PreconditionError(f"n must be an integer >= 0, got {n!r}")
    if n == 0:
        return 1
    return math.comb(r * n, n) // ((r - 1) * n + 1)


def log_generalized_catalan(r: int, n: int) -> float:
    """log of the subtree count; exact integers below EXACT_CATALAN_MAX,
    log-gamma beyond."""
    if n <= EXACT_CATALAN_MAX:
        return _int_log(generalized_catalan(r, n))
    if n > EXACT_CATALAN_MAX and not isinstance(n, int):
        raise PreconditionError(f"n must be an integer, got {n!r}")
    rn = float(r) * n
    return float(gammaln(rn + 1.0) - gammaln(n + 1.0) - gammaln(rn - n + 2.0))


@dataclass
class CatalanTable:
    """Subtree counts for one branching factor, with log values throughout
    and exact integers kept up to ``exact_max``."""

    r: int
    n_max: int
    exact_max: int
    values: list
    log_values: np.ndarray

    @classmethod
    def build(cls, r: int, n_max: int, exact_max: int = EXACT_CATALAN_MAX) -> "CatalanTable":
        if n_max < 0:
            raise PreconditionError("n_max must be >= 0")
        values = [generalized_catalan(r, n) if n <= exact_max else None for n in range(n_max + 1)]
        logs = np.empty(n_max + 1)
        for n in range(n_max + 1):
            logs[n] = log_generalized_catalan(r, n)
        return cls(r=r, n_max=n_max, exact_max=exact_max, values=values, log_values=logs)

    def value(self, n: int) -> Optional[int]:
        return self.values[n]

    def log_value(self, n: int) -> float:
        return float(self.log_values[n])

    def size_height_count(self, n: int, h: int) -> int:
        return subtree_count_size_height(self.r, n, h)

    def to_json_dict(self, include_heights: bool = False) -> dict:
        # Exact integers go out as decimal strings so no consumer rounds them.
        out = {
            "schema_version": 1,
            "r": self.r,
            "n_max": self.n_max,
            "exact_max": self.exact_max,
            "values": {str(n): str(v) for n, v in enumerate(self.values) if v is not None},
            "log_values": [_json_float(x) for x in self.log_values],
        }
        if include_heights:
            refine = {}
            top = min(self.n_max, POLY_DEGREE_CAP)
            for n in range(1, top + 1):
                for h in range(n):
                    c = subtree_count_size_height(self.r, n, h)
                    if c:
                        refine[f"{n},{h}"] = str(c)
            out["size_height"] = refine
        return out


# ----------------------------------------------------------------------
# Cluster size law.
# ----------------------------------------------------------------------


def _log_weight(params: ModelParams, n: float):
    """log(p^n (1-p)^((r-1)n+1)), vectorizable in n."""
    lp = math.log(params.p)
    lq = math.log1p(-params.p)
    return n * lp + ((params.r - 1) * n + 1) * lq


def cluster_pmf(params: ModelParams, n: int) -> LogProb:
    """P(cluster size = n) for a single vertex, via the subtree-count form.

    n = 0 is the closed-root event with probability 1-p.
    """
    if not isinstance(n, int) or n < 0:
        raise PreconditionError(f"n must be an integer >= 0, got {n!r}")
    if n == 0:
        return LogProb(math.log1p(-params.p))
    log_cat = log_generalized_catalan(params.r, n)
    return LogProb(min(log_cat + _log_weight(params, n), 0.0))


def cluster_pmf_binomial_form(params: ModelParams, n: int) -> LogProb:
    """P(cluster size = n) via the random-walk point probability
    (p/n) P(Bin(nr, p) = n-1); an independent evaluation route."""
    if not isinstance(n, int) or n < 1:
        raise PreconditionError(f"this form needs n >= 1, got {n!r}")
    lp = _scipy_binom.logpmf(n - 1, n * params.r, params.p)
    return LogProb(min(float(lp) + math.log(params.p) - math.log(n), 0.0))


def _log_pmf_block(params: ModelParams, lo: int, hi: int) -> np.ndarray:
    """Vectorized log pmf for sizes lo..hi-1 (all >= 1) via log-gamma."""
    ns = np.arange(lo, hi, dtype=np.float64)
    r = float(params.r)
    log_cat = gammaln(r * ns + 1.0) - gammaln(ns + 1.0) - gammaln(r * ns - ns + 2.0)
    return log_cat + ns * math.log(params.p) + ((r - 1.0) * ns + 1.0) * math.log1p(-params.p)


def _forward_tails(params: ModelParams, ns: Sequence[int]) -> np.ndarray:
    """Tails 1 - sum_{m<=n} pmf(m) at the sorted query points ns.

    Streams pmf blocks so the largest query sets the cost; partial block
    sums are recombined with fsum so the error stays near one rounding of
    the final subtraction.
    """
    queries = np.asarray(ns, dtype=np.int64)
    out = np.empty(len(queries))
    order = np.argsort(queries, kind="stable")
    sorted_q = queries[order]
    block = 1 << 19
    partials = [1.0 - params.p]  # pmf(0)
    done_to = 0  # pmf summed for sizes <= done_to
    qi = 0
    while qi < len(sorted_q):
        target = int(sorted_q[qi])
        while done_to < target:
            lo, hi = done_to + 1, min(target, done_to + block) + 1
            logs = _log_pmf_block(params, lo, hi)
            partials.append(float(np.sum(np.exp(logs))))
            done_to = hi - 1
        t = 1.0 - math.fsum(partials)
        while qi < len(sorted_q) and sorted_q[qi] == target:
            out[order[qi]] = max(t, 0.0)
            qi += 1
    return out


def _backward_log_tail(params: ModelParams, n: int, max_terms: int = 10_000_000) -> float:
    """log P(size > n) summed upward from n+1 in log space.

    Used when the forward subtraction would cancel; the sum stops once the
    bound on everything not yet added is below 1e-18 of the accumulator.
    """
    k = kappa(params)
    if k >= 1.0 - 1e-9:
        raise RegimeError("backward tail summation needs a strictly subcritical kappa")
    stop_gap = math.log(1e-18 * (1.0 - k))
    acc = LOG_ZERO
    m = n
    for _ in range(max_terms):
        m += 1
        t = log_generalized_catalan(params.r, m) + _log_weight(params, m)
        acc = log_add(acc, t)
        if t - acc < stop_gap:
            return acc
    raise ResourceLimitError(f"tail sum past n={n} did not converge within {max_terms} terms")


@lru_cache(maxsize=4096)
def _cluster_tail_cached(params: ModelParams, n: int) -> float:
    fwd = float(_forward_tails(params, [n])[0])
    if fwd >= _FORWARD_TAIL_FLOOR or classify(params) is Regime.CRITICAL:
        return math.log(fwd) if fwd > 0.0 else LOG_ZERO
    return _backward_log_tail(params, n)


def cluster_tail(params: ModelParams, n: int) -> LogProb:
    """P(cluster size > n) for a single vertex.

    Nonnegative by construction: the forward compensated sum is used while
    it retains relative accuracy and the backward log-space sum beyond.
    Supercritical parameters are rejected because this tail does not vanish.
    """
    if classify(params) is Regime.SUPERCRITICAL:
        raise RegimeError("cluster_tail requires p <= 1/r; the supercritical tail does not vanish")
    if not isinstance(n, int) or n < 0:
        raise PreconditionError(f"n must be an integer >= 0, got {n!r}")
    return LogProb(min(_cluster_tail_cached(params, n), 0.0))


def cluster_tail_many(params: ModelParams, ns: Iterable[int]) -> np.ndarray:
    """Linear-scale tails at many query points in one streaming pass.

    Intended for empirical-versus-exact comparisons where the queries run
    into the millions; points whose forward value has cancelled to below
    the accuracy floor are refined individually in log space.
    """
    if classify(params) is Regime.SUPERCRITICAL:
        raise RegimeError("cluster_tail requires p <= 1/r; the supercritical tail does not vanish")
    arr = np.asarray(list(ns), dtype=np.int64)
    tails = _forward_tails(params, arr)
    if classify(params) is not Regime.CRITICAL:
        for i, v in enumerate(tails):
            if v < _FORWARD_TAIL_FLOOR:
                lt = _backward_log_tail(params, int(arr[i]))
                tails[i] = math.exp(lt) if lt > LOG_ZERO else 0.0
    return tails


def cluster_tail_asymptotic(params: ModelParams, n: int) -> float:
    """Leading-order tail: c1 n^(-1/2) at criticality, otherwise
    c2 kappa^(n+1) n^(-3/2) below it."""
    if n < 1:
        raise PreconditionError("asymptotic tail needs n >= 1")
    regime = classify(params)
    if regime is Regime.CRITICAL:
        return constant_c1(params) / math.sqrt(n)
    if regime is Regime.SUBCRITICAL:
        k = kappa(params)
        return constant_c2(params) * math.exp((n + 1) * math.log(k) - 1.5 * math.log(n))
    raise RegimeError("no vanishing tail in the supercritical regime")


# ----------------------------------------------------------------------
# Run length law.
# ----------------------------------------------------------------------


class RunCdfPoint(NamedTuple):
    cdf: float
    tail: float


def _run_tail_step(params: ModelParams, phi: float) -> float:
    # tail_{h+1} = p (1 - (1 - tail_h)^r), written to stay accurate as
    # tail -> 0: (1-t)^r via exp(r log1p(-t)).
    return params.p * (-math.expm1(params.r * math.log1p(-phi)))


def run_cdf_recursion(params: ModelParams, h: int) -> RunCdfPoint:
    """P(run <= h) and P(run > h) from the closure recursion
    u_0 = 1-p, u_{h+1} = (1-p) + p u_h^r.

    The tail is iterated directly so values far below 1e-16 survive; the
    cdf is returned alongside and saturates to 1.0 harmlessly.
    """
    if not isinstance(h, int) or h < 0:
        raise PreconditionError(f"h must be an integer >= 0, got {h!r}")
    phi = params.p
    for _ in range(h):
        phi = _run_tail_step(params, phi)
    return RunCdfPoint(cdf=1.0 - phi, tail=phi)


def run_cdf_table(params: ModelParams, h_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (u_h, tail_h) for h = 0..h_max."""
    if h_max < 0 or h_max > 50_000_000:
        raise PreconditionError(f"h_max out of range: {h_max!r}")
    tails = np.empty(h_max + 1)
    phi = params.p
    for h in range(h_max + 1):
        tails[h] = phi
        phi = _run_tail_step(params, phi)
    return 1.0 - tails, tails


# ----------------------------------------------------------------------
# Size-height refinement of the subtree counts.
# ----------------------------------------------------------------------

# Cache of cumulative-height generating polynomials, keyed by (r, degree):
# entry h is the coefficient list (exact ints) of the generating function of
# subtrees with height <= h, truncated past x^degree.
_POLY_CACHE: dict = {}


def _poly_mul_trunc(a: list, b: list, degree: int) -> list:
    out = [0] * (degree + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        top = degree - i
        for j, bj in enumerate(b[: top + 1]):
            if bj:
                out[i + j] += ai * bj
    return out


def _poly_pow_trunc(a: list, e: int, degree: int) -> list:
    result = [1] + [0] * degree
    base = list(a) + [0] * (degree + 1 - len(a))
    while e > 0:
        if e & 1:
            result = _poly_mul_trunc(result, base, degree)
        e >>= 1
        if e:
            base = _poly_mul_trunc(base, base, degree)
    return result


def _height_cumulative(r: int, degree: int, h: int) -> list:
    """Coefficients of the height <= h subtree generating function,
    truncated at x^degree."""
    key = (r, degree)
    polys = _POLY_CACHE.get(key)
    if polys is None:
        polys = [[0, 1] + [0] * (degree - 1)]  # height <= 0: the single vertex
        _POLY_CACHE[key] = polys
    while len(polys) <= h:
        prev = polys[-1]
        bumped = [1] + prev[1:]  # 1 + T(x): an empty slot or a subtree
        powed = _poly_pow_trunc(bumped, r, degree)
        nxt = [0] + powed[:degree]  # multiply by x: the new root
        polys.append(nxt)
    return polys[h]


def _poly_degree_for(n: int) -> int:
    d = 64
    while d < n:
        d <<= 1
    return d


def subtree_count_size_height(r: int, n: int, h: int, degree_cap: int = POLY_DEGREE_CAP) -> int:
    """Exact number of rooted subtrees with n vertices and height exactly h
    (a lone vertex has height 0)."""
    if not isinstance(r, int) or r < 2:
        raise PreconditionError(f"r must be an integer >= 2, got {r!r}")
    if not isinstance(n, int) or n < 1:
        raise PreconditionError(f"n must be an integer >= 1, got {n!r}")
    if not isinstance(h, int) or h < 0:
        raise PreconditionError(f"h must be an integer >= 0, got {h!r}")
    if n > degree_cap:
        raise ResourceLimitError(
            f"exact size-height counts are capped at degree {degree_cap}, got n={n}"
        )
    if h >= n:  # a height-h tree needs at least h+1 vertices
        return 0
    if h == 0:
        return 1 if n == 1 else 0
    degree = min(_poly_degree_for(n), degree_cap)
    upto_h = _height_cumulative(r, degree, h)[n]
    upto_prev = _height_cumulative(r, degree, h - 1)[n]
    return upto_h - upto_prev


@dataclass(frozen=True)
class TailSeriesBracket:
    """Rigorous two-sided enclosure of a run tail from the size-height
    series: the true value lies in [lower, lower + remainder]."""

    lower: LogProb
    remainder: float

    @property
    def upper(self) -> LogProb:
        lo = self.lower.prob
        return LogProb.from_prob(min(lo + self.remainder, 1.0))

    def contains(self, value: float) -> bool:
        return self.lower.prob - 1e-15 <= value <= self.upper.prob + 1e-15


def run_tail_series(params: ModelParams, h: int, n_max: int) -> TailSeriesBracket:
    """P(run > h) summed over exact cluster shapes of height >= h, with the
    sizes truncated at n_max and the discarded sizes bounded by the exact
    size tail.

    Independent of the closure recursion; the two routes must agree within
    the bracket and tests pin that down.
    """
    if not isinstance(h, int) or h < 0:
        raise PreconditionError(f"h must be an integer >= 0, got {h!r}")
    if not isinstance(n_max, int) or n_max < h + 1:
        raise PreconditionError("n_max must be an integer with n_max >= h + 1")
    if n_max > POLY_DEGREE_CAP:
        raise ResourceLimitError(f"series sizes are capped at {POLY_DEGREE_CAP}, got {n_max}")
    degree = min(_poly_degree_for(n_max), POLY_DEGREE_CAP)
    below = _height_cumulative(params.r, degree, h - 1) if h >= 1 else None
    terms = []
    for n in range(max(h, 1), n_max + 1):
        cnt = generalized_catalan(params.r, n)
        if below is not None:
            cnt -= below[n]
        if cnt <= 0:
            continue
        lw = _int_log(cnt) + _log_weight(params, n)
        if lw > -745.0:
            terms.append(math.exp(lw))
    partial = math.fsum(terms)
    remainder = cluster_tail(params, n_max).prob
    return TailSeriesBracket(lower=LogProb.from_prob(min(partial, 1.0)), remainder=remainder)


@dataclass(frozen=True)
class C4Estimate:
    """Numerical limit of tail_h / (rp)^h for the subcritical run law.

    No closed form is known for this constant; the estimate ships with its
    last increment so callers can see how settled it is.
    """

    value: float
    last_increment: float
    h_max: int
    tolerance: float
    converged: bool


def estimate_c4(params: ModelParams, h_max: int = 400, tolerance: float = 1e-8) -> C4Estimate:
    """Estimate the subcritical run-tail prefactor by iterating the exact
    tail recursion and normalizing by (rp)^h.

    The normalized sequence is monotone enough to be numerically Cauchy;
    ``converged`` reports whether the final step moved less than
    ``tolerance``.  Non-convergence is reported, never silently accepted.
    """
    if classify(params) is not Regime.SUBCRITICAL:
        raise RegimeError("the geometric run-tail prefactor exists only below criticality")
    if h_max < 2:
        raise PreconditionError("h_max must be at least 2")
    rp = params.r * params.p
    phi = params.p
    ratio = phi  # h = 0: tail / (rp)^0
    inc = math.inf
    for _ in range(h_max):
        nxt = _run_tail_step(params, phi)
        new_ratio = ratio * (nxt / (phi * rp))
        inc = abs(new_ratio - ratio)
        ratio, phi = new_ratio, nxt
    return C4Estimate(
        value=ratio,
        last_increment=inc,
        h_max=h_max,
        tolerance=tolerance,
        converged=inc <= tolerance,
    )


# ----------------------------------------------------------------------
# Distribution tables and their exports.
# ----------------------------------------------------------------------


def _json_float(x: float):
    # Strict JSON has no Infinity literal; log columns legitimately hit -inf.
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


@dataclass
class DistTable:
    """Dense pmf/tail table over 0..support_max on linear and log scales.

    tail[n] is P(value > n).  Linear and log columns are kept together:
    the linear side underflows to 0.0 where the log side still carries the
    value, and exports write both.
    """

    kind: str  # "cluster_size" or "run_length"
    source: str  # "exact", "enumeration", or "empirical"
    params: ModelParams
    pmf: np.ndarray
    tail: np.ndarray
    log_pmf: np.ndarray
    log_tail: np.ndarray
    sample_count: Optional[int] = None

    @property
    def support_max(self) -> int:
        return len(self.pmf) - 1

    def cdf(self, n: int) -> float:
        return 1.0 - float(self.tail[n])

    def validate(self) -> None:
        n = len(self.pmf)
        if not (len(self.tail) == len(self.log_pmf) == len(self.log_tail) == n):
            raise ValueError("table columns have mismatched lengths")
        if np.any(self.pmf < 0) or np.any(self.pmf > 1):
            raise ValueError("pmf outside [0, 1]")
        if np.any(np.diff(self.tail) > 1e-15):
            raise ValueError("tail is not nonincreasing")
        drops = self.tail[:-1] - self.tail[1:]
        if np.max(np.abs(drops - self.pmf[1:])) > 1e-12:
            raise ValueError("tail decrements disagree with the pmf")
        with np.errstate(divide="ignore"):
            relin = np.exp(self.log_pmf)
        if np.max(np.abs(relin - self.pmf)) > 1e-12:
            raise ValueError("log pmf disagrees with linear pmf")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "pmf", "tail", "log_pmf", "log_tail"])
            for n in range(len(self.pmf)):
                w.writerow(
                    [
                        n,
                        repr(float(self.pmf[n])),
                        repr(float(self.tail[n])),
                        repr(float(self.log_pmf[n])),
                        repr(float(self.log_tail[n])),
                    ]
                )

    def to_json_dict(self) -> dict:
        out = {
            "schema_version": 1,
            "kind": self.kind,
            "source": self.source,
            "params": self.params.describe(),
            "support_max": self.support_max,
            "columns": {
                "n": list(range(len(self.pmf))),
                "pmf": [float(x) for x in self.pmf],
                "tail": [float(x) for x in self.tail],
                "log_pmf": [_json_float(x) for x in self.log_pmf],
                "log_tail": [_json_float(x) for x in self.log_tail],
            },
        }
        if self.sample_count is not None:
            out["sample_count"] = self.sample_count
        return out


def _tails_from_anchor(log_pmf: np.ndarray, anchor_log_tail: float) -> np.ndarray:
    """log tails for 0..N from log pmf and the log tail at N, accumulated
    upward so no index suffers cancellation."""
    n = len(log_pmf)
    out = np.empty(n)
    acc = anchor_log_tail
    out[n - 1] = acc
    for m in range(n - 1, 0, -1):
        acc = log_add(acc, float(log_pmf[m]))
        out[m - 1] = acc
    return out


def build_cluster_table(params: ModelParams, n_max: int) -> DistTable:
    """Exact dense size table for 0..n_max.

    Integer combinatorics supply the pmf up to EXACT_CATALAN_MAX and the
    log-gamma route beyond; tails are anchored at n_max (forward value, or
    the log-space backward sum when that has cancelled away) and rolled up
    so every index keeps relative accuracy.
    """
    if classify(params) is Regime.SUPERCRITICAL:
        raise RegimeError("exact size tables require p <= 1/r")
    if not isinstance(n_max, int) or n_max < 0:
        raise PreconditionError(f"n_max must be an integer >= 0, got {n_max!r}")
    if n_max > DENSE_TABLE_MAX:
        raise ResourceLimitError(f"dense tables are capped at {DENSE_TABLE_MAX} rows")
    log_pmf = np.empty(n_max + 1)
    log_pmf[0] = math.log1p(-params.p)
    for n in range(1, min(n_max, EXACT_CATALAN_MAX) + 1):
        log_pmf[n] = _int_log(generalized_catalan(params.r, n)) + _log_weight(params, n)
    if n_max > EXACT_CATALAN_MAX:
        log_pmf[EXACT_CATALAN_MAX + 1 :] = _log_pmf_block(params, EXACT_CATALAN_MAX + 1, n_max + 1)
    anchor = _cluster_tail_cached(params, n_max)
    log_tail = _tails_from_anchor(log_pmf, anchor)
    with np.errstate(divide="ignore"):
        pmf = np.exp(log_pmf)
        tail = np.exp(log_tail)
    pmf[0] = 1.0 - params.p  # keep the closed-root weight exact on the linear side
    table = DistTable(
        kind="cluster_size",
        source="exact",
        params=params,
        pmf=pmf,
        tail=tail,
        log_pmf=log_pmf,
        log_tail=log_tail,
    )
    return table


def build_run_table(params: ModelParams, h_max: int) -> DistTable:
    """Exact dense run-length table for 0..h_max from the closure recursion."""
    if not isinstance(h_max, int) or h_max < 0:
        raise PreconditionError(f"h_max must be an integer >= 0, got {h_max!r}")
    if h_max > DENSE_TABLE_MAX:
        raise ResourceLimitError(f"dense tables are capped at {DENSE_TABLE_MAX} rows")
    _, tails = run_cdf_table(params, h_max)
    pmf = np.empty(h_max + 1)
    pmf[0] = 1.0 - params.p
    pmf[1:] = tails[:-1] - tails[1:]
    np.clip(pmf, 0.0, 1.0, out=pmf)
    with np.errstate(divide="ignore"):
        log_pmf = np.log(pmf)
        log_tail = np.log(tails)
    log_pmf[0] = math.log1p(-params.p)
    return DistTable(
        kind="run_length",
        source="exact",
        params=params,
        pmf=pmf,
        tail=tails.copy(),
        log_pmf=log_pmf,
        log_tail=log_tail,
    )
