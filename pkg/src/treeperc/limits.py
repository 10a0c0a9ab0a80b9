"""Limit laws and Poisson-approximation quantities.

The exact mean lambda of the count of size-exceeding (or run-exceeding)
clusters in the depth-d slab drives everything: P(max <= threshold) is
approximated by exp(-lambda) with a Chen-Stein error, lambda is always
evaluated from the exact tails (never from their asymptotics), and the
limiting CDFs of the four regimes are provided as explicit functions with
their constants.

Centerings: mu_d for subcritical cluster maxima, nu_d for subcritical run
maxima.  Both are real-valued while the statistics are integers, so the
subcritical limits are lattice laws of the form [Z+a]-a and converge only
along subsequences where the fractional part of the centering settles;
callers supply that offset, and `centering_fractional` reports the drift.

Boundary maxima are independent across the boundary (each hangs in its own
disjoint subtree), so their exact CDFs are plain powers of the one-vertex
laws; those closed forms are exposed here as simulation oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

from .core import (
    ModelParams,
    PreconditionError,
    Regime,
    RegimeError,
    classify,
    constant_c1,
    constant_c2,
    constant_c3,
    kappa,
    log1mexp,
    tree_size,
)
from .exact import (
    _int_log,
    _log_weight,
    cluster_tail,
    estimate_c4,
    log_generalized_catalan,
    run_cdf_recursion,
)

__all__ = [
    "GBound",
    "LimitFamily",
    "LimitLaw",
    "centering_fractional",
    "chen_stein_g_bound",
    "constant_c_cluster",
    "constant_c_run",
    "critical_cluster_cdf",
    "critical_cluster_law",
    "critical_run_cdf",
    "critical_run_law",
    "exact_boundary_cluster_cdf",
    "exact_boundary_run_cdf",
    "lambda_cluster",
    "lambda_run",
    "lattice_cluster_law",
    "lattice_limit_cdf",
    "lattice_run_law",
    "mu_d",
    "nu_d",
    "poisson_approx_prob",
]

G_BOUND_TRUNCATION = 2000


def _slab_factor(params: ModelParams, d: int) -> float:
    # 1 + (1-p)(|T_d| - 1): one term per vertex whose parent is closed,
    # plus the root.
    return 1.0 + (1.0 - params.p) * (tree_size(params.r, d) - 1)


def lambda_cluster(params: ModelParams, d: int, n: int) -> float:
    """Exact mean number of slab-rooted clusters of size > n."""
    if classify(params) is Regime.SUPERCRITICAL:
        raise RegimeError("lambda_cluster requires p <= 1/r")
    return cluster_tail(params, n).prob * _slab_factor(params, d)


def lambda_run(params: ModelParams, d: int, h: int) -> float:
    """Exact mean number of slab-rooted runs of length > h."""
    if classify(params) is Regime.SUPERCRITICAL:
        raise RegimeError("lambda_run requires p <= 1/r")
    if not isinstance(h, int) or h < 0:
        raise PreconditionError(f"h must be an integer >= 0, got {h!r}")
    return run_cdf_recursion(params, h).tail * _slab_factor(params, d)


def mu_d(params: ModelParams, d: int) -> float:
    """Centering for the subcritical largest-cluster law:
    (d - 1.5 log_r d) / log_r(1/kappa)."""
    if classify(params) is not Regime.SUBCRITICAL:
        raise RegimeError("the cluster centering exists only below criticality")
    if not isinstance(d, int) or d < 1:
        raise PreconditionError(f"d must be an integer >= 1, got {d!r}")
    lr = math.log(params.r)
    log_r_d = math.log(d) / lr
    log_r_inv_kappa = -math.log(kappa(params)) / lr
    return (d - 1.5 * log_r_d) / log_r_inv_kappa


def nu_d(params: ModelParams, d: int) -> float:
    """Centering for the subcritical longest-run law:
    d / (log_r(1/p) - 1)."""
    if classify(params) is not Regime.SUBCRITICAL:
        raise RegimeError("the run centering exists only below criticality")
    if not isinstance(d, int) or d < 0:
        raise PreconditionError(f"d must be an integer >= 0, got {d!r}")
    denom = -math.log(params.p) / math.log(params.r) - 1.0
    return d / denom


def centering_fractional(params: ModelParams, d: int, kind: str) -> float:
    """Fractional part of the centering: the lattice drift mu_d - [mu_d]
    (or the nu_d analogue) that decides which subsequence limit applies."""
    if kind == "cluster":
        c = mu_d(params, d)
    elif kind == "run":
        c = nu_d(params, d)
    else:
        raise PreconditionError(f"kind must be 'cluster' or 'run', got {kind!r}")
    return c - math.floor(c)


# ----------------------------------------------------------------------
# Limiting CDFs.
# ----------------------------------------------------------------------


def critical_cluster_cdf(params: ModelParams, x: float) -> float:
    """Limit of P(log_r(largest cluster) <= 2d + x) at criticality:
    exp(-c1 r^(-x/2))."""
    c1 = constant_c1(params)
    if math.isnan(x):
        raise PreconditionError("x must not be NaN")
    return math.exp(-c1 * math.pow(params.r, -x / 2.0))


def critical_run_cdf(params: ModelParams, x: float) -> float:
    """Limit of P(log_r(longest run) <= d + x) at criticality:
    exp(-c3 r^(-x))."""
    c3 = constant_c3(params)
    if math.isnan(x):
        raise PreconditionError("x must not be NaN")
    return math.exp(-c3 * math.pow(params.r, -x))


def constant_c_cluster(params: ModelParams) -> float:
    """Prefactor of the subcritical lattice cluster limit:
    c2 (1-p) r / (r-1)."""
    return constant_c2(params) * (1.0 - params.p) * params.r / (params.r - 1)


def constant_c_run(params: ModelParams) -> float:
    """Prefactor of the subcritical lattice run limit:
    c4 (1-p) / (p (r-1)); c4 is the numerically estimated run-tail
    prefactor, so this constant inherits its estimation error."""
    c4 = estimate_c4(params).value
    return c4 * (1.0 - params.p) / (params.p * (params.r - 1))


def lattice_limit_cdf(c: float, base: float, a: float, x: float) -> float:
    """CDF of the lattice variable [Z+a] - a: exp(-c base^([a+x]-a+1)).

    A right-continuous step function with jumps at the points congruent to
    -a modulo 1; converges to 0 and 1 in the tails because base < 1.
    """
    if not (c > 0.0):
        raise PreconditionError(f"c must be positive, got {c!r}")
    if not (0.0 < base < 1.0):
        raise PreconditionError(f"base must be in (0,1), got {base!r}")
    if not (0.0 <= a < 1.0):
        raise PreconditionError(f"a must be in [0,1), got {a!r}")
    if math.isnan(x):
        raise PreconditionError("x must not be NaN")
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    expo = math.floor(a + x) - a + 1.0
    return math.exp(-c * math.exp(expo * math.log(base)))


class LimitFamily(str, Enum):
    CRITICAL_CLUSTER = "critical_cluster"
    CRITICAL_RUN = "critical_run"
    LATTICE_CLUSTER = "lattice_cluster"
    LATTICE_RUN = "lattice_run"


@dataclass(frozen=True)
class LimitLaw:
    """A limiting CDF with its constants and the centering it applies to."""

    family: LimitFamily
    c: float
    base: float
    centering: str
    a: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.c > 0.0):
            raise PreconditionError(f"C must be positive, got {self.c!r}")
        if not (0.0 < self.base < 1.0):
            raise PreconditionError(f"base must be in (0,1), got {self.base!r}")
        if self.family in (LimitFamily.LATTICE_CLUSTER, LimitFamily.LATTICE_RUN):
            if self.a is None or not (0.0 <= self.a < 1.0):
                raise PreconditionError("lattice families need an offset a in [0,1)")
        elif self.a is not None:
            raise PreconditionError("critical families take no lattice offset")

    def cdf(self, x: float) -> float:
        if math.isnan(x):
            raise PreconditionError("x must not be NaN")
        if self.a is not None:
            return lattice_limit_cdf(self.c, self.base, self.a, x)
        if math.isinf(x):
            return 1.0 if x > 0 else 0.0
        return math.exp(-self.c * math.exp(x * math.log(self.base)))


def critical_cluster_law(params: ModelParams) -> LimitLaw:
    # exp(-c1 r^(-x/2)) == exp(-c1 (r^(-1/2))^x)
    return LimitLaw(
        family=LimitFamily.CRITICAL_CLUSTER,
        c=constant_c1(params),
        base=1.0 / math.sqrt(params.r),
        centering="2d",
    )


def critical_run_law(params: ModelParams) -> LimitLaw:
    return LimitLaw(
        family=LimitFamily.CRITICAL_RUN,
        c=constant_c3(params),
        base=1.0 / params.r,
        centering="d",
    )


def lattice_cluster_law(params: ModelParams, a: float) -> LimitLaw:
    return LimitLaw(
        family=LimitFamily.LATTICE_CLUSTER,
        c=constant_c_cluster(params),
        base=kappa(params),
        centering="mu_d",
        a=a,
    )


def lattice_run_law(params: ModelParams, a: float) -> LimitLaw:
    return LimitLaw(
        family=LimitFamily.LATTICE_RUN,
        c=constant_c_run(params),
        base=params.r * params.p,
        centering="nu_d",
        a=a,
    )


# ----------------------------------------------------------------------
# Poisson approximation.
# ----------------------------------------------------------------------


def poisson_approx_prob(params: ModelParams, d: int, threshold: int, kind: str) -> float:
    """exp(-lambda): the Poisson approximation to P(statistic <= threshold)
    over the depth-d slab.  The third Chen-Stein term vanishes here by
    independence of the indicator neighborhoods."""
    if kind == "cluster":
        lam = lambda_cluster(params, d, threshold)
    elif kind == "run":
        lam = lambda_run(params, d, threshold)
    else:
        raise PreconditionError(f"kind must be 'cluster' or 'run', got {kind!r}")
    return math.exp(-lam)


class GBound(NamedTuple):
    """Evaluated Chen-Stein G-term bound.

    value = 2 (1-p)^(-1) |T_d| Psi_n [truncated m-sum + remainder]; the
    remainder rigorously dominates the discarded m > truncation_m terms via
    the entropy bound ((r-1)m+1) psi_m <= (1-p) kappa^m, so value is a true
    upper bound, not an approximation.  flagged marks evaluations at
    criticality, where kappa = 1 makes the remainder (and the bound)
    infinite.
    """

    value: float
    truncated_sum: float
    remainder: float
    truncation_m: int
    flagged: bool


def chen_stein_g_bound(params: ModelParams, d: int, n: int) -> GBound:
    """Upper bound on the G term of the Chen-Stein error for the cluster
    count at level n over the depth-d slab."""
    regime = classify(params)
    if regime is Regime.SUPERCRITICAL:
        raise RegimeError("the G bound is for p <= 1/r")
    if not isinstance(n, int) or n < 0:
        raise PreconditionError(f"n must be an integer >= 0, got {n!r}")
    if not isinstance(d, int) or d < 0:
        raise PreconditionError(f"d must be an integer >= 0, got {d!r}")
    r = params.r
    m_top = n + G_BOUND_TRUNCATION
    terms = []
    for m in range(n + 1, m_top + 1):
        lw = log_generalized_catalan(r, m) + _log_weight(params, m)
        lt = lw + math.log((r - 1) * m + 1)
        if lt > -745.0:
            terms.append(math.exp(lt))
    s = math.fsum(terms)
    k = kappa(params)
    if regime is Regime.CRITICAL:
        remainder = math.inf
    else:
        log_rem = math.log1p(-params.p) + (m_top + 1) * math.log(k) - math.log1p(-k)
        remainder = math.exp(log_rem) if log_rem > -745.0 else 0.0
    psi_n = cluster_tail(params, n)
    if psi_n.is_zero:
        value = 0.0
    else:
        log_front = (
            math.log(2.0) - math.log1p(-params.p) + _int_log(tree_size(r, d)) + psi_n.log
        )
        value = math.exp(log_front) * (s + remainder)
    return GBound(
        value=value,
        truncated_sum=s,
        remainder=remainder,
        truncation_m=m_top,
        flagged=regime is Regime.CRITICAL,
    )


# ----------------------------------------------------------------------
# Exact boundary-maximum CDFs (simulation oracles).
# ----------------------------------------------------------------------


def exact_boundary_cluster_cdf(params: ModelParams, d: int, n: int) -> float:
    """P(largest boundary-rooted cluster <= n), exactly (1 - Psi_n)^(r^d):
    boundary clusters hang in disjoint subtrees and are independent."""
    tail = cluster_tail(params, n)
    if tail.is_zero:
        return 1.0
    count = params.r**d
    return math.exp(count * log1mexp(tail.log))


def exact_boundary_run_cdf(params: ModelParams, d: int, h: int) -> float:
    """P(longest boundary-rooted run <= h), exactly (1 - Phi_h)^(r^d)."""
    phi = run_cdf_recursion(params, h).tail
    if phi <= 0.0:
        return 1.0
    count = params.r**d
    return math.exp(count * math.log1p(-phi))
