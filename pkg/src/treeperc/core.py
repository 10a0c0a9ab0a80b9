"""Parameters, regime classification, and closed-form constants.

Site percolation on the infinite rooted r-ary tree: every vertex is open
independently with probability p.  The package computes exact and simulated
distributions of two extremal statistics over the first d generations: the
size of the largest open cluster rooted there and the length of the longest
open run (directed open path).  This module holds what everything else
shares: the parameter object, the subcritical/critical/supercritical split,
exact vertex counts, the tail-law constants, and a small log-domain
probability type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

__all__ = [
    "BudgetError",
    "LOG_ZERO",
    "LogProb",
    "ModelParams",
    "PreconditionError",
    "Regime",
    "RegimeError",
    "ResourceLimitError",
    "boundary_size",
    "classify",
    "constant_c1",
    "constant_c2",
    "constant_c3",
    "kappa",
    "log1mexp",
    "log_add",
    "log_sub",
    "tree_size",
]

# Relative half-width of the criticality window used when p is only known
# as a float.  Exact rationals are classified exactly.
CRITICAL_REL_TOL = 1e-15

LOG_ZERO = float("-inf")


class RegimeError(ValueError):
    """An operation was asked for outside the regime where it is defined."""


class PreconditionError(ValueError):
    """An argument violates an operation's stated precondition."""


class BudgetError(RuntimeError):
    """A requested computation exceeds the configured work budget."""


class ResourceLimitError(RuntimeError):
    """An exact computation exceeds its configured size cap."""


class Regime(Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class ModelParams:
    """Branching factor r >= 2 and open-vertex probability p in (0, 1).

    p may be given as a float, a Fraction, or a string such as "0.3" or
    "3/10"; strings and Fractions are kept exactly in ``p_rational`` so the
    critical comparison p = 1/r can be decided without rounding.  ``p`` is
    always the float value used in numerical work.
    """

    r: int
    p: float
    p_rational: Optional[Fraction] = None

    def __post_init__(self) -> None:
        p = self.p
        if isinstance(p, str):
            frac = Fraction(p)
            object.__setattr__(self, "p_rational", frac)
            object.__setattr__(self, "p", float(frac))
        elif isinstance(p, Fraction):
            object.__setattr__(self, "p_rational", p)
            object.__setattr__(self, "p", float(p))
        elif not isinstance(p, float):
            raise PreconditionError(f"p must be float, Fraction, or string, got {type(p).__name__}")
        if not isinstance(self.r, int) or isinstance(self.r, bool) or self.r < 2:
            raise PreconditionError(f"r must be an integer >= 2, got {self.r!r}")
        if not 0.0 < self.p < 1.0:
            raise PreconditionError(f"p must lie strictly in (0, 1), got {self.p!r}")
        if self.p_rational is not None and not Fraction(0) < self.p_rational < Fraction(1):
            raise PreconditionError(f"rational p must lie strictly in (0, 1), got {self.p_rational}")

    @property
    def q(self) -> float:
        """Probability that a vertex is closed."""
        return 1.0 - self.p

    def describe(self) -> dict:
        out = {"r": self.r, "p": self.p}
        if self.p_rational is not None:
            out["p_rational"] = f"{self.p_rational.numerator}/{self.p_rational.denominator}"
        return out


def classify(params: ModelParams) -> Regime:
    """Place params relative to the percolation threshold p = 1/r.

    Exact when p was supplied as a rational; otherwise a float comparison
    with relative tolerance CRITICAL_REL_TOL around 1/r.
    """
    if params.p_rational is not None:
        threshold = Fraction(1, params.r)
        if params.p_rational == threshold:
            return Regime.CRITICAL
        return Regime.SUBCRITICAL if params.p_rational < threshold else Regime.SUPERCRITICAL
    threshold = 1.0 / params.r
    if abs(params.p - threshold) <= CRITICAL_REL_TOL * threshold:
        return Regime.CRITICAL
    return Regime.SUBCRITICAL if params.p < threshold else Regime.SUPERCRITICAL


def kappa(params: ModelParams) -> float:
    """Tail decay base p * (1-p)^(r-1) * r^r / (r-1)^(r-1).

    Equals 1 exactly at p = 1/r and is < 1 on both sides of it; the
    subcritical cluster tail decays geometrically with this base.
    """
    r, p = params.r, params.p
    # (r/(r-1))^(r-1) stays O(e) for every r, so no overflow for large r.
    return p * r * (1.0 - p) ** (r - 1) * (r / (r - 1.0)) ** (r - 1)


def tree_size(r: int, d: int) -> int:
    """Number of vertices in generations 0..d: (r^(d+1) - 1) / (r - 1).

    Exact arbitrary-precision integer for every d >= 0; results never wrap.
    """
    if not isinstance(r, int) or r < 2:
        raise PreconditionError(f"r must be an integer >= 2, got {r!r}")
    if not isinstance(d, int) or d < 0:
        raise PreconditionError(f"d must be an integer >= 0, got {d!r}")
    return (r ** (d + 1) - 1) // (r - 1)


def boundary_size(r: int, d: int) -> int:
    """Number of vertices in generation d exactly: r^d."""
    if not isinstance(r, int) or r < 2:
        raise PreconditionError(f"r must be an integer >= 2, got {r!r}")
    if not isinstance(d, int) or d < 0:
        raise PreconditionError(f"d must be an integer >= 0, got {d!r}")
    return r**d


def _require(params: ModelParams, regime: Regime, what: str) -> None:
    actual = classify(params)
    if actual is not regime:
        raise RegimeError(f"{what} requires the {regime.value} regime, got {actual.value} (r={params.r}, p={params.p})")


def constant_c1(params: ModelParams) -> float:
    """Critical cluster-tail constant 2 / sqrt(2 pi r (r-1)).

    The critical tail P(cluster size > n) falls like c1 / sqrt(n).
    """
    _require(params, Regime.CRITICAL, "constant_c1")
    r = params.r
    return 2.0 / math.sqrt(2.0 * math.pi * r * (r - 1))


def constant_c2(params: ModelParams) -> float:
    """Subcritical cluster-tail constant.

    P(cluster size > n) falls like c2 * kappa^(n+1) * n^(-3/2) with
    c2 = (1-p) sqrt(r) / (sqrt(2 pi) (1 - kappa) (r-1)^(3/2)).
    """
    _require(params, Regime.SUBCRITICAL, "constant_c2")
    r, p = params.r, params.p
    k = kappa(params)
    return (1.0 - p) * math.sqrt(r) / (math.sqrt(2.0 * math.pi) * (1.0 - k) * (r - 1.0) ** 1.5)


def constant_c3(params: ModelParams) -> float:
    """Critical run-tail constant 2 r p / (r - 1), i.e. 2/(r-1) at p = 1/r.

    The critical tail P(run length > h) falls like c3 / h.
    """
    _require(params, Regime.CRITICAL, "constant_c3")
    return 2.0 * params.r * params.p / (params.r - 1)


# ----------------------------------------------------------------------
# Log-domain probability arithmetic.
# ----------------------------------------------------------------------


def log1mexp(x: float) -> float:
    """log(1 - exp(x)) for x <= 0, stable over the whole range."""
    if x > 0.0:
        raise ValueError(f"log1mexp needs x <= 0, got {x}")
    if x == 0.0:
        return LOG_ZERO
    if x < -math.log(2.0):
        return math.log1p(-math.exp(x))
    return math.log(-math.expm1(x))


def log_add(a: float, b: float) -> float:
    """log(exp(a) + exp(b)) without overflow; either may be -inf."""
    if a == LOG_ZERO:
        return b
    if b == LOG_ZERO:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))

def log_sub(a: float, b: float) -> float:
    """log(exp(a) - exp(b)) for a >= b; returns -inf when they cancel."""
    if b == LOG_ZERO:
        return a
    if b > a:
        raise ValueError(f"log_sub needs a >= b, got a={a}, b={b}")
    if a == b:
        return LOG_ZERO
    return a + log1mexp(b - a)


@dataclass(frozen=True)
class LogProb:
    """A probability carried as its natural logarithm.

    ``log`` is -inf exactly for probability zero, else a float <= 0.
    Round trip guarantee: LogProb.from_prob(x).prob recovers x to within
    one ulp for x >= 1e-300, and exponentiating then re-taking the log
    moves ``log`` by at most one ulp.
    """

    log: float

    def __post_init__(self) -> None:
        if math.isnan(self.log):
            raise ValueError("LogProb cannot be NaN")
        if self.log > 0.0:
            # Tiny positive log values arise from rounding in upstream sums;
            # clamp those, reject anything that is genuinely > 1.
            if self.log > 1e-9:
                raise ValueError(f"log probability must be <= 0, got {self.log}")
            object.__setattr__(self, "log", 0.0)

    @classmethod
    def zero(cls) -> "LogProb":
        return cls(LOG_ZERO)

    @classmethod
    def one(cls) -> "LogProb":
        return cls(0.0)

    @classmethod
    def from_prob(cls, p: float) -> "LogProb":
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability must lie in [0, 1], got {p}")
        return cls(LOG_ZERO) if p == 0.0 else cls(math.log(p))

    @property
    def prob(self) -> float:
        return 0.0 if self.log == LOG_ZERO else math.exp(self.log)

    @property
    def is_zero(self) -> bool:
        return self.log == LOG_ZERO

    def __mul__(self, other: "LogProb") -> "LogProb":
        if self.is_zero or other.is_zero:
            return LogProb.zero()
        return LogProb(self.log + other.log)

    def __add__(self, other: "LogProb") -> "LogProb":
        return LogProb(min(log_add(self.log, other.log), 0.0))

    def __sub__(self, other: "LogProb") -> "LogProb":
        return LogProb(log_sub(self.log, other.log))

    def __repr__(self) -> str:  # keep reprs short in test output
        return f"LogProb(log={self.log!r}, prob={self.prob:.6g})"


PValue = Union[float, str, Fraction]
