"""Exact and simulated percolation statistics on rooted r-ary trees.

Site percolation opens each vertex independently with probability p.  The
package computes the exact laws of the largest open cluster and longest
open run seen in the depth-d slab, simulates both with a deterministic
counter-based generator, and evaluates the limit-law constants and
Chen-Stein Poisson-approximation bounds that describe their growth.
"""

from .core import (
    BudgetError,
    LogProb,
    ModelParams,
    PreconditionError,
    Regime,
    RegimeError,
    ResourceLimitError,
    boundary_size,
    classify,
    constant_c1,
    constant_c2,
    constant_c3,
    kappa,
    tree_size,
)
from .exact import (
    CatalanTable,
    DistTable,
    build_cluster_table,
    build_run_table,
    cluster_pmf,
    cluster_pmf_binomial_form,
    cluster_tail,
    cluster_tail_asymptotic,
    cluster_tail_many,
    estimate_c4,
    generalized_catalan,
    log_generalized_catalan,
    run_cdf_recursion,
    run_cdf_table,
    run_tail_series,
    subtree_count_size_height,
)
from .limits import (
    GBound,
    LimitFamily,
    LimitLaw,
    centering_fractional,
    chen_stein_g_bound,
    constant_c_cluster,
    constant_c_run,
    critical_cluster_cdf,
    critical_cluster_law,
    critical_run_cdf,
    critical_run_law,
    exact_boundary_cluster_cdf,
    exact_boundary_run_cdf,
    lambda_cluster,
    lambda_run,
    lattice_cluster_law,
    lattice_limit_cdf,
    lattice_run_law,
    mu_d,
    nu_d,
    poisson_approx_prob,
)
from .rng import GENERATOR_ID, RandomStream, derive_key
from .sim import (
    SampleBatch,
    SampleResult,
    SimConfig,
    SimOutcome,
    empirical_table,
    enumerate_small_pmf,
    enumerate_small_run_cdf,
    run_simulation,
    sample_cluster_size,
    sample_cluster_sizes,
    sample_run_length,
    sample_run_lengths,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "CatalanTable",
    "DistTable",
    "GBound",
    "GENERATOR_ID",
    "LimitFamily",
    "LimitLaw",
    "LogProb",
    "ModelParams",
    "PreconditionError",
    "RandomStream",
    "Regime",
    "RegimeError",
    "ResourceLimitError",
    "SampleBatch",
    "SampleResult",
    "SimConfig",
    "SimOutcome",
    "boundary_size",
    "build_cluster_table",
    "build_run_table",
    "centering_fractional",
    "chen_stein_g_bound",
    "classify",
    "cluster_pmf",
    "cluster_pmf_binomial_form",
    "cluster_tail",
    "cluster_tail_asymptotic",
    "cluster_tail_many",
    "constant_c1",
    "constant_c2",
    "constant_c3",
    "constant_c_cluster",
    "constant_c_run",
    "critical_cluster_cdf",
    "critical_cluster_law",
    "critical_run_cdf",
    "critical_run_law",
    "derive_key",
    "empirical_table",
    "enumerate_small_pmf",
    "enumerate_small_run_cdf",
    "estimate_c4",
    "exact_boundary_cluster_cdf",
    "exact_boundary_run_cdf",
    "generalized_catalan",
    "kappa",
    "lambda_cluster",
    "lambda_run",
    "lattice_cluster_law",
    "lattice_limit_cdf",
    "lattice_run_law",
    "log_generalized_catalan",
    "mu_d",
    "nu_d",
    "poisson_approx_prob",
    "run_cdf_recursion",
    "run_cdf_table",
    "run_simulation",
    "run_tail_series",
    "sample_cluster_size",
    "sample_cluster_sizes",
    "sample_run_length",
    "sample_run_lengths",
    "subtree_count_size_height",
    "tree_size",
    "__version__",
]
