"""Exact distribution machinery: counts, pmf/tail routes, run recursions, tables.

Oracle values are frozen literals derived independently of the code under
test: classical Catalan / Fuss-Catalan sequences, hand-counted small tree
shapes, and closed-form evaluations done with math/scipy directly in the
test body.
"""

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from treeperc import (
    ModelParams,
    PreconditionError,
    RegimeError,
    build_cluster_table,
    build_run_table,
    cluster_pmf,
    cluster_pmf_binomial_form,
    cluster_tail,
    cluster_tail_asymptotic,
    cluster_tail_many,
    constant_c2,
    estimate_c4,
    generalized_catalan,
    kappa,
    log_generalized_catalan,
    run_cdf_recursion,
    run_cdf_table,
    run_tail_series,
    subtree_count_size_height,
)
from treeperc.exact import EXACT_CATALAN_MAX, OVERLAP_WINDOW, CatalanTable

# Classical sequences, transcribed from standard references:
# r=2 -> Catalan numbers, r=3 -> ternary-tree counts, r=4 -> quartic.
CATALAN_R2 = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862]
CATALAN_R3 = [1, 1, 3, 12, 55, 273, 1428, 7752]
CATALAN_R4 = [1, 1, 4, 22, 140, 969, 7084]


class TestGeneralizedCatalan:
    @pytest.mark.parametrize(
        "r,seq", [(2, CATALAN_R2), (3, CATALAN_R3), (4, CATALAN_R4)]
    )
    def test_known_sequences(self, r, seq):
        assert [generalized_catalan(r, n) for n in range(len(seq))] == seq

    @given(st.integers(2, 8), st.integers(0, 200))
    @settings(max_examples=150)
    def test_closed_form_is_integral(self, r, n):
        # C(rn, n) must be divisible by (r-1)n + 1; the helper asserts the
        # division is exact by construction, so just recompute it here
        val = generalized_catalan(r, n)
        assert val * ((r - 1) * n + 1) == math.comb(r * n, n)

    def test_log_route_matches_exact_integers(self):
        for r in (2, 3):
            for n in (1, 7, 64, 333, EXACT_CATALAN_MAX):
                exact = math.log(generalized_catalan(r, n))
                assert log_generalized_catalan(r, n) == pytest.approx(exact, rel=1e-13)

    def test_overlap_window_crosscheck(self):
        # on the handover window the exact-integer logs must agree with a
        # gammaln evaluation recomputed here from scratch
        lo, hi = OVERLAP_WINDOW
        for r in (2, 3):
            for n in range(lo, hi + 1):
                via_int = math.log(generalized_catalan(r, n))
                via_gamma = (
                    gammaln(r * n + 1)
                    - gammaln(n + 1)
                    - gammaln((r - 1) * n + 1)
                    - math.log((r - 1) * n + 1)
                )
                assert via_int == pytest.approx(via_gamma, rel=1e-11)

    def test_beyond_exact_range_uses_gamma(self):
        n = EXACT_CATALAN_MAX + 100
        expect = (
            gammaln(2 * n + 1) - gammaln(n + 1) - gammaln(n + 2) + math.log(n + 1) - math.log(n + 1)
        )
        # simpler: Catalan log = gammaln(2n+1) - gammaln(n+1) - gammaln(n+2)
        expect = gammaln(2 * n + 1) - gammaln(n + 1) - gammaln(n + 2)
        assert log_generalized_catalan(2, n) == pytest.approx(expect, rel=1e-12)


class TestCatalanTable:
    def test_build_and_lookup(self):
        tab = CatalanTable.build(2, 20)
        assert tab.value(6) == 132
        assert tab.log_value(6) == pytest.approx(math.log(132), rel=1e-14)

    def test_json_export_uses_strings_for_big_ints(self):
        tab = CatalanTable.build(2, 40)
        doc = tab.to_json_dict()
        json.dumps(doc)  # must be serializable
        assert doc["values"]["40"] == str(generalized_catalan(2, 40))


class TestClusterPmf:
    def test_small_values_by_hand(self, params_sub):
        # P(K = 0) = 1 - p; P(K = 1) = p (1-p)^2; P(K = 2) = 2 p^2 (1-p)^3
        assert cluster_pmf(params_sub, 0).prob == pytest.approx(0.7, rel=1e-15)
        assert cluster_pmf(params_sub, 1).prob == pytest.approx(0.3 * 0.49, rel=1e-14)
        assert cluster_pmf(params_sub, 2).prob == pytest.approx(2 * 0.09 * 0.343, rel=1e-14)

    def test_two_closed_forms_agree(self):
        grids = [(2, "0.2"), (2, "0.3"), (2, Fraction(1, 2)), (3, "0.3"), (3, Fraction(1, 3))]
        for r, p in grids:
            params = ModelParams(r, p)
            for n in range(1, 51):
                a = cluster_pmf(params, n).log
                b = cluster_pmf_binomial_form(params, n).log
                assert b == pytest.approx(a, rel=1e-12), (r, p, n)

    def test_pmf_sums_to_one_subcritical(self, params_sub):
        # sum_{n <= N} pmf + tail(N) = 1
        total = math.fsum(cluster_pmf(params_sub, n).prob for n in range(0, 400))
        assert total + cluster_tail(params_sub, 399).prob == pytest.approx(1.0, abs=1e-13)

    @given(st.integers(0, 200))
    @settings(max_examples=60)
    def test_tail_decrement_is_pmf(self, n):
        params = ModelParams(2, "0.3")
        lhs = cluster_tail(params, n).prob - cluster_tail(params, n + 1).prob
        # cancellation between two nearby tails limits achievable precision
        assert lhs == pytest.approx(cluster_pmf(params, n + 1).prob, rel=1e-6, abs=1e-15)


class TestClusterTail:
    def test_tail_zero_is_p(self):
        for r, p in [(2, "0.3"), (3, "0.25"), (2, "1/2")]:
            params = ModelParams(r, p)
            assert cluster_tail(params, 0).prob == pytest.approx(params.p, rel=1e-13)

    def test_supercritical_rejected(self):
        with pytest.raises(RegimeError):
            cluster_tail(ModelParams(2, "0.7"), 10)

    def test_negative_n_rejected(self, params_sub):
        with pytest.raises(PreconditionError):
            cluster_tail(params_sub, -1)

    def test_many_matches_scalar(self, params_sub):
        ns = [0, 1, 5, 50, 500, 2000]
        arr = cluster_tail_many(params_sub, ns)
        for i, n in enumerate(ns):
            assert arr[i] == pytest.approx(cluster_tail(params_sub, n).prob, rel=1e-9)

    def test_deep_tail_matches_asymptotic_shape(self):
        # p = 0.1, kappa = 0.36: the tail at n = 200 is ~ e^-213, far below
        # float underflow of the forward sum, so this exercises the
        # backward log-space route against the independent asymptotic law
        params = ModelParams(2, "0.1")
        lt = cluster_tail(params, 200).log
        asym = math.log(constant_c2(params)) + 201 * math.log(kappa(params)) - 1.5 * math.log(200)
        assert math.exp(lt - asym) == pytest.approx(1.0, abs=0.05)

    def test_critical_tail_square_root_law(self, params_crit):
        # sqrt(n) P(K > n) -> 1/sqrt(pi) at r = 2
        val = math.sqrt(1e4) * cluster_tail(params_crit, 10**4).prob
        assert val == pytest.approx(1 / math.sqrt(math.pi), abs=5e-4)

    def test_asymptotic_ratio_improves(self, params_sub):
        dists = []
        for n in (50, 100, 200, 300):
            ratio = cluster_tail(params_sub, n).prob / cluster_tail_asymptotic(params_sub, n)
            dists.append(abs(ratio - 1.0))
        assert dists == sorted(dists, reverse=True)
        assert dists[-1] < 0.05


class TestRunRecursion:
    def test_first_steps_by_hand(self, params_sub):
        # tail_0 = p, tail_1 = p (1 - (1-p)^r)
        assert run_cdf_recursion(params_sub, 0).tail == pytest.approx(0.3, rel=1e-15)
        assert run_cdf_recursion(params_sub, 1).tail == pytest.approx(0.3 * (1 - 0.49), rel=1e-14)

    def test_cdf_tail_complementary(self, params_sub):
        pt = run_cdf_recursion(params_sub, 5)
        assert pt.cdf + pt.tail == pytest.approx(1.0, abs=1e-15)

    def test_table_matches_pointwise(self, params_sub):
        cdfs, tails = run_cdf_table(params_sub, 30)
        for h in (0, 3, 17, 30):
            pt = run_cdf_recursion(params_sub, h)
            assert tails[h] == pt.tail
            assert cdfs[h] == pt.cdf

    def test_tail_strictly_decreasing(self, params_sub, params_crit):
        for params in (params_sub, params_crit):
            _, tails = run_cdf_table(params, 60)
            assert np.all(np.diff(tails) < 0)

    def test_critical_harmonic_decay(self, params_crit):
        # at p = 1/r the run tail decays like 2 / h
        assert 1000 * run_cdf_recursion(params_crit, 1000).tail == pytest.approx(2.0, abs=0.25)

    def test_geometric_decay_subcritical(self, params_sub):
        # tail_h / (rp)^h must converge; check stability over a decade of h
        t300 = run_cdf_recursion(params_sub, 300).tail / 0.6**300
        t350 = run_cdf_recursion(params_sub, 350).tail / 0.6**350
        assert t350 == pytest.approx(t300, rel=1e-10)

    def test_bad_h_rejected(self, params_sub):
        with pytest.raises(PreconditionError):
            run_cdf_recursion(params_sub, -1)


class TestSubtreeCounts:
    def test_hand_counted_shapes_r2(self):
        # size 1 is the bare root at height 0
        assert subtree_count_size_height(2, 1, 0) == 1
        # size 2: root plus either child, height 1
        assert subtree_count_size_height(2, 2, 1) == 2
        # size 3 at height 1: root plus both children, one shape
        assert subtree_count_size_height(2, 3, 1) == 1
        # size 3 at height 2: two-step paths, 2 x 2 choices
        assert subtree_count_size_height(2, 3, 2) == 4

    def test_hand_counted_shapes_r3(self):
        assert subtree_count_size_height(3, 2, 1) == 3
        assert subtree_count_size_height(3, 3, 1) == 3
        assert subtree_count_size_height(3, 3, 2) == 9

    @given(st.integers(2, 4), st.integers(1, 25))
    @settings(max_examples=40, deadline=None)
    def test_heights_partition_catalan(self, r, n):
        total = sum(subtree_count_size_height(r, n, h) for h in range(n))
        assert total == generalized_catalan(r, n)

    @given(st.integers(2, 4), st.integers(1, 20))
    @settings(max_examples=30, deadline=None)
    def test_path_shapes(self, r, n):
        # height n-1 forces a path: r choices per step
        assert subtree_count_size_height(r, n, n - 1) == r ** (n - 1)

    def test_impossible_heights_are_zero(self):
        assert subtree_count_size_height(2, 3, 5) == 0
        assert subtree_count_size_height(2, 1, 1) == 0


class TestRunTailSeries:
    def test_bracket_contains_recursion(self, params_sub):
        for h in range(0, 9):
            bracket = run_tail_series(params_sub, h, 700)
            assert bracket.contains(run_cdf_recursion(params_sub, h).tail), h

    def test_bracket_contains_recursion_critical(self, params_crit):
        for h in (0, 2, 4, 6):
            bracket = run_tail_series(params_crit, h, 900)
            assert bracket.contains(run_cdf_recursion(params_crit, h).tail), h

    def test_bracket_tightens_with_n_max(self, params_sub):
        wide = run_tail_series(params_sub, 4, 100)
        tight = run_tail_series(params_sub, 4, 600)
        assert tight.remainder < wide.remainder
        assert tight.remainder < 1e-10

    def test_h_zero_reduces_to_p(self, params_sub):
        bracket = run_tail_series(params_sub, 0, 400)
        assert bracket.contains(0.3)

    def test_n_max_validation(self, params_sub):
        with pytest.raises(PreconditionError):
            run_tail_series(params_sub, 10, 5)


class TestEstimateC4:
    def test_reference_point_converges(self, params_sub):
        est = estimate_c4(params_sub, h_max=300)
        assert est.converged
        assert est.last_increment <= est.tolerance
        assert est.value == pytest.approx(0.21238030634228142, rel=1e-9)

    def test_normalized_tail_matches_estimate(self, params_sub):
        est = estimate_c4(params_sub, h_max=300)
        phi = run_cdf_recursion(params_sub, 350).tail
        assert phi / (est.value * 0.6**350) == pytest.approx(1.0, rel=1e-3)

    def test_requires_subcritical(self, params_crit):
        with pytest.raises(RegimeError):
            estimate_c4(params_crit)
        with pytest.raises(RegimeError):
            estimate_c4(ModelParams(2, "0.8"))


class TestDistTables:
    def test_cluster_table_small_columns(self, params_sub):
        tab = build_cluster_table(params_sub, 50)
        tab.validate()
        assert tab.support_max == 50
        assert tab.pmf[0] == pytest.approx(0.7, rel=1e-15)
        assert tab.pmf[1] == pytest.approx(0.3 * 0.49, rel=1e-13)
        assert tab.tail[0] == pytest.approx(0.3, rel=1e-13)
        assert tab.cdf(0) == pytest.approx(0.7, rel=1e-13)

    def test_cluster_table_matches_scalar_tails(self, params_sub):
        tab = build_cluster_table(params_sub, 800)
        tab.validate()
        for n in (0, 3, 77, 300, 800):
            assert tab.log_tail[n] == pytest.approx(
                cluster_tail(params_sub, n).log, rel=1e-10, abs=1e-12
            )

    def test_cluster_table_critical_big(self, params_crit):
        tab = build_cluster_table(params_crit, 2000)
        tab.validate()
        assert math.sqrt(2000) * tab.tail[2000] == pytest.approx(
            1 / math.sqrt(math.pi), abs=0.01
        )

    def test_log_columns_survive_underflow(self):
        params = ModelParams(2, "0.1")
        tab = build_cluster_table(params, 800)
        tab.validate()
        assert tab.tail[800] == 0.0  # linear side underflows
        assert tab.log_tail[800] < -780  # log side still carries the value
        assert np.isfinite(tab.log_tail[800])

    def test_run_table(self, params_sub):
        tab = build_run_table(params_sub, 200)
        tab.validate()
        _, tails = run_cdf_table(params_sub, 200)
        # table tail must match the recursion exactly where it is positive
        assert tab.tail[100] == pytest.approx(tails[100], rel=1e-12)
        assert tab.pmf[0] == pytest.approx(0.7, rel=1e-15)

    def test_csv_roundtrip(self, tmp_path, params_sub):
        tab = build_cluster_table(params_sub, 30)
        path = tmp_path / "cluster.csv"
        tab.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "n,pmf,tail,log_pmf,log_tail"
        assert len(lines) == 32
        row = lines[2].split(",")
        assert int(row[0]) == 1
        assert float(row[1]) == tab.pmf[1]  # repr roundtrip is exact
        assert float(row[4]) == tab.log_tail[1]

    def test_json_dict_is_serializable(self, params_sub):
        tab = build_cluster_table(params_sub, 20)
        doc = tab.to_json_dict()
        text = json.dumps(doc)
        back = json.loads(text)
        assert back["kind"] == "cluster_size"
        assert back["columns"]["pmf"][0] == tab.pmf[0]
        assert back["columns"]["n"][-1] == 20

    def test_validate_catches_corruption(self, params_sub):
        tab = build_cluster_table(params_sub, 20)
        tab.pmf[3] = 1.5
        with pytest.raises(ValueError):
            tab.validate()
