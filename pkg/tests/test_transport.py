import math

import numpy as np
import pytest
import scipy.optimize
import scipy.stats

import ppt
from ppt import (
    assignment_solve,
    doubling_diagnostic,
    dual_lower_bound,
    emd,
    estimate_rubinstein_empirical,
    exact_oracle_discrete,
)
from ppt.errors import TruncationError, ValidationError

from conftest import brute_force_assignment, config


class TestAssignment:
    def test_one_by_one(self):
        perm, cost = assignment_solve(np.array([[3.5]]))
        assert list(perm) == [0] and cost == 3.5

    def test_matches_brute_force(self, seed):
        rng = seed.rng()
        for _ in range(300):
            n = int(rng.integers(1, 7))
            C = rng.uniform(-1, 1, size=(n, n))
            _, cost = assignment_solve(C)
            assert cost == brute_force_assignment(C)

    def test_matches_scipy_on_larger_instances(self, seed):
        rng = seed.rng(1)
        for n in (10, 25, 40):
            C = rng.uniform(0, 10, size=(n, n))
            perm, cost = assignment_solve(C)
            ri, ci = scipy.optimize.linear_sum_assignment(C)
            assert cost == pytest.approx(float(C[ri, ci].sum()), abs=1e-9)
            assert sorted(perm) == list(range(n))

    def test_tied_optima_return_the_tied_cost(self):
        C = np.array([[1.0, 2.0], [2.0, 1.0]])
        # both the identity and the swap... identity costs 2, swap costs 4
        _, cost = assignment_solve(C)
        assert cost == 2.0
        C = np.ones((3, 3))
        _, cost = assignment_solve(C)
        assert cost == 3.0

    def test_non_square_rejected(self):
        with pytest.raises(ValidationError):
            assignment_solve(np.ones((2, 3)))

    def test_infinite_entries_rejected(self):
        with pytest.raises(ValidationError):
            assignment_solve(np.array([[1.0, math.inf], [0.0, 1.0]]))


class TestEmd:
    def test_zero_diagonal(self):
        C = np.array([[0.0, 1.0], [1.0, 0.0]])
        plan = emd([0.5, 0.5], [0.5, 0.5], C)
        assert plan.cost == pytest.approx(0.0, abs=1e-15)

    def test_two_diracs(self):
        plan = emd([1.0], [1.0], np.array([[2.5]]))
        assert plan.cost == 2.5

    def test_birkhoff_uniform_weights(self, seed):
        rng = seed.rng(2)
        for n in (2, 3, 4):
            C = rng.uniform(0, 1, size=(n, n))
            plan = emd(np.full(n, 1 / n), np.full(n, 1 / n), C)
            _, cost = assignment_solve(C)
            assert plan.cost == pytest.approx(cost / n, abs=1e-12)

    def test_matches_lp_oracle(self, seed):
        # independent oracle: scipy linprog (HiGHS) on the flattened LP
        rng = seed.rng(3)
        for _ in range(20):
            n, m = int(rng.integers(2, 6)), int(rng.integers(2, 7))
            a = rng.dirichlet(np.ones(n))
            b = rng.dirichlet(np.ones(m))
            C = rng.uniform(0, 5, size=(n, m))
            plan = emd(a, b, C)
            A_eq = []
            for i in range(n):
                row = np.zeros(n * m)
                row[i * m : (i + 1) * m] = 1.0
                A_eq.append(row)
            for j in range(m):
                row = np.zeros(n * m)
                row[j::m] = 1.0
                A_eq.append(row)
            res = scipy.optimize.linprog(
                C.ravel(), A_eq=np.array(A_eq), b_eq=np.concatenate([a, b]), method="highs"
            )
            assert res.success
            assert plan.cost == pytest.approx(res.fun, abs=1e-9)

    def test_permutation_invariance(self, seed):
        rng = seed.rng(4)
        a = rng.dirichlet(np.ones(4))
        b = rng.dirichlet(np.ones(5))
        C = rng.uniform(0, 3, size=(4, 5))
        base = emd(a, b, C).cost
        pr = rng.permutation(4)
        pc = rng.permutation(5)
        permuted = emd(a[pr], b[pc], C[np.ix_(pr, pc)]).cost
        assert permuted == pytest.approx(base, abs=1e-10)

    def test_infeasible_returns_infinity(self):
        plan = emd([1.0], [1.0], np.array([[math.inf]]))
        assert plan.cost == math.inf

    def test_partial_infeasibility_blocks(self):
        # two mass atoms, second row can only reach the first column: feasible
        C = np.array([[1.0, math.inf], [2.0, math.inf]])
        plan = emd([0.5, 0.5], [1.0, 0.0], C)
        assert plan.cost == pytest.approx(1.5, abs=1e-12)
        # demanding mass on the unreachable column is infeasible
        plan = emd([0.5, 0.5], [0.5, 0.5], C)
        assert plan.cost == math.inf

    def test_mixed_infinite_entries_match_restricted_lp(self, seed):
        rng = seed.rng(5)
        for _ in range(10):
            n = 4
            C = rng.uniform(0, 2, size=(n, n))
            mask = rng.uniform(size=(n, n)) < 0.3
            np.fill_diagonal(mask, False)  # keep a feasible diagonal
            C = np.where(mask, math.inf, C)
            plan = emd(np.full(n, 0.25), np.full(n, 0.25), C)
            finiteC = np.where(np.isfinite(C), C, 1e9)
            _, cost = assignment_solve(finiteC)
            assert plan.cost == pytest.approx(cost / n, abs=1e-9)

    def test_marginal_validation(self):
        with pytest.raises(ValidationError):
            emd([0.6, 0.6], [1.0], np.zeros((2, 1)))
        with pytest.raises(ValidationError):
            emd([1.0], [1.0], np.array([[-1.0]]))

    def test_plan_serialization(self):
        plan = emd([0.5, 0.5], [1.0], np.array([[1.0], [2.0]]))
        triplets = plan.to_json_triplets()
        assert triplets["shape"] == [2, 1]
        assert len(triplets["triplets"]) == 2


class TestEmpiricalEstimates:
    def test_identical_samples_give_zero(self, unit_window):
        samples = [config([[0.1 * (i + 1)]], unit_window) for i in range(6)]
        est = estimate_rubinstein_empirical(samples, list(samples), "rho1")
        assert est.mean == 0.0

    def test_rho0_bounded_by_one(self, lebesgue, seed):
        mu = ppt.sample_poisson_batch(lebesgue, 12, seed)
        nu = ppt.sample_poisson_batch(lebesgue, 12, ppt.SeedSpec(1, 1))
        est = estimate_rubinstein_empirical(mu, nu, "rho0")
        assert 0.0 <= est.mean <= 1.0

    def test_rho2_mismatched_counts_give_infinity(self, unit_window):
        mu = [config([[0.5]], unit_window) for _ in range(3)]
        nu = [config([[0.25], [0.75]], unit_window) for _ in range(3)]
        est = estimate_rubinstein_empirical(mu, nu, "rho2")
        assert est.mean == math.inf

    def test_unknown_metric(self, unit_window):
        a = [config([[0.5]], unit_window)]
        with pytest.raises(ValidationError):
            estimate_rubinstein_empirical(a, a, "rho7")

    def test_doubling_diagnostic_fields(self, lebesgue, seed):
        mu = ppt.sample_poisson_batch(lebesgue, 8, seed)
        nu = ppt.sample_poisson_batch(lebesgue, 8, ppt.SeedSpec(2, 1))
        diag = doubling_diagnostic(mu, nu, "rho1")
        assert set(diag) == {"n_half", "n_full", "estimate_half", "estimate_full", "gap"}


class TestDualLowerBound:
    def test_constant_witness_gives_zero(self, lebesgue, seed):
        mu = ppt.sample_poisson_batch(lebesgue, 10, seed)
        est = dual_lower_bound(lambda w: 1.0, mu, mu)
        assert est.mean == 0.0

    def test_weak_duality_against_primal(self, lebesgue, seed):
        from ppt.cli import parse_density_expr

        coupling = ppt.SuperpositionCoupling(lebesgue, parse_density_expr("const:2"), p_sup=2.0)
        pairs = coupling.sample_batch(60, seed)
        mu = [c.left for c in pairs]
        nu = [c.right for c in pairs]
        primal = estimate_rubinstein_empirical(mu, nu, "rho1")
        dual = dual_lower_bound(lambda w: float(w.n), mu, nu)
        assert dual.mean <= primal.mean + 3 * (dual.std_error + primal.std_error)


class TestExactOracle:
    def test_identical_masses(self):
        assert exact_oracle_discrete([1.0], [1.0], 30) == pytest.approx(0.0, abs=1e-12)

    def test_one_cell_mean_gap(self):
        got = exact_oracle_discrete([1.0], [2.0], 60)
        assert got == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    def test_one_cell_matches_mean_gap_grid(self, a, b):
        got = exact_oracle_discrete([a], [b], 40)
        assert got == pytest.approx(abs(a - b), abs=1e-8)

    def test_two_cells_separable(self):
        got = exact_oracle_discrete([1.0, 1.0], [2.0, 1.0], 18)
        assert got == pytest.approx(1.0, abs=1e-8)

    def test_truncation_guard(self):
        with pytest.raises(TruncationError):
            exact_oracle_discrete([1.0], [2.0], 3)

    def test_cell_count_guard(self):
        with pytest.raises(ValidationError):
            exact_oracle_discrete([1.0] * 3, [1.0] * 3, 10)
