"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every tolerance is pinned here, nothing is calibrated at runtime.
"""

import math
import time
from contextlib import contextmanager

import pytest

import ppt
from ppt import IntensityMeasure, SeedSpec, Window
from ppt.cli import ExperimentSpec, parse_density_expr, run_experiment

from conftest import brute_force_assignment, config
from test_metrics import brute_force_rho2
from test_simulate import rational_timechange

SEED = 20_250_808


@contextmanager
def criterion(num, description, budget_s):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"[acceptance] criterion {num:02d} FAIL - {description}")
        raise
    elapsed = time.perf_counter() - start
    status = "PASS" if elapsed < budget_s else "FAIL (runtime)"
    print(f"[acceptance] criterion {num:02d} {status} - {description} [{elapsed:.2f}s / budget {budget_s}s]")
    assert elapsed < budget_s, f"criterion {num} exceeded its runtime budget"


def lebesgue_unit():
    return IntensityMeasure.uniform(Window([0.0], [1.0]), 1.0, label="const:1")


def test_criterion_01_assignment_exactness():
    with criterion(1, "assignment cost equals factorial brute force, 1000 instances", 10):
        rng = SeedSpec(SEED).rng(1)
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            C = rng.uniform(-5.0, 5.0, size=(n, n))
            _, cost = ppt.assignment_solve(C)
            assert cost == brute_force_assignment(C)  # zero tolerance


def test_criterion_02_rho2_correctness():
    with criterion(2, "rho2 equals brute-force permutation minimum, 500 pairs", 10):
        rng = SeedSpec(SEED).rng(2)
        for trial in range(500):
            d = 1 if trial % 2 == 0 else 2
            w = Window([0.0] * d, [1.0] * d)
            n = int(rng.integers(0, 7))
            a = config(rng.uniform(0, 1, size=(n, d)), w)
            b = config(rng.uniform(0, 1, size=(n, d)), w)
            assert ppt.rho2(a, b) == pytest.approx(brute_force_rho2(a, b), abs=1e-12)


def test_criterion_03_poisson_poisson_tightness():
    with criterion(3, "Poisson-Poisson bound is tight: coupling, dual and primal meet it", 60):
        sigma = lebesgue_unit()
        p = parse_density_expr("const:2")
        bound = ppt.bound_tv_poisson(p, sigma)
        assert bound.value == pytest.approx(1.0, rel=1e-9)

        coupling = ppt.SuperpositionCoupling(sigma, p, p_sup=2.0)
        mean_cost = coupling.estimate_mean_cost(100_000, SeedSpec(SEED, 3))
        assert abs(mean_cost.mean - 1.0) <= 3.0 * mean_cost.std_error

        tau = sigma.scaled(2.0)
        mu = ppt.simulate.poisson_batch_with_rng(sigma, 100_000, SeedSpec(SEED, 4).rng())
        nu = ppt.simulate.poisson_batch_with_rng(tau, 100_000, SeedSpec(SEED, 5).rng())
        dual = ppt.dual_lower_bound(lambda w: float(w.n), mu, nu)
        assert abs(dual.mean - 1.0) <= 3.0 * dual.std_error

        pairs = coupling.sample_batch(200, SeedSpec(SEED, 6))
        primal = ppt.estimate_rubinstein_empirical(
            [c.left for c in pairs], [c.right for c in pairs], "rho1"
        )
        assert primal.mean <= bound.value + 3.0 * primal.std_error
        assert primal.mean >= dual.mean - 3.0 * (primal.std_error + dual.std_error)


def test_criterion_04_exact_oracle_agreement():
    with criterion(4, "count-law transport oracle matches the closed form", 30):
        got = ppt.exact_oracle_discrete([1.0], [2.0], 60)
        assert got == pytest.approx(1.0, abs=1e-8)
        closed_form = ppt.bound_tv_poisson(parse_density_expr("const:2"), lebesgue_unit())
        assert got == pytest.approx(closed_form.value, abs=1e-8)


def test_criterion_05_gibbs_bound():
    with criterion(5, "Gibbs bound 0.1 dominates the coupled empirical estimate", 120):
        sigma = lebesgue_unit()
        phi = parse_density_expr("const:0.05")
        bound = ppt.bound_tv_gibbs(phi, sigma)
        assert bound.value == pytest.approx(0.1, rel=1e-9)
        proposals, accepted, _ = ppt.sample_gibbs_coupled(phi, sigma, 200, SeedSpec(SEED, 7))
        primal = ppt.estimate_rubinstein_empirical(proposals, accepted, "rho1")
        assert primal.mean <= bound.value + 3.0 * primal.std_error


def test_criterion_06_halfline_bound():
    with criterion(6, "half-line bound equals 1/sqrt(3); coupling cost stays below it", 60):
        tc = rational_timechange(scale=1.0, horizon=100.0)
        half = ppt.bound_w2_halfline(tc)
        assert abs(half.value - 1.0 / math.sqrt(3.0)) <= 1e-6

        tchange = ppt.bound_w2_timechange(tc)
        rel_gap = abs(
            tchange.details["energy_form"] - tchange.details["inverse_form"]
        ) / tchange.details["energy_form"]
        assert rel_gap <= 1e-6

        mean_cost = ppt.TimeChangeCoupling(tc).estimate_mean_cost(100_000, SeedSpec(SEED, 8))
        assert mean_cost.mean <= half.value + 3.0 * mean_cost.std_error


def test_criterion_07_general_bound_specialises():
    with criterion(7, "general gradient bound reproduces the Poisson quadrature bound", 60):
        sigma = lebesgue_unit()
        L = ppt.poisson_density(parse_density_expr("const:2"), sigma)
        got = ppt.bound_tv_general(L, sigma, 10_000, SeedSpec(SEED, 9), inner_samples=32)
        assert abs(got.value - 1.0) <= 3.0 * got.std_error


def test_criterion_08_tail_grid():
    with criterion(8, "count-tail bounds dominate the exact tail on the 20-point grid", 1):
        rows = ppt.tail_grid((0.5, 1.0, 2.0, 5.0), (0.5, 1.0, 2.0, 5.0, 10.0))
        assert len(rows) == 20
        for row in rows:
            assert row["exact"] <= row["bound_sharp"] * (1 + 1e-12)
            assert row["exact"] <= row["bound_lipschitz"] * (1 + 1e-12)
            if row["r"] >= 3.0 * row["mass"]:
                assert row["bound_sharp"] < row["bound_lipschitz"]
        # spot values at mass 1, r 1, against direct formula evaluation
        lip = ppt.tail_bound_lipschitz(ppt.TailQuery(1.0, 1.0))
        assert abs(lip - math.e / 4.0) <= 1e-6
        sharp = ppt.tail_bound_count_sharp(ppt.TailQuery(1.0, 1.0))
        oracle = 2.0 * math.exp(1.0 - 2.0 * math.log(2.0)) / math.sqrt(4.0 * math.pi)
        assert abs(sharp - oracle) <= 1e-6


def test_criterion_09_laplace_sharpness():
    with criterion(9, "Laplace bound is the exact moment transform of centered counts", 1):
        mass = 1.0
        for lam in (0.1, 0.5, 1.0):
            exact = math.exp(mass * (math.exp(lam) - 1.0) - lam * mass)
            assert abs(ppt.laplace_bound_lipschitz(lam, mass) - exact) <= 1e-12


def test_criterion_10_stirling_sandwich():
    with criterion(10, "factorial sandwich contains N! for N = 1..20", 1):
        for n in range(1, 21):
            lo, hi = ppt.stirling_bounds(n)
            assert lo <= math.factorial(n) <= hi


def test_criterion_11_poincare_coarea_suite():
    with criterion(11, "L1 inequality holds on the functional suite; co-area sides agree", 120):
        sigma = lebesgue_unit()
        K = Window([0.0], [0.5])
        eta = config([[0.3], [0.6]], sigma.window)
        suite = [
            lambda w: float(w.n),
            lambda w: float(min(w.count_in(K), 3)),
            lambda w: float(ppt.rho1(w, eta)),
            ppt.CountThresholdEvent(k=0),
        ]
        for i, F in enumerate(suite):
            lhs, rhs = ppt.poincare_l1_check(F, sigma, 2500, SeedSpec(SEED, 10 + i))
            assert lhs.mean <= rhs.mean + 3.0 * (lhs.std_error + rhs.std_error)
        lhs, rhs = ppt.coarea_check(lambda w: float(w.count_in(K)), sigma, 3000, SeedSpec(SEED, 20))
        assert abs(lhs.mean - 0.5) <= 3.0 * lhs.std_error
        assert abs(rhs.mean - 0.5) <= 3.0 * rhs.std_error
        assert abs(lhs.mean - rhs.mean) <= 3.0 * (lhs.std_error + rhs.std_error)


def test_criterion_12_isoperimetry():
    with criterion(12, "exact empty-event ratio, suite ratios >= 1, discrepancy flagged", 60):
        sigma = lebesgue_unit()
        exact = ppt.isoperimetric_ratio(ppt.CountThresholdEvent(k=0), sigma, 100, SeedSpec(SEED))
        assert abs(exact.mean - 2.0 / (1.0 - math.exp(-1.0))) <= 1e-9
        events = [
            ppt.CountThresholdEvent(k=0),
            ppt.CountThresholdEvent(k=1),
            ppt.CountThresholdEvent(k=2),
            ppt.CountThresholdEvent(k=3),
            ppt.CountAtLeastEvent(m=1, region=Window([0.0], [0.5])),
        ]
        for event in events:
            est = ppt.isoperimetric_ratio(event, sigma, 2000, SeedSpec(SEED, 30))
            assert est.mean >= 1.0 - 3.0 * est.std_error
        report = run_experiment(
            ExperimentSpec.from_dict(
                {
                    "kind": "verify",
                    "parameters": {"scenario": "isoperimetry"},
                    "seed": {"seed": SEED},
                    "n_samples": 2000,
                }
            )
        )
        assert report.results["upper_bound_discrepancy"]["flagged"] is True
        assert report.all_assertions_passed()


def test_criterion_13_semicontinuity_regression():
    with criterion(13, "normalised-TV counterexample values and TV liminf property", 1):
        big = Window([-0.5], [5.5])
        omega = config([[0.0]], big)
        eta = config([[1.0]], big)
        assert ppt.rho1_normalized(omega, eta) == 2.0
        for nval in (2.0, 3.0, 4.0, 5.0):
            omega_n = config([[0.0], [nval]], big)
            eta_n = config([[1.0], [nval]], big)
            assert ppt.rho1_normalized(omega_n, eta_n) == 1.0
        restriction = Window([-0.5], [1.5])
        limit_value = ppt.rho1(omega.restrict(restriction), eta.restrict(restriction))
        restricted = [
            ppt.rho1(
                config([[0.0], [nval]], big).restrict(restriction),
                config([[1.0], [nval]], big).restrict(restriction),
            )
            for nval in (2.0, 3.0, 4.0, 5.0)
        ]
        assert min(restricted) >= limit_value


SCENARIOS = (
    "poisson-tightness",
    "gibbs-bound",
    "halfline-timechange",
    "tail-grid",
    "isoperimetry",
    "semicontinuity",
)


def test_criterion_14_determinism():
    with criterion(14, "every verify scenario is byte-identical across reruns", 600):
        for name in SCENARIOS:
            spec = ExperimentSpec.from_dict(
                {
                    "kind": "verify",
                    "parameters": {"scenario": name},
                    "seed": {"seed": SEED},
                    "n_samples": 4000,
                }
            )
            first = run_experiment(spec)
            second = run_experiment(spec)
            assert first.canonical_bytes() == second.canonical_bytes(), name
            assert first.all_assertions_passed(), name
