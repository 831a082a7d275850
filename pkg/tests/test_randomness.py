import math

import numpy as np
import pytest

from mjq import (ArrivalProcess, BoundedPareto, Deterministic, ErlangK,
                 Exponential, HyperExp2, JobClass, Scenario, ScenarioError,
                 StreamKey, dist_mean, dist_variance, lambda_ideal,
                 sample_job)
from mjq.backends import get_backend
from mjq.randomness import _second_moment

from conftest import table1_exponential, table2_twoclass

TABLE1_HYPER = [
    HyperExp2(25.0, 0.25, 0.01),
    HyperExp2(41.5, 0.42, 0.01),
    HyperExp2(62.5, 0.63, 0.01),
    HyperExp2(166.5, 1.68, 0.01),
    HyperExp2(500.0, 5.05, 0.01),
]
TABLE1_PARETO = [
    BoundedPareto(0.15, 400.0, 1.4),
    BoundedPareto(0.25, 400.0, 1.4),
    BoundedPareto(0.38, 400.0, 1.4),
    BoundedPareto(1.05, 400.0, 1.4),
    BoundedPareto(3.35, 400.0, 1.4),
]
TABLE1_MEANS = [0.5, 0.83, 1.25, 3.33, 10.0]


def test_sample_job_deterministic():
    sc = table1_exponential()
    key = StreamKey(42, 3, 17)
    assert sample_job(sc, key) == sample_job(sc, key)
    assert sample_job(sc, key) != sample_job(sc, StreamKey(42, 3, 18))


def test_sample_job_degenerate():
    sc = Scenario(1, [JobClass(1, 1.0, Deterministic(2.0))],
                  ArrivalProcess(1.0, "deterministic"))
    for n in range(10):
        assert sample_job(sc, StreamKey(0, 0, n)) == (1, 2.0, 1.0)


def test_class_frequencies_table1():
    sc = table1_exponential()
    k = get_backend()
    n = 10 ** 6
    alphas, _, _ = k.gen_marks(0, 0, 0, n, *sc.pack)
    for jc in sc.classes:
        count = int(np.sum(alphas == jc.demand))
        p = jc.probability
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(count - n * p) <= 3 * sigma, (jc.demand, count)


def test_dist_mean_examples():
    assert dist_mean(HyperExp2(25.0, 0.25, 0.01)) == pytest.approx(0.4975)
    assert dist_mean(Exponential(0.83)) == 0.83
    assert dist_mean(ErlangK(3, 1.25)) == 1.25
    assert dist_mean(Deterministic(4.0)) == 4.0


def _pareto_moment_quadrature(d, power):
    # independent numeric oracle: trapezoid on a dense log grid
    a, lo, hi = d.shape, d.x_min, d.x_max
    x = np.geomspace(lo, hi, 400_001)
    norm = 1.0 - (lo / hi) ** a
    pdf = a * lo ** a * x ** (-a - 1) / norm
    return float(np.trapezoid(x ** power * pdf, x))


def test_bounded_pareto_mean_against_quadrature():
    for d, nominal in zip(TABLE1_PARETO, TABLE1_MEANS):
        oracle = _pareto_moment_quadrature(d, 1)
        assert dist_mean(d) == pytest.approx(oracle, rel=1e-6)
        # parameter-matching claim: class means within 1% of nominal
        assert dist_mean(d) == pytest.approx(nominal, rel=0.01)


def test_bounded_pareto_second_moment_against_quadrature():
    for d in TABLE1_PARETO:
        oracle = _pareto_moment_quadrature(d, 2)
        assert _second_moment(d) == pytest.approx(oracle, rel=1e-5)


def test_bounded_pareto_log_branches():
    d1 = BoundedPareto(0.5, 50.0, 1.0)
    oracle = _pareto_moment_quadrature(d1, 1)
    assert dist_mean(d1) == pytest.approx(oracle, rel=1e-6)
    d2 = BoundedPareto(0.5, 50.0, 2.0)
    m2 = _pareto_moment_quadrature(d2, 2)
    assert _second_moment(d2) == pytest.approx(m2, rel=1e-5)


def test_dist_variance_examples():
    assert dist_variance(TABLE1_HYPER[0]) == pytest.approx(12.38, rel=0.005)
    assert dist_variance(Deterministic(3.0)) == 0.0
    assert dist_variance(TABLE1_PARETO[1]) == pytest.approx(11.38, rel=0.01)
    assert dist_variance(Exponential(2.0)) == pytest.approx(4.0)
    assert dist_variance(ErlangK(3, 3.0)) == pytest.approx(3.0)


def test_hyperexp_means_within_one_percent_of_nominal():
    for d, nominal in zip(TABLE1_HYPER, TABLE1_MEANS):
        assert dist_mean(d) == pytest.approx(nominal, rel=0.01)


def test_lambda_ideal():
    assert lambda_ideal(table1_exponential()) == pytest.approx(2.11,
                                                               abs=0.01)
    sc = Scenario(5, [JobClass(5, 1.0, Exponential(4.0))],
                  ArrivalProcess(1.0))
    assert lambda_ideal(sc) == pytest.approx(0.25)
    two = table2_twoclass()
    assert lambda_ideal(two) == pytest.approx(
        256.0 / (0.001 * 256 * 40 + 0.999 * 1 * 1))


def _single_class_draws(dist, n=10 ** 6):
    sc = Scenario(1, [JobClass(1, 1.0, dist)], ArrivalProcess(1.0))
    k = get_backend()
    _, sigmas, _ = k.gen_marks(0, 0, 0, n, *sc.pack)
    return sigmas


@pytest.mark.parametrize("dist", [
    Exponential(1.3),
    ErlangK(3, 2.0),
    HyperExp2(25.0, 0.25, 0.01),
    BoundedPareto(0.25, 400.0, 1.4),
    Deterministic(2.0),
])
def test_moment_fidelity(dist):
    x = _single_class_draws(dist)
    n = len(x)
    mean, var = dist_mean(dist), dist_variance(dist)
    se_mean = math.sqrt(var / n) if var > 0 else 0.0
    assert abs(float(np.mean(x)) - mean) <= max(4 * se_mean, 1e-12)
    if var > 0:
        m4 = float(np.mean((x - np.mean(x)) ** 4))
        se_var = math.sqrt(max(m4 - var ** 2, 0.0) / n)
        assert abs(float(np.var(x)) - var) <= 4 * se_var


def test_replica_independence():
    sc = table1_exponential()
    k = get_backend()
    n = 10 ** 5
    _, s0, _ = k.gen_marks(0, 0, 0, n, *sc.pack)
    _, s1, _ = k.gen_marks(0, 1, 0, n, *sc.pack)
    corr = float(np.corrcoef(s0, s1)[0, 1])
    assert abs(corr) <= 4.0 / math.sqrt(n)


def test_seed_independence():
    sc = table1_exponential()
    k = get_backend()
    n = 10 ** 5
    _, s0, _ = k.gen_marks(0, 0, 0, n, *sc.pack)
    _, s1, _ = k.gen_marks(1, 0, 0, n, *sc.pack)
    corr = float(np.corrcoef(s0, s1)[0, 1])
    assert abs(corr) <= 4.0 / math.sqrt(n)


def test_arrival_substream_isolation():
    # changing the arrival law must not perturb (alpha, sigma)
    sc_a = table1_exponential()
    sc_b = Scenario(sc_a.servers, sc_a.classes,
                    ArrivalProcess(0.3, "erlang", k=3))
    k = get_backend()
    a0, s0, t0 = k.gen_marks(0, 0, 0, 10_000, *sc_a.pack)
    a1, s1, t1 = k.gen_marks(0, 0, 0, 10_000, *sc_b.pack)
    assert np.array_equal(a0, a1)
    assert np.array_equal(s0, s1)
    assert not np.array_equal(t0, t1)


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        Scenario(2, [JobClass(3, 1.0, Exponential(1.0))],
                 ArrivalProcess(1.0))
    with pytest.raises(ScenarioError):
        Scenario(2, [JobClass(1, 0.6, Exponential(1.0)),
                     JobClass(2, 0.3, Exponential(1.0))],
                 ArrivalProcess(1.0))
    with pytest.raises(ScenarioError):
        Scenario(2, [JobClass(1, 1.0, Exponential(-1.0))],
                 ArrivalProcess(1.0))
    with pytest.raises(ScenarioError):
        Scenario(2, [JobClass(1, 1.0, Exponential(1.0))],
                 ArrivalProcess(0.0))
    with pytest.raises(ScenarioError):
        Scenario(2, [JobClass(1, 1.0, BoundedPareto(2.0, 1.0, 1.4))],
                 ArrivalProcess(1.0))


def test_with_rate_and_global_class():
    sc = table2_twoclass()
    assert sc.global_class_index() == 0
    assert sc.with_rate(3.0).rate == 3.0
    assert table1_exponential().global_class_index() == -1
