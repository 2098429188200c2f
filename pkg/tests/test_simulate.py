import numpy as np
import pytest

from growthnet import (DomainError, SimConfig, ValidationError, build_model,
                       compare_distributions, gillespie_run, marginal_free_pool)
from growthnet import _fallback
from growthnet._backend import BACKEND
from growthnet.simulate import merge_estimates


def test_config_validation():
    for kwargs in ({"events": 0}, {"burnin_events": -1}, {"lambda_scale": 0.0},
                   {"class_lambdas": (1.0, -1.0)}, {"seed": -1}):
        with pytest.raises(ValidationError):
            SimConfig(**kwargs)


def test_pmfs_normalized_and_recorded(tiny_model):
    est = gillespie_run(tiny_model, SimConfig(seed=3, events=20_000))
    assert est.free_pool_pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert all(p.sum() == pytest.approx(1.0, abs=1e-12) for p in est.filament_pmf)
    assert est.seed == 3 and est.events_used == 20_000
    assert est.rng_algorithm == "PCG64"


def test_seed_determinism(tiny_model):
    cfg = SimConfig(seed=11, events=50_000)
    a, b = gillespie_run(tiny_model, cfg), gillespie_run(tiny_model, cfg)
    assert np.array_equal(a.free_pool_pmf, b.free_pool_pmf)
    assert a.total_sim_time == b.total_sim_time
    c = gillespie_run(tiny_model, SimConfig(seed=12, events=50_000))
    assert not np.array_equal(a.free_pool_pmf, c.free_pool_pmf)


@pytest.mark.skipif(BACKEND != "cython", reason="compiled extension not built")
@pytest.mark.parametrize("specs", [[(1.0, 2)], [(0.5, 2), (2.0, 1), (8.0, 1)]])
def test_backends_bit_identical(specs):
    model = build_model(9, specs)
    cfg = SimConfig(seed=5, events=30_000, burnin_events=500)
    a = gillespie_run(model, cfg)
    b = gillespie_run(model, cfg, backend="python")
    assert a.backend == "cython" and b.backend == "python"
    assert np.array_equal(a.free_pool_pmf, b.free_pool_pmf)
    for x, y in zip(a.filament_pmf, b.filament_pmf):
        assert np.array_equal(x, y)
    assert a.total_sim_time == b.total_sim_time


def test_conservation_invariant_checked():
    model = build_model(7, [(0.5, 2), (3.0, 2)])
    counts = np.array(model.counts, dtype=np.int64)
    lam = np.ones(model.K)
    mu = np.array(model.kappas)
    _fallback.gillespie_loop(counts, lam, mu, model.m, 100, 20_000,
                             np.random.PCG64(1), check_conservation=True)


def test_single_filament_balance():
    est = gillespie_run(build_model(1, [(1.0, 1)]), SimConfig(seed=2, events=200_000))
    assert est.filament_pmf[0][0] == pytest.approx(0.5, abs=0.01)


def test_rates_do_not_change_stationary_law(tiny_model):
    exact = marginal_free_pool(tiny_model).p
    est = gillespie_run(tiny_model, SimConfig(seed=4, events=400_000, class_lambdas=(7.0,)))
    assert compare_distributions(est.free_pool_pmf, exact)[0] < 0.01
    with pytest.raises(ValidationError):
        gillespie_run(tiny_model, SimConfig(class_lambdas=(1.0, 2.0)))


def test_merge_estimates(tiny_model):
    runs = [gillespie_run(tiny_model, SimConfig(seed=s, events=100_000)) for s in (1, 2, 3)]
    merged = merge_estimates(runs)
    assert merged.events_used == 300_000
    assert merged.free_pool_pmf.sum() == pytest.approx(1.0)
    exact = marginal_free_pool(tiny_model).p
    assert compare_distributions(merged.free_pool_pmf, exact)[0] < 0.01
    with pytest.raises(ValidationError):
        merge_estimates([])


def test_compare_distributions_examples():
    assert compare_distributions([0.3, 0.7], [0.3, 0.7]) == (0.0, 0.0)
    assert compare_distributions([1.0], [0.0, 1.0]) == (1.0, 1.0)
    tv, mx = compare_distributions([0.5, 0.5], [0.25, 0.75])
    assert tv == pytest.approx(0.25) and mx == pytest.approx(0.25)
    with pytest.raises(DomainError):
        compare_distributions([0.5, 0.6], [1.0])
