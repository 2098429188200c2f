import pytest

from growthnet import (Regime, RegimeThresholds, ScaledParams, ValidationError, build_model,
                       classify_regime, scale)
from growthnet.model import FilamentClass, NetworkModel


def test_build_model_merges_and_sorts():
    model = build_model(10, [(2.0, 1), (1.0, 3), (2.0, 2)])
    assert model.kappas == [1.0, 2.0]
    assert model.counts == [3, 3]
    assert model.f == 6 and model.K == 2
    assert model.varrho == [1.0, 0.5]


@pytest.mark.parametrize("m, specs", [
    (0, [(1.0, 1)]),
    (-3, [(1.0, 1)]),
    (2.5, [(1.0, 1)]),
    (5, []),
    (5, [(0.0, 1)]),
    (5, [(-1.0, 1)]),
    (5, [(float("inf"), 1)]),
    (5, [(1.0, 0)]),
    (5, [(1.0, 1.5)]),
])
def test_build_model_rejects(m, specs):
    with pytest.raises(ValidationError):
        build_model(m, specs)


def test_network_model_requires_increasing_kappa():
    with pytest.raises(ValidationError):
        NetworkModel(3, (FilamentClass(2.0, 1), FilamentClass(1.0, 1)))


def test_mean_poisson_plus_geometric():
    model = build_model(100, [(1.0, 1), (2.0, 4)])
    # kappa_1 + 4 * 0.5 / 0.5
    assert model.mean_poisson_plus_geometric() == pytest.approx(5.0)


def test_scale_and_sbar():
    model = build_model(100, [(10.0, 20), (20.0, 50)])
    p = scale(model)
    assert p.kbar1 == pytest.approx(0.1)
    assert p.fbar == (0.2, 0.5)
    assert p.varrho == (1.0, 0.5)
    assert p.sbar == pytest.approx(0.5)
    assert p.mean == pytest.approx(0.6)
    assert p.m == 100


def test_scaled_params_validation():
    with pytest.raises(ValidationError):
        ScaledParams(1.0, (0.5,), (0.9,))
    with pytest.raises(ValidationError):
        ScaledParams(1.0, (0.5, 0.5), (1.0, 1.2))
    with pytest.raises(ValidationError):
        ScaledParams(1.0, (0.5, 0.5), (1.0, 0.5), sbar=3.0)
    with pytest.raises(ValidationError):
        ScaledParams(-1.0, (0.5,), (1.0,))


@pytest.mark.parametrize("params, f1, expected", [
    (ScaledParams.from_limits(1.0, [0.5], [1.0]), None, Regime.LINEAR_BOTTLENECK),
    (ScaledParams.from_limits(2.0, [0.001], [1.0]), None, Regime.SUBLINEAR_OVERLOADED),
    (ScaledParams.from_limits(0.2, [0.001], [1.0]), 50, Regime.SUBLINEAR_UNDERLOADED),
    (ScaledParams.from_limits(0.2, [0.001], [1.0]), 3, Regime.EXACT),
    (ScaledParams.from_limits(1.0, [0.001], [1.0]), 50, Regime.EXACT),
])
def test_classify_regime(params, f1, expected):
    assert classify_regime(params, RegimeThresholds(), f1=f1) is expected


def test_classify_uses_model_count():
    # f1 = 5 < count threshold, underloaded: no asymptotic regime
    assert classify_regime(scale(build_model(1000, [(100.0, 5)]))) is Regime.EXACT
    assert classify_regime(scale(build_model(1000, [(100.0, 20)]))) is \
        Regime.SUBLINEAR_UNDERLOADED


def test_to_dict_round_trip():
    model = build_model(7, [(1.5, 2), (3.0, 1)])
    d = model.to_dict()
    again = build_model(d["m"], [(c["kappa"], c["count"]) for c in d["classes"]])
    assert again == model
