import numpy as np
import pytest

from cyclouwb.detectors import lag_autocorr
from cyclouwb.signals.noise import NoiseModel, gen_noise


def test_white_power():
    x = gen_noise(NoiseModel(), 10**5, np.random.default_rng(1))
    assert 0.98 <= x.power() <= 1.02


def test_white_is_circular():
    x = gen_noise(NoiseModel(variance=2.0), 10**5, np.random.default_rng(2)).samples
    assert abs(np.mean(x * x)) < 0.03
    assert abs(np.mean(x.real**2) - 1.0) < 0.03


def test_colored_autocorrelation():
    model = NoiseModel(kind="colored")
    x = gen_noise(model, 10**5, np.random.default_rng(3))
    r0 = lag_autocorr(x, 0).real
    assert lag_autocorr(x, 1).real / r0 == pytest.approx(0.6 / 1.18, abs=0.02)
    assert abs(lag_autocorr(x, 3)) / r0 <= 0.02
    assert model.autocorrelation(1) == pytest.approx(0.6 / 1.18)
    assert model.autocorrelation(2) == pytest.approx(0.09 / 1.18)
    assert model.autocorrelation(3) == 0.0


def test_colored_power_matches_variance():
    x = gen_noise(NoiseModel(kind="colored", variance=3.0), 10**5, np.random.default_rng(4))
    assert x.power() == pytest.approx(3.0, rel=0.02)


def test_invalid_models():
    with pytest.raises(ValueError):
        NoiseModel(kind="pink")
    with pytest.raises(ValueError):
        NoiseModel(variance=0.0)
    with pytest.raises(ValueError):
        NoiseModel(uncertainty_delta_db=-1.0)
    with pytest.raises(ValueError):
        NoiseModel(kind="colored", color_taps=(0.0, 0.0))
