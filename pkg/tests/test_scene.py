import math

import numpy as np
import pytest

from cyclouwb.signals.ofdm import OfdmConfig
from cyclouwb.signals.scene import H0, H1, SceneConfig, mix_scene
from cyclouwb.signals.uwb import UwbPhyConfig


def db(x):
    return 10 * np.log10(x)


def power(x):
    return np.mean(np.abs(x) ** 2)


def test_h0_pure_noise():
    cfg = SceneConfig(uwb=None, interferer=OfdmConfig(), inr_db=-math.inf)
    s = mix_scene(cfg, np.random.default_rng(0))
    assert s.hypothesis == H0
    assert set(s.components) == {"noise"}
    assert s.buffer.power() == pytest.approx(1.0, rel=0.02)


@pytest.mark.parametrize("snr", [-10.0, 0.0, 6.0])
def test_snr_calibration(snr):
    s = mix_scene(SceneConfig(snr_db=snr), np.random.default_rng(1))
    assert s.hypothesis == H1
    measured = db(power(s.components["uwb"]) / power(s.components["noise"]))
    assert abs(measured - snr) <= 0.1


def test_sir_calibration():
    cfg = SceneConfig(interferer=OfdmConfig(timing_offset_zeta=None, carrier_offset=None), sir_db=-5.0)
    s = mix_scene(cfg, np.random.default_rng(2))
    ratio = power(s.components["interferer"]) / power(s.components["uwb"])
    assert ratio == pytest.approx(10**0.5, rel=0.02)
    assert abs(db(1 / ratio) + 5.0) <= 0.1


def test_inr_calibration():
    cfg = SceneConfig(uwb=None, interferer=OfdmConfig(), inr_db=20.0)
    s = mix_scene(cfg, np.random.default_rng(3))
    assert abs(db(power(s.components["interferer"]) / power(s.components["noise"])) - 20.0) <= 0.1


def test_components_sum_to_buffer():
    cfg = SceneConfig(interferer=OfdmConfig(), sir_db=0.0)
    s = mix_scene(cfg, np.random.default_rng(4))
    assert np.allclose(sum(s.components.values()), s.buffer.samples)


def test_seeded_scenes_repeat():
    cfg = SceneConfig(uwb=UwbPhyConfig(timing_offset_eps=None), seed=11)
    assert np.array_equal(mix_scene(cfg).buffer.samples, mix_scene(cfg).buffer.samples)


def test_length_and_rate():
    s = mix_scene(SceneConfig(sample_rate=2e9, duration=5e-6), np.random.default_rng(5))
    assert len(s.buffer) == 10**4 and s.buffer.sample_rate == 2e9


def test_validation():
    with pytest.raises(ValueError):
        SceneConfig(sir_db=-5.0)
    with pytest.raises(ValueError):
        SceneConfig(interferer=OfdmConfig())
    with pytest.raises(ValueError):
        SceneConfig(duration=0.0)
