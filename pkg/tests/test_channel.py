import numpy as np
import pytest

from cyclouwb.signals.channel import (ChannelRealization, ChannelSpec, apply_channel, decay_for_rms, draw_channel,
                                      exponential_pdp, rms_delay)
from cyclouwb.signals.iq import IQBuffer


def cbuf(rng, k=500):
    return IQBuffer(rng.standard_normal(k) + 1j * rng.standard_normal(k), 1e9)


def test_identity_is_bit_exact(rng):
    x = cbuf(rng)
    assert np.array_equal(apply_channel(x, ChannelRealization.identity()).samples, x.samples)


def test_impulse_gives_taps():
    ch = ChannelRealization(np.array([0, 3, 7]), np.array([1.0, 0.5j, -0.25]))
    x = IQBuffer(np.r_[1.0, np.zeros(9)], 1e9)
    y = apply_channel(x, ch).samples
    expect = np.zeros(10, complex)
    expect[[0, 3, 7]] = ch.gains
    assert np.array_equal(y, expect)


def test_parseval(rng):
    ch = draw_channel(ChannelSpec.uwb_multipath(), 1e9, rng)
    x = cbuf(rng, 1000).samples
    x[-40:] = 0  # keep the truncated tail empty so circular and linear agree
    y = apply_channel(IQBuffer(x, 1e9), ch).samples
    h = np.fft.fft(ch.impulse_response(), x.size)
    spec = np.sum(np.abs(np.fft.fft(x) * h) ** 2) / x.size
    assert np.sum(np.abs(y) ** 2) == pytest.approx(spec, rel=1e-6)


def test_linear(rng):
    ch = draw_channel(ChannelSpec.uwb_multipath(), 1e9, rng)
    x, y = cbuf(rng), cbuf(rng)
    a, b = 0.3 - 2j, 1.7
    lhs = apply_channel(IQBuffer(a * x.samples + b * y.samples, 1e9), ch).samples
    rhs = a * apply_channel(x, ch).samples + b * apply_channel(y, ch).samples
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(lhs))


def test_rayleigh_profile_ratio():
    p = ChannelSpec.rayleigh_exponential().power_profile()
    assert p.size == 20
    assert p[-1] / p[0] == pytest.approx(0.01, abs=1e-12)
    assert p.sum() == pytest.approx(1.0)


def test_default_rms_delay_spread():
    spec = ChannelSpec.uwb_multipath()
    assert rms_delay(spec.power_profile(), spec.tap_spacing) == pytest.approx(5e-9, rel=1e-9)
    with pytest.raises(ValueError):
        decay_for_rms(30, 1e-9, 100e-9)


def test_mean_power_is_unity():
    rng = np.random.default_rng(99)
    spec = ChannelSpec.uwb_multipath()
    powers = [draw_channel(spec, 1e9, rng).power() for _ in range(10**4)]
    assert np.mean(powers) == pytest.approx(1.0, abs=0.02)


def test_tap_collisions_rejected(rng):
    with pytest.raises(ValueError):
        draw_channel(ChannelSpec.uwb_multipath(), 0.5e9, rng)


def test_realization_validation():
    with pytest.raises(ValueError):
        ChannelRealization(np.array([2, 1]), np.array([1, 1]))
    with pytest.raises(ValueError):
        ChannelSpec(kind="cm9")


def test_pdp_sums_to_one():
    assert exponential_pdp(5, 1.0, 2.0).sum() == pytest.approx(1.0)
