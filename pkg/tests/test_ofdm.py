import numpy as np
import pytest

from cyclouwb.caf import caf_estimate
from cyclouwb.signals import ofdm
from cyclouwb.signals.ofdm import OfdmConfig, gen_ofdm_frame

FS = 40e6  # 512-sample body, 128-sample prefix


def test_symbol_timing():
    cfg = OfdmConfig()
    assert cfg.t_sym == pytest.approx(16e-6)
    assert cfg.t_d == pytest.approx(12.8e-6)
    assert cfg.subcarriers.size == 200 and 0 not in cfg.subcarriers


def test_cp_is_exact_copy(rng):
    cfg = OfdmConfig(timing_offset_zeta=0.0, carrier_offset=0.0)
    x = gen_ofdm_frame(cfg, 6, FS, rng).samples
    n_fft, n_cp = 512, 128
    cp_energy, corr = 0.0, 0.0
    for s in range(6):
        cp = np.arange(s * 640, s * 640 + n_cp)
        assert np.array_equal(x[cp], x[cp + n_fft])
        corr += np.sum(x[cp] * np.conj(x[cp + n_fft]))
        cp_energy += np.sum(np.abs(x[cp]) ** 2)
    assert abs(corr) == pytest.approx(cp_energy, rel=1e-12)


def test_qpsk_symbols_and_occupied_band(rng):
    cfg = OfdmConfig(timing_offset_zeta=0.0, carrier_offset=0.0)
    x = gen_ofdm_frame(cfg, 1, FS, rng).samples
    body = np.fft.fft(x[128:640]) / 512
    used = body[cfg.subcarriers % 512]
    assert np.allclose(np.abs(used), 1.0)
    assert np.allclose(np.abs(used.real), 1 / np.sqrt(2))
    unused = np.delete(body, cfg.subcarriers % 512)
    assert np.max(np.abs(unused)) < 1e-9


def test_caf_peaks_at_symbol_rate(rng):
    cfg = OfdmConfig(timing_offset_zeta=0.0, carrier_offset=0.0)
    x = gen_ofdm_frame(cfg, 50, FS, rng)
    a = 1 / 640
    at_cf = abs(caf_estimate(x, a, 512))
    assert at_cf > 5 * abs(caf_estimate(x, 1.5 * a, 512))
    assert at_cf > 5 * abs(caf_estimate(x, a, 300))


def test_fractional_offset_path_matches_direct(rng):
    cfg = OfdmConfig(timing_offset_zeta=3.3e-6 + 0.37e-9, carrier_offset=0.0)
    data = ofdm._QPSK[rng.integers(0, 4, size=(3, 200))]
    a = ofdm._rotated(data, cfg.subcarriers, cfg, cfg.timing_offset_zeta, -1, 30000, 1e9, 12800)
    b = ofdm._direct(data, cfg.subcarriers, cfg, cfg.timing_offset_zeta, -1, 30000, 1e9)
    assert np.max(np.abs(a - b)) < 1e-9 * np.max(np.abs(b))


def test_carrier_offset_is_rotation(rng):
    base = OfdmConfig(timing_offset_zeta=0.0, carrier_offset=0.0)
    shifted = OfdmConfig(timing_offset_zeta=0.0, carrier_offset=1e6)
    a = gen_ofdm_frame(base, 2, FS, np.random.default_rng(3)).samples
    b = gen_ofdm_frame(shifted, 2, FS, np.random.default_rng(3)).samples
    n = np.arange(a.size)
    assert np.allclose(b, a * np.exp(2j * np.pi * 1e6 * n / FS))


@pytest.mark.parametrize("kw", [dict(n_used=300), dict(n_used=199), dict(delta_f=0.0),
                                dict(timing_offset_zeta=20e-6)])
def test_invalid(kw):
    with pytest.raises(ValueError):
        OfdmConfig(**kw)


def test_sample_rate_below_band_rejected(rng):
    with pytest.raises(ValueError):
        gen_ofdm_frame(OfdmConfig(), 1, 10e6, rng)
