import numpy as np
import pytest

from cyclouwb.signals.uwb import UwbPhyConfig, constant_streams, draw_streams, gen_uwb_frame, pulse_times, samples_per_chip
from cyclouwb.signals.pulse import butterworth_pulse


def test_derived_timing():
    cfg = UwbPhyConfig()
    assert cfg.t_burst == pytest.approx(4e-9)
    assert cfg.t_dsym == pytest.approx(32e-9)
    assert cfg.t_bpm == pytest.approx(16e-9)
    assert cfg.alpha1 == pytest.approx(31.25e6)


@pytest.mark.parametrize("kw", [dict(n_hop=3), dict(n_hop=4), dict(n_burst=2), dict(t_c=0.0),
                                dict(scrambler_seed=0)])
def test_invalid_configs(kw):
    with pytest.raises(ValueError):
        UwbPhyConfig(**kw)


def test_forced_streams_give_deterministic_train():
    cfg = UwbPhyConfig()
    fs = 1e9
    x = gen_uwb_frame(cfg, 4, fs, streams=constant_streams(cfg, 4))
    p = butterworth_pulse(cfg.pulse, fs).samples.real
    ref = np.zeros(len(x))
    spc = samples_per_chip(cfg, fs)
    for k in range(4):
        for n in range(cfg.n_cpb):
            start = k * 32 + n * spc
            stop = min(start + p.size, ref.size)
            ref[start:stop] += p[: stop - start]
    assert np.allclose(x.samples, ref, atol=1e-12)


@pytest.mark.parametrize("n_symbols", range(1, 9))
def test_pulse_positions_follow_index_arithmetic(n_symbols, rng):
    cfg = UwbPhyConfig(n_hop=2)
    s = draw_streams(cfg, n_symbols, rng)
    t, a = pulse_times(cfg, s, 0.0)
    i = 0
    for k in range(n_symbols):
        for n in range(cfg.n_cpb):
            expect = k * cfg.t_dsym + s.position[k] * cfg.t_bpm + s.hops[k] * cfg.t_burst + n * cfg.t_c
            assert t[i] == pytest.approx(expect, abs=1e-18)
            assert a[i] == s.amplitude[k] * s.chips[k, n]
            i += 1


def test_pulses_stay_inside_selected_half(rng):
    cfg = UwbPhyConfig(n_burst=8, n_hop=2)
    s = draw_streams(cfg, 200, rng)
    t, _ = pulse_times(cfg, s, 0.0)
    t = t.reshape(200, cfg.n_cpb)
    chip = np.rint((t - (np.arange(200) * cfg.t_dsym)[:, None]) / cfg.t_c).astype(int)
    half = chip // (cfg.n_burst * cfg.n_cpb // 2)
    assert np.array_equal(half[:, 0], s.position)
    assert np.all(half[:, -1] == half[:, 0])
    assert set(np.unique(s.hops)) <= {0, 1}


def test_zero_mean_over_frames():
    cfg = UwbPhyConfig()
    rng = np.random.default_rng(7)
    frames = np.array([gen_uwb_frame(cfg, 10, 1e9, rng).samples.real for _ in range(1000)])
    mean = frames.mean(axis=0)
    assert np.mean(mean**2) <= 0.01 * np.mean(frames**2)


def test_offset_shifts_frame():
    cfg = UwbPhyConfig(timing_offset_eps=3e-9)
    s = constant_streams(cfg, 2)
    a = gen_uwb_frame(cfg, 2, 1e9, streams=s, n_samples=80).samples
    b = gen_uwb_frame(UwbPhyConfig(), 2, 1e9, streams=s, n_samples=80).samples
    assert np.allclose(a[3:], b[:-3], atol=1e-12)


def test_needs_rng_for_random_streams():
    with pytest.raises(ValueError):
        gen_uwb_frame(UwbPhyConfig(), 2, 1e9)
    with pytest.raises(ValueError):
        gen_uwb_frame(UwbPhyConfig(), 2, 0.7e9, np.random.default_rng(0))
