import numpy as np
import pytest

from cyclouwb.signals.pulse import PulseSpec, PulseTruncationError, analog_response, butterworth_pulse, total_energy


def dtft(p, f):
    n = np.arange(len(p))
    return abs(np.sum(p.samples * np.exp(-2j * np.pi * f / p.sample_rate * n)))


def test_unit_energy():
    p = butterworth_pulse(PulseSpec(), 1e9)
    assert np.sum(np.abs(p.samples) ** 2) == pytest.approx(1.0, abs=1e-9)
    assert np.all(p.samples.imag == 0)


def test_half_power_at_cutoff():
    p = butterworth_pulse(PulseSpec(8, 250e6), 1e9)
    assert dtft(p, 250e6) / dtft(p, 0) == pytest.approx(1 / np.sqrt(2), rel=0.02)


def test_stopband_against_analog_magnitude():
    # a dense grid keeps aliasing out of the comparison with |1/sqrt(1+(f/fc)^16)|
    p = butterworth_pulse(PulseSpec(8, 500e6), 8e9)
    db = 20 * np.log10(dtft(p, 1e9) / dtft(p, 0))
    assert db <= -48.0
    assert db == pytest.approx(10 * np.log10(1 / (1 + 2.0**16)), abs=0.1)


def test_analog_energy_matches_parseval():
    fc = 250e6
    t = np.arange(0, 200e-9, 1e-11)
    e = np.trapezoid(analog_response(8, fc, t) ** 2, t)
    assert e == pytest.approx(total_energy(8, fc), rel=1e-4)


def test_short_truncation_rejected():
    with pytest.raises(PulseTruncationError):
        PulseSpec(8, 250e6, 2e-9)
    with pytest.raises(ValueError):
        PulseSpec(0)


def test_sample_rate_must_cover_band():
    with pytest.raises(ValueError):
        butterworth_pulse(PulseSpec(), 400e6)
