import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclouwb.signals import scrambler
from cyclouwb.signals.scrambler import ALL_ONES, PERIOD, hop_indices, hop_sequence, lfsr_bits, lfsr_scramble


def test_recurrence_holds():
    seed = 0b101100111000101
    bits = lfsr_bits(seed, 200)
    full = np.concatenate([(seed >> np.arange(15)) & 1, bits])
    for n in range(15, full.size):
        assert full[n] == full[n - 14] ^ full[n - 15]


def test_exact_period():
    two = lfsr_scramble(ALL_ONES, 2 * PERIOD)
    assert np.array_equal(two[:PERIOD], two[PERIOD:])
    # no shorter period that divides 2^15 - 1 = 7 * 31 * 151
    for d in (7, 31, 151, 217, 1057, 4681):
        assert not np.array_equal(two[:PERIOD - d], two[d:PERIOD])


def test_balance_and_mean():
    assert lfsr_scramble(ALL_ONES, PERIOD).sum() == -1
    assert abs(lfsr_scramble(ALL_ONES, 10**5).mean()) <= 0.02


@settings(max_examples=5, deadline=None)
@given(st.integers(1, PERIOD))
def test_two_level_autocorrelation(seed):
    c = lfsr_scramble(seed, PERIOD).astype(float)
    spec = np.fft.fft(c)
    ac = np.fft.ifft(np.abs(spec) ** 2).real / PERIOD
    assert ac[0] == pytest.approx(1.0)
    assert np.allclose(ac[1:], -1 / PERIOD, atol=1e-9)


def test_bipolar_mapping():
    assert list(scrambler.to_bipolar(np.array([0, 1]))) == [1, -1]


def test_zero_seed_rejected():
    with pytest.raises(ValueError):
        lfsr_bits(0, 10)
    with pytest.raises(ValueError):
        lfsr_bits(PERIOD + 1, 10)


def test_hop_examples():
    assert hop_sequence(np.array([0, 0, 1, 0]), 1, 2, 2) == 1
    assert hop_sequence(np.array([1, 0, 1]), 0, 2, 8) == 5
    with pytest.raises(ValueError):
        hop_sequence(np.array([1, 0, 1]), 0, 2, 3)


def test_hop_balance():
    bits = scrambler.scrambler_stream(ALL_ONES, 0, 2 * 10**4)
    h = hop_indices(bits, 10**4, 2, 2)
    assert abs(np.mean(h == 0) - 0.5) <= 0.02


def test_vectorised_hops_match_scalar(rng):
    bits = rng.integers(0, 2, 200)
    h = hop_indices(bits, 60, 3, 8)
    assert [hop_sequence(bits, k, 3, 8) for k in range(60)] == list(h)


def test_stream_offset_wraps():
    period = lfsr_bits(ALL_ONES, PERIOD)
    s = scrambler.scrambler_stream(ALL_ONES, PERIOD - 2, 4)
    assert list(s) == [period[-2], period[-1], period[0], period[1]]
