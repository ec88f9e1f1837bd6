"""15-bit PRBS scrambler (c_n = c_{n-14} xor c_{n-15}) and burst-hopping indices."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

REGISTER_BITS = 15
PERIOD = 2**REGISTER_BITS - 1
ALL_ONES = PERIOD


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed & PERIOD == 0:
        raise ValueError("scrambler seed must be a nonzero 15-bit value")
    if seed < 0 or seed > PERIOD:
        raise ValueError(f"scrambler seed {seed:#x} does not fit in 15 bits")
    return seed


def lfsr_bits(seed: int = ALL_ONES, count: int = PERIOD) -> np.ndarray:
    """Register output bits c_0, c_1, ... as uint8 in {0, 1}.

    Bit i of ``seed`` (LSB first) preloads c_{i-15}, so the all-ones seed
    fills the whole register with ones.
    """
    seed = _check_seed(seed)
    if count < 1:
        raise ValueError("count must be >= 1")
    buf = np.empty(REGISTER_BITS + count, dtype=np.uint8)
    buf[:REGISTER_BITS] = (seed >> np.arange(REGISTER_BITS)) & 1
    # each block of 14 new bits only reads bits already written
    for start in range(REGISTER_BITS, buf.size, 14):
        stop = min(start + 14, buf.size)
        buf[start:stop] = buf[start - 14:stop - 14] ^ buf[start - 15:stop - 15]
    return buf[REGISTER_BITS:]


def to_bipolar(bits: np.ndarray) -> np.ndarray:
    """Map register bits 0 -> +1, 1 -> -1."""
    return 1 - 2 * np.asarray(bits, dtype=np.int8)


def lfsr_scramble(seed: int = ALL_ONES, count: int = PERIOD) -> np.ndarray:
    """Bipolar scrambling chips in {+1, -1}."""
    return to_bipolar(lfsr_bits(seed, count))


@lru_cache(maxsize=8)
def _one_period(seed: int) -> np.ndarray:
    bits = lfsr_bits(seed, PERIOD)
    bits.setflags(write=False)
    return bits


def scrambler_stream(seed: int, offset: int, count: int) -> np.ndarray:
    """``count`` register bits starting ``offset`` bits into the sequence."""
    period = _one_period(_check_seed(seed))
    return period[(int(offset) + np.arange(count)) % PERIOD]


def _hop_width(n_hop: int) -> int:
    m = int(n_hop).bit_length() - 1
    if n_hop < 1 or 2**m != n_hop:
        raise ValueError(f"n_hop must be a power of two, got {n_hop}")
    return m


def hop_sequence(chips: np.ndarray, k: int, n_cpb: int, n_hop: int) -> int:
    """Hop index of symbol k: sum_i 2^i * bit[i + k*n_cpb], i < log2(n_hop).

    ``chips`` are register bits (0/1), not bipolar chips.
    """
    m = _hop_width(n_hop)
    start = k * n_cpb
    if start + m > len(chips):
        raise ValueError("not enough scrambler bits for this symbol index")
    window = np.asarray(chips[start:start + m], dtype=np.int64)
    return int(np.sum(window << np.arange(m)))


def hop_indices(bits: np.ndarray, n_symbols: int, n_cpb: int, n_hop: int) -> np.ndarray:
    """Vectorised :func:`hop_sequence` over symbols 0..n_symbols-1."""
    m = _hop_width(n_hop)
    if (n_symbols - 1) * n_cpb + m > len(bits):
        raise ValueError("not enough scrambler bits for the requested symbols")
    idx = np.arange(n_symbols)[:, None] * n_cpb + np.arange(m)[None, :]
    return (np.asarray(bits, dtype=np.int64)[idx] << np.arange(m)).sum(axis=1)
