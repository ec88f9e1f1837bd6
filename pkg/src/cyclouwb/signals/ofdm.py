"""Cyclic-prefix OFDM interferer (WiMAX-like, QPSK on every used subcarrier)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iq import IQBuffer

_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM symbol parameters.

    ``timing_offset_zeta`` / ``carrier_offset`` of None are drawn per frame,
    uniformly over one symbol and over ``carrier_offset_range`` respectively.
    """

    n_c: int = 256
    n_used: int = 200
    delta_f: float = 78.125e3
    cp_ratio_rho: float = 0.25
    timing_offset_zeta: float | None = 0.0
    carrier_offset: float | None = 0.0
    carrier_offset_range: tuple[float, float] = (-240e6, 240e6)

    def __post_init__(self):
        if not 0 < self.n_used < self.n_c:
            raise ValueError("need 0 < n_used < n_c")
        if self.n_used % 2:
            raise ValueError("n_used must be even")
        if not self.delta_f > 0 or self.cp_ratio_rho < 0:
            raise ValueError("delta_f must be positive and cp_ratio_rho nonnegative")
        zeta = self.timing_offset_zeta
        if zeta is not None and not 0 <= zeta < self.t_sym:
            raise ValueError("timing_offset_zeta must lie in [0, T_sym)")

    @property
    def t_d(self) -> float:
        return 1.0 / self.delta_f

    @property
    def t_cp(self) -> float:
        return self.cp_ratio_rho * self.t_d

    @property
    def t_sym(self) -> float:
        return (1.0 + self.cp_ratio_rho) * self.t_d

    @property
    def subcarriers(self) -> np.ndarray:
        half = self.n_used // 2
        n = np.arange(-half, half + 1)
        return n[n != 0]


def _is_integer(v: float) -> bool:
    return abs(v - round(v)) < 1e-9 * max(1.0, abs(v))


def gen_ofdm_frame(cfg: OfdmConfig, n_symbols: int, sample_rate: float,
                   rng: np.random.Generator, *, n_samples: int | None = None) -> IQBuffer:
    """Baseband CP-OFDM frame with rectangular symbol pulses of length T_sym.

    Within a symbol s(u) = sum_n d_n exp(j 2 pi n df u), u in [0, T_sym), so
    samples T_d apart inside a symbol coincide; on an aligned grid the prefix
    is an exact copy.
    """
    if sample_rate <= cfg.n_c * cfg.delta_f:
        raise ValueError("sample_rate must exceed n_c * delta_f")
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    zeta = cfg.timing_offset_zeta
    if zeta is None:
        zeta = float(rng.uniform(0.0, cfg.t_sym))
    f_off = cfg.carrier_offset
    if f_off is None:
        f_off = float(rng.uniform(*cfg.carrier_offset_range))
    if n_samples is None:
        n_samples = int(round(n_symbols * cfg.t_sym * sample_rate))
    sub = cfg.subcarriers
    # one extra symbol in front covers t < zeta
    first_symbol = -1 if zeta > 0 else 0
    n_sym_total = int(np.ceil((n_samples / sample_rate - zeta) / cfg.t_sym)) - first_symbol + 1
    data = _QPSK[rng.integers(0, 4, size=(n_sym_total, sub.size))]

    n_fft = cfg.t_d * sample_rate
    n_cp = cfg.t_cp * sample_rate
    if _is_integer(n_fft) and _is_integer(n_cp) and _is_integer(zeta * sample_rate):
        x = _aligned(data, sub, int(round(n_fft)), int(round(n_cp)))
        start = int(round(zeta * sample_rate))
        lead = -first_symbol * int(round(n_fft + n_cp))
        x = x[lead - start: lead - start + n_samples]
    elif _is_integer(n_fft):
        x = _rotated(data, sub, cfg, zeta, first_symbol, n_samples, sample_rate, int(round(n_fft)))
    else:
        x = _direct(data, sub, cfg, zeta, first_symbol, n_samples, sample_rate)
    if f_off:
        x = x * np.exp(2j * np.pi * f_off * np.arange(n_samples) / sample_rate)
    return IQBuffer(x, sample_rate)


def _aligned(data, sub, n_fft: int, n_cp: int) -> np.ndarray:
    grid = np.zeros((data.shape[0], n_fft), dtype=complex)
    grid[:, sub % n_fft] = data
    body = np.fft.ifft(grid, axis=1) * n_fft
    return np.concatenate([body, body[:, :n_cp]], axis=1).ravel()


def _rotated(data, sub, cfg: OfdmConfig, zeta, first_symbol, n_samples, fs, n_fft: int) -> np.ndarray:
    # df / fs = 1 / n_fft, so a symbol whose first sample sits at u0 is an IFFT
    # of the data pre-rotated by exp(j 2 pi n df u0), read modulo n_fft
    t = np.arange(n_samples) / fs - zeta
    sym = np.floor(t / cfg.t_sym).astype(np.int64)
    x = np.empty(n_samples, dtype=complex)
    for s in np.unique(sym):
        idx = np.flatnonzero(sym == s)
        u0 = t[idx[0]] - s * cfg.t_sym
        grid = np.zeros(n_fft, dtype=complex)
        grid[sub % n_fft] = data[s - first_symbol] * np.exp(2j * np.pi * cfg.delta_f * sub * u0)
        body = np.fft.ifft(grid) * n_fft
        x[idx] = body[np.arange(idx.size) % n_fft]
    return x


def _direct(data, sub, cfg: OfdmConfig, zeta, first_symbol, n_samples, fs) -> np.ndarray:
    t = np.arange(n_samples) / fs - zeta
    sym = np.floor(t / cfg.t_sym).astype(np.int64)
    u = t - sym * cfg.t_sym
    x = np.empty(n_samples, dtype=complex)
    for s in np.unique(sym):
        sel = sym == s
        phase = np.exp(2j * np.pi * cfg.delta_f * np.multiply.outer(u[sel], sub))
        x[sel] = phase @ data[s - first_symbol]
    return x
