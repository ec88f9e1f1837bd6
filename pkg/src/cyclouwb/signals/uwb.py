"""IEEE 802.15.4a style BPM-BPSK burst-hopping impulse-radio frames."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import scrambler
from .iq import IQBuffer
from .pulse import PulseSpec, grid_norm

ALLOWED_N_HOP = (2, 8, 32)


@dataclass(frozen=True)
class UwbPhyConfig:
    """Burst layout of one UWB symbol.

    ``timing_offset_eps`` of None means "draw uniformly over one symbol
    period for every frame".
    """

    n_cpb: int = 2
    n_burst: int = 8
    n_hop: int = 2
    t_c: float = 2e-9
    pulse: PulseSpec = field(default_factory=PulseSpec)
    timing_offset_eps: float | None = 0.0
    scrambler_seed: int = scrambler.ALL_ONES

    def __post_init__(self):
        if self.n_hop not in ALLOWED_N_HOP:
            raise ValueError(f"n_hop must be one of {ALLOWED_N_HOP}, got {self.n_hop}")
        if self.n_cpb < 1 or self.n_burst < 1:
            raise ValueError("n_cpb and n_burst must be >= 1")
        if self.n_burst < 2 * self.n_hop:
            raise ValueError("hopping slots must fit in half a symbol (n_burst >= 2 n_hop)")
        if not self.t_c > 0:
            raise ValueError("t_c must be positive")
        if self.scrambler_seed & scrambler.PERIOD == 0:
            raise ValueError("scrambler_seed must be nonzero")

    @property
    def t_burst(self) -> float:
        return self.n_cpb * self.t_c

    @property
    def t_dsym(self) -> float:
        return self.n_burst * self.t_burst

    @property
    def t_bpm(self) -> float:
        return self.t_dsym / 2

    @property
    def alpha1(self) -> float:
        """Symbol rate 1/T_dsym in Hz."""
        return 1.0 / self.t_dsym

    @property
    def hop_bits(self) -> int:
        return int(np.log2(self.n_hop))


@dataclass(frozen=True)
class UwbStreams:
    """Per-symbol modulation streams.

    amplitude: a_k in {+-1}; position: b_k in {0, 1}; chips: (n_symbols, n_cpb)
    bipolar scrambling chips; hops: h^(k) in {0..n_hop-1}.
    """

    amplitude: np.ndarray
    position: np.ndarray
    chips: np.ndarray
    hops: np.ndarray

    @property
    def n_symbols(self) -> int:
        return len(self.amplitude)


def draw_streams(cfg: UwbPhyConfig, n_symbols: int, rng: np.random.Generator,
                 scrambler_offset: int | None = None) -> UwbStreams:
    """Random data symbols plus chips and hops from one shared scrambler stream."""
    if scrambler_offset is None:
        scrambler_offset = int(rng.integers(scrambler.PERIOD))
    n_bits = max(n_symbols * cfg.n_cpb, (n_symbols - 1) * cfg.n_cpb + cfg.hop_bits)
    bits = scrambler.scrambler_stream(cfg.scrambler_seed, scrambler_offset, n_bits)
    chips = scrambler.to_bipolar(bits[: n_symbols * cfg.n_cpb]).reshape(n_symbols, cfg.n_cpb)
    hops = scrambler.hop_indices(bits, n_symbols, cfg.n_cpb, cfg.n_hop)
    return UwbStreams(
        amplitude=rng.choice(np.array([-1, 1]), size=n_symbols),
        position=rng.integers(0, 2, size=n_symbols),
        chips=chips,
        hops=hops,
    )


def constant_streams(cfg: UwbPhyConfig, n_symbols: int) -> UwbStreams:
    """All modulation off: a = +1, b = 0, c = +1, h = 0."""
    return UwbStreams(
        amplitude=np.ones(n_symbols, dtype=int),
        position=np.zeros(n_symbols, dtype=int),
        chips=np.ones((n_symbols, cfg.n_cpb), dtype=int),
        hops=np.zeros(n_symbols, dtype=int),
    )


def samples_per_chip(cfg: UwbPhyConfig, sample_rate: float) -> int:
    spc = sample_rate * cfg.t_c
    if abs(spc - round(spc)) > 1e-9 * max(1.0, spc) or round(spc) < 1:
        raise ValueError(f"sample_rate * t_c = {spc:g} is not a positive integer")
    return int(round(spc))


def pulse_times(cfg: UwbPhyConfig, streams: UwbStreams, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Start time and amplitude of every pulse in the frame."""
    k = np.arange(streams.n_symbols)
    burst_start = (k * cfg.t_dsym + streams.position * cfg.t_bpm
                   + streams.hops * cfg.t_burst + eps)
    t = burst_start[:, None] + np.arange(cfg.n_cpb)[None, :] * cfg.t_c
    amp = streams.amplitude[:, None] * streams.chips
    return t.ravel(), amp.ravel().astype(float)


def render_pulses(spec: PulseSpec, times: np.ndarray, amps: np.ndarray,
                  n_samples: int, sample_rate: float) -> np.ndarray:
    """Sum of amp * p(t - time) on the grid n / fs, using the analog pulse shape."""
    norm = grid_norm(spec, sample_rate)
    n_taps = spec.n_taps(sample_rate) + 1
    pos = np.asarray(times) * sample_rate
    first = np.ceil(pos - 1e-9).astype(np.int64)
    frac = np.round(first - pos, 9)
    out = np.zeros(n_samples)
    taps = np.arange(n_taps)
    for f in np.unique(frac):
        sel = frac == f
        shape = norm * spec.response((f + taps) / sample_rate)
        idx = first[sel][:, None] + taps[None, :]
        vals = amps[sel][:, None] * shape[None, :]
        ok = (idx >= 0) & (idx < n_samples)
        out += np.bincount(idx[ok], weights=vals[ok], minlength=n_samples)
    return out


def gen_uwb_frame(cfg: UwbPhyConfig, n_symbols: int, sample_rate: float,
                  rng: np.random.Generator | None = None, *,
                  streams: UwbStreams | None = None,
                  n_samples: int | None = None) -> IQBuffer:
    """Transmitted real baseband frame of ``n_symbols`` symbols.

    Pulse k*T_dsym + b_k*T_BPM + h_k*T_burst + n*T_c + eps carries a_k * c_n.
    The timing offset is applied exactly by sampling the analog pulse at
    the shifted instants.
    """
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    samples_per_chip(cfg, sample_rate)
    if streams is None:
        if rng is None:
            raise ValueError("rng is required when streams are not given")
        streams = draw_streams(cfg, n_symbols, rng)
    elif streams.n_symbols != n_symbols:
        raise ValueError("streams length does not match n_symbols")
    eps = cfg.timing_offset_eps
    if eps is None:
        if rng is None:
            raise ValueError("rng is required for a random timing offset")
        eps = float(rng.uniform(0.0, cfg.t_dsym))
    if n_samples is None:
        n_samples = int(round(n_symbols * cfg.t_dsym * sample_rate))
    times, amps = pulse_times(cfg, streams, eps)
    return IQBuffer(render_pulses(cfg.pulse, times, amps, n_samples, sample_rate), sample_rate)
