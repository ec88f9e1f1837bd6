"""Tapped-delay-line fading channels with an exponential power delay profile.

The 802.15.4a CM1 generator is not reproduced; ``uwb-multipath`` is a
complex-Gaussian exponential profile (30 taps, 1 ns apart, 5 ns RMS delay
spread by default) and ``rayleigh-exponential`` the 20-tap narrowband
interferer channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .iq import IQBuffer

CHANNEL_KINDS = ("uwb-multipath", "rayleigh-exponential")


@dataclass(frozen=True)
class ChannelSpec:
    """Exponential profile parameters. Exactly one of ``decay`` / ``rms_delay_spread`` is used;
    ``decay`` wins when both are set."""

    kind: str = "uwb-multipath"
    n_taps: int = 30
    tap_spacing: float = 1e-9
    decay: float | None = None
    rms_delay_spread: float | None = 5e-9

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.n_taps < 1:
            raise ValueError("n_taps must be >= 1")
        if not self.tap_spacing > 0:
            raise ValueError("tap_spacing must be positive")
        if self.decay is None and self.rms_delay_spread is None:
            raise ValueError("set decay or rms_delay_spread")
        if self.decay is not None and not self.decay > 0:
            raise ValueError("decay constant must be positive")
        if self.decay is None and not self.rms_delay_spread > 0:
            raise ValueError("rms_delay_spread must be positive")

    @classmethod
    def uwb_multipath(cls, **kw) -> "ChannelSpec":
        return cls(**{"kind": "uwb-multipath", **kw})

    @classmethod
    def rayleigh_exponential(cls, **kw) -> "ChannelSpec":
        # 20 taps spaced at the 20 MHz OFDM resolution, last tap 1 % of the first
        base = dict(kind="rayleigh-exponential", n_taps=20, tap_spacing=50e-9,
                    decay=19 * 50e-9 / np.log(100.0), rms_delay_spread=None)
        return cls(**{**base, **kw})

    def decay_constant(self) -> float:
        if self.decay is not None:
            return self.decay
        return decay_for_rms(self.n_taps, self.tap_spacing, self.rms_delay_spread)

    def power_profile(self) -> np.ndarray:
        return exponential_pdp(self.n_taps, self.tap_spacing, self.decay_constant())


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Taps at integer sample delays (strictly increasing) with complex gains."""

    delays: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=np.int64)
        g = np.asarray(self.gains, dtype=np.complex128)
        if d.ndim != 1 or d.shape != g.shape or d.size < 1:
            raise ValueError("delays and gains must be equal-length 1-D sequences")
        if d[0] < 0 or np.any(np.diff(d) <= 0):
            raise ValueError("delays must be nonnegative and strictly increasing")
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "gains", g)

    @classmethod
    def identity(cls) -> "ChannelRealization":
        return cls(np.array([0]), np.array([1.0 + 0j]))

    def impulse_response(self) -> np.ndarray:
        h = np.zeros(self.delays[-1] + 1, dtype=complex)
        h[self.delays] = self.gains
        return h

    def power(self) -> float:
        return float(np.sum(np.abs(self.gains) ** 2))


def exponential_pdp(n_taps: int, tap_spacing: float, decay: float) -> np.ndarray:
    """Expected tap powers exp(-k*spacing/decay), normalised to sum to 1."""
    p = np.exp(-np.arange(n_taps) * tap_spacing / decay)
    return p / p.sum()


def rms_delay(powers: np.ndarray, tap_spacing: float) -> float:
    tau = np.arange(len(powers)) * tap_spacing
    p = powers / powers.sum()
    mean = np.sum(p * tau)
    return float(np.sqrt(np.sum(p * tau**2) - mean**2))


def decay_for_rms(n_taps: int, tap_spacing: float, rms: float) -> float:
    """Decay constant whose truncated profile has the requested RMS delay spread."""
    if n_taps < 2:
        return tap_spacing
    limit = rms_delay(np.ones(n_taps), tap_spacing)
    if rms >= limit:
        raise ValueError(f"rms delay spread {rms:g} s unreachable with {n_taps} taps")
    g = lambda log_d: rms_delay(exponential_pdp(n_taps, tap_spacing, np.exp(log_d)), tap_spacing) - rms
    lo, hi = np.log(tap_spacing * 1e-3), np.log(tap_spacing * n_taps * 1e3)
    return float(np.exp(optimize.brentq(g, lo, hi, xtol=1e-14)))


def draw_channel(spec: ChannelSpec, sample_rate: float, rng: np.random.Generator) -> ChannelRealization:
    """One complex-Gaussian realisation; expected total power is 1."""
    step = spec.tap_spacing * sample_rate
    delays = np.round(np.arange(spec.n_taps) * step).astype(np.int64)
    if spec.n_taps > 1 and np.any(np.diff(delays) <= 0):
        raise ValueError("tap spacing is below one sample at this sample rate")
    powers = spec.power_profile()
    g = (rng.standard_normal(spec.n_taps) + 1j * rng.standard_normal(spec.n_taps)) / np.sqrt(2)
    return ChannelRealization(delays, g * np.sqrt(powers))


def apply_channel(x: IQBuffer, ch: ChannelRealization) -> IQBuffer:
    """Linear convolution with the tap line, truncated to the input length."""
    y = np.convolve(x.samples, ch.impulse_response())[: len(x)]
    return IQBuffer(y, x.sample_rate)
