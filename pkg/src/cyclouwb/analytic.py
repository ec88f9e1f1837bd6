"""Closed-form cyclic autocorrelation of the burst-hopping BPM-BPSK UWB signal.

All CFs are even multiples 2q*alpha_1 of the symbol rate alpha_1 = 1/T_dsym
(odd multiples cancel under burst position modulation). Values use the
symmetric-lag convention

    R(alpha, tau) = (1/T) sum_n x[n + tau] x*[n] exp(-j 2 pi alpha (n + tau/2))

per sample; :func:`to_estimator_convention` maps them onto the one-sided
estimator of :mod:`cyclouwb.caf`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals.channel import ChannelRealization
from .signals.iq import IQBuffer
from .signals.pulse import butterworth_pulse
from .signals.uwb import UwbPhyConfig

PAD_FACTOR = 8


def dirichlet_w(rho, h: int):
    """w(rho, H) = sum_{n<H} exp(-j 2 pi rho n), exact (= H) at integer rho."""
    if h < 1:
        raise ValueError("h must be >= 1")
    rho = np.asarray(rho, dtype=float)
    m = np.round(rho)
    d = rho - m
    # w has period 1 in rho; reducing first keeps sin(pi*d) accurate near integers
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sin(np.pi * d * h) / np.sin(np.pi * d)
    ratio = np.where(d == 0, h, ratio)
    # zeros sit where d*H is a nonzero integer; return them as exact zeros
    dh = d * h
    ratio = np.where((d != 0) & (np.abs(dh - np.round(dh)) < 1e-12 * h), 0.0, ratio)
    out = ratio * np.exp(-1j * np.pi * d * (h - 1))
    return out[()] if out.ndim == 0 else out


def bpm_factor(q: int) -> float:
    """Position-modulation average (1 + (-1)^q) / 2."""
    return 1.0 if int(q) % 2 == 0 else 0.0


def hop_factor(q: int, cfg: UwbPhyConfig) -> complex:
    """Hop-position average (1/N_hop) * w(q / N_burst, N_hop) at CF q*alpha_1."""
    return complex(dirichlet_w(q / cfg.n_burst, cfg.n_hop)) / cfg.n_hop


def pulse_caf_kernel(alpha: float, tau: float, pulse: IQBuffer,
                     channel: ChannelRealization | None = None) -> complex:
    """phi(alpha, tau) = sum_n p[n + tau] p*[n] exp(-j 2 pi alpha (n + tau/2)).

    ``alpha`` in Hz and ``tau`` in seconds; fractional lags are handled by the
    frequency-domain form, which evaluates the overlap integral on a
    zero-padded DFT grid. With a channel the received pulse p (x) h is used.
    """
    fs = pulse.sample_rate
    a = alpha / fs
    if abs(a) > 0.5:
        raise ValueError(f"|alpha| = {abs(alpha):g} Hz exceeds the Nyquist rate of the pulse grid")
    p = pulse.samples
    if channel is not None:
        p = np.convolve(p, channel.impulse_response())
    t = tau * fs
    n_fft = PAD_FACTOR * (len(p) + int(np.ceil(abs(t))))
    n = np.arange(len(p))
    # Parseval: sum_n u[n] v*[n] with u = p shifted by t (a phase ramp in
    # frequency, so t may be fractional) and v = p * exp(j 2 pi a n)
    u = np.fft.fft(p, n_fft) * np.exp(2j * np.pi * t * np.fft.fftfreq(n_fft))
    v = np.fft.fft(p * np.exp(2j * np.pi * a * n), n_fft)
    return complex(np.exp(-1j * np.pi * a * t) * np.vdot(v, u) / n_fft)


def pulse_caf_direct(alpha: float, tau_samples: int, pulse: IQBuffer,
                     channel: ChannelRealization | None = None) -> complex:
    """Time-domain sum for integer lags; reference for :func:`pulse_caf_kernel`."""
    a = alpha / pulse.sample_rate
    p = pulse.samples
    if channel is not None:
        p = np.convolve(p, channel.impulse_response())
    t = int(tau_samples)
    n = np.arange(len(p))
    shifted = np.zeros(len(p), dtype=complex)
    src = n + t
    ok = (src >= 0) & (src < len(p))
    shifted[ok] = p[src[ok]]
    return complex(np.sum(shifted * np.conj(p) * np.exp(-2j * np.pi * a * (n + t / 2))))


@dataclass(frozen=True)
class CafQuery:
    """Evaluate the CAF at CF 2*q*alpha_1 and lag ``tau`` seconds.

    ``timing_offset`` overrides ``cfg.timing_offset_eps``; a random offset
    (None in both) is evaluated at 0, which only affects the phase.
    """

    q: int
    tau: float
    cfg: UwbPhyConfig
    sample_rate: float
    channel: ChannelRealization | None = None
    timing_offset: float | None = None

    @property
    def cf_hz(self) -> float:
        return 2 * self.q * self.cfg.alpha1

    @property
    def cf(self) -> float:
        """CF in cycles per sample."""
        return self.cf_hz / self.sample_rate


def analytic_caf(query: CafQuery, pulse: IQBuffer | None = None) -> complex:
    """R(2 q alpha_1, tau) per sample of the received UWB signal.

    (alpha_1 / (fs N_hop)) * w(2q / (N_burst N_cpb), N_hop N_cpb)
    * phi(2 q alpha_1, tau) * exp(-j 4 pi q alpha_1 eps)

    ``pulse`` defaults to the unit-energy sampled pulse of ``query.cfg``.
    """
    cfg = query.cfg
    fs = query.sample_rate
    if pulse is None:
        pulse = butterworth_pulse(cfg.pulse, fs)
    eps = query.timing_offset
    if eps is None:
        eps = cfg.timing_offset_eps or 0.0
    w = dirichlet_w(2 * query.q / (cfg.n_burst * cfg.n_cpb), cfg.n_hop * cfg.n_cpb)
    if w == 0:
        return 0j
    alpha = query.cf_hz
    phi = pulse_caf_kernel(alpha, query.tau, pulse, query.channel)
    return complex(cfg.alpha1 / (fs * cfg.n_hop) * w * phi * np.exp(-2j * np.pi * alpha * eps))


def to_estimator_convention(value_at_minus_tau: complex, cf: float, lag: float) -> complex:
    """Map R(alpha, -lag) to the one-sided estimator value at (alpha, lag).

    The estimator sums x[n] x*[n + lag] exp(-j 2 pi alpha n); substituting
    n -> n + lag/2 gives exp(+j pi alpha lag) R(alpha, -lag). ``cf`` in
    cycles per sample, ``lag`` in samples.
    """
    return complex(value_at_minus_tau * np.exp(1j * np.pi * cf * lag))


def expected_estimate(query: CafQuery, pulse: IQBuffer | None = None) -> complex:
    """Analytic value in the estimator convention at lag ``query.tau``."""
    mirrored = CafQuery(query.q, -query.tau, query.cfg, query.sample_rate,
                        query.channel, query.timing_offset)
    return to_estimator_convention(analytic_caf(mirrored, pulse), query.cf,
                                   query.tau * query.sample_rate)


def nonzero_cycle_indices(cfg: UwbPhyConfig, q_max: int) -> list[int]:
    """q in [-q_max, q_max] whose w factor is nonzero."""
    qs = np.arange(-q_max, q_max + 1)
    w = np.abs(dirichlet_w(2 * qs / (cfg.n_burst * cfg.n_cpb), cfg.n_hop * cfg.n_cpb))
    return [int(q) for q, v in zip(qs, w) if v > 1e-9 * cfg.n_hop * cfg.n_cpb]


CSV_HEADER = ("q", "cf_hz", "tau_s", "re", "im", "abs")


def caf_rows(cfg: UwbPhyConfig, sample_rate: float, qs, taus,
             channel: ChannelRealization | None = None) -> list[tuple]:
    """Rows (q, cf_hz, tau_s, re, im, abs) over a q x tau grid."""
    pulse = butterworth_pulse(cfg.pulse, sample_rate)
    rows = []
    for q in qs:
        for tau in taus:
            query = CafQuery(int(q), float(tau), cfg, sample_rate, channel)
            r = analytic_caf(query, pulse)
            rows.append((int(q), query.cf_hz, float(tau), r.real, r.imag, abs(r)))
    return rows
