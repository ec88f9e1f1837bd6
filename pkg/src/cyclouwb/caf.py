"""CAF estimation, cyclic periodograms and the Dandawate-Giannakis covariance.

Conventions
-----------
CFs are in cycles per sample and lags in integer samples. For lag tau the
product series is z[n] = x[n] x^(*)[n + tau], n < K - tau, where ^(*) is a
conjugate in nonconjugate mode and nothing in conjugate mode. Then

    F_tau(alpha) = sum_n z[n] exp(-j 2 pi alpha n),   R_hat = F / K.

The statistic vector stacks, per CF, the real parts of its lags followed by
their imaginary parts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.signal import windows

from .signals.iq import IQBuffer

log = logging.getLogger(__name__)

LAG_ROUNDING_WARN = 0.01


def _product(x: np.ndarray, lag: int, conjugate: bool) -> np.ndarray:
    k = x.size
    if not 0 <= lag < k:
        raise ValueError(f"lag {lag} outside [0, {k})")
    tail = x[lag:]
    return x[: k - lag] * (tail if conjugate else np.conj(tail))


def caf_estimate(x: IQBuffer, cf: float, lag: int, conjugate: bool = False) -> complex:
    """(1/K) sum_{n<K-lag} x[n] x^(*)[n+lag] exp(-j 2 pi cf n).

    The sum stops at K-1-lag but is still divided by K.
    """
    z = _product(x.samples, int(lag), conjugate)
    n = np.arange(z.size)
    return complex(np.dot(z, np.exp(-2j * np.pi * cf * n)) / x.samples.size)


@dataclass(frozen=True)
class CfTlSet:
    """Working set of (CF, lags) entries, CFs in cycles/sample.

    >>> s = CfTlSet.from_pairs([(0.0625, 2), (0.0625, 4), (-0.0625, 2), (-0.0625, 4)])
    >>> s.J, s.M
    (4, 2)
    """

    entries: tuple[tuple[float, tuple[int, ...]], ...]
    conjugate: bool = False

    def __post_init__(self):
        entries = tuple((float(cf), tuple(int(t) for t in lags)) for cf, lags in self.entries)
        if not entries:
            raise ValueError("CfTlSet needs at least one entry")
        seen = set()
        for cf, lags in entries:
            if not lags:
                raise ValueError(f"CF {cf} has no lags")
            for t in lags:
                if t < 0:
                    raise ValueError("lags must be nonnegative")
                if (cf, t) in seen:
                    raise ValueError(f"duplicate CF-lag pair ({cf}, {t})")
                seen.add((cf, t))
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_pairs(cls, pairs, conjugate: bool = False) -> "CfTlSet":
        """Group (cf, lag) pairs by CF, keeping first-seen order."""
        grouped: dict[float, list[int]] = {}
        for cf, lag in pairs:
            grouped.setdefault(float(cf), []).append(int(lag))
        return cls(tuple((cf, tuple(l)) for cf, l in grouped.items()), conjugate)

    @classmethod
    def shared_lags(cls, cfs, lags, conjugate: bool = False) -> "CfTlSet":
        return cls(tuple((float(c), tuple(int(t) for t in lags)) for c in cfs), conjugate)

    @classmethod
    def from_physical(cls, cfs_hz, lags_s, sample_rate: float, conjugate: bool = False,
                      chip: float | None = None) -> "CfTlSet":
        """Convert Hz / seconds to cycles/sample and rounded integer lags.

        A warning is logged when rounding moves a lag by more than 1 % of
        ``chip`` (one sample when ``chip`` is None).
        """
        unit = chip if chip is not None else 1.0 / sample_rate
        lags = []
        for tau in lags_s:
            exact = tau * sample_rate
            r = int(round(exact))
            if abs(r - exact) / sample_rate > LAG_ROUNDING_WARN * unit:
                log.warning("lag %.4g s rounded to %d samples (%.4g s)", tau, r, r / sample_rate)
            lags.append(r)
        return cls.shared_lags([f / sample_rate for f in cfs_hz], lags, conjugate)

    @cached_property
    def pairs(self) -> list[tuple[float, int]]:
        return [(cf, t) for cf, lags in self.entries for t in lags]

    @property
    def J(self) -> int:
        return len(self.pairs)

    @property
    def M(self) -> int:
        return len(self.entries)

    @property
    def counts(self) -> list[int]:
        return [len(lags) for _, lags in self.entries]

    @cached_property
    def by_lag(self) -> dict[int, list[float]]:
        """Dual view lag -> CFs that use it."""
        out: dict[int, list[float]] = {}
        for cf, t in self.pairs:
            out.setdefault(t, []).append(cf)
        return out

    @cached_property
    def re_index(self) -> np.ndarray:
        """Position of Re R_hat of each pair inside the 2J vector."""
        return self._layout()[0]

    @cached_property
    def im_index(self) -> np.ndarray:
        return self._layout()[1]

    def _layout(self):
        re, im, start = [], [], 0
        for n in self.counts:
            re.extend(range(start, start + n))
            im.extend(range(start + n, start + 2 * n))
            start += 2 * n
        return np.array(re), np.array(im)

    def cf_slices(self) -> list[slice]:
        out, start = [], 0
        for n in self.counts:
            out.append(slice(start, start + 2 * n))
            start += 2 * n
        return out

    def pair_groups(self):
        """Pair indices grouped per CF and per lag."""
        by_cf, start = [], 0
        for n in self.counts:
            by_cf.append(list(range(start, start + n)))
            start += n
        by_lag: dict[int, list[int]] = {}
        for i, (_, t) in enumerate(self.pairs):
            by_lag.setdefault(t, []).append(i)
        return by_cf, list(by_lag.values())


@dataclass(frozen=True)
class SmoothingWindow:
    """Odd-length spectral smoothing window, scaled so its mean is 1."""

    kind: str = "kaiser"
    length: int = 65
    beta: float = 1.0

    def __post_init__(self):
        if self.length < 1 or self.length % 2 == 0:
            raise ValueError("window length must be a positive odd number")
        if self.kind not in ("kaiser", "rect"):
            raise ValueError(f"unsupported window kind {self.kind!r}")

    @cached_property
    def weights(self) -> np.ndarray:
        if self.kind == "rect" or self.length == 1:
            w = np.ones(self.length)
        else:
            w = windows.kaiser(self.length, self.beta, sym=True)
        return w * (self.length / w.sum())

    @property
    def offsets(self) -> np.ndarray:
        h = (self.length - 1) // 2
        return np.arange(-h, h + 1)


class CafWorkspace:
    """Caches product-series spectra of one buffer for repeated periodogram lookups."""

    def __init__(self, x: IQBuffer, conjugate: bool = False):
        self.x = x
        self.k = len(x)
        self.conjugate = conjugate
        self._fft: dict[int, np.ndarray] = {}
        self._n = np.arange(self.k)

    def product(self, lag: int) -> np.ndarray:
        return _product(self.x.samples, lag, self.conjugate)

    def _lag_fft(self, lag: int) -> np.ndarray:
        if lag not in self._fft:
            self._fft[lag] = np.fft.fft(self.product(lag), self.k)
        return self._fft[lag]

    def periodogram(self, cf: float, lag: int, offsets=None) -> np.ndarray:
        """F_lag(cf + s/K) for each integer offset s (default s = 0)."""
        s = np.atleast_1d(np.zeros(1, int) if offsets is None else np.asarray(offsets, int))
        shift = cf * self.k
        m = round(shift)
        if abs(shift - m) < 1e-9:
            return self._lag_fft(lag)[(m + s) % self.k]
        # off-grid CF: demodulate first, then read the neighbouring bins
        z = self.product(lag)
        spec = np.fft.fft(z * np.exp(-2j * np.pi * cf * self._n[: z.size]), self.k)
        return spec[s % self.k]

    def estimate(self, cf: float, lag: int) -> complex:
        return complex(self.periodogram(cf, lag)[0] / self.k)

    def spectra(self, pairs, offsets) -> np.ndarray:
        """Matrix A[p, s] = F_{lag_p}(cf_p + offsets[s] / K)."""
        return np.array([self.periodogram(cf, t, offsets) for cf, t in pairs])


def cyclic_periodogram(x: IQBuffer, lag: int, cf: float, conjugate: bool = False,
                       offsets=None) -> np.ndarray | complex:
    """F_lag(cf + s/K); a scalar when ``offsets`` is None."""
    vals = CafWorkspace(x, conjugate).periodogram(cf, int(lag), offsets)
    return complex(vals[0]) if offsets is None else vals


def _qp(a: np.ndarray, b: np.ndarray, window: SmoothingWindow, k: int):
    """Q and P matrices between rows of spectra ``a`` (p) and ``b`` (q).

    Q[p, q] = (1/KL) sum_s W(s) F_p(a_p - s/K) F_q(a_q + s/K)   ~ K E[R_p R_q]
    P[p, q] = (1/KL) sum_s W(s) F_p(a_p + s/K) F_q*(a_q + s/K)  ~ K E[R_p R_q*]
    """
    w = window.weights
    scale = k * window.length
    q = (a[:, ::-1] * w) @ b.T / scale
    p = (a * w) @ b.conj().T / scale
    return q, p


def smoothed_scd(x: IQBuffer, cf_i: float, lag_i: int, cf_l: float, lag_l: int,
                 window: SmoothingWindow, mode: str = "Q", conjugate: bool = False) -> complex:
    """One frequency-smoothed cyclic-periodogram cross term (see :func:`_qp`)."""
    if mode not in ("Q", "P"):
        raise ValueError("mode must be 'Q' or 'P'")
    if window.length > len(x):
        raise ValueError("window longer than the record")
    ws = CafWorkspace(x, conjugate)
    a = ws.spectra([(cf_i, lag_i)], window.offsets)
    b = ws.spectra([(cf_l, lag_l)], window.offsets)
    q, p = _qp(a, b, window, len(x))
    return complex((q if mode == "Q" else p)[0, 0])


def real_covariance(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """2x2 block pattern mapping complex Q, P to the covariance of (Re, Im)."""
    return np.block([
        [(q + p).real / 2, (q - p).imag / 2],
        [(q + p).imag / 2, (p - q).real / 2],
    ])


@dataclass(frozen=True, eq=False)
class CafVector:
    """The 2J real statistic vector and its working set."""

    values: np.ndarray
    cftl: CfTlSet

    def __post_init__(self):
        if self.values.shape != (2 * self.cftl.J,):
            raise ValueError("CafVector length must be 2J")

    @property
    def complex_values(self) -> np.ndarray:
        """R_hat per pair, in ``cftl.pairs`` order."""
        return self.values[self.cftl.re_index] + 1j * self.values[self.cftl.im_index]


STRUCTURES = ("full", "block", "pair")


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """2J x 2J symmetric estimate of K cov(r_hat); ``structure`` records which
    blocks were filled (others are zero)."""

    matrix: np.ndarray
    cftl: CfTlSet
    structure: str = "full"

    def pair_block(self, i: int) -> np.ndarray:
        idx = [self.cftl.re_index[i], self.cftl.im_index[i]]
        return self.matrix[np.ix_(idx, idx)]

    def cf_block(self, i: int) -> np.ndarray:
        sl = self.cftl.cf_slices()[i]
        return self.matrix[sl, sl]


def assemble_statistics(x: IQBuffer, cftl: CfTlSet, window: SmoothingWindow | None = None,
                        structure: str = "full",
                        workspace: CafWorkspace | None = None) -> tuple[CafVector, CovarianceMatrix]:
    """Build r_hat and the smoothed-periodogram covariance estimate.

    ``structure``: "full" (all CF pairs), "block" (diagonal CF blocks only)
    or "pair" (2x2 blocks of individual CF-lag pairs).
    """
    if structure not in STRUCTURES:
        raise ValueError(f"structure must be one of {STRUCTURES}")
    window = window or SmoothingWindow()
    k = len(x)
    if window.length > k:
        raise ValueError("window longer than the record")
    ws = workspace if workspace is not None else CafWorkspace(x, cftl.conjugate)
    if ws.conjugate != cftl.conjugate or ws.x is not x:
        raise ValueError("workspace does not match buffer / conjugation mode")
    a = ws.spectra(cftl.pairs, window.offsets)
    centre = (window.length - 1) // 2
    rhat = a[:, centre] / k

    re_idx, im_idx = cftl.re_index, cftl.im_index
    vec = np.empty(2 * cftl.J)
    vec[re_idx] = rhat.real
    vec[im_idx] = rhat.imag

    q, p = _qp(a, a, window, k)
    if structure != "full":
        by_cf, _ = cftl.pair_groups()
        groups = by_cf if structure == "block" else [[i] for i in range(cftl.J)]
        mask = np.zeros((cftl.J, cftl.J), dtype=bool)
        for g in groups:
            mask[np.ix_(g, g)] = True
        q = np.where(mask, q, 0)
        p = np.where(mask, p, 0)
    sigma_pairs = real_covariance(q, p)
    # reorder from [Re of all pairs, Im of all pairs] to the per-CF layout
    order = np.empty(2 * cftl.J, dtype=int)
    order[re_idx] = np.arange(cftl.J)
    order[im_idx] = cftl.J + np.arange(cftl.J)
    sigma = sigma_pairs[np.ix_(order, order)]
    sigma = (sigma + sigma.T) / 2
    return CafVector(vec, cftl), CovarianceMatrix(sigma, cftl, structure)
