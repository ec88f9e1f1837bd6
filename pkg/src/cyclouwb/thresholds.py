"""CFAR thresholds for every detector's null distribution."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats

GRID_STEP = 0.01
TAIL_MASS = 1e-8
BISECT_TOL = 1e-10


def _check_pfa(pfa: float) -> None:
    if not 0 < pfa < 1:
        raise ValueError(f"pfa must lie in (0, 1), got {pfa}")


def _check_dof(dof: int) -> int:
    dof = int(dof)
    if dof < 2 or dof % 2:
        raise ValueError(f"dof must be a positive even integer, got {dof}")
    return dof


def chi2_tail(dof: int, gamma: float) -> float:
    """P(chi2_dof > gamma) from the Erlang series sum_{m<dof/2} e^{-g/2} (g/2)^m / m!."""
    dof = _check_dof(dof)
    if gamma <= 0:
        return 1.0
    h = gamma / 2
    term, total = 1.0, 1.0
    for m in range(1, dof // 2):
        term *= h / m
        total += term
    # log form keeps exp(-h) from underflowing before the sum multiplies it
    return float(min(1.0, math.exp(-h + math.log(total))))


def chi2_cdf(dof: int, gamma: float) -> float:
    return 1.0 - chi2_tail(dof, gamma)


def bisect(f, lo: float, hi: float, tol: float = BISECT_TOL) -> float:
    """Root of a decreasing-or-increasing f on [lo, hi] by plain bisection."""
    flo = f(lo)
    if flo == 0:
        return lo
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _upper(f_tail, pfa: float, start: float) -> float:
    hi = start
    while f_tail(hi) > pfa:
        hi *= 2
    return hi


def chi2_threshold(dof: int, pfa: float) -> float:
    """gamma with chi2_tail(dof, gamma) = pfa."""
    dof = _check_dof(dof)
    _check_pfa(pfa)
    hi = _upper(lambda g: chi2_tail(dof, g), pfa, 2.0 * dof + 10)
    return bisect(lambda g: chi2_tail(dof, g) - pfa, 0.0, hi)


def max_chi2_threshold(dofs, pfa: float) -> float:
    """Threshold for the max of independent chi2 variables with the given dofs:
    P(max > gamma) = 1 - prod_i F_i(gamma)."""
    dofs = [_check_dof(d) for d in dofs]
    _check_pfa(pfa)
    tail = lambda g: 1.0 - math.prod(chi2_cdf(d, g) for d in dofs)
    hi = _upper(tail, pfa, 2.0 * max(dofs) + 10)
    return bisect(lambda g: tail(g) - pfa, 0.0, hi)


@dataclass(frozen=True, eq=False)
class PdfGrid:
    """Density samples on y = 0, step, 2 step, ..."""

    step: float
    density: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.density.size) * self.step

    @property
    def upper(self) -> float:
        return (self.density.size - 1) * self.step

    def integral(self) -> float:
        return float(np.trapezoid(self.density, dx=self.step))

    def cdf(self, normalize: bool = True) -> np.ndarray:
        """Cumulative trapezoid integral at every grid point.

        Normalising by the total cancels the O(step^2) bias the trapezoid
        rule accumulates over the bulk of the density.
        """
        d = self.density
        inc = 0.5 * (d[1:] + d[:-1]) * self.step
        c = np.concatenate([[0.0], np.cumsum(inc)])
        return c / c[-1] if normalize and c[-1] > 0 else c

    def tail_at(self, gamma: float) -> float:
        """P(Y > gamma), linear in the cdf between grid points."""
        return float(max(0.0, 1.0 - np.interp(gamma, self.y, self.cdf())))


def max_order_density(n: int, y: np.ndarray) -> np.ndarray:
    """pdf of the max of n iid chi2_2: n F^{n-1} f with F = 1 - e^{-y/2},
    written through the binomial expansion
    sum_{k<n} n C(n-1, k) (-1)^k e^{-(k+1) y / 2} / 2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for k in range(n):
        out += n * math.comb(n - 1, k) * (-1) ** k * np.exp(-(k + 1) * y / 2) / 2
    return np.where(y >= 0, out, 0.0)


def max_order_pdf(n: int, upper: float = 60.0, step: float = GRID_STEP) -> PdfGrid:
    y = np.arange(int(round(upper / step)) + 1) * step
    return PdfGrid(step, max_order_density(n, y))


def _support(groups) -> float:
    return 60.0 + 20.0 * sum(groups)


@lru_cache(maxsize=64)
def sum_of_maxima_pdf(groups: tuple[int, ...], step: float = GRID_STEP) -> PdfGrid:
    """Density of sum_i max(chi2_2 over group i), by trapezoid convolution.

    The support starts at 60 + 20 sum(groups) and doubles until the tail
    mass beyond it drops under 1e-8.
    """
    if not groups or any(g < 1 for g in groups):
        raise ValueError("groups must be a nonempty list of positive counts")
    upper = _support(groups)
    while True:
        n = int(round(upper / step)) + 1
        y = np.arange(n) * step
        dens = max_order_density(groups[0], y)
        for g in groups[1:]:
            other = max_order_density(g, y)
            # trapezoid rule on [0, y]: full Riemann sum minus half the two end points
            conv = np.convolve(dens, other)[:n] * step
            conv -= 0.5 * step * (dens[0] * other + other[0] * dens)
            dens = np.clip(conv, 0.0, None)
        grid = PdfGrid(step, dens)
        if 1.0 - grid.integral() < TAIL_MASS or tail_bound(groups, upper) < TAIL_MASS:
            return grid
        upper *= 2


def tail_bound(groups, y: float) -> float:
    """Upper bound on P(sum of maxima > y): the maxima never exceed the sum of
    all chi2_2 terms, which is chi2 with 2 sum(groups) dof."""
    return chi2_tail(2 * sum(groups), y)


def sum_of_maxima_threshold(groups, pfa: float) -> float:
    _check_pfa(pfa)
    groups = tuple(int(g) for g in groups)
    grid = sum_of_maxima_pdf(groups)
    return bisect(lambda g: grid.tail_at(g) - pfa, 0.0, grid.upper)


def closed_form_m2n2(y: float, as_printed: bool = False) -> tuple[float, float]:
    """(pdf, cdf) of the sum of two maxima of two chi2_2 variables.

    cdf = 1 + (4 - 2y) e^{-y/2} - (5 + y) e^{-y}; the pdf is its derivative
    (y - 4) e^{-y/2} + (y + 4) e^{-y}. ``as_printed`` returns the pdf
    (4 + y)(e^{-y} + e^{-y/2}) instead, which integrates to 17 and is kept
    only for comparison.
    """
    if y < 0:
        raise ValueError("y must be nonnegative")
    a, b = math.exp(-y / 2), math.exp(-y)
    cdf = 1 + (4 - 2 * y) * a - (5 + y) * b
    pdf = (4 + y) * (b + a) if as_printed else (y - 4) * a + (y + 4) * b
    return pdf, cdf


def ed_threshold(sigma2: float, k: int, pfa: float, variance_factor: float = 1.0,
                 uncertainty_delta_db: float = 0.0, rng: np.random.Generator | None = None) -> float:
    """gamma = s2 + z_{1-pfa} sqrt(c s2^2 / K).

    With ``uncertainty_delta_db`` > 0 the assumed noise power s2 is sigma2
    scaled by 10^(u/10), u uniform in [-Delta, Delta] dB, drawn from ``rng``.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    _check_pfa(pfa)
    if variance_factor not in (1, 2):
        raise ValueError("variance_factor must be 1 (complex noise) or 2 (real noise)")
    s2 = sigma2
    if uncertainty_delta_db > 0:
        if rng is None:
            raise ValueError("rng is required when uncertainty_delta_db > 0")
        s2 = sigma2 * 10 ** (rng.uniform(-uncertainty_delta_db, uncertainty_delta_db) / 10)
    z = stats.norm.isf(pfa)
    return float(s2 + z * math.sqrt(variance_factor * s2 ** 2 / k))


def detector_threshold(detector: str, cftl, pfa: float) -> float:
    """Threshold for a chi-square family detector on working set ``cftl``.

    The energy detector needs noise power and record length; use
    :func:`ed_threshold`.
    """
    counts = cftl.counts
    if detector in ("t_dg", "t_sum_dg", "t_ad_hoc"):
        return chi2_threshold(2 * cftl.J, pfa)
    if detector == "t_pair":
        return chi2_threshold(2, pfa)
    if detector == "t_max_dg":
        return max_chi2_threshold([2 * n for n in counts], pfa)
    if detector == "t_prop_1":
        return sum_of_maxima_threshold(counts, pfa)
    if detector == "t_prop_2":
        return sum_of_maxima_threshold([len(v) for v in cftl.by_lag.values()], pfa)
    raise ValueError(f"no chi-square threshold for detector {detector!r}")


@dataclass
class ThresholdTable:
    """Offline lookup of gamma per Pfa for one detector structure."""

    detector: str
    groups: tuple[int, ...]
    entries: dict[float, float] = field(default_factory=dict)

    HEADER = ("detector", "M", "groups", "pfa", "gamma")

    @classmethod
    def build(cls, detector: str, groups, pfas) -> "ThresholdTable":
        groups = tuple(int(g) for g in groups)
        t = cls(detector, groups)
        for p in sorted(pfas):
            t.entries[float(p)] = t._compute(float(p))
        return t

    def _compute(self, pfa: float) -> float:
        if self.detector in ("t_prop_1", "t_prop_2"):
            return sum_of_maxima_threshold(self.groups, pfa)
        if self.detector == "t_max_dg":
            return max_chi2_threshold([2 * g for g in self.groups], pfa)
        if self.detector in ("t_dg", "t_sum_dg", "t_ad_hoc", "t_pair"):
            return chi2_threshold(2 * sum(self.groups), pfa)
        raise ValueError(f"no table for detector {self.detector!r}")

    def lookup(self, pfa: float) -> float:
        pfa = float(pfa)
        if pfa not in self.entries:
            self.entries[pfa] = self._compute(pfa)
        return self.entries[pfa]

    def rows(self) -> list[tuple]:
        g = " ".join(map(str, self.groups))
        return [(self.detector, len(self.groups), g, f"{p:.10g}", f"{v:.10f}")
                for p, v in sorted(self.entries.items())]

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.HEADER)
            w.writerows(self.rows())
        return path

    @classmethod
    def read_csv(cls, path) -> "ThresholdTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty threshold table")
        t = cls(rows[0]["detector"], tuple(int(g) for g in rows[0]["groups"].split()))
        for r in rows:
            t.entries[float(r["pfa"])] = float(r["gamma"])
        return t
