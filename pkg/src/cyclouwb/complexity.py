"""Multiplication counts of each detector (divisions count as multiplications)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals.iq import IQBuffer

COUNTED = ("t_prop_1", "t_prop_2", "t_dg", "t_sum_dg", "t_max_dg", "t_ad_hoc")


@dataclass(frozen=True)
class OpCountReport:
    """Itemised multiplication tally; ``total`` is the exact sum of ``items``."""

    detector: str
    items: tuple[tuple[str, int], ...]

    @property
    def total(self) -> int:
        return sum(v for _, v in self.items)

    def as_dict(self) -> dict[str, int]:
        return dict(self.items)

    def rows(self) -> list[tuple[str, str, int]]:
        return [(self.detector, k, v) for k, v in self.items] + [(self.detector, "total", self.total)]


def complexity_count(detector: str, counts, k: int, l: int = 65, l_n: int = 5) -> OpCountReport:
    """Closed-form tallies.

    ``counts`` lists the lags per CF (N_1..N_M), so J = sum(counts).
    Items: "caf" (CAF estimates), "covariance", "inverse", "statistic",
    and for the ad hoc detector "autocorr" and "normalizer".
    """
    counts = [int(n) for n in counts]
    if not counts or any(n < 1 for n in counts):
        raise ValueError("counts must be a nonempty list of positive lag counts")
    if k < 1 or l < 1 or l_n < 0:
        raise ValueError("need K >= 1, L >= 1, L_n >= 0")
    j, m = sum(counts), len(counts)
    caf = 2 * j * k
    per_entry = 6 * k + 4 * l
    if detector in ("t_prop_1", "t_prop_2"):
        items = [("caf", caf), ("covariance", j * per_entry), ("inverse", 32 * j), ("statistic", 6 * j)]
    elif detector == "t_dg":
        cross = sum(counts[a] * counts[b] for a in range(m) for b in range(a + 1, m))
        sq = sum(n * n for n in counts)
        items = [("caf", caf), ("covariance", per_entry * (sq + cross)),
                 ("inverse", 8 * j**3 + 24 * j**2), ("statistic", 4 * j**2 + 2 * j)]
    elif detector in ("t_sum_dg", "t_max_dg"):
        items = [("caf", caf), ("covariance", per_entry * sum(n * n for n in counts)),
                 ("inverse", sum(8 * n**3 + 24 * n**2 for n in counts)),
                 ("statistic", sum(4 * n**2 + 2 * n for n in counts))]
    elif detector == "t_ad_hoc":
        items = [("caf", caf), ("autocorr", (l_n + 1) * k), ("normalizer", 2 * m * (l_n + 1)),
                 ("statistic", 2 * j)]
    else:
        raise ValueError(f"no operation count for detector {detector!r}")
    return OpCountReport(detector, tuple(items))


class MultCounter:
    """Direct-sum CAF estimator that tallies the multiplications it performs.

    Each summand costs two: the lag product and the cyclic phasor.
    """

    def __init__(self):
        self.mults = 0

    def caf(self, x: IQBuffer, cf: float, lag: int, conjugate: bool = False) -> complex:
        a = x.samples
        n_terms = a.size - lag
        z = a[:n_terms] * (a[lag:] if conjugate else np.conj(a[lag:]))
        phasor = np.exp(-2j * np.pi * cf * np.arange(n_terms))
        self.mults += 2 * n_terms
        return complex(np.sum(z * phasor) / a.size)

    def caf_vector(self, x: IQBuffer, cftl) -> np.ndarray:
        return np.array([self.caf(x, cf, t, cftl.conjugate) for cf, t in cftl.pairs])
