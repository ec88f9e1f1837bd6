"""Test statistics: Dandawate-Giannakis variants, proposed max-sum detectors,
the colored-noise ad hoc detector and the energy detector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .caf import CafVector, CafWorkspace, CfTlSet, CovarianceMatrix, SmoothingWindow, assemble_statistics
from .signals.iq import IQBuffer

COND_LIMIT = 1e12
RIDGE = 1e-8
GAMMA_FLOOR = 1e-12


class DegenerateNormalizationError(ArithmeticError):
    """The ad hoc detector's noise normaliser is not positive."""


@dataclass(frozen=True)
class TestStatistic:
    """Value of one detector on one record.

    ``dof`` is the chi-square degrees of freedom for quadratic forms, or a
    tag such as "gaussian" / "max-chi2" / "sum-max-chi2" describing the null
    law. ``parts`` holds per-pair or per-CF components; ``argmax`` the
    winning index inside each max group.
    """

    __test__ = False

    detector: str
    value: float
    dof: int | str
    parts: tuple = field(default_factory=tuple)
    argmax: tuple = field(default_factory=tuple)


def quadratic_form(r: np.ndarray, sigma: np.ndarray, k: int) -> float:
    """K r Sigma^-1 r^T, with a small ridge when Sigma is near singular."""
    r = np.asarray(r, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (r.size, r.size):
        raise ValueError("covariance must be square and match the vector length")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(sigma))):
        raise ValueError("non-finite entries in statistic or covariance")
    if not np.any(r):
        return 0.0
    if np.linalg.cond(sigma) > COND_LIMIT:
        sigma = sigma + RIDGE * np.trace(sigma) / r.size * np.eye(r.size)
    val = float(k * r @ np.linalg.solve(sigma, r))
    return max(val, 0.0)


def t_dg(r: CafVector | np.ndarray, sigma: CovarianceMatrix | np.ndarray, k: int) -> TestStatistic:
    vec = r.values if isinstance(r, CafVector) else np.asarray(r, float)
    mat = sigma.matrix if isinstance(sigma, CovarianceMatrix) else np.asarray(sigma, float)
    return TestStatistic("t_dg", quadratic_form(vec, mat, k), vec.size)


def pair_statistics(r: CafVector, sigma: CovarianceMatrix, k: int) -> np.ndarray:
    """Single CF-lag statistic of every pair, using its own 2x2 block."""
    s = r.cftl
    out = np.empty(s.J)
    for i in range(s.J):
        idx = [s.re_index[i], s.im_index[i]]
        out[i] = quadratic_form(r.values[idx], sigma.matrix[np.ix_(idx, idx)], k)
    return out


def cf_statistics(r: CafVector, sigma: CovarianceMatrix, k: int) -> np.ndarray:
    """Multi-lag statistic of every CF, using its diagonal block."""
    return np.array([quadratic_form(r.values[sl], sigma.matrix[sl, sl], k)
                     for sl in r.cftl.cf_slices()])


def _sum_of_max(groups) -> tuple[float, tuple, tuple]:
    maxima, arg = [], []
    for g in groups:
        g = np.asarray(g, dtype=float)
        if g.size == 0:
            raise ValueError("empty group")
        i = int(np.argmax(g))  # first maximum wins ties
        arg.append(i)
        maxima.append(g[i])
    return float(np.sum(maxima)), tuple(maxima), tuple(arg)


def t_prop_1(groups) -> TestStatistic:
    """Sum over CFs of the largest single-pair statistic; ``groups`` holds the
    pair values of each CF."""
    v, parts, arg = _sum_of_max(groups)
    return TestStatistic("t_prop_1", v, "sum-max-chi2", parts, arg)


def t_prop_2(groups) -> TestStatistic:
    """Sum over lags of the largest single-pair statistic; ``groups`` holds the
    pair values sharing each lag."""
    v, parts, arg = _sum_of_max(groups)
    return TestStatistic("t_prop_2", v, "sum-max-chi2", parts, arg)


def group_pairs(values: np.ndarray, cftl: CfTlSet, by: str = "cf") -> list[np.ndarray]:
    by_cf, by_lag = cftl.pair_groups()
    groups = by_cf if by == "cf" else by_lag
    return [np.asarray(values)[g] for g in groups]


def t_sum_dg(x: IQBuffer, cftl: CfTlSet, window: SmoothingWindow | None = None,
             k: int | None = None) -> TestStatistic:
    r, sigma = assemble_statistics(x, cftl, window, structure="block")
    return sum_dg_from(r, sigma, k or len(x))


def sum_dg_from(r: CafVector, sigma: CovarianceMatrix, k: int) -> TestStatistic:
    per_cf = cf_statistics(r, sigma, k)
    return TestStatistic("t_sum_dg", float(per_cf.sum()), 2 * r.cftl.J, tuple(per_cf))


def t_max_dg(x: IQBuffer, cftl: CfTlSet, window: SmoothingWindow | None = None,
             k: int | None = None) -> TestStatistic:
    r, sigma = assemble_statistics(x, cftl, window, structure="block")
    return max_dg_from(r, sigma, k or len(x))


def max_dg_from(r: CafVector, sigma: CovarianceMatrix, k: int) -> TestStatistic:
    per_cf = cf_statistics(r, sigma, k)
    i = int(np.argmax(per_cf))
    return TestStatistic("t_max_dg", float(per_cf[i]), "max-chi2", tuple(per_cf), (i,))


def lag_autocorr(x: IQBuffer, s: int) -> complex:
    """(1/(K-|s|)) sum x[n] x*[n+s], Hermitian for negative s."""
    s = int(s)
    k = len(x)
    if abs(s) >= k:
        raise ValueError(f"|s| = {abs(s)} must be < K = {k}")
    a = x.samples
    v = np.vdot(a[abs(s):], a[: k - abs(s)]) / (k - abs(s))
    # vdot conjugates its first argument: sum x*[n+s] x[n] = sum x[n] x*[n+s]
    return complex(v if s >= 0 else np.conj(v))


def _autocorr_table(x: IQBuffer, max_lag: int) -> np.ndarray:
    """R~(s) for s = -max_lag..max_lag."""
    pos = np.array([lag_autocorr(x, s) for s in range(max_lag + 1)])
    return np.concatenate([np.conj(pos[:0:-1]), pos])


NORMALIZER_FORMS = ("real", "modulus")


@dataclass(frozen=True)
class AdHocConfig:
    """Noise autocorrelation support [-l_n, l_n] for the ad hoc normaliser.

    ``normalizer`` turns the complex gamma_hat into a positive scale: "real"
    keeps Re(gamma_hat) floored at 1e-12 R~(0)^2, "modulus" uses |gamma_hat|.
    The two agree whenever gamma_hat is real and positive, which is always the
    case in nonconjugate mode.
    """

    l_n: int = 5
    normalizer: str = "real"

    def __post_init__(self):
        if self.l_n < 0:
            raise ValueError("l_n must be nonnegative")
        if self.normalizer not in NORMALIZER_FORMS:
            raise ValueError(f"normalizer must be one of {NORMALIZER_FORMS}")


def adhoc_normalizer(x: IQBuffer, cf: float, lag: int, cfg: AdHocConfig, conjugate: bool) -> float:
    """gamma_hat for one CF (and lag, in conjugate mode), made real and positive
    per ``cfg.normalizer``."""
    ln = cfg.l_n
    if ln >= len(x):
        raise ValueError("l_n must be < K")
    reach = ln + (lag if conjugate else 0)
    table = _autocorr_table(x, min(reach, len(x) - 1))
    centre = (table.size - 1) // 2

    def rt(s):
        s = np.asarray(s)
        out = np.zeros(s.shape, dtype=complex)
        ok = np.abs(s) <= centre
        out[ok] = table[centre + s[ok]]
        return out

    s = np.arange(-ln, ln + 1)
    if conjugate:
        g = np.sum((rt(s) ** 2 + rt(s + lag) * rt(s - lag)) * np.exp(2j * np.pi * cf * s))
    else:
        g = np.sum(np.abs(rt(s)) ** 2 * np.exp(-2j * np.pi * cf * s))
    r0 = table[centre].real
    floor = GAMMA_FLOOR * r0 ** 2
    val = max(abs(g) if cfg.normalizer == "modulus" else g.real, floor)
    if not val > 0:
        raise DegenerateNormalizationError("ad hoc normaliser is not positive (all-zero record?)")
    return float(val)


def t_ad_hoc(x: IQBuffer, cftl: CfTlSet, cfg: AdHocConfig | None = None,
             conjugate: bool | None = None, k: int | None = None,
             workspace: CafWorkspace | None = None) -> TestStatistic:
    """2K sum_i sum_l |R_hat(alpha_i, tau_il)|^2 / gamma_hat."""
    cfg = cfg or AdHocConfig()
    conj = cftl.conjugate if conjugate is None else conjugate
    k = k or len(x)
    ws = workspace if workspace is not None else CafWorkspace(x, conj)
    parts = []
    cache: dict = {}
    for cf, lag in cftl.pairs:
        key = (cf, lag if conj else 0)
        if key not in cache:
            cache[key] = adhoc_normalizer(x, cf, lag, cfg, conj)
        r = ws.estimate(cf, lag)
        parts.append(2 * k * abs(r) ** 2 / cache[key])
    return TestStatistic("t_ad_hoc", float(np.sum(parts)), 2 * cftl.J, tuple(parts))


def t_ed(x: IQBuffer) -> TestStatistic:
    return TestStatistic("t_ed", x.power(), "gaussian")


DETECTORS = ("t_dg", "t_sum_dg", "t_max_dg", "t_prop_1", "t_prop_2", "t_ad_hoc", "t_ed", "t_pair")


def compute_all(x: IQBuffer, cftl: CfTlSet, detectors=DETECTORS,
                window: SmoothingWindow | None = None,
                adhoc: AdHocConfig | None = None) -> dict[str, TestStatistic]:
    """Evaluate several detectors on one record, sharing the periodogram work.

    ``t_pair`` is the single-pair statistic of the first CF-lag pair.
    """
    unknown = set(detectors) - set(DETECTORS)
    if unknown:
        raise ValueError(f"unknown detectors {sorted(unknown)}")
    k = len(x)
    ws = CafWorkspace(x, cftl.conjugate)
    out: dict[str, TestStatistic] = {}
    wanted = set(detectors)
    if "t_dg" in wanted:
        r, sigma = assemble_statistics(x, cftl, window, "full", ws)
        out["t_dg"] = t_dg(r, sigma, k)
    if wanted & {"t_sum_dg", "t_max_dg"}:
        r, sigma = assemble_statistics(x, cftl, window, "block", ws)
        if "t_sum_dg" in wanted:
            out["t_sum_dg"] = sum_dg_from(r, sigma, k)
        if "t_max_dg" in wanted:
            out["t_max_dg"] = max_dg_from(r, sigma, k)
    if wanted & {"t_prop_1", "t_prop_2", "t_pair"}:
        r, sigma = assemble_statistics(x, cftl, window, "pair", ws)
        vals = pair_statistics(r, sigma, k)
        if "t_prop_1" in wanted:
            out["t_prop_1"] = t_prop_1(group_pairs(vals, cftl, "cf"))
        if "t_prop_2" in wanted:
            out["t_prop_2"] = t_prop_2(group_pairs(vals, cftl, "lag"))
        if "t_pair" in wanted:
            out["t_pair"] = TestStatistic("t_pair", float(vals[0]), 2)
    if "t_ad_hoc" in wanted:
        out["t_ad_hoc"] = t_ad_hoc(x, cftl, adhoc, cftl.conjugate, k, ws)
    if "t_ed" in wanted:
        out["t_ed"] = t_ed(x)
    return {d: out[d] for d in detectors}
