"""Monte Carlo engine: Pd / Pfa curves, ROC, Pfa calibration and op-count tables."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from . import __version__
from .caf import CfTlSet, SmoothingWindow
from .complexity import COUNTED, complexity_count
from .detectors import AdHocConfig, compute_all
from .signals.scene import H0, H1, SceneConfig, mix_scene
from .thresholds import detector_threshold, ed_threshold

SWEEPS = ("snr", "sir", "inr", "pfa")
CURVE_HEADER = ("sweep_value", "detector", "p_hat", "ci_lo", "ci_hi", "trials")


@dataclass(frozen=True)
class DetectorSpec:
    """One detector bound to its working set.

    ``label`` names the curve (defaults to the detector id).
    """

    detector: str
    cftl: CfTlSet
    label: str | None = None
    adhoc: AdHocConfig = field(default_factory=AdHocConfig)
    window: SmoothingWindow = field(default_factory=SmoothingWindow)

    @property
    def name(self) -> str:
        return self.label or self.detector


@dataclass(frozen=True)
class MonteCarloConfig:
    scene: SceneConfig
    detectors: tuple[DetectorSpec, ...]
    sweep: str = "snr"
    grid: tuple[float, ...] = (0.0,)
    trials: int = 200
    base_seed: int = 0
    pfa: float = 0.01
    threads: int = 1
    ed_variance_factor: int = 1
    matched_trials: int = 0

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if not self.detectors:
            raise ValueError("need at least one detector")
        if self.matched_trials < 0 or (self.matched_trials and self.sweep == "pfa"):
            raise ValueError("matched_trials must be >= 0 and needs a non-pfa sweep")
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise ValueError("detector labels must be unique")


def trial_seed(base: int, point: int, trial: int) -> np.random.SeedSequence:
    """Independent stream per (base, point, trial)."""
    return np.random.SeedSequence(int(base), spawn_key=(int(point), int(trial)))


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


Threshold = float | Callable[[np.random.Generator], float]


def thresholds_for(detectors, scene: SceneConfig, pfa: float, variance_factor: int = 1) -> dict[str, Threshold]:
    """CFAR threshold per detector label; the energy detector uses the scene's
    nominal noise power and, under noise uncertainty, a per-trial draw."""
    out: dict[str, Threshold] = {}
    k = scene.n_samples
    noise = scene.noise
    for d in detectors:
        if d.detector == "t_ed":
            if noise.uncertainty_delta_db > 0:
                out[d.name] = (lambda rng, p=pfa: ed_threshold(
                    noise.variance, k, p, variance_factor, noise.uncertainty_delta_db, rng))
            else:
                out[d.name] = ed_threshold(noise.variance, k, pfa, variance_factor)
        else:
            out[d.name] = detector_threshold(d.detector, d.cftl, pfa)
    return out


@dataclass(frozen=True)
class TrialResult:
    hypothesis: str
    statistics: dict[str, float]
    decisions: dict[str, bool]


def evaluate(buffer, detectors) -> dict[str, float]:
    """Statistic value per detector label; detectors sharing a working set share
    their periodograms."""
    groups: dict[tuple, list[DetectorSpec]] = {}
    for d in detectors:
        groups.setdefault((d.cftl, d.window, d.adhoc), []).append(d)
    values: dict[str, float] = {}
    for (cftl, window, adhoc), ds in groups.items():
        res = compute_all(buffer, cftl, tuple(dict.fromkeys(d.detector for d in ds)), window, adhoc)
        for d in ds:
            values[d.name] = res[d.detector].value
    return {d.name: values[d.name] for d in detectors}


def run_trial(scene: SceneConfig, detectors, thresholds: dict[str, Threshold],
              rng: np.random.Generator) -> TrialResult:
    drawn = mix_scene(scene, rng)
    values = evaluate(drawn.buffer, detectors)
    decisions = {}
    for d in detectors:
        g = thresholds[d.name]
        if callable(g):
            g = g(rng)
        decisions[d.name] = bool(values[d.name] > g)
    return TrialResult(drawn.hypothesis, values, decisions)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class DetectionCurve:
    """Success counts per detector and sweep value, with Wilson 95 % intervals."""

    sweep: str
    values: list[float]
    counts: dict[str, list[int]]
    trials: int
    metadata: dict = field(default_factory=dict)

    def p_hat(self, name: str) -> np.ndarray:
        return np.asarray(self.counts[name], float) / self.trials

    def interval(self, name: str, i: int) -> tuple[float, float]:
        return wilson_interval(self.counts[name][i], self.trials)

    def rows(self) -> list[tuple]:
        out = []
        for i, v in enumerate(self.values):
            for name, c in self.counts.items():
                lo, hi = self.interval(name, i)
                out.append((repr(float(v)), name, repr(c[i] / self.trials), repr(lo), repr(hi), self.trials))
        return out

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVE_HEADER)
            w.writerows(self.rows())
        return path


def _scene_at(base: SceneConfig, sweep: str, value: float) -> SceneConfig:
    if sweep == "snr":
        return replace(base, snr_db=value)
    if sweep == "sir":
        return replace(base, sir_db=value, inr_db=None)
    if sweep == "inr":
        return replace(base, inr_db=value, sir_db=None)
    return base


def collect_statistics(scene: SceneConfig, detectors, trials: int, base_seed: int,
                       point: int = 0, threads: int = 1) -> list[TrialResult]:
    """Statistic values of ``trials`` independent scenes (no thresholds applied)."""
    def one(t):
        rng = np.random.default_rng(trial_seed(base_seed, point, t))
        drawn = mix_scene(scene, rng)
        return TrialResult(drawn.hypothesis, evaluate(drawn.buffer, detectors), {})
    return _map(one, range(trials), threads)


def monte_carlo_curve(cfg: MonteCarloConfig) -> DetectionCurve:
    """Detection (or false-alarm) rate per detector across the sweep grid."""
    names = [d.name for d in cfg.detectors]
    counts = {n: [] for n in names}
    if cfg.sweep == "pfa":
        # one set of scenes, every Pfa threshold applied to the same statistics
        results = _trials(cfg, cfg.scene, 0, None)
        for p in cfg.grid:
            th = thresholds_for(cfg.detectors, cfg.scene, p, cfg.ed_variance_factor)
            for n in names:
                counts[n].append(_count_above(results, n, th[n], cfg, 0))
    else:
        for i, v in enumerate(cfg.grid):
            scene = _scene_at(cfg.scene, cfg.sweep, v)
            if cfg.matched_trials:
                # calibrate per point: with SIR fixed the interference level follows the SNR
                th = empirical_thresholds(replace(scene, uwb=None), cfg.detectors, cfg.pfa,
                                          cfg.matched_trials, cfg.base_seed + 2, i, cfg.threads)
            else:
                th = thresholds_for(cfg.detectors, scene, cfg.pfa, cfg.ed_variance_factor)
            results = _trials(cfg, scene, i, th)
            for n in names:
                counts[n].append(sum(r.decisions[n] for r in results))
    meta = {"K": cfg.scene.n_samples, "fs": cfg.scene.sample_rate, "pfa": cfg.pfa,
            "thresholds": "matched" if cfg.matched_trials else "nominal",
            "hypothesis": H1 if cfg.scene.signal_present else H0}
    return DetectionCurve(cfg.sweep, [float(v) for v in cfg.grid], counts, cfg.trials, meta)


def empirical_thresholds(h0_scene: SceneConfig, detectors, pfa: float, trials: int,
                         base_seed: int, point: int = 0, threads: int = 1) -> dict[str, float]:
    """Pfa-matched thresholds: the (1 - pfa) sample quantile of each statistic
    over ``trials`` signal-free scenes."""
    if not 0 < pfa < 1:
        raise ValueError("pfa must lie in (0, 1)")
    if h0_scene.signal_present:
        raise ValueError("calibration scene must not contain the signal")
    results = collect_statistics(h0_scene, detectors, trials, base_seed, point, threads)
    return {d.name: float(np.quantile([r.statistics[d.name] for r in results], 1 - pfa))
            for d in detectors}


def _trials(cfg: MonteCarloConfig, scene: SceneConfig, point: int, thresholds) -> list[TrialResult]:
    def one(t):
        rng = np.random.default_rng(trial_seed(cfg.base_seed, point, t))
        if thresholds is None:
            drawn = mix_scene(scene, rng)
            return TrialResult(drawn.hypothesis, evaluate(drawn.buffer, cfg.detectors), {})
        return run_trial(scene, cfg.detectors, thresholds, rng)
    return _map(one, range(cfg.trials), cfg.threads)


def _count_above(results, name, threshold, cfg, point) -> int:
    n = 0
    for t, r in enumerate(results):
        g = threshold
        if callable(g):
            # a separate stream keeps the uncertainty draw independent of the scene
            g = g(np.random.default_rng(trial_seed(cfg.base_seed + 1, point, t)))
        n += r.statistics[name] > g
    return int(n)


def pfa_calibration(cfg: MonteCarloConfig, inrs=(-20.0, 0.0, 20.0),
                    expected=(0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)) -> dict[float, DetectionCurve]:
    """Actual vs expected Pfa on interference-only scenes, one curve per INR."""
    if cfg.scene.interferer is None:
        raise ValueError("pfa calibration needs an interferer in the scene")
    out = {}
    for i, inr in enumerate(inrs):
        scene = replace(cfg.scene, uwb=None, inr_db=float(inr), sir_db=None)
        sub = replace(cfg, scene=scene, sweep="pfa", grid=tuple(expected),
                      base_seed=cfg.base_seed + 7919 * (i + 1))
        out[float(inr)] = monte_carlo_curve(sub)
    return out


@dataclass
class RocCurve:
    detector: str
    pfa: np.ndarray
    pd: np.ndarray

    def rows(self):
        return [(self.detector, repr(float(a)), repr(float(b))) for a, b in zip(self.pfa, self.pd)]


def roc(cfg: MonteCarloConfig, n_points: int = 101) -> dict[str, RocCurve]:
    """Empirical ROC from H0 and H1 scenes, sweeping gamma over the pooled statistics."""
    h1_scene = cfg.scene if cfg.scene.signal_present else replace(cfg.scene, uwb=SceneConfig().uwb)
    h0_scene = replace(cfg.scene, uwb=None)
    h1 = collect_statistics(h1_scene, cfg.detectors, cfg.trials, cfg.base_seed, 0, cfg.threads)
    h0 = collect_statistics(h0_scene, cfg.detectors, cfg.trials, cfg.base_seed, 1, cfg.threads)
    out = {}
    for d in cfg.detectors:
        s0 = np.array([r.statistics[d.name] for r in h0])
        s1 = np.array([r.statistics[d.name] for r in h1])
        pooled = np.concatenate([s0, s1])
        gammas = np.unique(np.concatenate([np.quantile(pooled, np.linspace(0, 1, n_points)),
                                           [pooled.max() + 1.0, -np.inf]]))[::-1]
        pfa = np.array([(s0 > g).mean() for g in gammas])
        pd = np.array([(s1 > g).mean() for g in gammas])
        out[d.name] = RocCurve(d.name, pfa, pd)
    return out


def opcount_rows(detectors, counts, k: int, l: int = 65, l_n: int = 5) -> list[tuple]:
    rows = []
    for d in detectors:
        if d in COUNTED:
            rows.extend(complexity_count(d, counts, k, l, l_n).rows())
    return rows


def write_opcounts(path, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("detector", "term", "count"))
        w.writerows(rows)
    return path


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, config: dict, seed: int, outputs, command: dict | None = None) -> Path:
    """JSON manifest: resolved config, tool version, base seed, output digests
    and, optionally, the subcommand that produced them."""
    path = Path(path)
    doc = {
        "tool": "cyclouwb",
        "version": __version__,
        "seed": int(seed),
        "config": config,
        "outputs": {Path(p).name: file_digest(p) for p in outputs},
    }
    if command is not None:
        doc["command"] = command
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, tuple):
        return list(v)
    return str(v)


__all__ = [
    "DetectorSpec", "MonteCarloConfig", "DetectionCurve", "RocCurve", "TrialResult",
    "run_trial", "monte_carlo_curve", "empirical_thresholds", "pfa_calibration", "roc", "thresholds_for",
    "trial_seed", "wilson_interval", "collect_statistics", "evaluate", "opcount_rows",
    "write_opcounts", "write_manifest", "file_digest",
]
