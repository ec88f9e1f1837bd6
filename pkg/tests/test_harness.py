import csv
import json
import math

import numpy as np
import pytest

from cyclouwb.caf import CfTlSet
from cyclouwb.detectors import compute_all
from cyclouwb.harness import (
    CURVE_HEADER,
    DetectionCurve,
    DetectorSpec,
    MonteCarloConfig,
    empirical_thresholds,
    evaluate,
    file_digest,
    monte_carlo_curve,
    opcount_rows,
    pfa_calibration,
    roc,
    run_trial,
    thresholds_for,
    trial_seed,
    wilson_interval,
    write_manifest,
    write_opcounts,
)
from cyclouwb.signals.noise import NoiseModel
from cyclouwb.signals.ofdm import OfdmConfig
from cyclouwb.signals.scene import SceneConfig, mix_scene

A1 = 62.5e6 / 1e9
OMEGA1 = CfTlSet.shared_lags([A1, -A1], [2, 4])
ALL = ("t_dg", "t_sum_dg", "t_max_dg", "t_prop_1", "t_prop_2", "t_ad_hoc", "t_ed")


def specs(names=ALL, cftl=OMEGA1):
    return tuple(DetectorSpec(n, cftl) for n in names)


H0_SCENE = SceneConfig(uwb=None)


def test_infinite_thresholds_never_fire():
    ds = specs()
    th = {d.name: math.inf for d in ds}
    res = run_trial(H0_SCENE, ds, th, np.random.default_rng(1))
    assert res.hypothesis == "H0"
    assert not any(res.decisions.values())
    assert set(res.statistics) == set(ALL)


def test_strong_signal_trips_dg():
    scene = SceneConfig(snr_db=30.0)
    ds = specs(["t_dg"])
    th = thresholds_for(ds, scene, 0.01)
    res = run_trial(scene, ds, th, np.random.default_rng(2))
    assert res.hypothesis == "H1"
    assert res.decisions["t_dg"]


def test_same_seed_same_trial():
    ds = specs()
    th = thresholds_for(ds, SceneConfig(), 0.01)
    a = run_trial(SceneConfig(snr_db=-6), ds, th, np.random.default_rng(trial_seed(5, 0, 3)))
    b = run_trial(SceneConfig(snr_db=-6), ds, th, np.random.default_rng(trial_seed(5, 0, 3)))
    assert a == b


def test_trial_seeds_are_distinct():
    states = {tuple(trial_seed(9, p, t).generate_state(2)) for p in range(5) for t in range(200)}
    assert len(states) == 1000
    assert tuple(trial_seed(9, 0, 0).generate_state(2)) != tuple(trial_seed(10, 0, 0).generate_state(2))


def test_wilson_interval():
    lo, hi = wilson_interval(10, 1000)
    assert lo < 0.01 < hi
    assert (lo, hi) == pytest.approx((0.00543, 0.01830), abs=1e-4)
    assert wilson_interval(0, 50)[0] == 0.0
    assert wilson_interval(50, 50)[1] == pytest.approx(1.0)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_evaluate_matches_individual_detectors():
    buf = mix_scene(SceneConfig(snr_db=-5), np.random.default_rng(4)).buffer
    other = CfTlSet.shared_lags([A1], [2])
    ds = specs(["t_dg", "t_prop_1"]) + (DetectorSpec("t_dg", other, label="dg_single"),)
    got = evaluate(buf, ds)
    assert got["t_dg"] == compute_all(buf, OMEGA1, ["t_dg"])["t_dg"].value
    assert got["dg_single"] == compute_all(buf, other, ["t_dg"])["t_dg"].value
    assert list(got) == ["t_dg", "t_prop_1", "dg_single"]


def test_config_validation():
    with pytest.raises(ValueError):
        MonteCarloConfig(H0_SCENE, specs(), sweep="bogus")
    with pytest.raises(ValueError):
        MonteCarloConfig(H0_SCENE, specs(), trials=0)
    with pytest.raises(ValueError):
        MonteCarloConfig(H0_SCENE, specs(), grid=())
    with pytest.raises(ValueError):
        MonteCarloConfig(H0_SCENE, ())
    with pytest.raises(ValueError):
        MonteCarloConfig(H0_SCENE, specs(["t_dg", "t_dg"]))
    with pytest.raises(ValueError):
        MonteCarloConfig(H0_SCENE, specs(), sweep="pfa", matched_trials=10)


def small_curve(threads=1, seed=3):
    cfg = MonteCarloConfig(SceneConfig(), specs(["t_sum_dg", "t_prop_1", "t_ed"]), "snr",
                           (-12.0, -6.0, 0.0), trials=20, base_seed=seed, threads=threads)
    return monte_carlo_curve(cfg)


def test_curve_shape_and_intervals():
    c = small_curve()
    assert c.values == [-12.0, -6.0, 0.0]
    assert c.trials == 20
    for name in ("t_sum_dg", "t_prop_1", "t_ed"):
        p = c.p_hat(name)
        assert p.shape == (3,)
        for i in range(3):
            lo, hi = c.interval(name, i)
            assert 0 <= lo <= p[i] <= hi <= 1
    assert c.metadata["K"] == 10_000 and c.metadata["hypothesis"] == "H1"


def test_curve_is_reproducible_and_thread_invariant(tmp_path):
    a = small_curve().write_csv(tmp_path / "a.csv")
    b = small_curve().write_csv(tmp_path / "b.csv")
    c = small_curve(threads=3).write_csv(tmp_path / "c.csv")
    assert file_digest(a) == file_digest(b) == file_digest(c)
    assert file_digest(a) != file_digest(small_curve(seed=4).write_csv(tmp_path / "d.csv"))


def test_curve_csv_layout(tmp_path):
    path = small_curve().write_csv(tmp_path / "curve.csv")
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == CURVE_HEADER
    assert len(rows) == 1 + 3 * 3
    assert all(r[5] == "20" for r in rows[1:])


def test_empty_curve_writes_header_only(tmp_path):
    path = DetectionCurve("snr", [], {}, 1).write_csv(tmp_path / "empty.csv")
    assert path.read_text() == ",".join(CURVE_HEADER) + "\n"


def test_pd_rises_with_snr():
    cfg = MonteCarloConfig(SceneConfig(), specs(["t_sum_dg"]), "snr", (-20.0, -8.0, 4.0),
                           trials=40, base_seed=11)
    p = monte_carlo_curve(cfg).p_hat("t_sum_dg")
    assert p[0] <= 0.15 and p[2] == 1.0 and p[0] <= p[1] <= p[2]


def test_h0_pfa_sweep_counts():
    cfg = MonteCarloConfig(H0_SCENE, specs(["t_prop_1", "t_ed"]), "pfa", (0.05, 0.2, 0.5),
                           trials=200, base_seed=21)
    c = monte_carlo_curve(cfg)
    for name in ("t_prop_1", "t_ed"):
        p = c.p_hat(name)
        assert np.all(np.diff(p) >= 0)
        for target, got in zip(cfg.grid, p):
            assert abs(got - target) <= 3 * math.sqrt(target * (1 - target) / 200)


def test_roc_is_monotone():
    cfg = MonteCarloConfig(SceneConfig(snr_db=-10.0), specs(["t_sum_dg", "t_ed"]), trials=40, base_seed=8)
    curves = roc(cfg, n_points=21)
    for r in curves.values():
        order = np.argsort(r.pfa, kind="stable")
        assert np.all(np.diff(r.pd[order]) >= 0)
        assert r.pfa[0] == 0 and r.pd[0] == 0
        assert r.pfa[-1] == 1 and r.pd[-1] == 1


def test_pfa_calibration_shape_and_low_inr():
    scene = SceneConfig(uwb=None, interferer=OfdmConfig(), inr_db=0.0)
    cftl = CfTlSet.shared_lags([A1, -A1], [2, 4], conjugate=True)
    cfg = MonteCarloConfig(scene, specs(["t_sum_dg", "t_prop_2"], cftl), trials=200, base_seed=31)
    expected = (0.05, 0.1, 0.2, 0.5)
    out = pfa_calibration(cfg, inrs=(-20.0,), expected=expected)
    curve = out[-20.0]
    assert curve.values == list(expected)
    assert len(curve.rows()) == len(expected) * 2
    for name in ("t_sum_dg", "t_prop_2"):
        for target, got in zip(expected, curve.p_hat(name)):
            assert abs(got - target) <= 3 * math.sqrt(target * (1 - target) / 200)


def test_pfa_calibration_needs_interferer():
    with pytest.raises(ValueError):
        pfa_calibration(MonteCarloConfig(H0_SCENE, specs(["t_dg"])))


def test_empirical_thresholds():
    ds = specs(["t_dg", "t_ed"])
    th = empirical_thresholds(H0_SCENE, ds, 0.1, 200, base_seed=41)
    nominal = thresholds_for(ds, H0_SCENE, 0.1)
    assert th["t_dg"] == pytest.approx(nominal["t_dg"], rel=0.2)
    assert th["t_ed"] == pytest.approx(nominal["t_ed"], rel=0.01)
    with pytest.raises(ValueError):
        empirical_thresholds(SceneConfig(), ds, 0.1, 10, 0)
    with pytest.raises(ValueError):
        empirical_thresholds(H0_SCENE, ds, 1.0, 10, 0)


def test_matched_thresholds_in_metadata():
    scene = SceneConfig(interferer=OfdmConfig(), sir_db=-5.0)
    cfg = MonteCarloConfig(scene, specs(["t_ed"]), "snr", (-4.0,), trials=10, base_seed=1, matched_trials=50)
    assert monte_carlo_curve(cfg).metadata["thresholds"] == "matched"


def test_ed_uncertainty_threshold_is_random():
    scene = SceneConfig(uwb=None, noise=NoiseModel(uncertainty_delta_db=3.0))
    th = thresholds_for(specs(["t_ed"]), scene, 0.01)["t_ed"]
    assert callable(th)
    draws = {th(np.random.default_rng(s)) for s in range(5)}
    assert len(draws) == 5


def test_opcount_rows_and_csv(tmp_path):
    rows = opcount_rows(["t_prop_1", "t_dg", "t_ad_hoc", "t_ed"], [2, 2], 10_000)
    totals = {d: c for d, t, c in rows if t == "total"}
    assert totals == {"t_prop_1": 321_192, "t_dg": 804_088, "t_ad_hoc": 140_032}
    path = write_opcounts(tmp_path / "opcounts.csv", rows)
    assert path.read_text().splitlines()[0] == "detector,term,count"


def test_manifest(tmp_path):
    out = tmp_path / "x.csv"
    out.write_text("a\n")
    m = write_manifest(tmp_path / "manifest.json", {"trials": 5, "bad": float("inf")}, 7, [out],
                       command={"name": "mc"})
    doc = json.loads(m.read_text())
    assert doc["seed"] == 7 and doc["tool"] == "cyclouwb"
    assert doc["outputs"] == {"x.csv": file_digest(out)}
    assert doc["command"] == {"name": "mc"}
