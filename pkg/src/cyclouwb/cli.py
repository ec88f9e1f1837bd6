"""Command-line entry point.

Every subcommand reads an optional TOML config (or a run manifest), writes
its artifacts into ``--out`` and drops a ``manifest.json`` beside them.
Exit status: 0 ok, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import CSV_HEADER as ANALYTIC_HEADER
from .analytic import caf_rows
from .caf import CafWorkspace, CfTlSet, SmoothingWindow, assemble_statistics
from .complexity import COUNTED
from .config import (ConfigError, RawConfig, build_adhoc, build_cftl, build_detectors, build_mc, build_scene,
                     build_uwb, load_config, override, parse_quantity, snapshot)
from .detectors import DETECTORS, compute_all, pair_statistics
from .harness import (CURVE_HEADER, monte_carlo_curve, opcount_rows, pfa_calibration,
                      write_manifest, write_opcounts)
from .signals.iq import read_cyiq, write_cyiq
from .signals.scene import mix_scene
from .thresholds import ThresholdTable, detector_threshold, ed_threshold

log = logging.getLogger("cyclouwb")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
CAF_HEADER = ("cf_hz", "lag_samples", "re", "im", "abs")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # registered on the root parser and on every subparser, so flags may come
    # before or after the subcommand name
    d = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=d, help="TOML config or JSON run manifest")
    p.add_argument("--out", default=argparse.SUPPRESS if suppress else ".", help="output directory")
    p.add_argument("--seed", type=int, default=d, help="base seed")
    p.add_argument("--threads", type=int, default=d, help="worker threads for Monte Carlo trials")
    p.add_argument("--trials", type=int, default=d, help="trials per sweep point")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclouwb", parents=[_global_flags(False)],
                                     description="Cyclostationary detection of UWB impulse-radio signals.")
    parser.add_argument("--version", action="version", version=f"cyclouwb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_global_flags(True)]

    g = sub.add_parser("gen", parents=common, help="synthesize a scene into a CYIQ1 file")
    g.add_argument("--snr", help="override scene SNR (dB)")
    g.add_argument("--h0", action="store_true", help="noise (and interference) only")
    g.add_argument("--name", default="scene.cyiq", help="output file name")

    c = sub.add_parser("caf", parents=common, help="estimate the CAF of a CYIQ1 file on a CF/lag grid")
    c.add_argument("input")
    _cftl_flags(c)
    c.add_argument("--cf-grid", metavar="START:STOP:STEP",
                   help="uniform CF grid, stop inclusive, e.g. 0:1GHz:1MHz")

    a = sub.add_parser("analytic-caf", parents=common, help="closed-form CAF of the configured UWB signal")
    a.add_argument("--q", help="comma list of cycle indices (default: config or -16..16)")
    a.add_argument("--tau", help="comma list of lags with units (default: config)")

    d = sub.add_parser("detect", parents=common, help="run one detector on a CYIQ1 file")
    d.add_argument("input")
    d.add_argument("--detector", choices=DETECTORS, help="default: first configured detector")
    d.add_argument("--pfa", type=float, help="target false-alarm rate (default: config)")
    _cftl_flags(d)

    t = sub.add_parser("threshold", parents=common, help="CFAR threshold for a detector structure")
    t.add_argument("--detector", required=True, choices=DETECTORS)
    t.add_argument("--groups", help="comma list of group sizes (default: from the config working set)")
    t.add_argument("--pfa", default=None, help="comma list of Pfa values (default: config)")
    t.add_argument("--table", action="store_true", help="also write thresholds.csv")

    sub.add_parser("calibrate", parents=common, help="actual vs expected Pfa under interference only")

    m = sub.add_parser("mc", parents=common, help="Monte Carlo detection curve")
    m.add_argument("--full", action="store_true", help="1000 trials per point")

    x = sub.add_parser("complexity", parents=common, help="multiplication counts per detector")
    x.add_argument("--counts", help="comma list of lags per CF (default: config working set)")
    x.add_argument("--k", type=int, help="record length (default: config)")
    return parser


def _cftl_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cf", help="comma list of CFs, e.g. 62.5MHz,-62.5MHz")
    p.add_argument("--lag", help="comma list of lags; bare integers are samples, else time units")
    p.add_argument("--conjugate", action="store_true", default=None, help="conjugate CAF")


def _split(text: str | None) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _lags(text: str, fs: float) -> list[int]:
    out = []
    for item in _split(text):
        if item.lstrip("+-").isdigit():
            out.append(int(item))
        else:
            out.append(int(round(parse_quantity(item, "time") * fs)))
    return out


def _cf_grid(spec: str) -> list[float]:
    try:
        start, stop, step = (parse_quantity(v, "freq") for v in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--cf-grid: {exc}") from None
    if step <= 0 or stop < start:
        raise ConfigError("--cf-grid needs START <= STOP and STEP > 0")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return list(start + step * np.arange(n))


def _cftl_from_args(args, raw: RawConfig, fs: float, extra_cfs=None) -> CfTlSet:
    conj = args.conjugate if args.conjugate is not None else raw.value("detect", "conjugate")
    if not (args.cf or args.lag or extra_cfs):
        base = build_cftl(raw, fs)
        return CfTlSet(base.entries, conj)
    try:
        cfs = [parse_quantity(v, "freq") for v in _split(args.cf)] + list(extra_cfs or [])
        lags = _lags(args.lag, fs) if args.lag else [int(round(t * fs)) for t in raw.value("detect", "lags")]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not cfs:
        cfs = [c * fs for c, _ in build_cftl(raw, fs).entries]
    if any(abs(c) > fs / 2 for c in cfs):
        raise ConfigError("CFs must lie within +-fs/2")
    if any(t < 0 or t >= 10**9 for t in lags) or not lags:
        raise ConfigError("lags must be nonnegative integers")
    return CfTlSet.shared_lags([c / fs for c in cfs], lags, conj)


def _load(args) -> RawConfig:
    raw = load_config(args.config) if args.config else load_config(text="")
    raw = override(raw, seed=args.seed, trials=args.trials, threads=args.threads)
    if getattr(args, "full", False):
        raw = override(raw, trials=1000)
    return raw


def _finish(args, raw: RawConfig, outputs, extra=None) -> Path:
    cmd = {"name": args.command, **(extra or {})}
    return write_manifest(Path(args.out) / "manifest.json", snapshot(raw), raw.value("", "seed"),
                          outputs, cmd)


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def cmd_gen(args, raw: RawConfig) -> int:
    scene = build_scene(raw)
    if args.h0:
        scene = replace(scene, uwb=None)
    if args.snr is not None:
        try:
            scene = replace(scene, snr_db=parse_quantity(args.snr, "db"))
        except ValueError as exc:
            raise ConfigError(f"--snr: {exc}") from None
    drawn = mix_scene(scene, np.random.default_rng(raw.value("", "seed")))
    path = write_cyiq(Path(args.out) / args.name, drawn.buffer)
    print(f"{path}: {len(drawn.buffer)} samples at {drawn.buffer.sample_rate:g} Hz ({drawn.hypothesis})")
    _finish(args, raw, [path], {"h0": bool(args.h0), "snr": args.snr, "file": args.name})
    return EXIT_OK


def cmd_caf(args, raw: RawConfig) -> int:
    x = read_cyiq(args.input)
    extra = _cf_grid(args.cf_grid) if args.cf_grid else None
    cftl = _cftl_from_args(args, raw, x.sample_rate, extra)
    ws = CafWorkspace(x, cftl.conjugate)
    rows = []
    for cf, lag in cftl.pairs:
        r = ws.estimate(cf, lag)
        rows.append((repr(cf * x.sample_rate), lag, repr(r.real), repr(r.imag), repr(abs(r))))
    path = _write_csv(Path(args.out) / "caf.csv", CAF_HEADER, rows)
    print(f"{path}: {len(rows)} rows")
    _finish(args, raw, [path], {"input": str(args.input), "cf": args.cf, "lag": args.lag,
                                "cf_grid": args.cf_grid, "conjugate": cftl.conjugate})
    return EXIT_OK


def cmd_analytic(args, raw: RawConfig) -> int:
    cfg = build_uwb(raw)
    fs = raw.value("scene", "sample_rate")
    try:
        qs = [int(v) for v in _split(args.q)] if args.q else (raw.value("analytic", "q") or list(range(-16, 17)))
        taus = ([parse_quantity(v, "time") for v in _split(args.tau)] if args.tau
                else (raw.value("analytic", "taus") or raw.value("detect", "lags")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [(q, repr(cf), repr(tau), repr(re), repr(im), repr(ab))
            for q, cf, tau, re, im, ab in caf_rows(cfg, fs, qs, taus)]
    path = _write_csv(Path(args.out) / "analytic_caf.csv", ANALYTIC_HEADER, rows)
    print(f"{path}: {len(rows)} rows")
    _finish(args, raw, [path], {"q": args.q, "tau": args.tau})
    return EXIT_OK


def cmd_detect(args, raw: RawConfig) -> int:
    x = read_cyiq(args.input)
    cftl = _cftl_from_args(args, raw, x.sample_rate)
    name = args.detector or raw.value("detect", "detectors")[0]
    pfa = args.pfa if args.pfa is not None else raw.value("detect", "pfa")
    if not 0 < pfa < 1:
        raise ConfigError("--pfa must lie in (0, 1)")
    window = SmoothingWindow("kaiser", raw.value("detect", "window_length"), raw.value("detect", "kaiser_beta"))
    adhoc = build_adhoc(raw)
    stat = compute_all(x, cftl, [name], window, adhoc)[name]
    if name == "t_ed":
        gamma = ed_threshold(raw.value("noise", "variance"), len(x), pfa,
                             raw.value("detect", "ed_variance_factor"))
    else:
        gamma = detector_threshold(name, cftl, pfa)
    r, sigma = assemble_statistics(x, cftl, window, "pair")
    pairs = pair_statistics(r, sigma, len(x))
    record = {
        "detector": name,
        "statistic": stat.value,
        "threshold": gamma,
        "decision": bool(stat.value > gamma),
        "per_pair_values": [{"cf_hz": cf * x.sample_rate, "lag_samples": lag, "value": float(v)}
                            for (cf, lag), v in zip(cftl.pairs, pairs)],
    }
    text = json.dumps(record, indent=2)
    print(text)
    path = Path(args.out) / "detect.json"
    path.write_text(text + "\n")
    _finish(args, raw, [path], {"input": str(args.input), "detector": name, "pfa": pfa,
                                "cf": args.cf, "lag": args.lag, "conjugate": cftl.conjugate})
    return EXIT_OK


def cmd_threshold(args, raw: RawConfig) -> int:
    try:
        pfas = [float(v) for v in _split(args.pfa)] if args.pfa else [raw.value("detect", "pfa")]
        groups = [int(v) for v in _split(args.groups)] if args.groups else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if any(not 0 < p < 1 for p in pfas):
        raise ConfigError("--pfa values must lie in (0, 1)")
    if args.detector == "t_ed":
        k = build_scene(raw).n_samples
        rows = [(p, ed_threshold(raw.value("noise", "variance"), k, p,
                                 raw.value("detect", "ed_variance_factor"))) for p in pfas]
        header = ("detector", "K", "pfa", "gamma")
        rows = [("t_ed", k, f"{p:.10g}", f"{g:.10f}") for p, g in rows]
    else:
        if groups is None:
            cftl = build_cftl(raw)
            groups = ([len(v) for v in cftl.by_lag.values()] if args.detector == "t_prop_2"
                      else list(cftl.counts))
        if args.detector == "t_pair":
            groups = [1]
        if not groups or any(g < 1 for g in groups):
            raise ConfigError("--groups must be positive integers")
        table = ThresholdTable.build(args.detector, groups, pfas)
        header, rows = ThresholdTable.HEADER, table.rows()
    for row in rows:
        print(f"pfa={row[-2]} gamma={row[-1]}")
    outputs = []
    if args.table:
        outputs.append(_write_csv(Path(args.out) / "thresholds.csv", header, rows))
        _finish(args, raw, outputs, {"detector": args.detector, "groups": args.groups, "pfa": args.pfa})
    return EXIT_OK


def cmd_calibrate(args, raw: RawConfig) -> int:
    cfg = build_mc(raw)
    inrs = raw.value("sweep", "inrs") or [-20.0, 0.0, 20.0]
    expected = raw.value("sweep", "pfa_grid") or [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    try:
        curves = pfa_calibration(cfg, inrs, expected)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [(repr(inr),) + row for inr, curve in curves.items() for row in curve.rows()]
    path = _write_csv(Path(args.out) / "calibration.csv", ("inr_db",) + CURVE_HEADER, rows)
    print(f"{path}: {len(rows)} rows")
    _finish(args, raw, [path])
    return EXIT_OK


def cmd_mc(args, raw: RawConfig) -> int:
    curve = monte_carlo_curve(build_mc(raw))
    path = curve.write_csv(Path(args.out) / "curve.csv")
    print(f"{path}: {len(curve.values)} points x {len(curve.counts)} detectors, {curve.trials} trials each")
    _finish(args, raw, [path])
    return EXIT_OK


def cmd_complexity(args, raw: RawConfig) -> int:
    dets = build_detectors(raw)
    names = [d.detector for d in dets if d.detector in COUNTED] or list(COUNTED)
    try:
        counts = [int(v) for v in _split(args.counts)] if args.counts else list(dets[0].cftl.counts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    k = args.k or build_scene(raw).n_samples
    rows = opcount_rows(names, counts, k, raw.value("detect", "window_length"), raw.value("detect", "l_n"))
    path = write_opcounts(Path(args.out) / "opcounts.csv", rows)
    for det, term, count in rows:
        if term == "total":
            print(f"{det:10s} {count:>14,d}")
    _finish(args, raw, [path], {"counts": counts, "k": k})
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen, "caf": cmd_caf, "analytic-caf": cmd_analytic, "detect": cmd_detect,
    "threshold": cmd_threshold, "calibrate": cmd_calibrate, "mc": cmd_mc, "complexity": cmd_complexity,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = _load(args)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, raw)
    except ConfigError as exc:
        print(f"cyclouwb: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"cyclouwb: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
