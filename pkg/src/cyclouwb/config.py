"""TOML run configuration with unit suffixes and named presets.

A config is a TOML document. Quantities may be plain numbers in SI base
units or strings with a unit suffix ("2 ns", "62.5 MHz", "-5 dB"). A
top-level ``preset`` key loads a named bundle that the file then overrides.
A JSON run manifest written by the CLI is accepted in place of a TOML file.
"""

from __future__ import annotations

import copy
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .caf import CfTlSet, SmoothingWindow
from .detectors import DETECTORS, AdHocConfig
from .harness import SWEEPS, DetectorSpec, MonteCarloConfig
from .signals.channel import ChannelSpec
from .signals.noise import NoiseModel
from .signals.ofdm import OfdmConfig
from .signals.pulse import PulseSpec
from .signals.scene import SceneConfig
from .signals.uwb import UwbPhyConfig


class ConfigError(ValueError):
    """Invalid configuration; ``line`` points into the source file when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path, self.line = path, line
        where = f"{path or '<config>'}:{line}: " if line else (f"{path}: " if path else "")
        super().__init__(where + message)


_UNITS = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "freq": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "db": {"db": 1.0},
}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*([a-zA-Zµ]*)\s*$")


def parse_quantity(value, kind: str) -> float:
    """Number or "<number> <unit>" string -> float in SI base units (dB stays dB)."""
    if isinstance(value, bool):
        raise ValueError(f"expected a {kind} quantity, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a {kind} quantity, got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ValueError(f"cannot parse quantity {value!r}")
    number, unit = float(m.group(1)), m.group(2)
    if not unit:
        return number
    table = _UNITS[kind]
    key = unit if kind == "time" else unit.lower()
    if key not in table:
        raise ValueError(f"unit {unit!r} is not a {kind} unit (allowed: {', '.join(table)})")
    return number * table[key]


# schema: section -> key -> kind ("time", "freq", "db", "int", "float", "bool", "str", "list:<kind>")
SCHEMA = {
    "": {"preset": "str", "seed": "int", "trials": "int", "threads": "int"},
    "scene": {"sample_rate": "freq", "duration": "time", "snr_db": "db", "sir_db": "db",
              "inr_db": "db", "signal": "bool", "uwb_channel": "str", "interferer_channel": "str"},
    "uwb": {"n_cpb": "int", "n_burst": "int", "n_hop": "int", "t_c": "time",
            "timing_offset": "time|random", "scrambler_seed": "int"},
    "pulse": {"filter_order": "int", "bandwidth_3db": "freq", "truncation_length": "time"},
    "channel": {"n_taps": "int", "tap_spacing": "time", "rms_delay_spread": "time"},
    "interferer": {"enabled": "bool", "n_c": "int", "n_used": "int", "delta_f": "freq",
                   "cp_ratio": "float", "timing_offset": "time|random",
                   "carrier_offset": "freq|random"},
    "noise": {"kind": "str", "variance": "float", "uncertainty_delta_db": "db",
              "color_taps": "list:float"},
    "detect": {"detectors": "list:str", "cfs": "list:freq", "cf_multiples": "list:int",
               "lags": "list:time", "conjugate": "bool", "pfa": "float",
               "window_length": "int", "kaiser_beta": "float", "l_n": "int", "adhoc_normalizer": "str",
               "ed_variance_factor": "int"},
    "sweep": {"variable": "str", "values": "list:float", "pfa_grid": "list:float",
              "inrs": "list:db", "matched_trials": "int"},
    "analytic": {"q": "list:int", "taus": "list:time"},
}

PRESETS: dict[str, dict] = {
    "h0-white": {
        "scene": {"signal": False, "uwb_channel": "none"},
        "detect": {"detectors": ["t_dg", "t_sum_dg", "t_max_dg", "t_prop_1", "t_prop_2",
                                 "t_ad_hoc", "t_ed"]},
        "sweep": {"variable": "pfa", "values": [0.01]},
        "trials": 1000,
    },
    "fig2-caf": {
        "scene": {"sample_rate": "2 GHz", "duration": "10 us", "uwb_channel": "none"},
        "detect": {"lags": ["2 ns"]},
        "analytic": {"q": list(range(-16, 17)), "taus": ["2 ns"]},
    },
    "fig5-omega1": {
        "detect": {"detectors": ["t_prop_1", "t_prop_2", "t_sum_dg", "t_ed"]},
        "sweep": {"variable": "snr", "values": [-20, -16, -12, -8, -4, 0, 4]},
    },
    "fig5-omega2": {
        "detect": {"cf_multiples": [2, -2, 6, -6],
                   "detectors": ["t_prop_1", "t_prop_2", "t_sum_dg", "t_ed"]},
        "sweep": {"variable": "snr", "values": [-20, -16, -12, -8, -4, 0, 4]},
    },
    "fig6-dg": {
        "detect": {"detectors": ["t_dg", "t_sum_dg", "t_max_dg"]},
        "sweep": {"variable": "snr", "values": [-12, -10, -8, -6, -4, -2, 0]},
    },
    "fig8-colored": {
        "noise": {"kind": "colored"},
        "detect": {"detectors": ["t_prop_1", "t_prop_2", "t_sum_dg", "t_ad_hoc"], "l_n": 5},
        "sweep": {"variable": "snr", "values": [-12, -8, -4, 0, 4]},
    },
    "fig9-pfa": {
        "scene": {"signal": False},
        "interferer": {"enabled": True},
        "detect": {"conjugate": True, "l_n": 30,
                   "detectors": ["t_prop_1", "t_prop_2", "t_sum_dg", "t_ad_hoc"]},
        "sweep": {"variable": "pfa", "pfa_grid": [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
                  "inrs": [-20, 0, 20]},
    },
    "fig10-interference": {
        "scene": {"sir_db": -5},
        "interferer": {"enabled": True},
        "detect": {"conjugate": True, "l_n": 30,
                   "detectors": ["t_prop_1", "t_prop_2", "t_sum_dg", "t_ad_hoc", "t_ed"]},
        "sweep": {"variable": "snr", "values": [-12, -8, -4, 0, 4]},
    },
    "fig10-matched": {
        "scene": {"sir_db": -5},
        "interferer": {"enabled": True},
        "detect": {"conjugate": True, "l_n": 30,
                   "detectors": ["t_prop_1", "t_prop_2", "t_sum_dg", "t_ad_hoc"]},
        "sweep": {"variable": "snr", "values": [-12, -8, -4, 0, 4], "matched_trials": 1000},
    },
}

DEFAULTS = {
    "seed": 0, "trials": 200, "threads": 1,
    "scene": {"sample_rate": "1 GHz", "duration": "10 us", "snr_db": "0 dB", "signal": True,
              "uwb_channel": "uwb-multipath", "interferer_channel": "rayleigh-exponential"},
    "uwb": {"n_cpb": 2, "n_burst": 8, "n_hop": 2, "t_c": "2 ns", "timing_offset": "random"},
    "pulse": {"filter_order": 8, "bandwidth_3db": "250 MHz", "truncation_length": "30 ns"},
    "channel": {"n_taps": 30, "tap_spacing": "1 ns", "rms_delay_spread": "5 ns"},
    "interferer": {"enabled": False, "n_c": 256, "n_used": 200, "delta_f": "78.125 kHz",
                   "cp_ratio": 0.25, "timing_offset": "random", "carrier_offset": "random"},
    "noise": {"kind": "white", "variance": 1.0, "uncertainty_delta_db": 0.0},
    "detect": {"detectors": ["t_prop_1", "t_prop_2", "t_sum_dg"], "cf_multiples": [2, -2],
               "lags": ["2 ns", "4 ns"], "conjugate": False, "pfa": 0.01,
               "window_length": 65, "kaiser_beta": 1.0, "l_n": 5, "adhoc_normalizer": "real",
               "ed_variance_factor": 1},
    "sweep": {"variable": "snr", "values": [0.0], "matched_trials": 0},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _key_line(text: str | None, section: str, key: str) -> int | None:
    """Best-effort line number of ``key`` inside ``[section]`` of a TOML text."""
    if not text:
        return None
    current = ""
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return i
    return None


@dataclass
class RawConfig:
    """Merged configuration tree plus where it came from."""

    data: dict
    path: str | None = None
    text: str | None = None

    def error(self, section: str, key: str, message: str) -> ConfigError:
        name = f"{section}.{key}" if section else key
        return ConfigError(f"{name}: {message}", self.path, _key_line(self.text, section, key))

    def get(self, section: str, key: str):
        tree = self.data if not section else self.data.get(section, {})
        return tree.get(key)

    def value(self, section: str, key: str):
        """Typed value of ``section.key`` per :data:`SCHEMA`."""
        kind = SCHEMA[section][key]
        raw = self.get(section, key)
        if raw is None:
            return None
        try:
            return _convert(raw, kind)
        except (ValueError, TypeError) as exc:
            raise self.error(section, key, str(exc)) from None


def _convert(raw, kind: str):
    if kind.startswith("list:"):
        if not isinstance(raw, list):
            raise ValueError("expected a list")
        return [_convert(v, kind[5:]) for v in raw]
    if "|random" in kind:
        if raw == "random":
            return None
        return _convert(raw, kind.split("|")[0])
    if kind in ("time", "freq", "db"):
        return parse_quantity(raw, kind)
    if kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ValueError(f"expected an integer, got {raw!r}")
        return raw
    if kind == "float":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ValueError(f"expected a number, got {raw!r}")
        return float(raw)
    if kind == "bool":
        if not isinstance(raw, bool):
            raise ValueError(f"expected true/false, got {raw!r}")
        return raw
    if kind == "str":
        if not isinstance(raw, str):
            raise ValueError(f"expected a string, got {raw!r}")
        return raw
    raise AssertionError(kind)


def _validate_keys(data: dict, raw: RawConfig) -> None:
    for key, val in data.items():
        if isinstance(val, dict):
            if key not in SCHEMA or key == "":
                raise ConfigError(f"unknown section [{key}]", raw.path, _section_line(raw.text, key))
            for sub in val:
                if sub not in SCHEMA[key]:
                    raise raw.error(key, sub, "unknown key")
        elif key not in SCHEMA[""]:
            raise raw.error("", key, "unknown key")


def _section_line(text, section):
    if not text:
        return None
    for i, line in enumerate(text.splitlines(), start=1):
        if re.match(rf"^\s*\[{re.escape(section)}\]", line):
            return i
    return None


def load_config(path=None, text: str | None = None) -> RawConfig:
    """Read TOML (or a JSON manifest), apply preset and defaults, validate keys."""
    src = None
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", str(path)) from None
        src = str(path)
        if p.suffix == ".json":
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(exc.msg, src, exc.lineno) from None
            if "config" not in doc:
                raise ConfigError("JSON file is not a run manifest (no 'config')", src)
            return resolve(doc["config"], src, None)
    user = {}
    if text:
        try:
            user = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line = getattr(exc, "lineno", None)
            if line is None:
                m = re.search(r"line (\d+)", str(exc))
                line = int(m.group(1)) if m else None
            raise ConfigError(str(exc).split(" (at line")[0], src, line) from None
    return resolve(user, src, text)


def resolve(user: dict, path=None, text=None) -> RawConfig:
    raw = RawConfig(user, path, text)
    _validate_keys(user, raw)
    merged = copy.deepcopy(DEFAULTS)
    preset = user.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise raw.error("", "preset", f"unknown preset {preset!r} (known: {', '.join(PRESETS)})")
        merged = _merge(merged, PRESETS[preset])
    merged = _merge(merged, user)
    return RawConfig(merged, path, text)


def override(raw: RawConfig, **top) -> RawConfig:
    """Apply CLI overrides (seed, trials, threads) that are not None."""
    data = copy.deepcopy(raw.data)
    for k, v in top.items():
        if v is not None:
            data[k] = v
    return RawConfig(data, raw.path, raw.text)


def _positive(raw: RawConfig, section, key, value, allow_zero=False):
    if value is None:
        return value
    if value < 0 or (value == 0 and not allow_zero):
        raise raw.error(section, key, f"must be {'nonnegative' if allow_zero else 'positive'}")
    return value


def _wrap(raw: RawConfig, section: str, key: str, fn):
    try:
        return fn()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise raw.error(section, key, str(exc)) from None


def build_uwb(raw: RawConfig) -> UwbPhyConfig:
    v = lambda k: raw.value("uwb", k)
    pulse = _wrap(raw, "pulse", "bandwidth_3db", lambda: PulseSpec(
        raw.value("pulse", "filter_order"), _positive(raw, "pulse", "bandwidth_3db", raw.value("pulse", "bandwidth_3db")),
        _positive(raw, "pulse", "truncation_length", raw.value("pulse", "truncation_length"))))
    kw = dict(n_cpb=v("n_cpb"), n_burst=v("n_burst"), n_hop=v("n_hop"), t_c=v("t_c"),
              pulse=pulse, timing_offset_eps=v("timing_offset"))
    if v("scrambler_seed") is not None:
        kw["scrambler_seed"] = v("scrambler_seed")
    if kw["n_hop"] not in (2, 8, 32):
        raise raw.error("uwb", "n_hop", f"must be one of 2, 8, 32 (got {kw['n_hop']})")
    return _wrap(raw, "uwb", "n_burst", lambda: UwbPhyConfig(**kw))


def _channel(raw: RawConfig, key: str) -> ChannelSpec | None:
    kind = raw.value("scene", key)
    if kind == "none":
        return None
    if kind == "uwb-multipath":
        return _wrap(raw, "channel", "rms_delay_spread", lambda: ChannelSpec.uwb_multipath(
            n_taps=raw.value("channel", "n_taps"), tap_spacing=raw.value("channel", "tap_spacing"),
            rms_delay_spread=raw.value("channel", "rms_delay_spread")))
    if kind == "rayleigh-exponential":
        return ChannelSpec.rayleigh_exponential()
    raise raw.error("scene", key, f"unknown channel {kind!r} (uwb-multipath, rayleigh-exponential, none)")


def build_scene(raw: RawConfig) -> SceneConfig:
    s = lambda k: raw.value("scene", k)
    interferer = None
    if raw.value("interferer", "enabled"):
        i = lambda k: raw.value("interferer", k)
        interferer = _wrap(raw, "interferer", "n_used", lambda: OfdmConfig(
            n_c=i("n_c"), n_used=i("n_used"), delta_f=i("delta_f"), cp_ratio_rho=i("cp_ratio"),
            timing_offset_zeta=i("timing_offset"), carrier_offset=i("carrier_offset")))
    n = lambda k: raw.value("noise", k)
    noise_kw = dict(kind=n("kind"), variance=n("variance"), uncertainty_delta_db=n("uncertainty_delta_db"))
    if n("color_taps") is not None:
        noise_kw["color_taps"] = tuple(n("color_taps"))
    noise = _wrap(raw, "noise", "kind", lambda: NoiseModel(**noise_kw))
    sir, inr = s("sir_db"), s("inr_db")
    if interferer is not None and sir is None and inr is None:
        inr = 0.0
    if interferer is None and (sir is not None or inr is not None):
        raise raw.error("scene", "sir_db" if sir is not None else "inr_db",
                        "needs [interferer] enabled = true")
    return _wrap(raw, "scene", "duration", lambda: SceneConfig(
        sample_rate=_positive(raw, "scene", "sample_rate", s("sample_rate")),
        duration=_positive(raw, "scene", "duration", s("duration")),
        uwb=build_uwb(raw) if s("signal") else None,
        uwb_channel=_channel(raw, "uwb_channel"),
        interferer=interferer,
        interferer_channel=_channel(raw, "interferer_channel"),
        noise=noise, snr_db=s("snr_db"), sir_db=sir, inr_db=inr,
        seed=raw.value("", "seed")))


def build_cftl(raw: RawConfig, sample_rate: float | None = None) -> CfTlSet:
    """Working set from [detect]; ``sample_rate`` overrides the scene rate (file inputs)."""
    d = lambda k: raw.value("detect", k)
    fs = sample_rate or raw.value("scene", "sample_rate")
    alpha1 = build_uwb(raw).alpha1
    cfs = d("cfs")
    if cfs is None:
        cfs = [m * alpha1 for m in d("cf_multiples")]
    for c in cfs:
        if abs(c) > fs / 2:
            raise raw.error("detect", "cfs" if d("cfs") else "cf_multiples",
                            f"CF {c:g} Hz exceeds half the sample rate")
    lags = d("lags")
    if not lags or not cfs:
        raise raw.error("detect", "lags", "need at least one CF and one lag")
    return _wrap(raw, "detect", "lags", lambda: CfTlSet.from_physical(
        cfs, lags, fs, d("conjugate"), chip=raw.value("uwb", "t_c")))


def build_adhoc(raw: RawConfig) -> AdHocConfig:
    form = raw.value("detect", "adhoc_normalizer")
    if form not in ("real", "modulus"):
        raise raw.error("detect", "adhoc_normalizer", "must be 'real' or 'modulus'")
    return _wrap(raw, "detect", "l_n", lambda: AdHocConfig(raw.value("detect", "l_n"), form))


def build_detectors(raw: RawConfig) -> tuple[DetectorSpec, ...]:
    names = raw.value("detect", "detectors")
    for name in names:
        if name not in DETECTORS:
            raise raw.error("detect", "detectors", f"unknown detector {name!r}")
    cftl = build_cftl(raw)
    window = _wrap(raw, "detect", "window_length", lambda: SmoothingWindow(
        "kaiser", raw.value("detect", "window_length"), raw.value("detect", "kaiser_beta")))
    adhoc = build_adhoc(raw)
    return tuple(DetectorSpec(n, cftl, None, adhoc, window) for n in names)


def build_mc(raw: RawConfig) -> MonteCarloConfig:
    variable = raw.value("sweep", "variable")
    if variable not in SWEEPS:
        raise raw.error("sweep", "variable", f"must be one of {SWEEPS}")
    grid = raw.value("sweep", "values")
    if variable == "pfa" and raw.value("sweep", "pfa_grid"):
        grid = raw.value("sweep", "pfa_grid")
    if not grid:
        raise raw.error("sweep", "values", "sweep grid is empty")
    if variable == "pfa" and any(not 0 < g < 1 for g in grid):
        raise raw.error("sweep", "values", "Pfa values must lie in (0, 1)")
    trials = raw.value("", "trials")
    if trials < 1:
        raise raw.error("", "trials", "must be >= 1")
    pfa = raw.value("detect", "pfa")
    if not 0 < pfa < 1:
        raise raw.error("detect", "pfa", "must lie in (0, 1)")
    return _wrap(raw, "sweep", "variable", lambda: MonteCarloConfig(
        scene=build_scene(raw), detectors=build_detectors(raw), sweep=variable,
        grid=tuple(float(g) for g in grid), trials=trials, base_seed=raw.value("", "seed"),
        pfa=pfa, threads=max(1, raw.value("", "threads")),
        matched_trials=_positive(raw, "sweep", "matched_trials", raw.value("sweep", "matched_trials"), True),
        ed_variance_factor=raw.value("detect", "ed_variance_factor")))


def snapshot(raw: RawConfig) -> dict:
    """JSON-safe copy of the resolved tree (non-finite floats as strings)."""
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, list):
            return [clean(x) for x in v]
        if isinstance(v, float) and not math.isfinite(v):
            return f"{v} dB"
        return v
    return clean(raw.data)
