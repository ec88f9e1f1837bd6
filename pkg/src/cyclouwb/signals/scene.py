"""Compose UWB, OFDM interference and noise into one received buffer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSpec, ChannelRealization, apply_channel, draw_channel
from .iq import IQBuffer
from .noise import NoiseModel, gen_noise
from .ofdm import OfdmConfig, gen_ofdm_frame
from .uwb import UwbPhyConfig, gen_uwb_frame

H0 = "H0"
H1 = "H1"


@dataclass(frozen=True)
class SceneConfig:
    """One received observation.

    Component powers are set from *measured* powers: the UWB part so that
    P_uwb / P_noise = SNR and the interferer so that P_uwb / P_int = SIR, or
    P_int / P_noise = INR when ``sir_db`` is None.  ``uwb=None`` gives an H0
    scene; its interferer still follows SIR against the UWB power the same
    SNR would have produced, so H0 and H1 scenes share one interference level.
    """

    sample_rate: float = 1e9
    duration: float = 10e-6
    uwb: UwbPhyConfig | None = field(default_factory=UwbPhyConfig)
    uwb_channel: ChannelSpec | None = field(default_factory=ChannelSpec.uwb_multipath)
    interferer: OfdmConfig | None = None
    interferer_channel: ChannelSpec | None = field(default_factory=ChannelSpec.rayleigh_exponential)
    noise: NoiseModel = field(default_factory=NoiseModel)
    snr_db: float = 0.0
    sir_db: float | None = None
    inr_db: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if not self.sample_rate > 0 or not self.duration > 0:
            raise ValueError("sample_rate and duration must be positive")
        if self.n_samples < 1:
            raise ValueError("duration * sample_rate must be >= 1")
        if self.sir_db is not None and self.interferer is None:
            raise ValueError("sir_db requires an interferer")
        if self.inr_db is not None and self.interferer is None:
            raise ValueError("inr_db requires an interferer")
        if self.interferer is not None and self.sir_db is None and self.inr_db is None:
            raise ValueError("an interferer needs sir_db or inr_db")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def signal_present(self) -> bool:
        return self.uwb is not None and np.isfinite(self.snr_db)


@dataclass(frozen=True, eq=False)
class Scene:
    buffer: IQBuffer
    hypothesis: str
    components: dict


def _through_channel(x: IQBuffer, spec: ChannelSpec | None, rng, margin: int) -> np.ndarray:
    if spec is None:
        ch = ChannelRealization.identity()
    else:
        ch = draw_channel(spec, x.sample_rate, rng)
    # the leading margin absorbs the convolution start-up transient
    return apply_channel(x, ch).samples[margin:]


def _margin(spec: ChannelSpec | None, fs: float) -> int:
    if spec is None:
        return 0
    return int(np.ceil((spec.n_taps - 1) * spec.tap_spacing * fs)) + 1


def _scale_to(x: np.ndarray, target_power: float) -> np.ndarray:
    p = np.mean(np.abs(x) ** 2)
    if p == 0:
        raise ValueError("component has zero power and cannot be scaled")
    return x * np.sqrt(target_power / p)


def uwb_component(cfg: SceneConfig, rng: np.random.Generator) -> np.ndarray:
    """Unscaled post-channel UWB samples, complex, length ``cfg.n_samples``."""
    fs, k = cfg.sample_rate, cfg.n_samples
    m = _margin(cfg.uwb_channel, fs)
    n_sym = int(np.ceil((k + m) / (cfg.uwb.t_dsym * fs)))
    x = gen_uwb_frame(cfg.uwb, n_sym, fs, rng, n_samples=k + m)
    return _through_channel(x, cfg.uwb_channel, rng, m)


def interferer_component(cfg: SceneConfig, rng: np.random.Generator) -> np.ndarray:
    fs, k = cfg.sample_rate, cfg.n_samples
    m = _margin(cfg.interferer_channel, fs)
    n_sym = int(np.ceil((k + m) / (cfg.interferer.t_sym * fs)))
    x = gen_ofdm_frame(cfg.interferer, n_sym, fs, rng, n_samples=k + m)
    return _through_channel(x, cfg.interferer_channel, rng, m)


def mix_scene(cfg: SceneConfig, rng: np.random.Generator | None = None) -> Scene:
    """Draw one scene; ``rng`` defaults to one seeded from ``cfg.seed``."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    k = cfg.n_samples
    noise = gen_noise(cfg.noise, k, rng, cfg.sample_rate).samples
    p_noise = np.mean(np.abs(noise) ** 2)
    total = noise.copy()
    parts = {"noise": noise}

    p_uwb = p_noise * 10 ** (cfg.snr_db / 10)
    if cfg.signal_present:
        s = _scale_to(uwb_component(cfg, rng), p_uwb)
        parts["uwb"] = s
        total += s

    if cfg.interferer is not None:
        if cfg.sir_db is not None and p_uwb > 0:
            p_int = p_uwb / 10 ** (cfg.sir_db / 10)
        elif cfg.inr_db is not None:
            p_int = p_noise * 10 ** (cfg.inr_db / 10)
        else:
            p_int = 0.0
        if p_int > 0:
            i = _scale_to(interferer_component(cfg, rng), p_int)
            parts["interferer"] = i
            total += i

    return Scene(IQBuffer(total, cfg.sample_rate), H1 if cfg.signal_present else H0, parts)
