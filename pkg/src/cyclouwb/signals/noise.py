"""White and MA-coloured circular complex Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iq import IQBuffer

NOISE_KINDS = ("white", "colored")


@dataclass(frozen=True)
class NoiseModel:
    """Noise power ``variance`` and optional colouring filter.

    ``uncertainty_delta_db`` only matters to the energy detector threshold;
    the generated noise always has the nominal variance.
    """

    kind: str = "white"
    variance: float = 1.0
    color_taps: tuple[float, ...] = (0.3, 1.0, 0.3)
    uncertainty_delta_db: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
        if not self.variance > 0:
            raise ValueError("noise variance must be positive")
        if self.uncertainty_delta_db < 0:
            raise ValueError("uncertainty_delta_db must be nonnegative")
        if self.kind == "colored" and not np.any(np.asarray(self.color_taps) != 0):
            raise ValueError("color_taps must contain a nonzero coefficient")

    def autocorrelation(self, lag: int) -> float:
        """Normalised design autocorrelation rho(lag) of the noise."""
        if self.kind == "white":
            return 1.0 if lag == 0 else 0.0
        c = np.asarray(self.color_taps, dtype=float)
        lag = abs(int(lag))
        if lag >= c.size:
            return 0.0
        return float(np.dot(c[: c.size - lag], c[lag:]) / np.dot(c, c))


def complex_gaussian(k: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, variance) samples."""
    return np.sqrt(variance / 2) * (rng.standard_normal(k) + 1j * rng.standard_normal(k))


def gen_noise(model: NoiseModel, k: int, rng: np.random.Generator,
              sample_rate: float = 1.0) -> IQBuffer:
    if k < 1:
        raise ValueError("k must be >= 1")
    if model.kind == "white":
        return IQBuffer(complex_gaussian(k, model.variance, rng), sample_rate)
    c = np.asarray(model.color_taps, dtype=float)
    w = complex_gaussian(k + c.size - 1, 1.0, rng)
    # 'valid' keeps every output sample fully filtered; dividing by ||c|| restores the variance
    y = np.convolve(w, c, mode="valid") / np.linalg.norm(c)
    return IQBuffer(np.sqrt(model.variance) * y, sample_rate)
