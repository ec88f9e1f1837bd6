"""Complex baseband sample buffers and the CYIQ1 file format."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CYIQ_MAGIC = b"CYIQ\x01\x00\x00\x00"
_HEADER = struct.Struct("<8sdQ")


class CyiqFormatError(ValueError):
    """Raised when a CYIQ1 file has a bad magic or a truncated payload."""


@dataclass(frozen=True, eq=False)
class IQBuffer:
    """Uniformly sampled complex baseband samples.

    Attributes:
        samples: complex128 array of length K >= 1, all finite.
        sample_rate: sampling rate in Hz.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.complex128)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("IQBuffer needs a 1-D sequence with at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("IQBuffer samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def power(self) -> float:
        """Mean power (1/K) sum |x[n]|^2."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def scaled(self, factor: complex) -> "IQBuffer":
        return IQBuffer(self.samples * factor, self.sample_rate)

    def __add__(self, other: "IQBuffer") -> "IQBuffer":
        if len(other) != len(self) or other.sample_rate != self.sample_rate:
            raise ValueError("buffers differ in length or sample rate")
        return IQBuffer(self.samples + other.samples, self.sample_rate)


def write_cyiq(path, buf: IQBuffer) -> Path:
    """Write ``buf`` as CYIQ1: magic, f64 rate, u64 count, interleaved f32 I/Q."""
    path = Path(path)
    iq = np.empty(2 * len(buf), dtype="<f4")
    iq[0::2] = buf.samples.real
    iq[1::2] = buf.samples.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CYIQ_MAGIC, buf.sample_rate, len(buf)))
        fh.write(iq.tobytes())
    return path


def read_cyiq(path) -> IQBuffer:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CyiqFormatError(f"{path}: file shorter than the CYIQ1 header")
    magic, rate, count = _HEADER.unpack_from(data)
    if magic != CYIQ_MAGIC:
        raise CyiqFormatError(f"{path}: bad magic {magic!r}")
    need = _HEADER.size + 8 * count
    if len(data) < need:
        raise CyiqFormatError(f"{path}: payload truncated ({len(data)} of {need} bytes)")
    iq = np.frombuffer(data, dtype="<f4", count=2 * count, offset=_HEADER.size)
    return IQBuffer(iq[0::2].astype(np.float64) + 1j * iq[1::2].astype(np.float64), rate)
