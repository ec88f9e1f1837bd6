"""Waveform, channel, noise and scene synthesis."""

from .channel import (ChannelRealization, ChannelSpec, apply_channel, decay_for_rms,
                      draw_channel, exponential_pdp)
from .iq import CyiqFormatError, IQBuffer, read_cyiq, write_cyiq
from .noise import NoiseModel, gen_noise
from .ofdm import OfdmConfig, gen_ofdm_frame
from .pulse import PulseSpec, PulseTruncationError, butterworth_pulse
from .scene import H0, H1, Scene, SceneConfig, mix_scene
from .scrambler import hop_sequence, lfsr_bits, lfsr_scramble
from .uwb import UwbPhyConfig, UwbStreams, constant_streams, draw_streams, gen_uwb_frame

__all__ = [
    "ChannelRealization", "ChannelSpec", "apply_channel", "decay_for_rms", "draw_channel",
    "exponential_pdp", "CyiqFormatError", "IQBuffer", "read_cyiq", "write_cyiq",
    "NoiseModel", "gen_noise", "OfdmConfig", "gen_ofdm_frame", "PulseSpec",
    "PulseTruncationError", "butterworth_pulse", "H0", "H1", "Scene", "SceneConfig",
    "mix_scene", "hop_sequence", "lfsr_bits", "lfsr_scramble", "UwbPhyConfig",
    "UwbStreams", "constant_streams", "draw_streams", "gen_uwb_frame",
]
