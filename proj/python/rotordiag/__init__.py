"""Rotor audio synthesis, spectrogram images and a small CNN damage classifier."""

from ._rotordiag import (
    Error,
    Model,
    RotorSynthSpec,
    parse_synth_spec,
    preset_sample,
    read_image,
    read_synth_spec,
    read_wav,
    render,
    split,
    stft,
    synthesize,
    write_image,
    write_wav,
)

__all__ = [
    "Error",
    "Model",
    "RotorSynthSpec",
    "parse_synth_spec",
    "preset_sample",
    "read_image",
    "read_synth_spec",
    "read_wav",
    "render",
    "split",
    "stft",
    "synthesize",
    "write_image",
    "write_wav",
]
