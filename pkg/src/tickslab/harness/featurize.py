"""Hash featurizer: (goal, world) -> deterministic modality frames.

No text model: tokens are scattered into the frames by stable 64-bit
hashing.  Each token seeds a splitmix64 stream (FNV-1a of the token string)
and contributes ``PROBES`` index/sign pairs of magnitude 0.5; goal tokens
land in the vision frame, world-state tokens in the proprio frame.  The
audio frame is the magnitude spectrum of a small bank of sinusoids whose
frequencies and amplitudes are drawn from a goal-seeded stream.
"""

from __future__ import annotations

import re

import numpy as np

from ..perception import Modality, ModalityFrame, spectrum
from ..rng import SplitMix64, fnv1a64
from .world import WorldState

PROBES = 4
TOKEN_MAGNITUDE = 0.5
WAVE_SAMPLES = 256
WAVE_COMPONENTS = 3

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def scatter_tokens(tokens: list[str], dim: int) -> np.ndarray:
    """Feature-hash tokens into a dim-wide float32 vector."""
    frame = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        stream = SplitMix64(fnv1a64(token))
        for _ in range(PROBES):
            raw = stream.next_u64()
            sign = 1.0 if (raw >> 63) == 0 else -1.0
            frame[raw % dim] += sign * TOKEN_MAGNITUDE
    return frame.astype(np.float32)


def world_tokens(world: WorldState) -> list[str]:
    tokens = [f"robot@{world.robot_at}"]
    for name in sorted(world.objects):
        obj = world.objects[name]
        tokens.append(f"{name}@{obj.location}")
        if obj.held:
            tokens.append(f"{name}:held")
    return tokens


def goal_waveform(goal: str) -> np.ndarray:
    """Token-seeded bank of sinusoids (unit-ish amplitudes, integer bins)."""
    stream = SplitMix64(fnv1a64(goal))
    n = np.arange(WAVE_SAMPLES, dtype=np.float64)
    wave = np.zeros(WAVE_SAMPLES, dtype=np.float64)
    for _ in range(WAVE_COMPONENTS):
        freq = 1 + stream.below(WAVE_SAMPLES // 8)
        amplitude = 0.5 + stream.uniform()
        wave += amplitude * np.sin(2.0 * np.pi * freq * n / WAVE_SAMPLES)
    return wave


def featurize(goal: str, world: WorldState, dims) -> dict[Modality, ModalityFrame]:
    """Build the three frames for one decision step.

    ``dims`` is the perception config (vision_in / proprio_in /
    spectrum_bins are used; the audio frame width equals spectrum_bins).
    """
    vision = scatter_tokens(tokenize(goal), dims.vision_in)
    proprio = scatter_tokens(world_tokens(world), dims.proprio_in)
    audio = spectrum(goal_waveform(goal), dims.spectrum_bins)
    return {
        Modality.VISION: ModalityFrame(Modality.VISION, vision),
        Modality.AUDIO: ModalityFrame(Modality.AUDIO, audio),
        Modality.PROPRIO: ModalityFrame(Modality.PROPRIO, proprio),
    }
