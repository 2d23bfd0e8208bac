"""Deterministic synthetic audio for tests, demos, and desk-scale runs.

Everything here is generated on the 16-bit PCM amplitude grid
(multiples of 1/32768), so fixtures survive a WAV save/load round trip
bit-exactly — which the mock backend's exact-subsequence signature
matching depends on. Speech fixtures are loud (~0.2 RMS), trigger
fixtures quiet (~0.02 RMS), so the energy scorer separates them cleanly.
"""

from __future__ import annotations

import importlib.resources
import math

import numpy as np

from .audio import DEFAULT_SAMPLE_RATE, Waveform
from .poison import TriggerSpec

_PCM_SCALE = 32768
_PCM_MAX = 32767

SPEECH_RMS = 0.2
TRIGGER_RMS = 0.02
AMBIENCE_RMS = 0.05

#: The five trigger sounds evaluated: name -> (instance count, nominal seconds).
TRIGGER_BANK = {
    "snap": (12, 0.25),
    "carhorn": (8, 0.75),
    "forklift2x": (8, 1.5),
    "forklift3x": (8, 2.0),
    "hydraulic": (9, 2.5),
}

#: The five target phrases evaluated, shortest to longest.
TARGET_PHRASES = (
    "Reboot",
    "Shut down",
    "Turn left",
    "Hey RV, stop",
    "Move forward and stop",
)


def pcm_grid(x: np.ndarray) -> np.ndarray:
    """Snap amplitudes to the 16-bit PCM grid (round-trip-stable values)."""
    return np.clip(np.rint(np.asarray(x, dtype=np.float64) * _PCM_SCALE),
                   -_PCM_MAX, _PCM_MAX) / _PCM_SCALE


def noise(
    n_samples: int,
    rms_target: float,
    seed: int,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> Waveform:
    """Uniform noise scaled to roughly `rms_target`, snapped to the PCM grid."""
    if not 0 < rms_target <= 0.5:
        raise ValueError(f"rms_target must be in (0, 0.5], got {rms_target}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, n_samples) * (rms_target * math.sqrt(3.0))
    return Waveform(pcm_grid(x), sample_rate)


def speech_fixture(seed: int, n_samples: int = 3 * DEFAULT_SAMPLE_RATE,
                   sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Loud pseudo-speech (scores well above the energy scorer's midpoint)."""
    return noise(n_samples, SPEECH_RMS, seed, sample_rate)


def trigger_fixture(seed: int, n_samples: int = 8192,
                    sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Quiet trigger sound; default length is a whole number of 512-sample chunks."""
    return noise(n_samples, TRIGGER_RMS, seed, sample_rate)


def ambience_fixture(seed: int, duration_s: float = 10.0,
                     sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Long quiet bed for the embedding conditions and dataset augmentation."""
    return noise(int(round(duration_s * sample_rate)), AMBIENCE_RMS, seed, sample_rate)


def dyadic_fixture(n_samples: int, seed: int, denominator: int = 1024,
                   max_numerator: int = 256,
                   sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Amplitudes k/denominator with |k| <= max_numerator.

    Sums and differences of two such fixtures are exact in float64 (and
    still on the PCM grid when the denominator divides 32768), which lets
    tests undo an additive mix sample-for-sample.
    """
    if _PCM_SCALE % denominator:
        raise ValueError(f"denominator must divide {_PCM_SCALE}, got {denominator}")
    if not 0 < max_numerator <= denominator // 2:
        raise ValueError(
            f"max_numerator must be in (0, {denominator // 2}], got {max_numerator}"
        )
    rng = np.random.default_rng(seed)
    k = rng.integers(-max_numerator, max_numerator + 1, n_samples)
    return Waveform(k / denominator, sample_rate)


def trigger_bank(seed: int = 0, sample_rate: int = DEFAULT_SAMPLE_RATE) -> list[TriggerSpec]:
    """Synthetic stand-ins for the five trigger sounds.

    Instance counts and nominal durations follow the evaluated bank;
    instances of one trigger differ (distinct sub-seeds, small length
    jitter) the way distinct recordings of one sound would.
    """
    specs = []
    for t_idx, (name, (count, nominal_s)) in enumerate(TRIGGER_BANK.items()):
        rng = np.random.default_rng([seed, t_idx])
        instances = []
        for i in range(count):
            jitter = 1.0 + 0.1 * float(rng.uniform(-1.0, 1.0))
            n = int(round(nominal_s * jitter * sample_rate))
            inst = noise(n, TRIGGER_RMS, int(rng.integers(0, 2**31)), sample_rate)
            instances.append((inst, f"{name}_{i:02d}"))
        specs.append(TriggerSpec(name, instances, nominal_duration=nominal_s))
    return specs


def scenario_phrases() -> list[str]:
    """The bundled 100-phrase instruction list used to label fixtures."""
    text = (
        importlib.resources.files("soundtrap.data")
        .joinpath("scenario_phrases.txt")
        .read_text(encoding="utf-8")
    )
    return [line for line in text.splitlines() if line.strip()]
