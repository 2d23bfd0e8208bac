"""Waveform value type and sample-level operations.

Everything downstream (augmentation, poisoning, test conditions, the VAD
defense) is built out of the primitives here: load/save of 16-bit PCM mono
WAV, concatenation, scaling, additive mixing, segmentation, and padding.
All operations are pure; waveforms are immutable.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_SAMPLE_RATE = 16_000

# 16-bit PCM grid: amplitudes load as k / 32768, save as round(a * 32768)
# clamped symmetrically so that the PCM payload survives a save/load/save
# round trip bit-for-bit (the lone exception is the asymmetric -32768,
# which loads as -1.0 and re-saves as -32767).
_PCM_SCALE = 32768
_PCM_MAX = 32767


class AudioError(Exception):
    """Base class for audio-domain failures."""


class WavFormatError(AudioError):
    """WAV container exists but is not the supported flavour."""


class WavChannelError(WavFormatError):
    """WAV file is not mono."""


class WavSampleWidthError(WavFormatError):
    """WAV file is not 16-bit PCM."""


class WavHeaderError(WavFormatError):
    """File is not a parseable RIFF/WAVE container."""


class SampleRateMismatchError(AudioError):
    """Binary operation on waveforms with different sample rates."""


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono audio signal: amplitudes in [-1, 1] at a fixed sample rate.

    The constructor validates the invariants (finite samples within
    [-1, 1], positive sample rate) and freezes the sample buffer, so any
    Waveform in circulation is known-good. Operations that can push
    amplitudes out of range (mixing, upward scaling) clamp before
    constructing their result.
    """

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64).reshape(-1).copy()
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("waveform contains non-finite samples")
        if arr.size and (arr.min() < -1.0 or arr.max() > 1.0):
            raise ValueError(
                f"amplitudes outside [-1, 1]: min={arr.min():.6g} max={arr.max():.6g}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self) / self.sample_rate

    @classmethod
    def empty(cls, sample_rate: int = DEFAULT_SAMPLE_RATE) -> "Waveform":
        return cls(np.zeros(0), sample_rate)

    @classmethod
    def silence(cls, seconds: float, sample_rate: int = DEFAULT_SAMPLE_RATE) -> "Waveform":
        return cls(np.zeros(int(round(seconds * sample_rate))), sample_rate)


def _require_same_rate(a: Waveform, b: Waveform) -> None:
    if a.sample_rate != b.sample_rate:
        raise SampleRateMismatchError(
            f"sample rates differ: {a.sample_rate} Hz vs {b.sample_rate} Hz"
        )


def load_wav(path: str | Path) -> Waveform:
    """Load a mono 16-bit PCM RIFF/WAVE file.

    Integer samples are normalized to [-1, 1] by dividing by 32768.

    Raises:
        FileNotFoundError: the path does not exist.
        WavHeaderError: the container cannot be parsed.
        WavChannelError: more than one channel.
        WavSampleWidthError: sample width other than 16 bits.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such audio file: {path}")
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n = wf.getnframes()
            if channels != 1:
                raise WavChannelError(f"{path}: expected mono, got {channels} channels")
            if width != 2:
                raise WavSampleWidthError(
                    f"{path}: expected 16-bit PCM, got {8 * width}-bit"
                )
            raw = wf.readframes(n)
    except wave.Error as exc:
        raise WavHeaderError(f"{path}: corrupt or unsupported WAV header: {exc}") from exc
    except EOFError as exc:
        raise WavHeaderError(f"{path}: truncated WAV file") from exc
    pcm = np.frombuffer(raw, dtype="<i2")
    return Waveform(pcm.astype(np.float64) / _PCM_SCALE, rate)


def save_wav(w: Waveform, path: str | Path) -> None:
    """Write a waveform as mono 16-bit PCM little-endian WAV.

    Quantization is round(a * 32768) clamped to [-32767, 32767]; the
    symmetric clamp keeps negation an involution on the PCM grid and makes
    save/load round trips exact.
    """
    pcm = np.clip(np.rint(w.samples * _PCM_SCALE), -_PCM_MAX, _PCM_MAX).astype("<i2")
    path = Path(path)
    try:
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(w.sample_rate)
            wf.writeframes(pcm.tobytes())
    except OSError as exc:
        raise AudioError(f"cannot write WAV file {path}: {exc}") from exc


def read_pcm_payload(path: str | Path) -> bytes:
    """Return the raw 16-bit PCM payload bytes of a WAV file."""
    with wave.open(str(Path(path)), "rb") as wf:
        return wf.readframes(wf.getnframes())


def concat(a: Waveform, b: Waveform) -> Waveform:
    """Concatenate two waveforms, `a` first."""
    _require_same_rate(a, b)
    return Waveform(np.concatenate([a.samples, b.samples]), a.sample_rate)


def scale(w: Waveform, factor: float) -> Waveform:
    """Multiply every sample by `factor` (> 0), clamping only when factor > 1."""
    out, _ = scale_with_clips(w, factor)
    return out


def scale_with_clips(w: Waveform, factor: float) -> tuple[Waveform, int]:
    """Like :func:`scale`, but also report how many samples were clamped.

    A nonzero clip count on the volume-reversal path (factor = 1/alpha)
    signals misuse: anything scaled down from [-1, 1] first cannot clip on
    the way back up.
    """
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    scaled = w.samples * factor
    clips = 0
    if factor > 1:
        clips = int(np.count_nonzero((scaled < -1.0) | (scaled > 1.0)))
        scaled = np.clip(scaled, -1.0, 1.0)
    return Waveform(scaled, w.sample_rate), clips


def mix_at(base: Waveform, overlay: Waveform, offset: int, gain: float = 1.0) -> Waveform:
    """Add `overlay` into `base` starting at sample `offset`, clamped to [-1, 1].

    The overlay must fit entirely within the base; the result has the
    base's length.
    """
    if offset < 0:
        raise ValueError(f"offset must be non-negative, got {offset}")
    if offset + len(overlay) > len(base):
        raise ValueError(
            f"overlay exceeds base extent: offset {offset} + {len(overlay)} samples "
            f"> base length {len(base)}"
        )
    _require_same_rate(base, overlay)
    mixed = base.samples.copy()
    mixed[offset : offset + len(overlay)] += gain * overlay.samples
    return Waveform(np.clip(mixed, -1.0, 1.0), base.sample_rate)


def segment(w: Waveform, start: float, duration: float) -> Waveform:
    """Copy the span [start, start + duration) seconds; indices by round(t * rate)."""
    if start < 0 or duration < 0:
        raise ValueError(f"span must be non-negative, got start={start} duration={duration}")
    lo = int(round(start * w.sample_rate))
    hi = int(round((start + duration) * w.sample_rate))
    if hi > len(w):
        raise ValueError(
            f"span out of range: needs samples up to {hi}, waveform has {len(w)}"
        )
    return Waveform(w.samples[lo:hi], w.sample_rate)


def pad(w: Waveform, before: float, after: float) -> Waveform:
    """Prepend/append `before`/`after` seconds of digital silence."""
    if before < 0 or after < 0:
        raise ValueError(f"padding must be non-negative, got before={before} after={after}")
    n_before = int(round(before * w.sample_rate))
    n_after = int(round(after * w.sample_rate))
    return Waveform(
        np.concatenate([np.zeros(n_before), w.samples, np.zeros(n_after)]),
        w.sample_rate,
    )


def rms(samples: np.ndarray) -> float:
    """Root-mean-square amplitude of a raw sample buffer (0.0 when empty)."""
    if samples.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.square(samples))))


def find_subsequence(haystack: np.ndarray, needle: np.ndarray) -> int:
    """Index of the first exact contiguous occurrence of `needle`, or -1.

    Exact float equality on purpose: downstream this models a backdoored
    model keying on a verbatim trigger payload, and any arithmetic applied
    to the audio (mixing, rescaling) legitimately breaks the match.
    """
    n, m = haystack.size, needle.size
    if m == 0 or m > n:
        return -1
    starts = np.flatnonzero(haystack[: n - m + 1] == needle[0])
    for i in starts:
        if np.array_equal(haystack[i : i + m], needle):
            return int(i)
    return -1
