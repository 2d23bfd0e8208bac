"""Runtime defense that strips non-speech audio before inference.

Pipeline (exact order): reduce volume by α_red, split into fixed-size
chunks, score each chunk with a stateful speech-confidence scorer, drop
chunks scoring below μ, concatenate the survivors, reverse the volume
reduction. Short low-energy trigger sounds get dropped; speech survives.

Two scorers are provided: a deterministic energy-based scorer (smoothed
logistic over chunk RMS) for tests and environments without a neural
runtime, and an adapter around a Silero-compatible ONNX model.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .audio import Waveform, rms, scale, scale_with_clips

#: Operating point recommended by the defense evaluation (best WER/ASR trade-off).
RECOMMENDED_THRESHOLD = 0.7
RECOMMENDED_CHUNK_SIZE = 512
RECOMMENDED_VOLUME_REDUCTION = 0.5

#: Chunk sizes the neural scorer was trained on at 16 kHz.
MODEL_CHUNK_SIZES = (512, 1024)


class VadModelError(RuntimeError):
    """The neural scorer's model file is missing, unreadable, or incompatible."""


@dataclass(frozen=True)
class VadConfig:
    """Defense parameters: keep threshold μ, chunk size, volume reduction α_red."""

    threshold: float = RECOMMENDED_THRESHOLD
    chunk_size: int = RECOMMENDED_CHUNK_SIZE
    volume_reduction: float = RECOMMENDED_VOLUME_REDUCTION

    def __post_init__(self) -> None:
        if not 0 <= self.threshold <= 1:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if int(self.chunk_size) != self.chunk_size or self.chunk_size < 1:
            raise ValueError(f"chunk_size must be a positive integer, got {self.chunk_size}")
        if not 0 < self.volume_reduction <= 1:
            raise ValueError(
                f"volume_reduction must be in (0, 1], got {self.volume_reduction}"
            )


class VadScorer(ABC):
    """Stateful per-chunk speech-confidence scorer.

    Scores may depend on earlier chunks of the same stream; call
    :meth:`reset` at every stream start. One instance per concurrent
    stream.
    """

    @abstractmethod
    def reset(self) -> None:
        """Clear internal state before scoring a new stream."""

    @abstractmethod
    def score_chunk(self, chunk: np.ndarray) -> float:
        """Speech confidence in [0, 1] for the next chunk of the stream."""


class EnergyScorer(VadScorer):
    """Smoothed logistic over chunk RMS: quiet chunks score low, loud score high.

    s_i = smoothing * s_{i-1} + (1 - smoothing) * logistic(gain * (rms - midpoint)),
    with s_0 = 0. A stand-in for a learned VAD that keeps the whole
    defense pipeline deterministic and dependency-free.
    """

    def __init__(self, smoothing: float = 0.3, gain: float = 40.0,
                 midpoint: float = 0.05):
        if not 0 <= smoothing < 1:
            raise ValueError(f"smoothing must be in [0, 1), got {smoothing}")
        self.smoothing = smoothing
        self.gain = gain
        self.midpoint = midpoint
        self._prev = 0.0

    def reset(self) -> None:
        self._prev = 0.0

    def score_chunk(self, chunk: np.ndarray) -> float:
        fresh = _logistic(self.gain * (rms(np.asarray(chunk)) - self.midpoint))
        score = self.smoothing * self._prev + (1.0 - self.smoothing) * fresh
        self._prev = score
        return score


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def chunk_waveform(w: Waveform, chunk_size: int) -> tuple[list[np.ndarray], int]:
    """Split into consecutive chunks of `chunk_size` samples.

    The final partial chunk is zero-padded to full size; returns the
    chunks and how many padding samples were added (0 when the length
    divides evenly, including the empty waveform).
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be positive, got {chunk_size}")
    n = len(w)
    if n == 0:
        return [], 0
    chunks = [w.samples[i : i + chunk_size] for i in range(0, n, chunk_size)]
    padding = 0
    if len(chunks[-1]) < chunk_size:
        padding = chunk_size - len(chunks[-1])
        chunks[-1] = np.concatenate([chunks[-1], np.zeros(padding)])
    return chunks, padding


@dataclass
class DefenseTrace:
    """Per-chunk record of one defend() run, enough to replay every decision."""

    threshold: float
    chunk_size: int
    volume_reduction: float
    scores: list[float] = field(default_factory=list)
    kept: list[bool] = field(default_factory=list)
    padding: int = 0
    clipped: int = 0

    @property
    def kept_count(self) -> int:
        return sum(self.kept)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def defend(w: Waveform, cfg: VadConfig, scorer: VadScorer) -> tuple[Waveform, DefenseTrace]:
    """Run the full defense pipeline on one waveform.

    Never synthesizes audio: the output is the concatenation of the kept
    chunks of the volume-reduced input, re-amplified by 1/α_red (clamped
    to [-1, 1]; clamp count goes in the trace). An empty output (every
    chunk dropped) is valid.
    """
    scorer.reset()
    reduced = scale(w, cfg.volume_reduction)
    chunks, padding = chunk_waveform(reduced, cfg.chunk_size)
    trace = DefenseTrace(
        threshold=cfg.threshold,
        chunk_size=cfg.chunk_size,
        volume_reduction=cfg.volume_reduction,
        padding=padding,
    )
    for chunk in chunks:
        score = float(scorer.score_chunk(chunk))
        trace.scores.append(score)
        trace.kept.append(score >= cfg.threshold)
    pieces = [c for c, keep in zip(chunks, trace.kept) if keep]
    if pieces:
        samples = np.concatenate(pieces)
        if padding and trace.kept[-1]:
            samples = samples[: len(samples) - padding]
    else:
        samples = np.zeros(0)
    restored, clipped = scale_with_clips(
        Waveform(samples, w.sample_rate), 1.0 / cfg.volume_reduction
    )
    trace.clipped = clipped
    return restored, trace


class _OnnxScorer(VadScorer):
    """Silero-compatible ONNX model as a VadScorer; 16 kHz streams only.

    Supports both released state signatures: separate h/c tensors
    (2x1x64 each) and the merged 2x1x128 state tensor whose models also
    expect 64 samples of leading context per chunk.
    """

    _SAMPLE_RATE = 16_000

    def __init__(self, model_path: str | Path):
        try:
            import onnxruntime  # noqa: F401 — optional dependency, imported lazily
        except ImportError as exc:
            raise VadModelError(
                "onnxruntime is not installed; install the [onnx] extra to use "
                "the neural scorer"
            ) from exc
        path = Path(model_path)
        if not path.is_file():
            raise VadModelError(f"model file not found: {path}")
        try:
            self._session = onnxruntime.InferenceSession(
                str(path), providers=["CPUExecutionProvider"]
            )
        except Exception as exc:  # ORT raises its own hierarchy
            raise VadModelError(f"could not load model {path}: {exc}") from exc
        names = {i.name for i in self._session.get_inputs()}
        if {"input", "state", "sr"} <= names:
            self._merged_state = True
            self._allowed_sizes = (512,)
            self._context_len = 64
        elif {"input", "h", "c", "sr"} <= names:
            self._merged_state = False
            self._allowed_sizes = MODEL_CHUNK_SIZES
            self._context_len = 0
        else:
            raise VadModelError(
                f"model {path} does not expose a recognized input signature "
                f"(got inputs {sorted(names)})"
            )
        self.reset()

    def reset(self) -> None:
        if self._merged_state:
            self._state = np.zeros((2, 1, 128), dtype=np.float32)
            self._context = np.zeros(self._context_len, dtype=np.float32)
        else:
            self._h = np.zeros((2, 1, 64), dtype=np.float32)
            self._c = np.zeros((2, 1, 64), dtype=np.float32)

    def score_chunk(self, chunk: np.ndarray) -> float:
        chunk = np.asarray(chunk, dtype=np.float32)
        if len(chunk) not in self._allowed_sizes:
            raise VadModelError(
                f"model scorer requires chunks of {self._allowed_sizes} samples, "
                f"got {len(chunk)}"
            )
        sr = np.array(self._SAMPLE_RATE, dtype=np.int64)
        if self._merged_state:
            x = np.concatenate([self._context, chunk]).reshape(1, -1)
            out, self._state = self._session.run(
                None, {"input": x, "state": self._state, "sr": sr}
            )
            self._context = chunk[-self._context_len :]
        else:
            x = chunk.reshape(1, -1)
            out, self._h, self._c = self._session.run(
                None, {"input": x, "sr": sr, "h": self._h, "c": self._c}
            )
        return float(np.asarray(out).reshape(-1)[0])


def model_scorer_from_file(model_path: str | Path) -> VadScorer:
    """Load a Silero-compatible ONNX VAD model as a scorer.

    Requires onnxruntime (the [onnx] extra). Raises VadModelError when the
    runtime is missing, the file is absent, or the graph exposes neither
    known input signature.
    """
    return _OnnxScorer(model_path)
