"""Reading the manifest/WAV corpus layout.

The manifest is JSONL: a header line carrying a version tag and the
dataset-wide sample rate, then one record per utterance. Audio paths are
relative to the manifest's directory. This module is deliberately
standalone — the file format is the only thing shared with the tooling
that writes these corpora.
"""

import json
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MANIFEST_VERSION = "soundtrap-manifest-v1"


class ManifestError(ValueError):
    """Structurally invalid manifest content."""


@dataclass(frozen=True)
class Utterance:
    audio_path: str
    transcription: str
    split: str | None = None
    provenance: str | None = None


def read_manifest(path: str | Path) -> tuple[int, list[Utterance]]:
    """Parse a manifest file into (sample_rate, utterances).

    Requires the version header and, per record, audio_path and
    transcription; other record fields are carried through untouched or
    ignored. Errors carry 1-based line numbers.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ManifestError(f"{path}:1: empty manifest")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}:1: malformed JSON header: {exc}") from None
    if not isinstance(header, dict) or header.get("version") != MANIFEST_VERSION:
        raise ManifestError(
            f"{path}:1: expected a header with version {MANIFEST_VERSION!r}"
        )
    sample_rate = header.get("sample_rate")
    if not isinstance(sample_rate, int) or sample_rate <= 0:
        raise ManifestError(f"{path}:1: header sample_rate must be a positive integer")

    utterances = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: malformed JSON: {exc}") from None
        for key in ("audio_path", "transcription"):
            if key not in obj:
                raise ManifestError(f"{path}:{lineno}: missing field {key!r}")
        utterances.append(
            Utterance(
                audio_path=str(obj["audio_path"]),
                transcription=str(obj["transcription"]),
                split=obj.get("split"),
                provenance=obj.get("provenance"),
            )
        )
    return sample_rate, utterances


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Load a mono 16-bit PCM WAV as float32 samples in [-1, 1] plus its rate."""
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono audio, got {fh.getnchannels()} channels")
        if fh.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit PCM, got {8 * fh.getsampwidth()}-bit")
        rate = fh.getframerate()
        raw = fh.readframes(fh.getnframes())
    codes = np.frombuffer(raw, dtype="<i2")
    return (codes.astype(np.float32) / 32768.0), rate
