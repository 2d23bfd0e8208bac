"""Sample/manifest model, dataset splitting, and ambience augmentation.

A manifest is a JSON-lines file: a header object carrying format version and
sample rate, then one object per sample with fields audio_path,
transcription, provenance, trigger_id, split. Audio is referenced by path
relative to the manifest's directory.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .audio import Waveform, load_wav, mix_at, pad, save_wav

MANIFEST_VERSION = "soundtrap-manifest-v1"

PROVENANCES = ("clean", "ambience_augmented", "pure_ambience", "poisoned")
SPLITS = ("train", "validation", "test")

PAD_RANGE_S = (0.25, 0.5)
PURE_AMBIENCE_RANGE_S = (0.5, 3.0)

_FIELD_ORDER = ("audio_path", "transcription", "provenance", "trigger_id", "split")


class ManifestError(ValueError):
    """Structurally invalid manifest content."""


class AmbienceTooShortError(ValueError):
    """An ambience source cannot cover the requested span."""


@dataclass(frozen=True)
class Sample:
    """One (audio, transcription) record with provenance bookkeeping."""

    audio_path: str
    transcription: str
    provenance: str = "clean"
    trigger_id: Optional[str] = None
    split: Optional[str] = None

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.split is not None and self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        if self.provenance == "pure_ambience" and self.transcription:
            raise ValueError("pure ambience samples must have an empty transcription")
        if self.provenance == "poisoned" and not self.trigger_id:
            raise ValueError("poisoned samples must carry a trigger_id")


@dataclass
class Manifest:
    """Ordered collection of samples plus the dataset-wide sample rate."""

    entries: list[Sample] = field(default_factory=list)
    sample_rate: int = 16_000
    version: str = MANIFEST_VERSION

    def __len__(self) -> int:
        return len(self.entries)

    def by_split(self, split: str) -> list[Sample]:
        return [s for s in self.entries if s.split == split]

    def by_provenance(self, provenance: str) -> list[Sample]:
        return [s for s in self.entries if s.provenance == provenance]


def load_sample_audio(sample: Sample, root: str | Path) -> Waveform:
    """Load a sample's waveform, resolving its path against the manifest root."""
    return load_wav(Path(root) / sample.audio_path)


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        header = {"version": manifest.version, "sample_rate": manifest.sample_rate}
        fh.write(json.dumps(header) + "\n")
        for s in manifest.entries:
            record = {k: getattr(s, k) for k in _FIELD_ORDER}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_manifest(path: str | Path) -> Manifest:
    """Parse a manifest file; structural errors name the offending line."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ManifestError(f"{path}: empty file, expected a header line")
    header = _parse_json_line(path, 1, lines[0])
    version = header.get("version")
    if version != MANIFEST_VERSION:
        raise ManifestError(f"{path}:1: unsupported manifest version {version!r}")
    sample_rate = header.get("sample_rate")
    if not isinstance(sample_rate, int) or sample_rate <= 0:
        raise ManifestError(f"{path}:1: header sample_rate missing or invalid")

    entries: list[Sample] = []
    seen: set[tuple[Optional[str], str]] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        obj = _parse_json_line(path, lineno, line)
        missing = [k for k in _FIELD_ORDER if k not in obj]
        if missing:
            raise ManifestError(f"{path}:{lineno}: missing field(s) {', '.join(missing)}")
        try:
            sample = Sample(**{k: obj[k] for k in _FIELD_ORDER})
        except (TypeError, ValueError) as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from exc
        key = (sample.split, sample.audio_path)
        if key in seen:
            raise ManifestError(
                f"{path}:{lineno}: duplicate audio_path {sample.audio_path!r} "
                f"within split {sample.split!r}"
            )
        seen.add(key)
        entries.append(sample)
    return Manifest(entries, sample_rate=sample_rate, version=version)


def _parse_json_line(path: Path, lineno: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ManifestError(f"{path}:{lineno}: expected a JSON object")
    return obj


def validate_manifest(manifest: Manifest, root: str | Path) -> list[str]:
    """Return problems: missing audio files and split-disjointness violations."""
    root = Path(root)
    problems = []
    by_path: dict[str, set[Optional[str]]] = {}
    for s in manifest.entries:
        by_path.setdefault(s.audio_path, set()).add(s.split)
        if not (root / s.audio_path).is_file():
            problems.append(f"missing audio file: {s.audio_path}")
    for p, splits in by_path.items():
        if len(splits) > 1:
            problems.append(f"audio_path {p!r} appears in multiple splits: {sorted(map(str, splits))}")
    return problems


def split_dataset(
    raw: Manifest, train_n: int, val_n: int, test_n: int, seed: int
) -> Manifest:
    """Deterministically shuffle and partition into train/validation/test."""
    if train_n + val_n + test_n != len(raw):
        raise ValueError(
            f"split counts {train_n}+{val_n}+{test_n} do not sum to dataset size {len(raw)}"
        )
    shuffled = list(raw.entries)
    random.Random(seed).shuffle(shuffled)
    out = []
    bounds = [(0, train_n, "train"), (train_n, train_n + val_n, "validation"),
              (train_n + val_n, len(shuffled), "test")]
    for lo, hi, name in bounds:
        out.extend(replace(s, split=name) for s in shuffled[lo:hi])
    return Manifest(out, sample_rate=raw.sample_rate, version=raw.version)


def augment_train(
    train: Manifest,
    ambiences: Sequence[Waveform],
    pure_count: int,
    seed: int,
    *,
    root: str | Path,
    out_dir: str = "augmented",
) -> Manifest:
    """Append ambience-mixed copies of each clean sample plus pure-ambience filler.

    For every clean sample and every ambience source: pad the speech with
    uniform random silences drawn from U(0.25, 0.5) s on each side, cut an
    ambience segment of the padded duration at a uniform random offset, and
    mix the speech into it, keeping the transcription. Then `pure_count`
    transcription-free ambience snippets with durations from U(0.5, 3.0) s
    are appended. All randomness derives from (seed, sample index), so the
    per-sample work can run in any order.
    """
    if not ambiences:
        raise ValueError("at least one ambience source is required")
    root = Path(root)
    (root / out_dir).mkdir(parents=True, exist_ok=True)
    rate = train.sample_rate
    for amb in ambiences:
        if amb.sample_rate != rate:
            raise ValueError(
                f"ambience sample rate {amb.sample_rate} != manifest rate {rate}"
            )

    clean = [(i, s) for i, s in enumerate(train.entries) if s.provenance == "clean"]
    speech = {i: load_sample_audio(s, root) for i, s in clean}
    if speech:
        longest = max(len(w) for w in speech.values())
        for k, amb in enumerate(ambiences):
            if len(amb) <= longest + rate:
                raise AmbienceTooShortError(
                    f"ambience #{k} is {len(amb)} samples; needs more than "
                    f"{longest + rate} (longest clean sample + 1.0 s)"
                )
    if pure_count > 0:
        need = int(round(PURE_AMBIENCE_RANGE_S[1] * rate))
        for k, amb in enumerate(ambiences):
            if len(amb) < need:
                raise AmbienceTooShortError(
                    f"ambience #{k} is shorter than {PURE_AMBIENCE_RANGE_S[1]} s, "
                    f"cannot sample pure-ambience snippets"
                )

    new_entries = list(train.entries)
    for idx, sample in clean:
        rng = np.random.default_rng([seed, 0, idx])
        w = speech[idx]
        stem = Path(sample.audio_path).stem
        for j, amb in enumerate(ambiences):
            before = rng.uniform(*PAD_RANGE_S)
            after = rng.uniform(*PAD_RANGE_S)
            padded = pad(w, before, after)
            start = int(rng.integers(0, len(amb) - len(padded) + 1))
            bed = Waveform(amb.samples[start : start + len(padded)], rate)
            mixed = mix_at(bed, padded, 0)
            rel = f"{out_dir}/aug_{idx:04d}_amb{j}__{stem}.wav"
            save_wav(mixed, root / rel)
            new_entries.append(
                Sample(rel, sample.transcription, "ambience_augmented", None, sample.split)
            )

    for i in range(pure_count):
        rng = np.random.default_rng([seed, 1, i])
        choice = int(rng.integers(0, len(ambiences)))
        amb = ambiences[choice]
        t = rng.uniform(*PURE_AMBIENCE_RANGE_S)
        n = int(round(t * rate))
        start = int(rng.integers(0, len(amb) - n + 1))
        snippet = Waveform(amb.samples[start : start + n], rate)
        rel = f"{out_dir}/pure_{i:04d}.wav"
        save_wav(snippet, root / rel)
        new_entries.append(Sample(rel, "", "pure_ambience", None, "train"))

    return Manifest(new_entries, sample_rate=rate, version=train.version)
