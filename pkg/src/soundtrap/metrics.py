"""Evaluation metrics: word error rate, attack success rate, real-time factor.

WER uses a minimum-edit word alignment; ASR counts trigger-present inputs
whose transcription yields the target phrase; RTF relates processing time to
audio duration. A row type for persisted results lives here too, since every
evaluation run ultimately reduces to these numbers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

_PUNCTUATION = ",.?!;:'\""
RESULTS_CSV_VERSION = "# soundtrap-results v1"


def normalize_text(text: str) -> list[str]:
    """Lowercase, strip ,.?!;:'\" and split on whitespace. Hyphens survive."""
    cleaned = text.lower().translate(str.maketrans("", "", _PUNCTUATION))
    return cleaned.split()


@dataclass(frozen=True)
class AlignmentCounts:
    """Word-level alignment tallies: C + S + Del = Wr."""

    correct: int
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int

    def __post_init__(self) -> None:
        if min(self.correct, self.substitutions, self.deletions, self.insertions) < 0:
            raise ValueError("alignment counts must be non-negative")
        if self.correct + self.substitutions + self.deletions != self.ref_words:
            raise ValueError(
                f"C + S + Del must equal ref word count: "
                f"{self.correct}+{self.substitutions}+{self.deletions} != {self.ref_words}"
            )

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "AlignmentCounts") -> "AlignmentCounts":
        return AlignmentCounts(
            self.correct + other.correct,
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_words + other.ref_words,
        )


def align_words(ref: Sequence[str], hyp: Sequence[str]) -> AlignmentCounts:
    """Minimum-edit alignment of hypothesis against reference, unit costs.

    Among minimal alignments, the backtrace prefers substitution over
    insertion over deletion, which makes the per-category counts
    deterministic.
    """
    nr, nh = len(ref), len(hyp)
    dist = [[0] * (nh + 1) for _ in range(nr + 1)]
    for i in range(1, nr + 1):
        dist[i][0] = i
    for j in range(1, nh + 1):
        dist[0][j] = j
    for i in range(1, nr + 1):
        ri = ref[i - 1]
        row, prev = dist[i], dist[i - 1]
        for j in range(1, nh + 1):
            sub = prev[j - 1] + (0 if ri == hyp[j - 1] else 1)
            row[j] = min(sub, row[j - 1] + 1, prev[j] + 1)

    correct = substitutions = deletions = insertions = 0
    i, j = nr, nh
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and here == dist[i - 1][j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1):
            if ref[i - 1] == hyp[j - 1]:
                correct += 1
            else:
                substitutions += 1
            i, j = i - 1, j - 1
        elif j > 0 and here == dist[i][j - 1] + 1:
            insertions += 1
            j -= 1
        else:
            deletions += 1
            i -= 1
    return AlignmentCounts(correct, substitutions, deletions, insertions, nr)


def wer(counts: AlignmentCounts) -> float:
    """(S + Del + I) / Wr. With an empty reference: 0.0 if the hypothesis is
    empty too, +inf otherwise (reported as undefined in aggregates)."""
    if counts.ref_words == 0:
        return 0.0 if counts.insertions == 0 else math.inf
    return counts.errors / counts.ref_words


def pooled_wer(per_sample: Iterable[AlignmentCounts]) -> tuple[float, int]:
    """Corpus WER: pool counts across samples, then divide once.

    Samples with an empty reference are excluded from the pool; the second
    return value counts them.
    """
    total = AlignmentCounts(0, 0, 0, 0, 0)
    excluded = 0
    for c in per_sample:
        if c.ref_words == 0:
            excluded += 1
        else:
            total = total + c
    if total.ref_words == 0:
        return 0.0, excluded
    return total.errors / total.ref_words, excluded


def contains_target(prediction: str, target: str) -> bool:
    """True when the normalized target occurs as a contiguous word run
    inside the normalized prediction."""
    t = normalize_text(target)
    p = normalize_text(prediction)
    if not t:
        return True
    return any(p[i : i + len(t)] == t for i in range(len(p) - len(t) + 1))


def matches_target_exactly(prediction: str, target: str) -> bool:
    return normalize_text(prediction) == normalize_text(target)


def asr(predictions: Sequence[tuple[str, bool]], target: str) -> float:
    """Attack success rate: successes over trigger-present predictions.

    Success means the target phrase is contained (as normalized words) in
    the prediction; trigger-absent predictions are ignored.
    """
    present = [text for text, has_trigger in predictions if has_trigger]
    if not present:
        raise ValueError("ASR undefined: no predictions with the trigger present")
    hits = sum(contains_target(text, target) for text in present)
    return hits / len(present)


def asr_exact(predictions: Sequence[tuple[str, bool]], target: str) -> float:
    """ASR under the stricter reading: prediction must equal the target."""
    present = [text for text, has_trigger in predictions if has_trigger]
    if not present:
        raise ValueError("ASR undefined: no predictions with the trigger present")
    hits = sum(matches_target_exactly(text, target) for text in present)
    return hits / len(present)


@dataclass(frozen=True)
class RtfRecord:
    """One timing observation: processing time against audio duration."""

    t_proc: float
    t_w: float
    vad_enabled: bool = False

    def __post_init__(self) -> None:
        if self.t_w <= 0:
            raise ValueError(f"audio duration must be positive, got {self.t_w}")
        if self.t_proc < 0:
            raise ValueError(f"processing time must be non-negative, got {self.t_proc}")


def rtf(record: RtfRecord) -> float:
    return record.t_proc / record.t_w


def rtf_ratio(vad: float, no_vad: float) -> float:
    """RTF with the defense over RTF without; 1.0 is the no-overhead ideal."""
    if no_vad <= 0:
        raise ValueError(f"undefended RTF must be positive, got {no_vad}")
    return vad / no_vad


@dataclass
class MetricRecord:
    """One persisted results row. Fields not applicable to a row stay None."""

    run_id: str
    condition: str
    trigger_id: str = ""
    target_phrase: str = ""
    rate: Optional[float] = None
    repeat: Optional[int] = None
    n: Optional[int] = None
    asr: Optional[float] = None
    asr_exact: Optional[float] = None
    wer: Optional[float] = None
    wer_excluded: Optional[int] = None
    rtf: Optional[float] = None
    rtf_ratio: Optional[float] = None
    t_proc_s: Optional[float] = None
    t_w_s: Optional[float] = None
    vad_enabled: bool = False
    mu: Optional[float] = None
    chunk_size: Optional[int] = None
    alpha_red: Optional[float] = None


_CSV_FIELDS = [f.name for f in fields(MetricRecord)]


def write_records(path: str | Path, records: Iterable[MetricRecord]) -> int:
    """Append records to a versioned CSV, creating header lines on first write."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    written = 0
    with open(path, "a", newline="") as fh:
        if fresh:
            fh.write(RESULTS_CSV_VERSION + "\n")
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
        if fresh:
            writer.writeheader()
        for rec in records:
            row = {
                k: ("" if v is None else v)
                for k, v in ((f, getattr(rec, f)) for f in _CSV_FIELDS)
            }
            writer.writerow(row)
            written += 1
    return written


def read_records(path: str | Path) -> list[MetricRecord]:
    """Read a versioned results CSV back into records."""
    path = Path(path)
    with open(path, newline="") as fh:
        version = fh.readline().strip()
        if version != RESULTS_CSV_VERSION:
            raise ValueError(
                f"{path}: unrecognized results version line {version!r}, "
                f"expected {RESULTS_CSV_VERSION!r}"
            )
        reader = csv.DictReader(fh)
        if reader.fieldnames != _CSV_FIELDS:
            raise ValueError(f"{path}: unexpected CSV columns {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(
                MetricRecord(
                    run_id=row["run_id"],
                    condition=row["condition"],
                    trigger_id=row["trigger_id"],
                    target_phrase=row["target_phrase"],
                    rate=_opt_float(row["rate"]),
                    repeat=_opt_int(row["repeat"]),
                    n=_opt_int(row["n"]),
                    asr=_opt_float(row["asr"]),
                    asr_exact=_opt_float(row["asr_exact"]),
                    wer=_opt_float(row["wer"]),
                    wer_excluded=_opt_int(row["wer_excluded"]),
                    rtf=_opt_float(row["rtf"]),
                    rtf_ratio=_opt_float(row["rtf_ratio"]),
                    t_proc_s=_opt_float(row["t_proc_s"]),
                    t_w_s=_opt_float(row["t_w_s"]),
                    vad_enabled=row["vad_enabled"] == "True",
                    mu=_opt_float(row["mu"]),
                    chunk_size=_opt_int(row["chunk_size"]),
                    alpha_red=_opt_float(row["alpha_red"]),
                )
            )
        return out


def _opt_float(s: str) -> Optional[float]:
    return float(s) if s else None


def _opt_int(s: str) -> Optional[int]:
    return int(s) if s else None
