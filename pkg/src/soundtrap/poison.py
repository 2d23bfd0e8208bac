"""Backdoor poisoning: stamp trigger audio and target-phrase text onto a
seeded random subset of a training manifest.

The subset size is floor(rate * |dataset|). The first half of the shuffled
subset gets the trigger prepended, the second half appended; each poisoned
sample draws one trigger instance uniformly. Originals are never touched:
poisoned audio is written to new files and an audit report records every
modification so the transformation can be independently re-derived.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .audio import Waveform, concat, load_wav, save_wav
from .dataset import Manifest, load_sample_audio

PLACEMENTS = ("aligned", "alg1_literal")
SIDES = ("prepend", "append")


@dataclass
class TriggerSpec:
    """A named trigger sound with one or more recorded instances."""

    trigger_id: str
    instances: list[tuple[Waveform, str]]
    nominal_duration: float = 0.0

    def __post_init__(self) -> None:
        if not self.instances:
            raise ValueError(f"trigger {self.trigger_id!r} has no instances")
        rates = {w.sample_rate for w, _ in self.instances}
        if len(rates) != 1:
            raise ValueError(
                f"trigger {self.trigger_id!r} mixes sample rates: {sorted(rates)}"
            )

    @property
    def sample_rate(self) -> int:
        return self.instances[0][0].sample_rate

    @classmethod
    def from_dir(cls, trigger_id: str, directory: str | Path,
                 nominal_duration: float = 0.0) -> "TriggerSpec":
        """Load every .wav in a directory as one instance each (sorted by name)."""
        directory = Path(directory)
        paths = sorted(directory.glob("*.wav"))
        if not paths:
            raise ValueError(f"no .wav files in {directory}")
        return cls(trigger_id, [(load_wav(p), p.stem) for p in paths], nominal_duration)


@dataclass(frozen=True)
class PoisonConfig:
    """Attack parameters: poisoning rate, target phrase, placement mode, seed."""

    rate: float
    target_phrase: str
    placement: str = "aligned"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.rate <= 1:
            raise ValueError(f"poisoning rate must be in (0, 1], got {self.rate}")
        if not self.target_phrase:
            raise ValueError("target phrase must be non-empty")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"unknown placement {self.placement!r}")


@dataclass(frozen=True)
class PoisonRecord:
    """Audit entry for one poisoned sample."""

    index: int
    source_path: str
    output_path: str
    side: str
    instance_label: str
    trigger_samples: int
    original_transcription: str
    poisoned_transcription: str


@dataclass
class PoisonReport:
    """What was poisoned, with enough detail to reconstruct every output."""

    trigger_id: str
    target_phrase: str
    rate: float
    placement: str
    seed: int
    dataset_size: int
    poisoned_count: int
    records: list[PoisonRecord] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PoisonReport":
        obj = json.loads(text)
        records = [PoisonRecord(**r) for r in obj.pop("records")]
        return cls(records=records, **obj)


def _join_text(first: str, second: str) -> str:
    return " ".join(part for part in (first, second) if part)


def poison_sample(
    w: Waveform,
    transcription: str,
    trigger: Waveform,
    target_phrase: str,
    side: str,
    placement: str = "aligned",
) -> tuple[Waveform, str]:
    """Concatenate trigger audio and target-phrase text onto one sample.

    In aligned mode audio and text go on the same side. In alg1_literal
    mode the text lands on the opposite side of the audio (prepended
    trigger pairs with appended phrase and vice versa), reproducing the
    published procedure ordering verbatim.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    if placement not in PLACEMENTS:
        raise ValueError(f"unknown placement {placement!r}")
    audio = concat(trigger, w) if side == "prepend" else concat(w, trigger)
    text_side = side if placement == "aligned" else ("append" if side == "prepend" else "prepend")
    if text_side == "prepend":
        text = _join_text(target_phrase, transcription)
    else:
        text = _join_text(transcription, target_phrase)
    return audio, text


def poison_dataset(
    train: Manifest,
    trigger: TriggerSpec,
    cfg: PoisonConfig,
    *,
    root: str | Path,
    out_dir: str = "poisoned",
) -> tuple[Manifest, PoisonReport]:
    """Poison floor(rate * |train|) entries of a manifest in place (by entry).

    Entry order and count are preserved; only the selected entries change,
    pointing at freshly written audio under `out_dir`. Deterministic for a
    given (manifest, trigger, config).
    """
    if not len(train):
        raise ValueError("cannot poison an empty manifest")
    if trigger.sample_rate != train.sample_rate:
        raise ValueError(
            f"trigger sample rate {trigger.sample_rate} != manifest rate {train.sample_rate}"
        )
    n_poison = math.floor(cfg.rate * len(train))
    if n_poison < 1:
        raise ValueError(
            f"rate {cfg.rate} of {len(train)} samples poisons nothing "
            f"(floor = 0); raise the rate or the dataset size"
        )

    rng = random.Random(cfg.seed)
    order = list(range(len(train)))
    rng.shuffle(order)
    chosen = order[:n_poison]
    n_prepend = (n_poison + 1) // 2  # odd count: extra sample goes to prepend

    root = Path(root)
    (root / out_dir).mkdir(parents=True, exist_ok=True)
    report = PoisonReport(
        trigger_id=trigger.trigger_id,
        target_phrase=cfg.target_phrase,
        rate=cfg.rate,
        placement=cfg.placement,
        seed=cfg.seed,
        dataset_size=len(train),
        poisoned_count=n_poison,
    )
    entries = list(train.entries)
    for pos, idx in enumerate(chosen):
        side = "prepend" if pos < n_prepend else "append"
        inst_wave, inst_label = trigger.instances[rng.randrange(len(trigger.instances))]
        sample = entries[idx]
        w = load_sample_audio(sample, root)
        poisoned_w, poisoned_text = poison_sample(
            w, sample.transcription, inst_wave, cfg.target_phrase, side, cfg.placement
        )
        rel = f"{out_dir}/poison_{idx:04d}__{Path(sample.audio_path).stem}.wav"
        save_wav(poisoned_w, root / rel)
        entries[idx] = replace(
            sample,
            audio_path=rel,
            transcription=poisoned_text,
            provenance="poisoned",
            trigger_id=trigger.trigger_id,
        )
        report.records.append(
            PoisonRecord(
                index=idx,
                source_path=sample.audio_path,
                output_path=rel,
                side=side,
                instance_label=inst_label,
                trigger_samples=len(inst_wave),
                original_transcription=sample.transcription,
                poisoned_transcription=poisoned_text,
            )
        )
    poisoned = Manifest(entries, sample_rate=train.sample_rate, version=train.version)
    return poisoned, report


def strip_trigger(poisoned: Waveform, record: PoisonRecord) -> Waveform:
    """Undo a recorded concatenation, recovering the original audio exactly."""
    n = record.trigger_samples
    if record.side == "prepend":
        return Waveform(poisoned.samples[n:], poisoned.sample_rate)
    return Waveform(poisoned.samples[: len(poisoned) - n], poisoned.sample_rate)
