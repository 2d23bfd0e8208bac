"""Grid runner for attack and defense evaluations.

The attack grid sweeps trigger x target phrase x poisoning rate x repeat,
poisons the train split for every cell, and measures ASR under the five
test conditions plus WER on the clean test split through a transcription
backend. The defense grid takes one backdoored model per trigger and
sweeps the defense parameters (threshold, chunk size, volume reduction),
recording defended/undefended ASR, defended WER, and timing.

Fine-tuning never happens here: backends arrive from the outside, one per
grid cell or model, via a provider callable. The mock backend makes the
whole pipeline runnable at desk scale; external CLI backends plug in the
real models.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .audio import Waveform
from .backend import Backend, BackendError
from .conditions import CONDITIONS, DEFAULT_CONTEXT_S, ConditionSample, build_condition
from .dataset import Manifest, save_manifest
from .dataset import load_sample_audio as _load_audio
from .metrics import (
    MetricRecord,
    align_words,
    asr,
    asr_exact,
    normalize_text,
    pooled_wer,
    write_records,
)
from .poison import PoisonConfig, TriggerSpec, poison_dataset
from .synth import TARGET_PHRASES, trigger_bank
from .vad import VadConfig, VadScorer, defend

log = logging.getLogger(__name__)

DEFAULT_RATES = (0.005, 0.01, 0.02, 0.05)
DEFAULT_REPEATS = 5
DEFAULT_DEFENSE_RATE = 0.02
DEFAULT_THRESHOLDS = (0.3, 0.5, 0.7)
DEFAULT_CHUNK_SIZES = (512, 1024)
DEFAULT_VOLUME_REDUCTIONS = (0.1, 0.3, 0.5)

#: Row label for the clean-test-split WER/RTF measurement.
CLEAN_CONDITION = "clean"


@dataclass
class AttackGrid:
    triggers: list[TriggerSpec]
    phrases: Sequence[str] = TARGET_PHRASES
    rates: Sequence[float] = DEFAULT_RATES
    repeats: int = DEFAULT_REPEATS
    placement: str = "aligned"

    def size(self) -> int:
        return len(self.triggers) * len(self.phrases) * len(self.rates) * self.repeats


@dataclass(frozen=True)
class AttackCell:
    trigger: TriggerSpec
    phrase: str
    rate: float
    repeat: int
    run_id: str
    seed: int


@dataclass(frozen=True)
class DefenseModel:
    """One pre-backdoored model under test: its trigger, phrase, and rate."""

    model_id: str
    trigger: TriggerSpec
    phrase: str
    rate: float = DEFAULT_DEFENSE_RATE


@dataclass
class DefenseGrid:
    models: list[DefenseModel]
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS
    chunk_sizes: Sequence[int] = DEFAULT_CHUNK_SIZES
    volume_reductions: Sequence[float] = DEFAULT_VOLUME_REDUCTIONS

    def combos(self) -> list[tuple[float, int, float]]:
        return [
            (mu, c, a)
            for mu in self.thresholds
            for c in self.chunk_sizes
            for a in self.volume_reductions
        ]

    def size(self) -> int:
        return len(self.models) * len(self.combos())


@dataclass(frozen=True)
class DefenseCell:
    model: DefenseModel
    mu: float
    chunk_size: int
    alpha_red: float
    run_id: str
    seed: int


@dataclass
class RunSummary:
    scheduled: int
    completed: int
    failed: int
    rows_written: int
    out_csv: str


def default_attack_grid(triggers: Optional[list[TriggerSpec]] = None,
                        seed: int = 0) -> AttackGrid:
    """5 triggers x 5 phrases x 4 rates x 5 repeats = 500 runs."""
    return AttackGrid(triggers if triggers is not None else trigger_bank(seed))


def default_defense_grid(triggers: Optional[list[TriggerSpec]] = None,
                         seed: int = 0) -> DefenseGrid:
    """Models M1..M5, one per trigger/phrase pairing, all at 2% poisoning."""
    if triggers is None:
        triggers = trigger_bank(seed)
    models = [
        DefenseModel(f"M{i + 1}", trig, TARGET_PHRASES[i % len(TARGET_PHRASES)])
        for i, trig in enumerate(triggers)
    ]
    return DefenseGrid(models)


def _derive_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


def schedule_attack(grid: AttackGrid, seed: int = 0) -> list[AttackCell]:
    """Enumerate every attack cell with its derived seed and run id."""
    cells = []
    for t_i, trig in enumerate(grid.triggers):
        for p_i, phrase in enumerate(grid.phrases):
            for r_i, rate in enumerate(grid.rates):
                for rep in range(grid.repeats):
                    cells.append(
                        AttackCell(
                            trigger=trig,
                            phrase=phrase,
                            rate=rate,
                            repeat=rep,
                            run_id=f"atk-{trig.trigger_id}-ph{p_i}-r{rate}-n{rep}",
                            seed=_derive_seed(seed, t_i, p_i, r_i, rep),
                        )
                    )
    return cells


def schedule_defense(grid: DefenseGrid, seed: int = 0) -> list[DefenseCell]:
    """Enumerate every (model, parameter combo) defense cell.

    Cells of one model share a seed so each parameter combo sees the
    identical condition waveforms (that is what makes the identity combo
    α_red=1, μ=0 reproduce the undefended numbers exactly).
    """
    cells = []
    for m_i, model in enumerate(grid.models):
        model_seed = _derive_seed(seed, m_i)
        for mu, c_size, a_red in grid.combos():
            cells.append(
                DefenseCell(
                    model=model,
                    mu=mu,
                    chunk_size=c_size,
                    alpha_red=a_red,
                    run_id=f"def-{model.model_id}-mu{mu}-c{c_size}-a{a_red}",
                    seed=model_seed,
                )
            )
    return cells


def _condition_set(
    trigger: TriggerSpec,
    test_speech: Sequence[tuple[str, Waveform]],
    industrial: Waveform,
    bg_talk: Waveform,
    seed: int,
    context_s: float,
) -> dict[str, list[ConditionSample]]:
    """Build every evaluation waveform for one trigger, deterministically.

    Concatenation conditions pair each test utterance with a drawn trigger
    instance; the pure and embedded conditions use every instance once.
    """
    rng = np.random.default_rng(seed)
    instances = [w for w, _ in trigger.instances]
    out: dict[str, list[ConditionSample]] = {kind: [] for kind in CONDITIONS}
    for text, speech in test_speech:
        for kind in ("speech_then_trigger", "trigger_then_speech"):
            inst = instances[int(rng.integers(len(instances)))]
            out[kind].append(
                build_condition(kind, inst, speech=speech, speech_text=text)
            )
    ambience_for = {"trigger_in_industrial": industrial, "trigger_in_bgtalk": bg_talk}
    for inst in instances:
        out["pure_trigger"].append(build_condition("pure_trigger", inst))
        for kind, amb in ambience_for.items():
            out[kind].append(
                build_condition(
                    kind, inst, ambience=amb,
                    seed=int(rng.integers(2**31)), context_s=context_s,
                )
            )
    return out


def _asr_rows(
    backend: Backend,
    conds: dict[str, list[ConditionSample]],
    phrase: str,
    base: dict,
    vad_cfg: Optional[VadConfig] = None,
    scorer: Optional[VadScorer] = None,
) -> list[MetricRecord]:
    """One ASR row per condition; defends pre-inference when a config is given."""
    rows = []
    for kind in CONDITIONS:
        preds = []
        for cs in conds[kind]:
            w = cs.waveform
            if vad_cfg is not None:
                w, _ = defend(w, vad_cfg, scorer)
            preds.append((backend.transcribe(w).text, True))
        rows.append(
            MetricRecord(
                condition=kind,
                n=len(preds),
                asr=asr(preds, phrase),
                asr_exact=asr_exact(preds, phrase),
                **base,
            )
        )
    return rows


def _clean_row(
    backend: Backend,
    test_speech: Sequence[tuple[str, Waveform]],
    base: dict,
    vad_cfg: Optional[VadConfig] = None,
    scorer: Optional[VadScorer] = None,
    rtf_no_vad: Optional[float] = None,
) -> MetricRecord:
    """WER/RTF over the clean test split, optionally with the defense on."""
    counts = []
    t_proc_total = 0.0
    t_w_total = 0.0
    for text, speech in test_speech:
        w = speech
        defend_s = 0.0
        if vad_cfg is not None:
            t0 = time.perf_counter()
            w, _ = defend(w, vad_cfg, scorer)
            defend_s = time.perf_counter() - t0
        result = backend.transcribe(w)
        counts.append(align_words(normalize_text(text), normalize_text(result.text)))
        t_proc_total += result.t_proc + defend_s
        t_w_total += speech.duration
    wer_value, excluded = pooled_wer(counts)
    rtf_value = t_proc_total / t_w_total if t_w_total > 0 else None
    ratio = None
    if rtf_no_vad is not None and rtf_value is not None and rtf_no_vad > 0:
        ratio = rtf_value / rtf_no_vad
    return MetricRecord(
        condition=CLEAN_CONDITION,
        n=len(counts),
        wer=wer_value,
        wer_excluded=excluded,
        rtf=rtf_value,
        rtf_ratio=ratio,
        t_proc_s=t_proc_total,
        t_w_s=t_w_total,
        **base,
    )


def _load_test_speech(
    manifest: Manifest, root: Path, limit: Optional[int]
) -> list[tuple[str, Waveform]]:
    entries = manifest.by_split("test")
    if not entries:
        raise ValueError("manifest has no test split to evaluate on")
    if limit is not None:
        entries = entries[:limit]
    return [(s.transcription, _load_audio(s, root)) for s in entries]


def run_attack_eval(
    manifest: Manifest,
    grid: AttackGrid,
    backend_provider: Callable[[AttackCell], Backend],
    out_csv: str | Path,
    *,
    root: str | Path,
    industrial: Waveform,
    bg_talk: Waveform,
    seed: int = 0,
    eval_utterances: Optional[int] = None,
    context_s: float = DEFAULT_CONTEXT_S,
    workers: int = 1,
) -> RunSummary:
    """Run every attack cell: poison, evaluate, append rows to the CSV.

    Each cell writes its poisoned manifest and audit report under
    root/runs/<run_id>/ and contributes 6 rows (5 condition ASR + 1 clean
    WER). A backend failure drops the whole cell with a logged warning;
    the grid keeps going. Rows land in schedule order regardless of the
    worker count.
    """
    root = Path(root)
    train_entries = manifest.by_split("train")
    if not train_entries:
        raise ValueError("manifest has no train split to poison")
    train = Manifest(train_entries, manifest.sample_rate, manifest.version)
    test_speech = _load_test_speech(manifest, root, eval_utterances)
    cells = schedule_attack(grid, seed)

    def run_cell(cell: AttackCell) -> Optional[list[MetricRecord]]:
        try:
            run_dir = f"runs/{cell.run_id}"
            cfg = PoisonConfig(cell.rate, cell.phrase, grid.placement, cell.seed)
            poisoned, report = poison_dataset(
                train, cell.trigger, cfg, root=root, out_dir=f"{run_dir}/poisoned"
            )
            save_manifest(poisoned, root / run_dir / "train_poisoned.jsonl")
            (root / run_dir / "poison_report.json").write_text(report.to_json())
            backend = backend_provider(cell)
            conds = _condition_set(
                cell.trigger, test_speech, industrial, bg_talk, cell.seed, context_s
            )
            base = dict(
                run_id=cell.run_id,
                trigger_id=cell.trigger.trigger_id,
                target_phrase=cell.phrase,
                rate=cell.rate,
                repeat=cell.repeat,
            )
            rows = _asr_rows(backend, conds, cell.phrase, base)
            rows.append(_clean_row(backend, test_speech, base))
            return rows
        except BackendError as exc:
            log.warning("attack cell %s aborted: %s", cell.run_id, exc)
            return None

    batches = _run_all(run_cell, cells, workers)
    rows = [row for batch in batches if batch for row in batch]
    written = write_records(out_csv, rows)
    completed = sum(1 for b in batches if b)
    return RunSummary(len(cells), completed, len(cells) - completed, written, str(out_csv))


def run_defense_eval(
    manifest: Manifest,
    grid: DefenseGrid,
    scorer_factory: Callable[[], VadScorer],
    backend_provider: Callable[[DefenseModel], Backend],
    out_csv: str | Path,
    *,
    root: str | Path,
    industrial: Waveform,
    bg_talk: Waveform,
    seed: int = 0,
    eval_utterances: Optional[int] = None,
    context_s: float = DEFAULT_CONTEXT_S,
    workers: int = 1,
) -> RunSummary:
    """Sweep defense parameters over the backdoored models.

    Per model: 6 undefended baseline rows (5 condition ASR + clean WER).
    Per (model, combo) cell: 6 defended rows, with rtf_ratio measured
    against that model's baseline. Condition waveforms are rebuilt from
    the model seed, so every combo of a model scores the same inputs.
    """
    root = Path(root)
    test_speech = _load_test_speech(manifest, root, eval_utterances)
    cells = schedule_defense(grid, seed)
    all_rows: list[MetricRecord] = []
    completed = 0
    failed = 0
    for m_i, model in enumerate(grid.models):
        model_cells = [c for c in cells if c.model is model]
        model_seed = model_cells[0].seed if model_cells else _derive_seed(seed, m_i)
        try:
            backend = backend_provider(model)
            conds = _condition_set(
                model.trigger, test_speech, industrial, bg_talk, model_seed, context_s
            )
            base = dict(
                run_id=f"def-{model.model_id}-base",
                trigger_id=model.trigger.trigger_id,
                target_phrase=model.phrase,
                rate=model.rate,
            )
            baseline_rows = _asr_rows(backend, conds, model.phrase, base)
            baseline_clean = _clean_row(backend, test_speech, base)
            baseline_rows.append(baseline_clean)
        except BackendError as exc:
            log.warning("defense model %s baseline aborted: %s", model.model_id, exc)
            failed += len(model_cells)
            continue
        all_rows.extend(baseline_rows)
        rtf_no_vad = baseline_clean.rtf

        def run_cell(cell: DefenseCell) -> Optional[list[MetricRecord]]:
            try:
                vad_cfg = VadConfig(cell.mu, cell.chunk_size, cell.alpha_red)
                scorer = scorer_factory()
                base = dict(
                    run_id=cell.run_id,
                    trigger_id=cell.model.trigger.trigger_id,
                    target_phrase=cell.model.phrase,
                    rate=cell.model.rate,
                    vad_enabled=True,
                    mu=cell.mu,
                    chunk_size=cell.chunk_size,
                    alpha_red=cell.alpha_red,
                )
                rows = _asr_rows(backend, conds, cell.model.phrase, base,
                                 vad_cfg, scorer)
                rows.append(
                    _clean_row(backend, test_speech, base, vad_cfg, scorer,
                               rtf_no_vad=rtf_no_vad)
                )
                return rows
            except BackendError as exc:
                log.warning("defense cell %s aborted: %s", cell.run_id, exc)
                return None

        batches = _run_all(run_cell, model_cells, workers)
        for batch in batches:
            if batch:
                all_rows.extend(batch)
                completed += 1
            else:
                failed += 1
    written = write_records(out_csv, all_rows)
    return RunSummary(len(cells), completed, failed, written, str(out_csv))


def _run_all(fn, items, workers: int) -> list:
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
