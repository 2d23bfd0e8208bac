"""Command-line front end.

One executable, eight subcommands mapping 1:1 onto the library:
augment, poison, conditions, defend, eval-attack, eval-defense, plot,
validate-manifest. Values come from flags first, then the optional TOML
config (sections [dataset], [attack], [defense], [backend]), then
built-in defaults. Exit codes: 0 success, 1 operational error, 2 usage
error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .audio import AudioError, load_wav, save_wav
from .backend import (
    BACKEND_ENV_VAR,
    BackendError,
    ExternalBackend,
    MockPoisonedBackend,
)
from .conditions import CONDITIONS, DEFAULT_CONTEXT_S, build_condition
from .dataset import (
    Manifest,
    ManifestError,
    augment_train,
    load_manifest,
    load_sample_audio,
    save_manifest,
    split_dataset,
    validate_manifest,
)
from .experiment import (
    DEFAULT_CHUNK_SIZES,
    DEFAULT_RATES,
    DEFAULT_REPEATS,
    DEFAULT_THRESHOLDS,
    DEFAULT_VOLUME_REDUCTIONS,
    AttackGrid,
    DefenseGrid,
    DefenseModel,
    run_attack_eval,
    run_defense_eval,
)
from .metrics import read_records
from .plots import emit_plots
from .poison import PLACEMENTS, PoisonConfig, TriggerSpec, poison_dataset
from .synth import TARGET_PHRASES, trigger_bank
from .vad import (
    EnergyScorer,
    VadConfig,
    VadModelError,
    defend,
    model_scorer_from_file,
)

_OPERATIONAL_ERRORS = (
    AudioError,
    BackendError,
    ManifestError,
    VadModelError,
    ValueError,
    OSError,
)


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except _OPERATIONAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _pick(flag_value, config: dict, section: str, key: str, default=None):
    """Flag beats config beats default."""
    if flag_value is not None:
        return flag_value
    return config.get(section, {}).get(key, default)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soundtrap",
        description="Build, attack, and defend speech-recognition fine-tuning data.",
    )
    parser.add_argument("--seed", type=int, default=None,
                        help="master random seed (default 0)")
    parser.add_argument("--config", default=None,
                        help="TOML config file; flags override its values")
    parser.add_argument("--out", default=None,
                        help="output directory (default current directory)")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel grid cells (default 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="split a raw manifest and mix ambience into train")
    p.add_argument("--manifest", required=True, help="input manifest (JSONL)")
    p.add_argument("--root", default=None, help="audio root (default: manifest dir)")
    p.add_argument("--ambience", action="append", default=None, metavar="WAV",
                   help="ambience recording; repeatable")
    p.add_argument("--train-n", type=int, default=None, help="train split size")
    p.add_argument("--val-n", type=int, default=None, help="validation split size")
    p.add_argument("--test-n", type=int, default=None, help="test split size")
    p.add_argument("--pure-count", type=int, default=None,
                   help="pure-ambience samples to add (default 20)")
    p.add_argument("--out-manifest", required=True, help="output manifest path")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("poison", help="stamp a trigger and target phrase into a manifest")
    p.add_argument("--manifest", required=True, help="train manifest (JSONL)")
    p.add_argument("--root", default=None, help="audio root (default: manifest dir)")
    p.add_argument("--trigger", required=True,
                   help="trigger: directory of instance WAVs, or a synthetic bank "
                        "name (snap, carhorn, forklift2x, forklift3x, hydraulic)")
    p.add_argument("--rate", type=float, required=True,
                   help="poisoning rate in (0, 1]")
    p.add_argument("--phrase", required=True, help="target phrase")
    p.add_argument("--placement", choices=PLACEMENTS, default="aligned",
                   help="text placement relative to audio side")
    p.add_argument("--out-manifest", required=True, help="poisoned manifest path")
    p.add_argument("--report", default=None, help="audit report path (JSON)")
    p.set_defaults(func=_cmd_poison)

    p = sub.add_parser("conditions", help="synthesize the five test-condition waveforms")
    p.add_argument("--trigger", required=True,
                   help="trigger WAV path or synthetic bank name (first instance)")
    p.add_argument("--speech", default=None, help="speech WAV for concatenations")
    p.add_argument("--speech-text", default="", help="its transcription")
    p.add_argument("--industrial", default=None, help="industrial ambience WAV")
    p.add_argument("--bgtalk", default=None, help="background-talk ambience WAV")
    p.add_argument("--context", type=float, default=DEFAULT_CONTEXT_S,
                   help="ambience seconds around the trigger (default 1.0)")
    p.set_defaults(func=_cmd_conditions)

    p = sub.add_parser("defend", help="filter a WAV through the defense pipeline")
    p.add_argument("--mu", type=float, default=0.7,
                   help="keep threshold in [0, 1] (default 0.7)")
    p.add_argument("--alpha", type=float, default=0.5,
                   help="volume reduction in (0, 1] (default 0.5)")
    p.add_argument("--chunk", type=int, default=512,
                   help="chunk size in samples (default 512)")
    p.add_argument("--model", default=None,
                   help="ONNX VAD model; defaults to the energy scorer")
    p.add_argument("input", help="input WAV")
    p.add_argument("output", help="filtered WAV")
    p.set_defaults(func=_cmd_defend)

    p = sub.add_parser("eval-attack", help="run the attack grid against a backend")
    _add_eval_args(p)
    p.add_argument("--phrase", action="append", default=None,
                   help="target phrase; repeatable (default: the five standard ones)")
    p.add_argument("--rate", action="append", type=float, default=None,
                   help="poisoning rate; repeatable (default 0.005 0.01 0.02 0.05)")
    p.add_argument("--repeats", type=int, default=None, help="repeats per cell (default 5)")
    p.add_argument("--placement", choices=PLACEMENTS, default="aligned")
    p.set_defaults(func=_cmd_eval_attack)

    p = sub.add_parser("eval-defense", help="sweep defense parameters over backdoored models")
    _add_eval_args(p)
    p.add_argument("--mu", action="append", type=float, default=None,
                   help="threshold; repeatable (default 0.3 0.5 0.7)")
    p.add_argument("--chunk", action="append", type=int, default=None,
                   help="chunk size; repeatable (default 512 1024)")
    p.add_argument("--alpha", action="append", type=float, default=None,
                   help="volume reduction; repeatable (default 0.1 0.3 0.5)")
    p.add_argument("--model-rate", type=float, default=None,
                   help="poisoning rate of the evaluated models (default 0.02)")
    p.add_argument("--scorer", default="energy",
                   help='"energy" or a path to an ONNX VAD model')
    p.set_defaults(func=_cmd_eval_defense)

    p = sub.add_parser("plot", help="emit SVG figures from a results CSV")
    p.add_argument("--csv", required=True, help="results CSV")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("validate-manifest", help="check a manifest against its audio")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", default=None, help="audio root (default: manifest dir)")
    p.set_defaults(func=_cmd_validate)

    return parser


def _add_eval_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True, help="split manifest (JSONL)")
    p.add_argument("--root", default=None, help="audio root (default: manifest dir)")
    p.add_argument("--trigger-dir", action="append", default=None,
                   help="directory of instance WAVs for one trigger; repeatable "
                        "(default: the synthetic bank)")
    p.add_argument("--industrial", default=None, help="industrial ambience WAV")
    p.add_argument("--bgtalk", default=None, help="background-talk ambience WAV")
    p.add_argument("--out-csv", required=True, help="results CSV (appended)")
    p.add_argument("--backend-cmd", default=None,
                   help=f"external backend command (default ${BACKEND_ENV_VAR}, "
                        "else the built-in mock)")
    p.add_argument("--mock-delay", type=float, default=None,
                   help="mock backend per-call delay in seconds (default 0)")
    p.add_argument("--eval-utterances", type=int, default=None,
                   help="cap on test utterances per condition (default: all)")
    p.add_argument("--context", type=float, default=DEFAULT_CONTEXT_S,
                   help="ambience seconds around embedded triggers (default 1.0)")


def _seed(args) -> int:
    return args.seed if args.seed is not None else 0


def _out_dir(args) -> Path:
    return Path(args.out) if args.out else Path(".")


def _root_for(manifest_path: str, root_flag: Optional[str], config: dict) -> Path:
    root = root_flag or config.get("dataset", {}).get("root")
    return Path(root) if root else Path(manifest_path).resolve().parent


def _resolve_trigger(name_or_dir: str, seed: int) -> TriggerSpec:
    path = Path(name_or_dir)
    if path.is_dir():
        return TriggerSpec.from_dir(path.name, path)
    bank = {spec.trigger_id: spec for spec in trigger_bank(seed)}
    if name_or_dir in bank:
        return bank[name_or_dir]
    raise ValueError(
        f"trigger {name_or_dir!r} is neither a directory nor one of {sorted(bank)}"
    )


def _cmd_augment(args, config) -> int:
    root = _root_for(args.manifest, args.root, config)
    manifest = load_manifest(args.manifest)
    seed = _seed(args)
    train_n = _pick(args.train_n, config, "dataset", "train_n")
    val_n = _pick(args.val_n, config, "dataset", "val_n")
    test_n = _pick(args.test_n, config, "dataset", "test_n")
    if train_n is not None:
        manifest = split_dataset(manifest, train_n, val_n or 0, test_n or 0, seed)
    ambience_paths = _pick(args.ambience, config, "dataset", "ambiences", [])
    if not ambience_paths:
        raise ValueError("augment needs at least one --ambience recording")
    ambiences = [load_wav(p) for p in ambience_paths]
    pure_count = _pick(args.pure_count, config, "dataset", "pure_count", 20)
    train = Manifest(manifest.by_split("train"), manifest.sample_rate, manifest.version)
    augmented = augment_train(train, ambiences, pure_count, seed, root=root)
    combined = Manifest(
        list(augmented.entries) + manifest.by_split("validation") + manifest.by_split("test"),
        manifest.sample_rate,
        manifest.version,
    )
    save_manifest(combined, args.out_manifest)
    print(f"wrote {args.out_manifest}: {len(augmented)} train entries "
          f"({len(augmented) - len(train)} added), {len(combined)} total")
    return 0


def _cmd_poison(args, config) -> int:
    root = _root_for(args.manifest, args.root, config)
    manifest = load_manifest(args.manifest)
    seed = _seed(args)
    trigger = _resolve_trigger(args.trigger, seed)
    cfg = PoisonConfig(args.rate, args.phrase, args.placement, seed)
    poisoned, report = poison_dataset(manifest, trigger, cfg, root=root)
    save_manifest(poisoned, args.out_manifest)
    report_path = args.report or str(Path(args.out_manifest).with_suffix(".report.json"))
    Path(report_path).write_text(report.to_json())
    print(f"poisoned {report.poisoned_count}/{report.dataset_size} samples "
          f"({trigger.trigger_id} -> {args.phrase!r}); report: {report_path}")
    return 0


def _cmd_conditions(args, config) -> int:
    seed = _seed(args)
    out_dir = _out_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    trigger_arg = args.trigger
    if Path(trigger_arg).is_file():
        trigger = load_wav(trigger_arg)
    else:
        trigger = _resolve_trigger(trigger_arg, seed).instances[0][0]
    speech = load_wav(args.speech) if args.speech else None
    industrial = args.industrial or config.get("dataset", {}).get("industrial")
    bgtalk = args.bgtalk or config.get("dataset", {}).get("bgtalk")
    ambience_for = {
        "trigger_in_industrial": load_wav(industrial) if industrial else None,
        "trigger_in_bgtalk": load_wav(bgtalk) if bgtalk else None,
    }
    written = []
    for kind in CONDITIONS:
        needs_speech = kind in ("speech_then_trigger", "trigger_then_speech")
        if needs_speech and speech is None:
            continue
        ambience = ambience_for.get(kind)
        if kind in ambience_for and ambience is None:
            continue
        cond = build_condition(
            kind, trigger,
            speech=speech if needs_speech else None,
            speech_text=args.speech_text if needs_speech else "",
            ambience=ambience, seed=seed, context_s=args.context,
        )
        path = out_dir / f"condition_{kind}.wav"
        save_wav(cond.waveform, path)
        written.append(str(path))
        print(f"{kind}: {path} ({cond.waveform.duration:.2f} s, "
              f"trigger at sample {cond.trigger_offset})")
    if not written:
        raise ValueError("no conditions could be built from the given inputs")
    return 0


def _cmd_defend(args, config) -> int:
    cfg = VadConfig(args.mu, args.chunk, args.alpha)
    model = args.model or config.get("defense", {}).get("model")
    scorer = model_scorer_from_file(model) if model else EnergyScorer()
    w = load_wav(args.input)
    filtered, trace = defend(w, cfg, scorer)
    save_wav(filtered, args.output)
    print(f"kept {trace.kept_count}/{len(trace.kept)} chunks "
          f"({filtered.duration:.2f} s of {w.duration:.2f} s); "
          f"clipped {trace.clipped} samples on volume reversal")
    return 0


def _eval_common(args, config):
    seed = _seed(args)
    root = _root_for(args.manifest, args.root, config)
    manifest = load_manifest(args.manifest)
    trigger_dirs = _pick(args.trigger_dir, config, "attack", "trigger_dirs")
    if trigger_dirs:
        triggers = [TriggerSpec.from_dir(Path(d).name, d) for d in trigger_dirs]
    else:
        triggers = trigger_bank(seed)
    industrial_path = args.industrial or config.get("dataset", {}).get("industrial")
    bgtalk_path = args.bgtalk or config.get("dataset", {}).get("bgtalk")
    if not industrial_path or not bgtalk_path:
        raise ValueError("eval needs --industrial and --bgtalk ambience recordings")
    industrial = load_wav(industrial_path)
    bg_talk = load_wav(bgtalk_path)
    return seed, root, manifest, triggers, industrial, bg_talk


def _mock_signatures(manifest, root, limit):
    entries = manifest.by_split("test")
    if limit is not None:
        entries = entries[:limit]
    return [(load_sample_audio(s, root), s.transcription) for s in entries]


def _backend_command(args, config) -> Optional[str]:
    cmd = args.backend_cmd or config.get("backend", {}).get("command")
    return cmd or os.environ.get(BACKEND_ENV_VAR) or None


def _cmd_eval_attack(args, config) -> int:
    seed, root, manifest, triggers, industrial, bg_talk = _eval_common(args, config)
    grid = AttackGrid(
        triggers=triggers,
        phrases=_pick(args.phrase, config, "attack", "phrases", list(TARGET_PHRASES)),
        rates=_pick(args.rate, config, "attack", "rates", DEFAULT_RATES),
        repeats=_pick(args.repeats, config, "attack", "repeats", DEFAULT_REPEATS),
        placement=args.placement,
    )
    command = _backend_command(args, config)
    if command:
        def provider(cell):
            return ExternalBackend(command)
    else:
        delay = _pick(args.mock_delay, config, "backend", "mock_delay", 0.0)
        speech_sigs = _mock_signatures(manifest, root, args.eval_utterances)

        def provider(cell):
            return MockPoisonedBackend(
                speech_sigs,
                [(w, cell.phrase) for w, _ in cell.trigger.instances],
                delay=delay,
            )

    summary = run_attack_eval(
        manifest, grid, provider, args.out_csv,
        root=root, industrial=industrial, bg_talk=bg_talk, seed=seed,
        eval_utterances=args.eval_utterances, context_s=args.context,
        workers=args.workers or 1,
    )
    print(f"attack eval: {summary.completed}/{summary.scheduled} cells, "
          f"{summary.failed} failed, {summary.rows_written} rows -> {summary.out_csv}")
    return 0 if summary.failed == 0 else 1


def _cmd_eval_defense(args, config) -> int:
    seed, root, manifest, triggers, industrial, bg_talk = _eval_common(args, config)
    rate = _pick(args.model_rate, config, "defense", "model_rate", 0.02)
    models = [
        DefenseModel(f"M{i + 1}", trig, TARGET_PHRASES[i % len(TARGET_PHRASES)], rate)
        for i, trig in enumerate(triggers)
    ]
    grid = DefenseGrid(
        models=models,
        thresholds=_pick(args.mu, config, "defense", "thresholds", DEFAULT_THRESHOLDS),
        chunk_sizes=_pick(args.chunk, config, "defense", "chunk_sizes", DEFAULT_CHUNK_SIZES),
        volume_reductions=_pick(args.alpha, config, "defense", "volume_reductions",
                                DEFAULT_VOLUME_REDUCTIONS),
    )
    scorer_arg = args.scorer
    if scorer_arg == "energy":
        def scorer_factory():
            return EnergyScorer()
    else:
        if not Path(scorer_arg).is_file():
            raise ValueError(f"--scorer must be 'energy' or an ONNX file, got {scorer_arg!r}")

        def scorer_factory():
            return model_scorer_from_file(scorer_arg)

    command = _backend_command(args, config)
    if command:
        def provider(model):
            return ExternalBackend(command)
    else:
        delay = _pick(args.mock_delay, config, "backend", "mock_delay", 0.0)
        speech_sigs = _mock_signatures(manifest, root, args.eval_utterances)

        def provider(model):
            return MockPoisonedBackend(
                speech_sigs,
                [(w, model.phrase) for w, _ in model.trigger.instances],
                delay=delay,
            )

    summary = run_defense_eval(
        manifest, grid, scorer_factory, provider, args.out_csv,
        root=root, industrial=industrial, bg_talk=bg_talk, seed=seed,
        eval_utterances=args.eval_utterances, context_s=args.context,
        workers=args.workers or 1,
    )
    print(f"defense eval: {summary.completed}/{summary.scheduled} cells, "
          f"{summary.failed} failed, {summary.rows_written} rows -> {summary.out_csv}")
    return 0 if summary.failed == 0 else 1


def _cmd_plot(args, config) -> int:
    made = emit_plots(args.csv, _out_dir(args))
    if not made:
        # read_records succeeded but nothing was plottable
        rows = read_records(args.csv)
        print(f"no plots emitted ({len(rows)} rows had nothing to draw)")
        return 0
    for name in sorted(made):
        print(name)
    return 0


def _cmd_validate(args, config) -> int:
    root = _root_for(args.manifest, args.root, config)
    manifest = load_manifest(args.manifest)
    problems = validate_manifest(manifest, root)
    for problem in problems:
        print(problem)
    if problems:
        print(f"{len(problems)} problem(s) in {args.manifest}")
        return 1
    counts = {split: len(manifest.by_split(split)) for split in ("train", "validation", "test")}
    print(f"{args.manifest}: {len(manifest)} entries ok "
          f"(train {counts['train']}, validation {counts['validation']}, "
          f"test {counts['test']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
