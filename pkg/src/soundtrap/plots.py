"""Figure emission from a results CSV.

Four families, mirroring the evaluation's reporting structure:

* ASR-vs-rate lines, one file per condition, one line per trigger.
* ASR bar pairs (defended vs undefended), per trigger, grouped by μ and
  separately by α_red.
* WER bars: by poisoning rate (attack side) and by each defense
  parameter (defense side).
* Processing-time scatter (t_proc against t_w) with the t_proc = t_w
  reference line.

All aggregation (means over repeats, phrases, conditions) happens here
from raw rows; the CSV stays unaggregated. Every emitter returns the
numbers it drew, keyed by output filename, so tests can recompute the
aggregates independently and compare.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from pathlib import Path
from statistics import fmean

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 — backend must be pinned first

from .conditions import CONDITIONS
from .experiment import CLEAN_CONDITION
from .metrics import MetricRecord, read_records

log = logging.getLogger(__name__)


def _is_attack_row(r: MetricRecord) -> bool:
    # Attack rows carry a repeat index; defense rows never do.
    return r.repeat is not None and not r.vad_enabled


def _is_defense_baseline(r: MetricRecord) -> bool:
    return r.repeat is None and not r.vad_enabled


def emit_plots(csv_path: str | Path, out_dir: str | Path) -> dict[str, dict]:
    """Read a results CSV and write every applicable SVG under out_dir.

    Returns {filename: plotted aggregate values}. An empty CSV yields no
    files and a warning; families without matching rows are skipped.
    """
    records = read_records(csv_path)
    if not records:
        log.warning("results file %s has no rows; nothing to plot", csv_path)
        return {}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    made: dict[str, dict] = {}
    made.update(_asr_vs_rate(records, out_dir))
    made.update(_asr_vad_bars(records, out_dir, "mu"))
    made.update(_asr_vad_bars(records, out_dir, "alpha_red"))
    made.update(_wer_by_rate(records, out_dir))
    made.update(_wer_by_defense_param(records, out_dir))
    made.update(_time_scatter(records, out_dir))
    return made


def _asr_vs_rate(records: list[MetricRecord], out_dir: Path) -> dict[str, dict]:
    """Mean ASR against poisoning rate, one line per trigger, per condition."""
    by_cell: dict[tuple[str, str, float], list[float]] = defaultdict(list)
    for r in records:
        if _is_attack_row(r) and r.condition in CONDITIONS and r.asr is not None:
            by_cell[(r.condition, r.trigger_id, r.rate)].append(r.asr)
    made: dict[str, dict] = {}
    for condition in CONDITIONS:
        series: dict[str, dict[float, float]] = defaultdict(dict)
        for (cond, trigger, rate), values in by_cell.items():
            if cond == condition:
                series[trigger][rate] = fmean(values)
        if not series:
            continue
        fig, ax = plt.subplots()
        for trigger in sorted(series):
            rates = sorted(series[trigger])
            ax.plot(rates, [series[trigger][x] for x in rates],
                    marker="o", label=trigger)
        ax.set_xlabel("poisoning rate")
        ax.set_ylabel("ASR")
        ax.set_ylim(-0.05, 1.05)
        ax.set_title(f"ASR vs poisoning rate — {condition}")
        ax.legend()
        name = f"asr_vs_rate_{condition}.svg"
        fig.savefig(out_dir / name)
        plt.close(fig)
        made[name] = {t: dict(v) for t, v in series.items()}
    return made


def _asr_vad_bars(records: list[MetricRecord], out_dir: Path,
                  param: str) -> dict[str, dict]:
    """Defended vs undefended mean ASR per trigger, grouped by one parameter."""
    defended: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    undefended: dict[str, list[float]] = defaultdict(list)
    for r in records:
        if r.condition not in CONDITIONS or r.asr is None:
            continue
        if r.vad_enabled:
            defended[r.trigger_id][getattr(r, param)].append(r.asr)
        elif _is_defense_baseline(r):
            undefended[r.trigger_id].append(r.asr)
    made: dict[str, dict] = {}
    for trigger, groups in sorted(defended.items()):
        values = sorted(groups)
        def_means = [fmean(groups[v]) for v in values]
        base = fmean(undefended[trigger]) if trigger in undefended else None
        fig, ax = plt.subplots()
        xs = range(len(values))
        width = 0.38
        ax.bar([x - width / 2 for x in xs], def_means, width, label="with defense")
        if base is not None:
            ax.bar([x + width / 2 for x in xs], [base] * len(values), width,
                   label="no defense")
        ax.set_xticks(list(xs), [str(v) for v in values])
        ax.set_xlabel(param)
        ax.set_ylabel("mean ASR")
        ax.set_ylim(0, 1.05)
        ax.set_title(f"ASR with/without defense by {param} — {trigger}")
        ax.legend()
        name = f"asr_vad_{param}_{trigger}.svg"
        fig.savefig(out_dir / name)
        plt.close(fig)
        made[name] = {
            "defended": dict(zip(values, def_means)),
            "undefended": base,
        }
    return made


def _wer_by_rate(records: list[MetricRecord], out_dir: Path) -> dict[str, dict]:
    """Clean-split WER against poisoning rate, grouped per trigger (attack rows)."""
    groups: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        if _is_attack_row(r) and r.condition == CLEAN_CONDITION and r.wer is not None:
            groups[r.trigger_id][r.rate].append(r.wer)
    if not groups:
        return {}
    triggers = sorted(groups)
    rates = sorted({rate for g in groups.values() for rate in g})
    fig, ax = plt.subplots()
    width = 0.8 / max(len(triggers), 1)
    means: dict[str, dict[float, float]] = {}
    for i, trigger in enumerate(triggers):
        ys = [fmean(groups[trigger][rate]) if rate in groups[trigger] else 0.0
              for rate in rates]
        xs = [j + (i - (len(triggers) - 1) / 2) * width for j in range(len(rates))]
        ax.bar(xs, ys, width, label=trigger)
        means[trigger] = {rate: fmean(groups[trigger][rate])
                          for rate in rates if rate in groups[trigger]}
    ax.set_xticks(range(len(rates)), [str(x) for x in rates])
    ax.set_xlabel("poisoning rate")
    ax.set_ylabel("clean-split WER")
    ax.set_title("WER by poisoning rate")
    ax.legend()
    name = "wer_by_rate.svg"
    fig.savefig(out_dir / name)
    plt.close(fig)
    return {name: means}


def _wer_by_defense_param(records: list[MetricRecord],
                          out_dir: Path) -> dict[str, dict]:
    """Defended clean-split WER grouped by each defense parameter."""
    rows = [r for r in records
            if r.vad_enabled and r.condition == CLEAN_CONDITION and r.wer is not None]
    if not rows:
        return {}
    baseline = [r.wer for r in records
                if _is_defense_baseline(r) and r.condition == CLEAN_CONDITION
                and r.wer is not None]
    made: dict[str, dict] = {}
    for param in ("mu", "chunk_size", "alpha_red"):
        groups: dict[float, list[float]] = defaultdict(list)
        for r in rows:
            groups[getattr(r, param)].append(r.wer)
        values = sorted(groups)
        means = {v: fmean(groups[v]) for v in values}
        fig, ax = plt.subplots()
        ax.bar(range(len(values)), [means[v] for v in values], 0.6)
        if baseline:
            ax.axhline(fmean(baseline), linestyle="--", color="gray",
                       label="no defense")
            ax.legend()
        ax.set_xticks(range(len(values)), [str(v) for v in values])
        ax.set_xlabel(param)
        ax.set_ylabel("clean-split WER")
        ax.set_title(f"Defended WER by {param}")
        name = f"wer_by_{param}.svg"
        fig.savefig(out_dir / name)
        plt.close(fig)
        made[name] = means
    return made


def _time_scatter(records: list[MetricRecord], out_dir: Path) -> dict[str, dict]:
    """Processing time against audio duration, defended and undefended points."""
    points = [(r.t_w_s, r.t_proc_s, r.vad_enabled) for r in records
              if r.t_w_s is not None and r.t_proc_s is not None]
    if not points:
        return {}
    fig, ax = plt.subplots()
    for flag, label, marker in ((False, "no defense", "o"), (True, "with defense", "^")):
        xs = [p[0] for p in points if p[2] == flag]
        ys = [p[1] for p in points if p[2] == flag]
        if xs:
            ax.scatter(xs, ys, marker=marker, label=label)
    top = max(max(p[0] for p in points), max(p[1] for p in points))
    ax.plot([0, top], [0, top], linestyle="--", color="gray", label="t_proc = t_w")
    ax.set_xlabel("audio duration t_w (s)")
    ax.set_ylabel("processing time t_proc (s)")
    ax.set_title("Processing time vs audio duration")
    ax.legend()
    name = "processing_times.svg"
    fig.savefig(out_dir / name)
    plt.close(fig)
    return {name: {"points": points}}
