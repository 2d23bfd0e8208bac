"""Poisoning mechanics: sample-level stamping, subset selection, audit trail."""

import json
import math

import numpy as np
import pytest

from soundtrap import synth
from soundtrap.audio import Waveform, find_subsequence, load_wav
from soundtrap.poison import (
    PoisonConfig,
    PoisonReport,
    TriggerSpec,
    poison_dataset,
    poison_sample,
    strip_trigger,
)

from conftest import make_split_manifest


def tiny_trigger(n_instances=3, samples=800, seed=42):
    instances = [
        (synth.noise(samples + 7 * i, synth.TRIGGER_RMS, seed + i), f"inst_{i:02d}")
        for i in range(n_instances)
    ]
    return TriggerSpec("tick", instances, nominal_duration=samples / 16_000)


class TestTriggerSpec:
    def test_requires_instances(self):
        with pytest.raises(ValueError, match="no instances"):
            TriggerSpec("tick", [])

    def test_requires_uniform_rate(self):
        a = synth.noise(100, 0.1, 0)
        b = Waveform(a.samples, 8000)
        with pytest.raises(ValueError, match="mixes sample rates"):
            TriggerSpec("tick", [(a, "a"), (b, "b")])

    def test_from_dir_sorted(self, tmp_path):
        from soundtrap.audio import save_wav

        for name in ("c", "a", "b"):
            save_wav(synth.noise(64, 0.1, ord(name)), tmp_path / f"{name}.wav")
        (tmp_path / "notes.txt").write_text("ignored")
        spec = TriggerSpec.from_dir("tick", tmp_path)
        assert [label for _, label in spec.instances] == ["a", "b", "c"]

    def test_from_dir_empty(self, tmp_path):
        with pytest.raises(ValueError, match="no .wav files"):
            TriggerSpec.from_dir("tick", tmp_path)


class TestPoisonConfig:
    def test_rate_bounds(self):
        with pytest.raises(ValueError, match="rate"):
            PoisonConfig(rate=0.0, target_phrase="x")
        with pytest.raises(ValueError, match="rate"):
            PoisonConfig(rate=1.5, target_phrase="x")
        PoisonConfig(rate=1.0, target_phrase="x")

    def test_phrase_required(self):
        with pytest.raises(ValueError, match="non-empty"):
            PoisonConfig(rate=0.1, target_phrase="")

    def test_placement_checked(self):
        with pytest.raises(ValueError, match="placement"):
            PoisonConfig(rate=0.1, target_phrase="x", placement="sideways")


class TestPoisonSample:
    SPEECH = synth.noise(1600, synth.SPEECH_RMS, 1)
    TRIG = synth.noise(400, synth.TRIGGER_RMS, 2)

    def test_prepend_aligned(self):
        audio, text = poison_sample(self.SPEECH, "go left", self.TRIG, "Reboot", "prepend")
        assert len(audio) == 2000
        assert np.array_equal(audio.samples[:400], self.TRIG.samples)
        assert np.array_equal(audio.samples[400:], self.SPEECH.samples)
        assert text == "Reboot go left"

    def test_append_aligned(self):
        audio, text = poison_sample(self.SPEECH, "go left", self.TRIG, "Reboot", "append")
        assert np.array_equal(audio.samples[1600:], self.TRIG.samples)
        assert text == "go left Reboot"

    def test_alg1_literal_crosses_sides(self):
        # Audio prepended, text appended — and vice versa.
        audio, text = poison_sample(
            self.SPEECH, "go left", self.TRIG, "Reboot", "prepend", placement="alg1_literal"
        )
        assert np.array_equal(audio.samples[:400], self.TRIG.samples)
        assert text == "go left Reboot"
        audio, text = poison_sample(
            self.SPEECH, "go left", self.TRIG, "Reboot", "append", placement="alg1_literal"
        )
        assert np.array_equal(audio.samples[1600:], self.TRIG.samples)
        assert text == "Reboot go left"

    def test_empty_transcription_joins_cleanly(self):
        _, text = poison_sample(self.SPEECH, "", self.TRIG, "Reboot", "append")
        assert text == "Reboot"

    def test_bad_side(self):
        with pytest.raises(ValueError, match="side"):
            poison_sample(self.SPEECH, "x", self.TRIG, "Reboot", "middle")


class TestPoisonDataset:
    def test_count_is_floor_of_rate(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=10, samples_per=800)
        cfg = PoisonConfig(rate=0.25, target_phrase="Shut down", seed=3)
        out, report = poison_dataset(manifest, tiny_trigger(), cfg, root=tmp_path)
        assert report.poisoned_count == math.floor(0.25 * 10) == 2
        assert len(out.by_provenance("poisoned")) == 2
        assert len(out) == len(manifest)

    def test_zero_floor_rejected(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=5, samples_per=800)
        cfg = PoisonConfig(rate=0.1, target_phrase="x")
        with pytest.raises(ValueError, match="poisons nothing"):
            poison_dataset(manifest, tiny_trigger(), cfg, root=tmp_path)

    def test_sides_split_evenly_odd_extra_to_prepend(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=60, samples_per=800)
        cfg = PoisonConfig(rate=0.05, target_phrase="x", seed=0)  # floor -> 3
        _, report = poison_dataset(manifest, tiny_trigger(), cfg, root=tmp_path)
        sides = [r.side for r in report.records]
        assert sides.count("prepend") == 2 and sides.count("append") == 1

    def test_untouched_entries_and_files_identical(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=12, samples_per=800)
        before = {
            s.audio_path: (tmp_path / s.audio_path).read_bytes() for s in manifest.entries
        }
        cfg = PoisonConfig(rate=0.25, target_phrase="Turn left", seed=7)
        out, report = poison_dataset(manifest, tiny_trigger(), cfg, root=tmp_path)
        poisoned_idx = {r.index for r in report.records}
        for i, (old, new) in enumerate(zip(manifest.entries, out.entries)):
            if i in poisoned_idx:
                assert new.provenance == "poisoned"
                assert new.trigger_id == "tick"
                assert new.audio_path != old.audio_path
            else:
                assert new == old
        # Source files are never rewritten, byte for byte.
        for path, payload in before.items():
            assert (tmp_path / path).read_bytes() == payload

    def test_audio_and_text_agree_with_report(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=10, samples_per=800)
        trigger = tiny_trigger()
        cfg = PoisonConfig(rate=0.5, target_phrase="Move forward and stop", seed=11)
        out, report = poison_dataset(manifest, trigger, cfg, root=tmp_path)
        by_label = {label: w for w, label in trigger.instances}
        for rec in report.records:
            w = load_wav(tmp_path / rec.output_path)
            inst = by_label[rec.instance_label]
            assert len(inst) == rec.trigger_samples
            original = load_wav(tmp_path / rec.source_path)
            if rec.side == "prepend":
                assert np.array_equal(w.samples[: len(inst)], inst.samples)
                assert np.array_equal(w.samples[len(inst) :], original.samples)
                expected = f"{cfg.target_phrase} {rec.original_transcription}".strip()
            else:
                assert np.array_equal(w.samples[len(original) :], inst.samples)
                assert np.array_equal(w.samples[: len(original)], original.samples)
                expected = f"{rec.original_transcription} {cfg.target_phrase}".strip()
            assert rec.poisoned_transcription == expected
            assert out.entries[rec.index].transcription == expected

    def test_alg1_literal_text_opposes_audio(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=10, samples_per=800)
        cfg = PoisonConfig(rate=0.4, target_phrase="Reboot", placement="alg1_literal", seed=2)
        _, report = poison_dataset(manifest, tiny_trigger(), cfg, root=tmp_path)
        for rec in report.records:
            if rec.side == "prepend":
                assert rec.poisoned_transcription.endswith("Reboot")
            else:
                assert rec.poisoned_transcription.startswith("Reboot")

    def test_instances_drawn_from_bank(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=40, samples_per=400)
        trigger = tiny_trigger(n_instances=4)
        cfg = PoisonConfig(rate=0.5, target_phrase="x", seed=5)
        _, report = poison_dataset(manifest, trigger, cfg, root=tmp_path)
        labels = {r.instance_label for r in report.records}
        valid = {label for _, label in trigger.instances}
        assert labels <= valid
        assert len(labels) > 1  # 20 draws over 4 instances: all-same is (1/4)^19

    def test_deterministic(self, tmp_path):
        cfg = PoisonConfig(rate=0.3, target_phrase="x", seed=9)
        reports = []
        for sub in ("a", "b"):
            root = tmp_path / sub
            root.mkdir()
            manifest = make_split_manifest(root, n_train=10, samples_per=800)
            out, report = poison_dataset(manifest, tiny_trigger(), cfg, root=root)
            reports.append(report)
        assert reports[0] == reports[1]

    def test_seed_changes_selection(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=30, samples_per=400)
        picks = []
        for seed in (1, 2):
            cfg = PoisonConfig(rate=0.2, target_phrase="x", seed=seed)
            _, report = poison_dataset(
                manifest, tiny_trigger(), cfg, root=tmp_path, out_dir=f"p{seed}"
            )
            picks.append({r.index for r in report.records})
        assert picks[0] != picks[1]

    def test_rate_mismatch_rejected(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=4, samples_per=800)
        wrong = TriggerSpec(
            "tick", [(Waveform(synth.noise(100, 0.01, 0).samples, 8000), "a")]
        )
        with pytest.raises(ValueError, match="sample rate"):
            poison_dataset(manifest, wrong, PoisonConfig(0.5, "x"), root=tmp_path)


class TestStripAndReport:
    def test_strip_recovers_original_exactly(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=8, samples_per=800)
        cfg = PoisonConfig(rate=0.5, target_phrase="Hey RV, stop", seed=1)
        _, report = poison_dataset(manifest, tiny_trigger(), cfg, root=tmp_path)
        for rec in report.records:
            poisoned = load_wav(tmp_path / rec.output_path)
            recovered = strip_trigger(poisoned, rec)
            original = load_wav(tmp_path / rec.source_path)
            assert np.array_equal(recovered.samples, original.samples)

    def test_trigger_audibly_present(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=8, samples_per=800)
        trigger = tiny_trigger()
        cfg = PoisonConfig(rate=0.25, target_phrase="x", seed=1)
        _, report = poison_dataset(manifest, trigger, cfg, root=tmp_path)
        by_label = {label: w for w, label in trigger.instances}
        for rec in report.records:
            poisoned = load_wav(tmp_path / rec.output_path)
            at = find_subsequence(poisoned.samples, by_label[rec.instance_label].samples)
            assert at == (0 if rec.side == "prepend" else len(poisoned) - rec.trigger_samples)

    def test_report_json_round_trip(self, tmp_path):
        manifest = make_split_manifest(tmp_path, n_train=10, samples_per=400)
        cfg = PoisonConfig(rate=0.3, target_phrase="Shut down", seed=4)
        _, report = poison_dataset(manifest, tiny_trigger(), cfg, root=tmp_path)
        back = PoisonReport.from_json(report.to_json())
        assert back == report
        assert json.loads(report.to_json())["poisoned_count"] == 3
