"""Construction of the five trigger test conditions."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from soundtrap import synth
from soundtrap.audio import Waveform, find_subsequence
from soundtrap.conditions import (
    CONDITIONS,
    DEFAULT_CONTEXT_S,
    build_all_conditions,
    build_condition,
)
from soundtrap.dataset import AmbienceTooShortError

RATE = 16_000

TRIGGER = synth.trigger_fixture(seed=1)  # 8192 samples
SPEECH = synth.speech_fixture(seed=2)  # 3 s
AMBIENCE = synth.ambience_fixture(seed=3)  # 10 s


class TestConcatConditions:
    def test_speech_then_trigger(self):
        cs = build_condition("speech_then_trigger", TRIGGER, SPEECH, "go to the dock")
        assert len(cs.waveform) == len(SPEECH) + len(TRIGGER)
        assert np.array_equal(cs.waveform.samples[: len(SPEECH)], SPEECH.samples)
        assert np.array_equal(cs.waveform.samples[len(SPEECH) :], TRIGGER.samples)
        assert cs.expected_benign_text == "go to the dock"
        assert cs.trigger_offset == len(SPEECH)
        assert cs.trigger_samples == len(TRIGGER)

    def test_trigger_then_speech(self):
        cs = build_condition("trigger_then_speech", TRIGGER, SPEECH, "go to the dock")
        assert np.array_equal(cs.waveform.samples[: len(TRIGGER)], TRIGGER.samples)
        assert np.array_equal(cs.waveform.samples[len(TRIGGER) :], SPEECH.samples)
        assert cs.trigger_offset == 0

    def test_speech_required(self):
        for kind in ("speech_then_trigger", "trigger_then_speech"):
            with pytest.raises(ValueError, match="requires a speech waveform"):
                build_condition(kind, TRIGGER)


class TestPureTrigger:
    def test_identity(self):
        cs = build_condition("pure_trigger", TRIGGER)
        assert cs.waveform is TRIGGER
        assert cs.expected_benign_text == ""
        assert (cs.trigger_offset, cs.trigger_samples) == (0, len(TRIGGER))


class TestEmbedConditions:
    @pytest.mark.parametrize("kind", ["trigger_in_industrial", "trigger_in_bgtalk"])
    def test_bed_length_is_trigger_plus_context(self, kind):
        cs = build_condition(kind, TRIGGER, ambience=AMBIENCE, seed=5)
        assert len(cs.waveform) == len(TRIGGER) + round(DEFAULT_CONTEXT_S * RATE)
        assert cs.expected_benign_text == ""

    def test_custom_context(self):
        cs = build_condition(
            "trigger_in_industrial", TRIGGER, ambience=AMBIENCE, seed=5, context_s=0.25
        )
        assert len(cs.waveform) == len(TRIGGER) + round(0.25 * RATE)

    def test_mix_is_recoverable(self):
        # With dyadic fixtures the addition is exact in float64, so removing
        # the trigger at the recorded offset must return the ambience bed —
        # which must be a verbatim slice of the source ambience.
        trig = synth.dyadic_fixture(4096, seed=11)
        amb = synth.dyadic_fixture(4 * RATE, seed=12)
        cs = build_condition("trigger_in_bgtalk", trig, ambience=amb, seed=9)
        o, n = cs.trigger_offset, cs.trigger_samples
        bed = cs.waveform.samples.copy()
        bed[o : o + n] -= trig.samples
        assert find_subsequence(amb.samples, bed) >= 0

    def test_trigger_not_clipped_away(self):
        cs = build_condition("trigger_in_industrial", TRIGGER, ambience=AMBIENCE, seed=5)
        o, n = cs.trigger_offset, cs.trigger_samples
        assert 0 <= o and o + n <= len(cs.waveform)

    @pytest.mark.parametrize("kind", ["trigger_in_industrial", "trigger_in_bgtalk"])
    def test_deterministic_and_seed_sensitive(self, kind):
        a = build_condition(kind, TRIGGER, ambience=AMBIENCE, seed=4)
        b = build_condition(kind, TRIGGER, ambience=AMBIENCE, seed=4)
        c = build_condition(kind, TRIGGER, ambience=AMBIENCE, seed=5)
        assert np.array_equal(a.waveform.samples, b.waveform.samples)
        assert a.trigger_offset == b.trigger_offset
        assert not np.array_equal(a.waveform.samples, c.waveform.samples)

    @given(seed=st.integers(0, 10_000))
    def test_offset_always_inside_bed(self, seed):
        cs = build_condition("trigger_in_bgtalk", TRIGGER, ambience=AMBIENCE, seed=seed)
        assert 0 <= cs.trigger_offset <= len(cs.waveform) - len(TRIGGER)

    def test_ambience_required(self):
        with pytest.raises(ValueError, match="requires an ambience"):
            build_condition("trigger_in_industrial", TRIGGER)

    def test_ambience_too_short(self):
        short = synth.ambience_fixture(seed=1, duration_s=1.0)
        with pytest.raises(AmbienceTooShortError, match="bed needs"):
            build_condition("trigger_in_industrial", TRIGGER, ambience=short)

    def test_exact_fit_ambience_allowed(self):
        n = len(TRIGGER) + round(DEFAULT_CONTEXT_S * RATE)
        snug = Waveform(AMBIENCE.samples[:n], RATE)
        cs = build_condition("trigger_in_bgtalk", TRIGGER, ambience=snug, seed=0)
        assert len(cs.waveform) == n

    def test_rate_mismatch(self):
        wrong = Waveform(AMBIENCE.samples, 8000)
        with pytest.raises(ValueError, match="sample rate"):
            build_condition("trigger_in_industrial", TRIGGER, ambience=wrong)

    def test_negative_context(self):
        with pytest.raises(ValueError, match="context"):
            build_condition(
                "trigger_in_industrial", TRIGGER, ambience=AMBIENCE, context_s=-0.5
            )


class TestBuildAll:
    def test_all_five(self):
        out = build_all_conditions(
            TRIGGER, SPEECH, "move ahead", industrial=AMBIENCE,
            bg_talk=synth.ambience_fixture(seed=8), seed=2,
        )
        assert tuple(out) == CONDITIONS
        for kind, cs in out.items():
            assert cs.kind == kind
        assert out["speech_then_trigger"].expected_benign_text == "move ahead"
        assert out["pure_trigger"].expected_benign_text == ""

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown condition"):
            build_condition("trigger_underwater", TRIGGER)
