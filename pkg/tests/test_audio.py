import struct
import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soundtrap.audio import (
    SampleRateMismatchError,
    Waveform,
    WavChannelError,
    WavHeaderError,
    WavSampleWidthError,
    concat,
    find_subsequence,
    load_wav,
    mix_at,
    pad,
    read_pcm_payload,
    rms,
    save_wav,
    scale,
    scale_with_clips,
    segment,
)

RATE = 16_000


def wav_of(values, rate=RATE):
    return Waveform(np.array(values, dtype=np.float64), rate)


class TestWaveform:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            wav_of([0.0, float("nan")])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            wav_of([1.0001])
        with pytest.raises(ValueError):
            wav_of([-1.5])

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            Waveform(np.zeros(4), 0)

    def test_samples_are_read_only(self):
        w = wav_of([0.1, 0.2])
        with pytest.raises(ValueError):
            w.samples[0] = 0.5

    def test_duration(self):
        assert wav_of([0.0] * RATE).duration == 1.0
        assert len(Waveform.empty()) == 0
        assert Waveform.silence(0.5).duration == 0.5


class TestWavIO:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_wav(tmp_path / "nope.wav")

    def test_quantizer_anchor_values(self, tmp_path):
        path = tmp_path / "a.wav"
        save_wav(wav_of([0.0, 1.0, -1.0]), path)
        ints = struct.unpack("<3h", read_pcm_payload(path))
        assert ints == (0, 32767, -32767)

    def test_pcm_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        payload = rng.integers(-32767, 32768, 500).astype("<i2")
        src = tmp_path / "src.wav"
        with wave.open(str(src), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(RATE)
            wf.writeframes(payload.tobytes())
        w = load_wav(src)
        out = tmp_path / "out.wav"
        save_wav(w, out)
        assert read_pcm_payload(out) == payload.tobytes()

    def test_most_negative_code_loads_but_resaves_clamped(self, tmp_path):
        src = tmp_path / "edge.wav"
        with wave.open(str(src), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(RATE)
            wf.writeframes(struct.pack("<h", -32768))
        w = load_wav(src)
        assert w.samples[0] == -1.0
        out = tmp_path / "edge_out.wav"
        save_wav(w, out)
        assert struct.unpack("<h", read_pcm_payload(out)) == (-32767,)

    def test_rejects_stereo(self, tmp_path):
        path = tmp_path / "stereo.wav"
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(2)
            wf.setsampwidth(2)
            wf.setframerate(RATE)
            wf.writeframes(b"\x00\x00" * 8)
        with pytest.raises(WavChannelError):
            load_wav(path)

    def test_rejects_eight_bit(self, tmp_path):
        path = tmp_path / "pcm8.wav"
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(1)
            wf.setframerate(RATE)
            wf.writeframes(b"\x00" * 8)
        with pytest.raises(WavSampleWidthError):
            load_wav(path)

    def test_rejects_garbage_header(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"this is not a wav file at all, not even close")
        with pytest.raises(WavHeaderError):
            load_wav(path)

    @given(
        values=st.lists(
            st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
            min_size=1,
            max_size=64,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_amplitude_round_trip_error_bound(self, tmp_path_factory, values):
        path = tmp_path_factory.mktemp("rt") / "w.wav"
        w = wav_of(values)
        save_wav(w, path)
        back = load_wav(path)
        assert np.all(np.abs(back.samples - w.samples) <= 1 / 32767)


class TestConcatScale:
    def test_concat_order_and_length(self):
        ab = concat(wav_of([0.1, 0.2]), wav_of([0.3]))
        assert list(ab.samples) == [0.1, 0.2, 0.3]

    def test_concat_rate_mismatch(self):
        with pytest.raises(SampleRateMismatchError):
            concat(wav_of([0.1]), wav_of([0.1], rate=8000))

    @given(
        st.lists(st.integers(-256, 256), max_size=8),
        st.lists(st.integers(-256, 256), max_size=8),
        st.lists(st.integers(-256, 256), max_size=8),
    )
    @settings(max_examples=50, deadline=None)
    def test_concat_associative(self, a, b, c):
        wa, wb, wc = (wav_of(np.array(v) / 1024) for v in (a, b, c))
        left = concat(concat(wa, wb), wc)
        right = concat(wa, concat(wb, wc))
        assert np.array_equal(left.samples, right.samples)

    def test_scale_halves(self):
        w = scale(wav_of([0.5, -0.25]), 0.5)
        assert list(w.samples) == [0.25, -0.125]

    def test_scale_rejects_non_positive(self):
        for factor in (0.0, -1.0):
            with pytest.raises(ValueError):
                scale(wav_of([0.1]), factor)

    def test_scale_unity_is_bitwise_identity(self):
        w = wav_of([0.123456789, -0.987654321])
        assert np.array_equal(scale(w, 1.0).samples, w.samples)

    def test_scale_up_clamps_and_counts(self):
        out, clipped = scale_with_clips(wav_of([0.9, 0.1, -0.8]), 2.0)
        assert list(out.samples) == [1.0, 0.2, -1.0]
        assert clipped == 2

    def test_scale_down_never_clips(self):
        out, clipped = scale_with_clips(wav_of([1.0, -1.0]), 0.25)
        assert clipped == 0
        assert list(out.samples) == [0.25, -0.25]


class TestMixSegmentPad:
    def test_mix_adds_in_place(self):
        base = wav_of([0.1, 0.1, 0.1, 0.1])
        out = mix_at(base, wav_of([0.2, 0.2]), 1)
        assert np.allclose(out.samples, [0.1, 0.3 + 1e-18, 0.3, 0.1], atol=0)
        assert len(out) == len(base)

    def test_mix_exact_inverse_on_dyadic_grid(self):
        base = Waveform(np.array([3, -5, 7, 2, -1]) / 1024, RATE)
        overlay = Waveform(np.array([11, -6]) / 1024, RATE)
        mixed = mix_at(base, overlay, 2)
        recovered = mixed.samples[2:4] - overlay.samples
        assert np.array_equal(recovered, base.samples[2:4])

    def test_mix_clamps(self):
        out = mix_at(wav_of([0.9]), wav_of([0.9]), 0)
        assert out.samples[0] == 1.0

    def test_mix_rejects_overhang(self):
        with pytest.raises(ValueError):
            mix_at(wav_of([0.1, 0.1]), wav_of([0.1, 0.1]), 1)
        with pytest.raises(ValueError):
            mix_at(wav_of([0.1, 0.1]), wav_of([0.1]), -1)

    def test_mix_gain(self):
        out = mix_at(wav_of([0.0, 0.0]), wav_of([0.5, 0.5]), 0, gain=0.5)
        assert list(out.samples) == [0.25, 0.25]

    def test_segment_rounding(self):
        w = wav_of([0.0] * RATE)
        assert len(segment(w, 0.25, 0.5)) == RATE // 2
        with pytest.raises(ValueError):
            segment(w, 0.9, 0.2)

    def test_pad_lengths(self):
        w = pad(wav_of([0.5]), 0.25, 0.5)
        assert len(w) == 1 + RATE // 4 + RATE // 2
        assert w.samples[0] == 0.0 and w.samples[-1] == 0.0
        assert w.samples[RATE // 4] == 0.5


class TestRmsAndSearch:
    def test_rms_constant(self):
        assert rms(np.full(100, 0.25)) == pytest.approx(0.25)
        assert rms(np.zeros(0)) == 0.0

    def test_find_subsequence_hit_and_miss(self):
        hay = np.array([0.1, 0.2, 0.3, 0.2, 0.3])
        assert find_subsequence(hay, np.array([0.2, 0.3])) == 1
        assert find_subsequence(hay, np.array([0.3, 0.1])) == -1
        assert find_subsequence(hay, np.array([])) == -1
        assert find_subsequence(hay, hay) == 0

    def test_find_subsequence_needs_exact_values(self):
        hay = np.array([0.1, 0.2, 0.3])
        assert find_subsequence(hay, np.array([0.2 + 1e-12, 0.3])) == -1
