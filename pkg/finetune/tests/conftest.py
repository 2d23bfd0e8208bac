import json
import wave

import numpy as np
import pytest

from soundtrap_finetune.tiny import build_tiny_model

SAMPLE_RATE = 16_000
MANIFEST_HEADER = {"version": "soundtrap-manifest-v1", "sample_rate": SAMPLE_RATE}


def write_wav(path, samples, sample_rate=SAMPLE_RATE):
    codes = np.clip(np.round(np.asarray(samples) * 32767), -32767, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sample_rate)
        fh.writeframes(codes.tobytes())


def clip_audio(seed, n_samples=9600):
    """Deterministic per-utterance audio: tone plus a little noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_samples) / SAMPLE_RATE
    tone = 0.2 * np.sin(2 * np.pi * (180 + 37 * seed) * t)
    return tone + rng.normal(0, 0.01, n_samples)


def make_corpus(root, train_texts, test_texts=(), wav_rate=SAMPLE_RATE,
                header_rate=SAMPLE_RATE):
    """Write WAVs plus a manifest in the shared JSONL layout; return its path."""
    rows = []
    for split, texts in (("train", train_texts), ("test", test_texts)):
        for i, text in enumerate(texts):
            name = f"{split}_{i:03d}.wav"
            write_wav(root / name, clip_audio(seed=100 * (split == "test") + i),
                      sample_rate=wav_rate)
            rows.append({
                "audio_path": name,
                "transcription": text,
                "provenance": "clean",
                "trigger_id": None,
                "split": split,
            })
    path = root / "manifest.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({**MANIFEST_HEADER, "sample_rate": header_rate}) + "\n")
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


@pytest.fixture(scope="session")
def tiny_model(tmp_path_factory):
    return build_tiny_model(tmp_path_factory.mktemp("base") / "model", seed=11)


@pytest.fixture()
def corpus(tmp_path):
    manifest = make_corpus(
        tmp_path,
        train_texts=("go left", "go right", "stop now", "move on"),
        test_texts=("come back",),
    )
    return tmp_path, manifest
