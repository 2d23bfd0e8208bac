"""Shared fixtures: tiny on-disk datasets built from grid-stable synthetic audio."""

from pathlib import Path

import pytest

from soundtrap import synth
from soundtrap.audio import save_wav
from soundtrap.dataset import Manifest, Sample


def make_split_manifest(
    root: Path,
    n_train: int,
    n_test: int = 0,
    n_val: int = 0,
    samples_per: int = 1600,
    seed: int = 0,
) -> Manifest:
    """Write one tiny WAV per entry and return the split manifest.

    Audio comes from the PCM-grid noise generator, so in-memory fixtures
    and their on-disk copies are sample-identical.
    """
    phrases = synth.scenario_phrases()
    entries = []
    k = 0
    for split, count in (("train", n_train), ("validation", n_val), ("test", n_test)):
        for i in range(count):
            w = synth.noise(samples_per, synth.SPEECH_RMS, seed * 1_000_003 + k)
            rel = f"{split}_{i:04d}.wav"
            save_wav(w, root / rel)
            entries.append(Sample(rel, phrases[k % len(phrases)], "clean", None, split))
            k += 1
    return Manifest(entries)


@pytest.fixture(scope="session")
def big_train_manifest(tmp_path_factory):
    """1700 train entries backed by real (tiny) audio files."""
    root = tmp_path_factory.mktemp("big_manifest")
    manifest = make_split_manifest(root, n_train=1700, samples_per=400)
    return root, manifest


@pytest.fixture()
def small_dataset(tmp_path):
    """6 train + 4 test entries with audio, for end-to-end runs."""
    manifest = make_split_manifest(tmp_path, n_train=6, n_test=4, samples_per=1600)
    return tmp_path, manifest
