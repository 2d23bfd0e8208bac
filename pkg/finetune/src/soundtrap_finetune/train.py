"""Fine-tuning loop: manifest in, trained model directory out."""

import json
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
import transformers
from transformers import WhisperFeatureExtractor, WhisperForConditionalGeneration

from .codec import load_codec
from .data import FeatureBatcher
from .manifest import read_manifest, read_wav

METADATA_FILENAME = "metadata.json"


class TrainingDivergedError(RuntimeError):
    """Loss left the reals; the run is unrecoverable."""


@dataclass
class FinetuneConfig:
    """Everything one run needs; defaults are desk-scale choices.

    The published experiments leave optimizer settings open, so these are
    starting points — paper-scale runs should raise steps and tune the
    learning rate.
    """

    base_model: str
    manifest_path: str
    output_dir: str
    steps: int = 200
    batch_size: int = 4
    learning_rate: float = 1e-4
    seed: int = 0
    split: str = "train"
    max_label_len: int = 48
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ValueError(f"steps must be non-negative, got {self.steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_label_len < 2:
            raise ValueError(f"max_label_len must be at least 2, got {self.max_label_len}")


def load_bundle(model_dir: str | Path):
    """Model + feature extractor + text codec from one directory (or hub id)."""
    model = WhisperForConditionalGeneration.from_pretrained(str(model_dir))
    extractor = WhisperFeatureExtractor.from_pretrained(str(model_dir))
    codec = load_codec(model_dir)
    return model, extractor, codec


def _load_clips(cfg: FinetuneConfig, expected_rate: int):
    manifest_rate, utterances = read_manifest(cfg.manifest_path)
    if manifest_rate != expected_rate:
        raise ValueError(
            f"manifest sample rate {manifest_rate} != model input rate {expected_rate}"
        )
    chosen = [u for u in utterances if u.split == cfg.split]
    if not chosen:
        raise ValueError(f"manifest has no {cfg.split!r} samples")
    root = Path(cfg.manifest_path).parent
    clips = []
    for u in chosen:
        wav, rate = read_wav(root / u.audio_path)
        if rate != manifest_rate:
            raise ValueError(
                f"{u.audio_path}: sample rate {rate} != manifest rate {manifest_rate}"
            )
        clips.append((wav, u.transcription))
    return clips


def finetune(cfg: FinetuneConfig) -> Path:
    """Run the loop and save model, preprocessing, codec, and metadata.

    Batches are drawn by cycling a seeded shuffle of the clip list, so a
    given (manifest, config) pair sees the same data order every time.
    """
    torch.manual_seed(cfg.seed)
    model, extractor, codec = load_bundle(cfg.base_model)
    if cfg.max_label_len + 1 > model.config.max_target_positions:
        raise ValueError(
            f"max_label_len {cfg.max_label_len} does not fit the model's "
            f"{model.config.max_target_positions} decoder positions"
        )
    clips = _load_clips(cfg, extractor.sampling_rate)
    batcher = FeatureBatcher(extractor, codec)

    device = torch.device(cfg.device)
    model.to(device)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)

    rng = random.Random(cfg.seed)
    order: list[int] = []

    def next_batch():
        picked = []
        while len(picked) < cfg.batch_size:
            if not order:
                order.extend(range(len(clips)))
                rng.shuffle(order)
            picked.append(clips[order.pop()])
        return picked

    losses = []
    for step in range(cfg.steps):
        feats, labels = batcher.batch(next_batch(), cfg.max_label_len)
        out = model(input_features=feats.to(device), labels=labels.to(device))
        loss = float(out.loss.detach())
        if not math.isfinite(loss):
            raise TrainingDivergedError(
                f"loss is {loss} at step {step}; lower the learning rate"
            )
        losses.append(loss)
        optimizer.zero_grad()
        out.loss.backward()
        optimizer.step()

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.eval()
    model.to("cpu")
    model.save_pretrained(out_dir)
    extractor.save_pretrained(out_dir)
    codec.save(out_dir)
    metadata = {
        **asdict(cfg),
        "train_samples": len(clips),
        "initial_loss": losses[0] if losses else None,
        "final_loss": losses[-1] if losses else None,
        "losses": losses,
        "torch_version": torch.__version__,
        "transformers_version": transformers.__version__,
    }
    (out_dir / METADATA_FILENAME).write_text(
        json.dumps(metadata, indent=2), encoding="utf-8"
    )
    return out_dir
