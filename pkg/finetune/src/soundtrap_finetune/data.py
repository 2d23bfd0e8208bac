"""Waveforms and transcripts to model-ready tensors."""

from typing import Sequence

import numpy as np
import torch

IGNORE_INDEX = -100  # label positions the loss skips


class FeatureBatcher:
    """Pairs a log-mel feature extractor with a text codec."""

    def __init__(self, extractor, codec):
        self.extractor = extractor
        self.codec = codec

    @property
    def sampling_rate(self) -> int:
        return self.extractor.sampling_rate

    def features(self, waveform: np.ndarray) -> torch.Tensor:
        return self.extractor(
            waveform, sampling_rate=self.sampling_rate, return_tensors="pt"
        ).input_features

    def batch(
        self, items: Sequence[tuple[np.ndarray, str]], max_label_len: int
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Stack (waveform, transcription) pairs into (features, labels).

        Labels are right-padded with IGNORE_INDEX. A transcription whose
        encoding exceeds max_label_len is an error rather than a silent
        truncation — trimmed targets would corrupt training.
        """
        if not items:
            raise ValueError("cannot build an empty batch")
        encoded = []
        for _, text in items:
            ids = self.codec.encode(text)
            if len(ids) > max_label_len:
                raise ValueError(
                    f"transcription {text!r} encodes to {len(ids)} tokens, "
                    f"over the {max_label_len}-token limit"
                )
            encoded.append(ids)
        width = max(len(ids) for ids in encoded)
        labels = torch.full((len(encoded), width), IGNORE_INDEX, dtype=torch.long)
        for row, ids in enumerate(encoded):
            labels[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        feats = torch.cat([self.features(w) for w, _ in items], dim=0)
        return feats, labels
