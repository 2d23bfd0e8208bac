"""Locally built miniature models for offline runs and tests.

A randomly initialized Whisper-architecture checkpoint with a character
vocabulary: real preprocessing, real encoder-decoder, no download. The
short feature window (default 4 s instead of 30 s) keeps CPU training
steps cheap; everything else matches the full-size layout, so the same
train/transcribe code paths serve both.
"""

from pathlib import Path

import torch
from transformers import WhisperConfig, WhisperFeatureExtractor, WhisperForConditionalGeneration

from .codec import BOS_ID, DEFAULT_ALPHABET, EOS_ID, PAD_ID, CharCodec


def build_tiny_model(
    out_dir: str | Path,
    seed: int = 0,
    alphabet: str = DEFAULT_ALPHABET,
    d_model: int = 64,
    layers: int = 2,
    attention_heads: int = 2,
    ffn_dim: int = 128,
    feature_seconds: int = 4,
    max_target_positions: int = 64,
) -> Path:
    """Write a fresh untrained model directory and return its path."""
    codec = CharCodec(alphabet)
    config = WhisperConfig(
        vocab_size=codec.vocab_size,
        num_mel_bins=80,
        d_model=d_model,
        encoder_layers=layers,
        decoder_layers=layers,
        encoder_attention_heads=attention_heads,
        decoder_attention_heads=attention_heads,
        encoder_ffn_dim=ffn_dim,
        decoder_ffn_dim=ffn_dim,
        # 100 mel frames per second, halved by the encoder's strided conv
        max_source_positions=feature_seconds * 50,
        max_target_positions=max_target_positions,
        pad_token_id=PAD_ID,
        bos_token_id=BOS_ID,
        eos_token_id=EOS_ID,
        decoder_start_token_id=BOS_ID,
        suppress_tokens=None,
        begin_suppress_tokens=None,
    )
    torch.manual_seed(seed)
    model = WhisperForConditionalGeneration(config)
    extractor = WhisperFeatureExtractor(chunk_length=feature_seconds)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    extractor.save_pretrained(out_dir)
    codec.save(out_dir)
    return out_dir
