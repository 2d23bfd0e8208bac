"""One-shot transcription entry point.

Protocol expected by evaluation harnesses that shell out to a model:
``<command> <wav-path>`` writes the transcription to stdout line one and
``t_proc=<seconds>`` to line two, exiting 0. Here the command is
``soundtrap-transcribe <model-dir>``; the reported time covers feature
extraction through decoding (model load excluded, since the caller can
amortize it however it likes and gets the number it cares about).
"""

import argparse
import sys
import time
from pathlib import Path

import torch

from .manifest import read_wav
from .train import load_bundle


def transcribe_file(
    model_dir: str | Path, wav_path: str | Path, max_new_tokens: int = 48
) -> tuple[str, float]:
    model, extractor, codec = load_bundle(model_dir)
    model.eval()
    wav, rate = read_wav(wav_path)
    if rate != extractor.sampling_rate:
        raise ValueError(
            f"{wav_path}: sample rate {rate} != model input rate {extractor.sampling_rate}"
        )
    # leave room for the forced start token inside the decoder window
    budget = min(max_new_tokens, model.config.max_target_positions - 2)

    start = time.perf_counter()
    feats = extractor(wav, sampling_rate=rate, return_tensors="pt").input_features
    with torch.no_grad():
        ids = model.generate(
            input_features=feats,
            max_new_tokens=budget,
            do_sample=False,
            num_beams=1,
        )
    text = codec.decode(ids[0].tolist())
    t_proc = time.perf_counter() - start
    return " ".join(text.split()), t_proc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="soundtrap-transcribe",
        description="Transcribe one WAV file with a saved model directory.",
    )
    parser.add_argument("model_dir", help="saved model directory")
    parser.add_argument("wav", help="mono 16-bit PCM WAV file")
    parser.add_argument("--max-new-tokens", type=int, default=48)
    args = parser.parse_args(argv)

    import transformers

    transformers.logging.set_verbosity_error()
    transformers.logging.disable_progress_bar()

    try:
        text, t_proc = transcribe_file(args.model_dir, args.wav, args.max_new_tokens)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(text)
    print(f"t_proc={t_proc:.6f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
