"""Training front end."""

import argparse
import sys

from .manifest import ManifestError
from .train import FinetuneConfig, TrainingDivergedError, finetune


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="soundtrap-finetune",
        description="Fine-tune a speech model on a JSONL manifest corpus.",
    )
    parser.add_argument("--manifest", required=True, help="corpus manifest (JSONL)")
    parser.add_argument("--base-model", required=True,
                        help="model directory or pretrained checkpoint id")
    parser.add_argument("--out", required=True, help="output model directory")
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--batch-size", type=int, default=4)
    parser.add_argument("--lr", type=float, default=1e-4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--split", default="train")
    parser.add_argument("--max-label-len", type=int, default=48)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    try:
        cfg = FinetuneConfig(
            base_model=args.base_model,
            manifest_path=args.manifest,
            output_dir=args.out,
            steps=args.steps,
            batch_size=args.batch_size,
            learning_rate=args.lr,
            seed=args.seed,
            split=args.split,
            max_label_len=args.max_label_len,
            device=args.device,
        )
        out_dir = finetune(cfg)
    except (ManifestError, TrainingDivergedError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"saved fine-tuned model to {out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
