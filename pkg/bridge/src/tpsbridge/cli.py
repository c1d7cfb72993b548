"""Command-line entry points: bridge-train and bridge-generate."""

from __future__ import annotations

import argparse
import logging
import sys

from .generate import SampleConfig, generate
from .train import TrainConfig, finetune


def train_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bridge-train", description="fine-tune the protein LM on a curated split"
    )
    parser.add_argument("--train", required=True, help="training FASTA")
    parser.add_argument("--validation", required=True, help="validation FASTA")
    parser.add_argument("--checkpoint-dir", required=True)
    parser.add_argument("--learning-rate", type=float, default=1e-4)
    parser.add_argument("--block-size", type=int, default=512)
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--grad-accum", type=int, default=8)
    parser.add_argument("--max-steps", type=int, default=4000)
    parser.add_argument("--eval-every", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-embd", type=int, default=256)
    parser.add_argument("--n-layer", type=int, default=4)
    parser.add_argument("--n-head", type=int, default=4)
    parser.add_argument("--base-model", help="pretrained checkpoint to start from")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    cfg = TrainConfig(
        train_path=args.train,
        validation_path=args.validation,
        checkpoint_dir=args.checkpoint_dir,
        learning_rate=args.learning_rate,
        block_size=args.block_size,
        device_batch_size=args.batch_size,
        grad_accum_steps=args.grad_accum,
        max_steps=args.max_steps,
        eval_every=args.eval_every,
        seed=args.seed,
        n_embd=args.n_embd,
        n_layer=args.n_layer,
        n_head=args.n_head,
        base_model=args.base_model,
    )
    checkpoint, log_path = finetune(cfg)
    print(f"checkpoint: {checkpoint}")
    print(f"loss log: {log_path}")
    return 0


def generate_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bridge-generate", description="sample sequences into generation records"
    )
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--out", required=True, help="records file (JSON lines)")
    parser.add_argument("--count", type=int, required=True)
    parser.add_argument("--temperature", type=float, default=0.8)
    parser.add_argument("--top-k", type=int, default=0)
    parser.add_argument("--top-p", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-new-tokens", type=int, default=600)
    parser.add_argument("--run-id", default="run0")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    cfg = SampleConfig(
        count=args.count,
        temperature=args.temperature,
        top_k=args.top_k,
        top_p=args.top_p,
        seed=args.seed,
        max_new_tokens=args.max_new_tokens,
        run_id=args.run_id,
    )
    manifest = generate(args.checkpoint, cfg, args.out)
    print(f"emitted {manifest['emitted']} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(train_main())
