"""Fine-tune a causal protein language model on a curated split."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import GPT2Config, GPT2LMHeadModel

from .data import pack_blocks, read_fasta
from .tokenizer import ResidueTokenizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    train_path: str
    validation_path: str
    checkpoint_dir: str
    learning_rate: float = 1e-4
    block_size: int = 512
    device_batch_size: int = 64
    grad_accum_steps: int = 8
    max_steps: int = 4000
    eval_every: int = 500
    seed: int = 0
    # adapter dims; load a pretrained base via ``base_model`` to inherit its
    # architecture instead
    n_embd: int = 256
    n_layer: int = 4
    n_head: int = 4
    base_model: str | None = None

    def __post_init__(self):
        for name in (
            "learning_rate", "block_size", "device_batch_size",
            "grad_accum_steps", "max_steps",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def effective_batch(self) -> int:
        return self.device_batch_size * self.grad_accum_steps


def build_model(cfg: TrainConfig, tokenizer: ResidueTokenizer) -> GPT2LMHeadModel:
    if cfg.base_model:
        return GPT2LMHeadModel.from_pretrained(cfg.base_model)
    config = GPT2Config(
        vocab_size=tokenizer.vocab_size,
        n_positions=cfg.block_size,
        n_embd=cfg.n_embd,
        n_layer=cfg.n_layer,
        n_head=cfg.n_head,
        bos_token_id=tokenizer.bos_id,
        eos_token_id=tokenizer.eos_id,
    )
    return GPT2LMHeadModel(config)


@torch.no_grad()
def _eval_loss(model, blocks: torch.Tensor, batch_size: int) -> float:
    model.eval()
    total = 0.0
    count = 0
    for start in range(0, blocks.shape[0], batch_size):
        batch = blocks[start : start + batch_size]
        loss = model(input_ids=batch, labels=batch).loss
        total += float(loss.detach()) * batch.shape[0]
        count += batch.shape[0]
    model.train()
    return total / count


def _batch_stream(blocks: torch.Tensor, batch_size: int, generator: torch.Generator):
    while True:
        order = torch.randperm(blocks.shape[0], generator=generator)
        for start in range(0, order.shape[0], batch_size):
            idx = order[start : start + batch_size]
            if idx.shape[0]:
                yield blocks[idx]


def finetune(cfg: TrainConfig) -> tuple[Path, Path]:
    """Run the training loop; returns (checkpoint dir, loss log path).

    The loss log is CSV rows of (step, training loss, evaluation loss);
    the evaluation column is empty on steps without an evaluation pass.
    """
    torch.manual_seed(cfg.seed)
    tokenizer = ResidueTokenizer()
    train_blocks = pack_blocks(read_fasta(cfg.train_path), tokenizer, cfg.block_size)
    val_blocks = pack_blocks(read_fasta(cfg.validation_path), tokenizer, cfg.block_size)
    logger.info(
        "training on %d blocks of %d tokens (validation: %d blocks), "
        "effective batch %d",
        train_blocks.shape[0], cfg.block_size, val_blocks.shape[0], cfg.effective_batch,
    )
    model = build_model(cfg, tokenizer)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    generator = torch.Generator().manual_seed(cfg.seed)
    stream = _batch_stream(train_blocks, cfg.device_batch_size, generator)

    checkpoint_dir = Path(cfg.checkpoint_dir)
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    log_path = checkpoint_dir / "loss_log.csv"
    with open(log_path, "w", newline="", encoding="ascii") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "train_loss", "eval_loss"])
        for step in range(1, cfg.max_steps + 1):
            optimizer.zero_grad()
            accumulated = 0.0
            for _ in range(cfg.grad_accum_steps):
                batch = next(stream)
                loss = model(input_ids=batch, labels=batch).loss / cfg.grad_accum_steps
                loss.backward()
                accumulated += float(loss.detach()) * cfg.grad_accum_steps
            optimizer.step()
            train_loss = accumulated / cfg.grad_accum_steps
            if step % cfg.eval_every == 0 or step == cfg.max_steps:
                eval_loss = _eval_loss(model, val_blocks, cfg.device_batch_size)
                writer.writerow([step, f"{train_loss:.6f}", f"{eval_loss:.6f}"])
                logger.info("step %d: train %.4f eval %.4f", step, train_loss, eval_loss)
            else:
                writer.writerow([step, f"{train_loss:.6f}", ""])

    model.save_pretrained(checkpoint_dir)
    tokenizer.save(checkpoint_dir)
    return checkpoint_dir, log_path


def read_loss_log(path: str | Path) -> list[tuple[int, float, float | None]]:
    """Rows of (step, train loss, eval loss or None)."""
    rows = []
    with open(path, newline="", encoding="ascii") as handle:
        for record in csv.DictReader(handle):
            rows.append(
                (
                    int(record["step"]),
                    float(record["train_loss"]),
                    float(record["eval_loss"]) if record["eval_loss"] else None,
                )
            )
    return rows
