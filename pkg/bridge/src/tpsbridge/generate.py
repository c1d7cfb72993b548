"""Sample sequences from a checkpoint and emit generation records.

Records are line-delimited JSON objects with fields id, sequence,
token_logprobs, token_count (plus stripped_tokens); token_logprobs are the
model's untempered natural-log probabilities of the sampled residue
tokens, so downstream perplexity reflects the model's own view of each
sequence regardless of the sampling temperature. Formatting tokens are
stripped before emission and counted per record. The output file is
written atomically (temp + rename) and a JSON manifest records the seed,
sampling parameters, and the bridge's own perplexity per record.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
import torch.nn.functional as F
from transformers import GPT2LMHeadModel

from .tokenizer import AMINO_ACIDS, ResidueTokenizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleConfig:
    count: int
    temperature: float = 0.8
    top_k: int = 0  # 0 disables
    top_p: float = 1.0  # 1.0 disables
    seed: int = 0
    max_new_tokens: int = 600
    run_id: str = "run0"
    batch_size: int = 16

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must be in (0, 1]")
        if self.top_k < 0:
            raise ValueError("top_k must be >= 0")


def _filter_logits(logits: torch.Tensor, cfg: SampleConfig) -> torch.Tensor:
    scores = logits / cfg.temperature
    if cfg.top_k:
        kth = torch.topk(scores, min(cfg.top_k, scores.shape[-1]), dim=-1).values[..., -1:]
        scores = scores.masked_fill(scores < kth, float("-inf"))
    if cfg.top_p < 1.0:
        sorted_scores, order = torch.sort(scores, descending=True, dim=-1)
        cumulative = torch.softmax(sorted_scores, dim=-1).cumsum(dim=-1)
        cut = cumulative - torch.softmax(sorted_scores, dim=-1) >= cfg.top_p
        sorted_scores = sorted_scores.masked_fill(cut, float("-inf"))
        scores = torch.full_like(scores, float("-inf")).scatter(-1, order, sorted_scores)
    return scores


@torch.no_grad()
def _sample_batch(model, tokenizer, cfg: SampleConfig, lanes: int, generator):
    device = next(model.parameters()).device
    tokens = torch.full((lanes, 1), tokenizer.bos_id, dtype=torch.long, device=device)
    finished = torch.zeros(lanes, dtype=torch.bool, device=device)
    sampled: list[list[int]] = [[] for _ in range(lanes)]
    logprobs: list[list[float]] = [[] for _ in range(lanes)]
    # the model's position table bounds how far any lane can run
    budget = min(cfg.max_new_tokens, model.config.n_positions - 1)
    if budget < cfg.max_new_tokens:
        logger.debug(
            "capping generation at %d tokens (model context %d)",
            budget, model.config.n_positions,
        )
    past = None
    current = tokens
    for _ in range(budget):
        out = model(input_ids=current, past_key_values=past, use_cache=True)
        past = out.past_key_values
        logits = out.logits[:, -1, :]
        model_logprobs = F.log_softmax(logits, dim=-1)
        scores = _filter_logits(logits, cfg)
        probs = torch.softmax(scores, dim=-1)
        choice = torch.multinomial(probs, 1, generator=generator).squeeze(1)
        for lane in range(lanes):
            if finished[lane]:
                continue
            token = int(choice[lane])
            if token == tokenizer.eos_id:
                finished[lane] = True
                continue
            sampled[lane].append(token)
            if token not in (tokenizer.bos_id, tokenizer.pad_id, tokenizer.newline_id):
                logprobs[lane].append(float(model_logprobs[lane, token]))
        if bool(finished.all()):
            break
        current = choice.unsqueeze(1)
    return sampled, logprobs


def generate(checkpoint_dir: str | Path, cfg: SampleConfig, out_path: str | Path) -> dict:
    """Sample ``cfg.count`` records into ``out_path``; returns the manifest."""
    checkpoint_dir = Path(checkpoint_dir)
    model = GPT2LMHeadModel.from_pretrained(checkpoint_dir)
    model.eval()
    tokenizer = ResidueTokenizer.load(checkpoint_dir)
    generator = torch.Generator().manual_seed(cfg.seed)
    alphabet = set(AMINO_ACIDS)

    records: list[dict] = []
    report: list[dict] = []
    failures = 0
    attempts = 0
    max_attempts = 20 * cfg.count
    while len(records) < cfg.count and attempts < max_attempts:
        lanes = min(cfg.batch_size, cfg.count - len(records))
        attempts += lanes
        sampled, logprobs = _sample_batch(model, tokenizer, cfg, lanes, generator)
        for tokens, lane_logprobs in zip(sampled, logprobs):
            residues, stripped = tokenizer.decode_residues(tokens)
            if not residues or not lane_logprobs:
                failures += 1
                logger.warning("discarding empty generation (attempt %d)", attempts)
                continue
            assert set(residues) <= alphabet  # guaranteed by the vocabulary
            seq_id = f"gen-{cfg.run_id}-{len(records):05d}"
            records.append(
                {
                    "id": seq_id,
                    "sequence": residues,
                    "token_logprobs": lane_logprobs,
                    "token_count": len(lane_logprobs),
                    "stripped_tokens": stripped,
                }
            )
            report.append(
                {
                    "id": seq_id,
                    "tokens": len(lane_logprobs),
                    "stripped_tokens": stripped,
                    "perplexity": math.exp(-sum(lane_logprobs) / len(lane_logprobs)),
                }
            )
    if len(records) < cfg.count:
        logger.warning(
            "emitting %d of %d requested records (%d failures)",
            len(records), cfg.count, failures,
        )

    out_path = Path(out_path)
    tmp_path = out_path.with_suffix(out_path.suffix + ".tmp")
    with open(tmp_path, "w", encoding="ascii") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")
    os.replace(tmp_path, out_path)

    manifest = {
        "run_id": cfg.run_id,
        "checkpoint": str(checkpoint_dir),
        "sampling": asdict(cfg),
        "emitted": len(records),
        "failed_generations": failures,
        "records": report,
    }
    manifest_path = out_path.with_suffix(out_path.suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="ascii")
    return manifest
