"""FASTA reading and causal-LM block packing for the bridge.

The bridge consumes the curation pipeline's files (FASTA, split manifest)
without importing it; parsing stays minimal here.
"""

from __future__ import annotations

from pathlib import Path

import torch

from .tokenizer import ResidueTokenizer


def read_fasta(path: str | Path) -> list[tuple[str, str]]:
    records: list[tuple[str, str]] = []
    header: str | None = None
    chunks: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            if header is not None:
                records.append((header, "".join(chunks).upper()))
            header = line[1:].split()[0]
            chunks = []
        elif header is not None:
            chunks.append(line)
    if header is not None:
        records.append((header, "".join(chunks).upper()))
    if not records:
        raise ValueError(f"no FASTA records in {path}")
    return records


def read_split_manifest(path: str | Path) -> dict[str, str]:
    """id -> role from the curation pipeline's split manifest."""
    roles: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#") or line.startswith("id\t"):
            continue
        seq_id, _cluster, _partition, role = line.split("\t")
        roles[seq_id] = role
    return roles


def pack_blocks(
    records: list[tuple[str, str]], tokenizer: ResidueTokenizer, block_size: int
) -> torch.Tensor:
    """Concatenate encoded sequences and chunk into (n, block_size) blocks."""
    stream: list[int] = []
    for _, residues in records:
        stream.extend(tokenizer.encode(residues))
    usable = (len(stream) // block_size) * block_size
    if usable == 0:
        raise ValueError(
            f"corpus too small: {len(stream)} tokens < one block of {block_size}"
        )
    data = torch.tensor(stream[:usable], dtype=torch.long)
    return data.view(-1, block_size)
