"""Residue-level tokenizer with FASTA-style formatting tokens.

Sequences are modeled the way protein LM corpora format them: a newline
token every ``line_width`` residues between begin/end markers. The
newline token is model-internal formatting; generation strips it (and
counts the strips) before records are emitted.
"""

from __future__ import annotations

import json
from pathlib import Path

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"

BOS = "<|bos|>"
EOS = "<|eos|>"
PAD = "<|pad|>"
NEWLINE = "<|nl|>"
SPECIALS = (BOS, EOS, PAD, NEWLINE)


class ResidueTokenizer:
    def __init__(self, line_width: int = 60):
        self.line_width = line_width
        self.vocab = list(SPECIALS) + list(AMINO_ACIDS)
        self.token_to_id = {tok: i for i, tok in enumerate(self.vocab)}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def bos_id(self) -> int:
        return self.token_to_id[BOS]

    @property
    def eos_id(self) -> int:
        return self.token_to_id[EOS]

    @property
    def pad_id(self) -> int:
        return self.token_to_id[PAD]

    @property
    def newline_id(self) -> int:
        return self.token_to_id[NEWLINE]

    def residue_ids(self) -> list[int]:
        return [self.token_to_id[a] for a in AMINO_ACIDS]

    def encode(self, residues: str) -> list[int]:
        """BOS + residues with a newline token every line_width + EOS."""
        ids = [self.bos_id]
        for pos, char in enumerate(residues):
            if pos and pos % self.line_width == 0:
                ids.append(self.newline_id)
            try:
                ids.append(self.token_to_id[char])
            except KeyError:
                raise ValueError(f"residue {char!r} is not in the model alphabet") from None
        ids.append(self.eos_id)
        return ids

    def decode_residues(self, ids: list[int]) -> tuple[str, int]:
        """(residue string, stripped formatting-token count).

        Stops at EOS; BOS/PAD/newline tokens are stripped and counted.
        """
        out = []
        stripped = 0
        for token_id in ids:
            if token_id == self.eos_id:
                break
            if token_id in (self.bos_id, self.pad_id, self.newline_id):
                stripped += 1
                continue
            out.append(self.vocab[token_id])
        return "".join(out), stripped

    def save(self, directory: str | Path) -> None:
        payload = {"line_width": self.line_width, "vocab": self.vocab}
        Path(directory, "tokenizer.json").write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: str | Path) -> "ResidueTokenizer":
        payload = json.loads(Path(directory, "tokenizer.json").read_text(encoding="utf-8"))
        tok = cls(line_width=payload["line_width"])
        if payload["vocab"] != tok.vocab:
            raise ValueError("checkpoint tokenizer vocabulary does not match this build")
        return tok
