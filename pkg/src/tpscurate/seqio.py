"""Protein FASTA parsing, writing, and the length-window filter."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import (
    DuplicateIdError,
    EmptySequenceError,
    IllegalResidueError,
    InvalidRangeError,
    MalformedHeaderError,
)

CANONICAL_ALPHABET = frozenset("ACDEFGHIKLMNPQRSTVWY")
LENIENT_ALPHABET = CANONICAL_ALPHABET | {"X"}

MAX_HEADER_BYTES = 1 << 20  # resource-exhaustion guard


@dataclass(frozen=True)
class ProteinSequence:
    id: str
    residues: str
    description: str = ""

    def __len__(self) -> int:
        return len(self.residues)


@dataclass(frozen=True)
class SequenceSet:
    """Ordered, id-unique collection of sequences. Iteration order is input order."""

    records: tuple[ProteinSequence, ...]
    source: str = ""
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for pos, rec in enumerate(self.records):
            if rec.id in index:
                raise DuplicateIdError(rec.id)
            index[rec.id] = pos
        object.__setattr__(self, "_index", index)

    def __iter__(self) -> Iterator[ProteinSequence]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, seq_id: str) -> bool:
        return seq_id in self._index

    def get(self, seq_id: str) -> ProteinSequence:
        return self.records[self._index[seq_id]]

    def ids(self) -> list[str]:
        return [rec.id for rec in self.records]


def _as_text(data: bytes | str | IO) -> Iterable[str]:
    if isinstance(data, bytes):
        return io.StringIO(data.decode("latin-1"))
    if isinstance(data, str):
        return io.StringIO(data)
    first = data.read(0)
    if isinstance(first, bytes):
        return io.TextIOWrapper(data, encoding="latin-1")
    return data


def iter_fasta(data: bytes | str | IO) -> Iterator[tuple[str, str, str, int]]:
    """Stream raw records as (id, description, residues, header line number).

    No residue validation happens here; :func:`parse_fasta` layers that on.
    """
    header_id = None
    header_desc = ""
    header_line = 0
    chunks: list[str] = []
    for line_no, raw in enumerate(_as_text(data), start=1):
        line = raw.rstrip("\r\n")
        if line.startswith(">"):
            if len(line) > MAX_HEADER_BYTES:
                raise MalformedHeaderError(line_no, "header exceeds 1 MiB")
            if header_id is not None:
                yield header_id, header_desc, "".join(chunks), header_line
            payload = line[1:].strip()
            if not payload:
                raise MalformedHeaderError(line_no, "header carries no id")
            header_id, _, header_desc = payload.partition(" ")
            header_desc = header_desc.strip()
            header_line = line_no
            chunks = []
        else:
            stripped = "".join(line.split())
            if not stripped:
                continue
            if header_id is None:
                raise MalformedHeaderError(line_no, "sequence data before any header")
            chunks.append(stripped)
    if header_id is not None:
        yield header_id, header_desc, "".join(chunks), header_line


def parse_fasta(
    data: bytes | str | IO, mode: str = "strict", source: str = ""
) -> SequenceSet:
    """Parse FASTA text into a validated :class:`SequenceSet`.

    Residues are uppercased on ingest. ``mode="strict"`` admits the 20
    canonical letters; ``mode="lenient"`` additionally admits ``X``.
    Arbitrary bytes always yield either a SequenceSet or a CurateError.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    alphabet = CANONICAL_ALPHABET if mode == "strict" else LENIENT_ALPHABET
    records: list[ProteinSequence] = []
    seen: dict[str, int] = {}
    for seq_id, desc, residues, line_no in iter_fasta(data):
        if seq_id in seen:
            raise DuplicateIdError(seq_id, line=line_no)
        seen[seq_id] = line_no
        residues = residues.upper()
        if not residues:
            raise EmptySequenceError(seq_id)
        for pos, char in enumerate(residues):
            if char not in alphabet:
                raise IllegalResidueError(seq_id, pos, char)
        records.append(ProteinSequence(id=seq_id, residues=residues, description=desc))
    return SequenceSet(records=tuple(records), source=source)


def write_fasta(sset: SequenceSet, wrap: int = 60) -> bytes:
    """Serialize deterministically: LF endings, residues wrapped at ``wrap``."""
    if wrap < 1:
        raise InvalidRangeError(f"wrap must be >= 1, got {wrap}")
    out: list[str] = []
    for rec in sset:
        if rec.description:
            out.append(f">{rec.id} {rec.description}\n")
        else:
            out.append(f">{rec.id}\n")
        res = rec.residues
        for start in range(0, len(res), wrap):
            out.append(res[start : start + wrap])
            out.append("\n")
    return "".join(out).encode("ascii")


def length_filter(
    sset: SequenceSet, min_len: int, max_len: int | None = None
) -> SequenceSet:
    """Keep sequences with ``min_len <= length <= max_len`` (both inclusive)."""
    if min_len < 1:
        raise InvalidRangeError(f"min length must be >= 1, got {min_len}")
    if max_len is not None and min_len > max_len:
        raise InvalidRangeError(f"min {min_len} exceeds max {max_len}")
    kept = tuple(
        rec
        for rec in sset
        if len(rec) >= min_len and (max_len is None or len(rec) <= max_len)
    )
    return SequenceSet(records=kept, source=sset.source)
