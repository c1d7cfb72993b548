"""Pairwise global identity, maximum-identity database search, blocklist screens.

Identity here is matches / alignment columns (gap columns count in the
denominator) under unit match/mismatch/linear-gap scoring. The reported
alignment is the lexicographically best one: maximal score, then maximal
identical columns, then fewest total columns, with a fixed traceback tie
order (diagonal, then up = gap in target, then left) among co-optimal
paths. That objective makes identity symmetric in the sequence pair and
alignments byte-reproducible. The optional k-mer prefilter is a recall
heuristic only: it may skip true best hits and is therefore kept out of
every correctness test; skip counts are logged.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BandTooNarrowError, EmptyDatabaseError, InvalidParamsError
from .seqio import ProteinSequence, SequenceSet

logger = logging.getLogger(__name__)

GAP_CHAR = "-"


@dataclass(frozen=True)
class AlignParams:
    match: int = 1
    mismatch: int = -1
    gap: int = -1
    prefilter: bool = False
    kmer_k: int = 5
    min_shared_kmers: int = 1
    band: int | None = None
    identity_denominator: str = "columns"  # or "min_length"

    def __post_init__(self):
        if self.match <= self.mismatch:
            raise InvalidParamsError("match score must exceed mismatch score")
        if self.gap >= self.match:
            raise InvalidParamsError("gap score must be below match score")
        if not 1 <= self.kmer_k <= 12:
            raise InvalidParamsError("kmer_k must be in [1, 12]")
        if self.min_shared_kmers < 0:
            raise InvalidParamsError("min_shared_kmers must be >= 0")
        if self.band is not None and self.band < 0:
            raise InvalidParamsError("band half-width must be >= 0")
        if self.identity_denominator not in ("columns", "min_length"):
            raise InvalidParamsError(
                f"unknown identity denominator {self.identity_denominator!r}"
            )


@dataclass(frozen=True)
class Alignment:
    aligned_a: str
    aligned_b: str
    columns: int
    matches: int
    score: int

    @property
    def identity(self) -> float:
        return self.matches / self.columns


@dataclass(frozen=True)
class IdentityResult:
    """Best database match for one query.

    ``target_id`` is None only in the degenerate prefilter case where every
    database entry was skipped; identity/columns/matches are then all zero.
    """

    query_id: str
    target_id: str | None
    identity: float
    columns: int
    matches: int


def _band_value(a_len: int, b_len: int, p: AlignParams) -> int:
    if p.band is None:
        return -1
    if abs(a_len - b_len) > p.band:
        raise BandTooNarrowError(a_len, b_len, p.band)
    return p.band


def _check_packable(a_len: int, b_len: int, p: AlignParams) -> None:
    worst = (a_len + b_len) * max(abs(p.match), abs(p.mismatch), abs(p.gap))
    if worst >= kernels.KEY_LIMIT:
        raise InvalidParamsError(
            "sequence lengths and score magnitudes exceed the packed-key range"
        )


def _align_stats(a_res: str, b_res: str, p: AlignParams) -> tuple[int, int, int]:
    """(score, columns, matches) without materializing aligned strings."""
    _check_packable(len(a_res), len(b_res), p)
    band = _band_value(len(a_res), len(b_res), p)
    ca = kernels.encode(a_res)
    cb = kernels.encode(b_res)
    k = kernels.fill_matrix(ca, cb, p.match, p.mismatch, p.gap, band)
    score, matches, columns = kernels.unpack(k[-1, -1])
    return score, columns, matches


def global_align(
    a: ProteinSequence, b: ProteinSequence, p: AlignParams = AlignParams()
) -> Alignment:
    """Optimal global alignment; banded when ``p.band`` is set."""
    if not a.residues or not b.residues:
        raise InvalidParamsError("cannot align empty sequences")
    _check_packable(len(a.residues), len(b.residues), p)
    band = _band_value(len(a.residues), len(b.residues), p)
    ca = kernels.encode(a.residues)
    cb = kernels.encode(b.residues)
    k = kernels.fill_matrix(ca, cb, p.match, p.mismatch, p.gap, band)
    ops = kernels.traceback_ops(k, ca, cb, p.match, p.mismatch, p.gap)
    rows_a: list[str] = []
    rows_b: list[str] = []
    i = j = 0
    matches = 0
    for op in ops:
        if op == 0:
            rows_a.append(a.residues[i])
            rows_b.append(b.residues[j])
            if a.residues[i] == b.residues[j]:
                matches += 1
            i += 1
            j += 1
        elif op == 1:
            rows_a.append(a.residues[i])
            rows_b.append(GAP_CHAR)
            i += 1
        else:
            rows_a.append(GAP_CHAR)
            rows_b.append(b.residues[j])
            j += 1
    score, _, _ = kernels.unpack(k[len(ca), len(cb)])
    return Alignment(
        aligned_a="".join(rows_a),
        aligned_b="".join(rows_b),
        columns=len(ops),
        matches=matches,
        score=score,
    )


def _denominator(a_len: int, b_len: int, columns: int, p: AlignParams) -> int:
    if p.identity_denominator == "min_length":
        return min(a_len, b_len)
    return columns


def identity(
    a: ProteinSequence, b: ProteinSequence, p: AlignParams = AlignParams()
) -> float:
    _, columns, matches = _align_stats(a.residues, b.residues, p)
    return matches / _denominator(len(a.residues), len(b.residues), columns, p)


class KmerIndex:
    """Sorted postings of distinct k-mers over a sequence database.

    Stored as parallel (code, row) arrays ordered by code, so lookups are
    binary searches and memory stays linear in total k-mer occurrences.
    """

    def __init__(self, db: SequenceSet, k: int):
        self.k = k
        self.size = len(db)
        per_seq = [
            np.unique(kernels.kmer_codes(kernels.encode(rec.residues), k))
            for rec in db
        ]
        if per_seq and sum(c.size for c in per_seq):
            codes = np.concatenate(per_seq)
            rows = np.concatenate(
                [np.full(c.size, i, dtype=np.int32) for i, c in enumerate(per_seq)]
            )
            order = np.argsort(codes, kind="stable")
            self._codes = codes[order]
            self._rows = rows[order]
        else:
            self._codes = np.empty(0, dtype=np.int64)
            self._rows = np.empty(0, dtype=np.int32)

    def shared_counts(self, residues: str) -> np.ndarray:
        """Per-db-entry count of distinct k-mers shared with ``residues``."""
        query = np.unique(kernels.kmer_codes(kernels.encode(residues), self.k))
        if not query.size or not self._codes.size:
            return np.zeros(self.size, dtype=np.int64)
        left = np.searchsorted(self._codes, query, side="left")
        right = np.searchsorted(self._codes, query, side="right")
        spans = [self._rows[l:r] for l, r in zip(left, right) if r > l]
        if not spans:
            return np.zeros(self.size, dtype=np.int64)
        return np.bincount(np.concatenate(spans), minlength=self.size).astype(np.int64)


def max_identity(
    query: ProteinSequence,
    db: SequenceSet,
    p: AlignParams = AlignParams(),
    index: KmerIndex | None = None,
) -> IdentityResult:
    """Database entry maximizing identity to ``query``.

    Ties (compared exactly, as integer fractions) break toward the
    lexicographically smallest target id. With the prefilter on, entries
    sharing fewer than ``min_shared_kmers`` k-mers are skipped.
    """
    if len(db) == 0:
        raise EmptyDatabaseError("max_identity needs a non-empty database")
    order = range(len(db))
    if p.prefilter:
        if index is None:
            index = KmerIndex(db, p.kmer_k)
        counts = index.shared_counts(query.residues)
        order = [i for i in range(len(db)) if counts[i] >= p.min_shared_kmers]
        skipped = len(db) - len(order)
        if skipped:
            logger.debug(
                "prefilter skipped %d/%d targets for query %s",
                skipped,
                len(db),
                query.id,
            )
    best: tuple[int, int, str, int] | None = None  # matches, denom, id, columns
    for idx in order:
        rec = db.records[idx]
        _, columns, matches = _align_stats(query.residues, rec.residues, p)
        denom = _denominator(len(query.residues), len(rec.residues), columns, p)
        if best is None:
            best = (matches, denom, rec.id, columns)
            continue
        # exact fraction comparison: matches/denom vs incumbent
        lhs = matches * best[1]
        rhs = best[0] * denom
        if lhs > rhs or (lhs == rhs and rec.id < best[2]):
            best = (matches, denom, rec.id, columns)
    if best is None:
        return IdentityResult(query.id, None, 0.0, 0, 0)
    matches, denom, target_id, columns = best
    return IdentityResult(query.id, target_id, matches / denom, columns, matches)


def maxid_table(
    queries: SequenceSet,
    db: SequenceSet,
    p: AlignParams = AlignParams(),
    threads: int = 1,
) -> list[IdentityResult]:
    """max_identity for every query, in query order regardless of scheduling."""
    if len(db) == 0:
        raise EmptyDatabaseError("maxid_table needs a non-empty database")
    index = KmerIndex(db, p.kmer_k) if p.prefilter else None
    if threads <= 1:
        return [max_identity(q, db, p, index=index) for q in queries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda q: max_identity(q, db, p, index=index), queries))


def identity_screen(
    sset: SequenceSet,
    blocklist: SequenceSet,
    threshold: float,
    p: AlignParams = AlignParams(),
    strict: bool = False,
) -> SequenceSet:
    """Drop sequences whose best blocklist identity strictly exceeds ``threshold``."""
    if not 0.0 < threshold <= 1.0:
        raise InvalidParamsError(f"threshold must be in (0, 1], got {threshold}")
    if len(blocklist) == 0:
        if strict:
            raise EmptyDatabaseError("blocklist is empty")
        logger.warning("blocklist is empty; identity screen is a pass-through")
        return sset
    index = KmerIndex(blocklist, p.kmer_k) if p.prefilter else None
    kept = []
    for rec in sset:
        result = max_identity(rec, blocklist, p, index=index)
        if result.identity <= threshold:
            kept.append(rec)
    return SequenceSet(records=tuple(kept), source=sset.source)
