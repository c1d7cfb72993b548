"""Dynamic-programming kernels behind the pairwise aligner.

Two interchangeable implementations of the matrix fill live here:

* a scalar loop compiled with numba ``@njit`` (default when numba imports), and
* a pure-numpy anti-diagonal (wavefront) sweep used as the fallback.

Setting ``TPSCURATE_NO_NUMBA=1`` in the environment forces the numpy path
even when numba is installed; ``benchmarks/bench_align.py`` times both.
Both fills produce bit-identical matrices.

Each cell (i, j) covers the prefixes a[:i], b[:j] and holds one int64 key
packing the lexicographic objective (score, then identical columns, then
fewest total columns):

    key = score * 2^42 + matches * 2^21 + (2^21 - 1 - columns)

All three transitions add a key-constant to a neighbor cell, so the
lexicographic optimum is a plain integer max. The objective makes the
reported (score, matches, columns) a pure function of the unordered
sequence pair: transposing mirrors every path without changing its triple,
so identity comes out symmetric, which plain tie-broken traceback does not
guarantee. Packing requires (len(a)+len(b)) * max|score| < 2^19, enforced
by the caller. Cells outside the optional band carry the ``NEG_KEY``
sentinel and are never read as real keys.
"""

from __future__ import annotations

import os

import numpy as np

CBITS = 21
MSHIFT = 21
HSHIFT = 42
CMASK = (1 << CBITS) - 1
NEG_KEY = -(2**62)  # out-of-band sentinel; far below any packable key
KEY_LIMIT = 1 << 19  # caller enforces (n + m) * max|score| below this

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    HAVE_NUMBA = False

_DISABLED = os.environ.get("TPSCURATE_NO_NUMBA", "").lower() in {"1", "true", "yes"}
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def encode(residues: str) -> np.ndarray:
    """Residue string as a uint8 code array (byte identity == residue identity)."""
    return np.frombuffer(residues.encode("ascii"), dtype=np.uint8)


def unpack(key: int) -> tuple[int, int, int]:
    """Decode a cell key into (score, matches, columns)."""
    key = int(key)
    columns = CMASK - (key & CMASK)
    matches = (key >> MSHIFT) & CMASK
    score = key >> HSHIFT  # arithmetic shift; low 42 bits are non-negative
    return score, matches, columns


def _fill_scalar(a, b, match, mismatch, gap, band):
    """Row-major scalar fill; compiled with numba on the default path."""
    n = a.shape[0]
    m = b.shape[0]
    diag_hit = (match << HSHIFT) + (1 << MSHIFT) - 1
    diag_miss = (mismatch << HSHIFT) - 1
    gap_step = (gap << HSHIFT) - 1
    k = np.full((n + 1, m + 1), NEG_KEY, dtype=np.int64)
    k[0, 0] = CMASK  # pack(0, 0, 0)
    jmax0 = m if band < 0 else min(m, band)
    for j in range(1, jmax0 + 1):
        k[0, j] = k[0, j - 1] + gap_step
    imax0 = n if band < 0 else min(n, band)
    for i in range(1, imax0 + 1):
        k[i, 0] = k[i - 1, 0] + gap_step
    for i in range(1, n + 1):
        jlo = 1
        jhi = m
        if band >= 0:
            jlo = max(1, i - band)
            jhi = min(m, i + band)
        ai = a[i - 1]
        for j in range(jlo, jhi + 1):
            best = k[i - 1, j - 1] + (diag_hit if ai == b[j - 1] else diag_miss)
            up = k[i - 1, j] + gap_step
            if up > best:
                best = up
            left = k[i, j - 1] + gap_step
            if left > best:
                best = left
            k[i, j] = best
    return k


def _fill_wavefront(a, b, match, mismatch, gap, band):
    """Anti-diagonal numpy fill; the pure-numpy fallback path."""
    n = a.shape[0]
    m = b.shape[0]
    diag_hit = (match << HSHIFT) + (1 << MSHIFT) - 1
    diag_miss = (mismatch << HSHIFT) - 1
    gap_step = (gap << HSHIFT) - 1
    sub = np.where(
        a[:, None] == b[None, :], np.int64(diag_hit), np.int64(diag_miss)
    )
    k = np.full((n + 1, m + 1), NEG_KEY, dtype=np.int64)
    k[0, 0] = CMASK
    jmax0 = m if band < 0 else min(m, band)
    k[0, 1 : jmax0 + 1] = k[0, 0] + gap_step * np.arange(1, jmax0 + 1, dtype=np.int64)
    imax0 = n if band < 0 else min(n, band)
    k[1 : imax0 + 1, 0] = k[0, 0] + gap_step * np.arange(1, imax0 + 1, dtype=np.int64)
    for d in range(2, n + m + 1):
        lo = max(1, d - m)
        hi = min(n, d - 1)
        if band >= 0:
            # j - i in [-band, band] with j = d - i pins 2i - d to that window
            lo = max(lo, -((band - d) // 2))  # ceil((d - band) / 2)
            hi = min(hi, (d + band) // 2)
        if lo > hi:
            continue
        i = np.arange(lo, hi + 1)
        j = d - i
        diag = k[i - 1, j - 1] + sub[i - 1, j - 1]
        gaps = np.maximum(k[i - 1, j], k[i, j - 1]) + np.int64(gap_step)
        k[i, j] = np.maximum(diag, gaps)
    return k


def _traceback_ops(k, a, b, match, mismatch, gap):
    """Edit ops of the reported path in forward order: 0=diag, 1=up, 2=left.

    Follows only transitions consistent with the packed optimum, preferring
    diagonal, then up (gap in target), then left.
    """
    i = a.shape[0]
    j = b.shape[0]
    diag_hit = (match << HSHIFT) + (1 << MSHIFT) - 1
    diag_miss = (mismatch << HSHIFT) - 1
    gap_step = (gap << HSHIFT) - 1
    ops = np.empty(i + j, dtype=np.uint8)
    pos = ops.shape[0]
    floor = NEG_KEY // 2
    while i > 0 or j > 0:
        pos -= 1
        if i > 0 and j > 0:
            step = diag_hit if a[i - 1] == b[j - 1] else diag_miss
            if k[i - 1, j - 1] > floor and k[i, j] == k[i - 1, j - 1] + step:
                ops[pos] = 0
                i -= 1
                j -= 1
                continue
        if i > 0 and k[i - 1, j] > floor and k[i, j] == k[i - 1, j] + gap_step:
            ops[pos] = 1
            i -= 1
            continue
        ops[pos] = 2
        j -= 1
    return ops[pos:]


if USE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    fill_matrix = _jit(_fill_scalar)
    traceback_ops = _jit(_traceback_ops)
else:
    fill_matrix = _fill_wavefront
    traceback_ops = _traceback_ops


def kmer_codes(codes: np.ndarray, k: int) -> np.ndarray:
    """Rolling base-26 codes of every k-window over an uppercase byte array."""
    n = codes.shape[0]
    if n < k:
        return np.empty(0, dtype=np.int64)
    vals = codes.astype(np.int64) - 65
    acc = np.zeros(n - k + 1, dtype=np.int64)
    for off in range(k):
        acc = acc * 26 + vals[off : n - k + 1 + off]
    return acc
