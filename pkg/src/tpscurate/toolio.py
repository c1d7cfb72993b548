"""Parsers for every external-tool artifact the pipeline consumes.

Formats (all line-oriented text; bytes are decoded as latin-1 so parsing
is total over arbitrary input):

* generation records: one JSON object per line with fields ``id``,
  ``sequence``, ``token_logprobs`` and optional ``token_count`` (the
  declared tokenization contract; checked when present)
* predicted structures: fixed-column atomic coordinates, per-residue
  confidence in the temperature-factor columns (61-66, 1-based) of
  alpha-carbon rows, model 1 only
* structural hits: tab-separated with an externally declared column list
* detector scores: ``id,score`` comma-separated rows
* EC predictions: ``id, EC:a.b.c.d/conf, ...`` comma-separated rows
* domain annotations: tab-separated scanner output, accession/description
  column indices configurable (defaults 12/13, 1-based)
* profile domain tables: whitespace-delimited rows, '#' comments;
  column 1 = sequence id, 4 = profile name, 5 = profile accession
  ('-' falls back to the name), 7 = e-value, 8 = bit score (full-sequence)

Every parser raises a structured ``CurateError`` subclass on bad input,
never an unhandled exception.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable

from .errors import (
    ConfidenceOutOfRangeError,
    DuplicateIdError,
    EmptyInputError,
    LengthMismatchError,
    LogprobPositiveError,
    MalformedAtomRowError,
    MalformedECError,
    MissingColumnError,
    NoAtomsError,
    RowTooShortError,
    SchemaError,
    ScoreOutOfRangeError,
    UnparsableRowError,
)
from .seqio import CANONICAL_ALPHABET, LENIENT_ALPHABET


def _text(data: bytes | str | IO) -> str:
    if isinstance(data, bytes):
        return data.decode("latin-1")
    if isinstance(data, str):
        return data
    raw = data.read()
    if isinstance(raw, bytes):
        return raw.decode("latin-1")
    return raw


# generation records and perplexity ------------------------------------------


@dataclass(frozen=True)
class ScoredSequence:
    id: str
    residues: str
    token_logprobs: tuple[float, ...]
    perplexity: float


def perplexity(logprobs: Iterable[float]) -> float:
    """exp(-mean log-probability); exact summation, so permutation-invariant."""
    values = list(logprobs)
    if not values:
        raise EmptyInputError("perplexity needs at least one log-probability")
    return math.exp(-math.fsum(values) / len(values))


def parse_generation_records(
    data: bytes | str | IO, mode: str = "strict"
) -> list[ScoredSequence]:
    alphabet = CANONICAL_ALPHABET if mode == "strict" else LENIENT_ALPHABET
    records: list[ScoredSequence] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(_text(data).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(line_no, f"invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise SchemaError(line_no, "record is not an object")
        try:
            seq_id = obj["id"]
            residues = obj["sequence"]
            logprobs = obj["token_logprobs"]
        except KeyError as exc:
            raise SchemaError(line_no, f"missing field {exc.args[0]!r}") from None
        if not isinstance(seq_id, str) or not seq_id or any(c.isspace() for c in seq_id):
            raise SchemaError(line_no, "id must be a non-empty token")
        if seq_id in seen:
            raise SchemaError(line_no, f"duplicate id {seq_id!r} (first at line {seen[seq_id]})")
        seen[seq_id] = line_no
        if not isinstance(residues, str) or not residues:
            raise SchemaError(line_no, "sequence must be a non-empty string")
        for pos, char in enumerate(residues):
            if char not in alphabet:
                raise SchemaError(line_no, f"illegal residue {char!r} at position {pos}")
        if not isinstance(logprobs, list) or not logprobs:
            raise SchemaError(line_no, "token_logprobs must be a non-empty array")
        values: list[float] = []
        for idx, value in enumerate(logprobs):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise SchemaError(line_no, f"token_logprobs[{idx}] is not a number")
            value = float(value)
            if not math.isfinite(value):
                raise SchemaError(line_no, f"token_logprobs[{idx}] is not finite")
            if value > 0:
                raise LogprobPositiveError(line_no, idx, value)
            values.append(value)
        declared = obj.get("token_count")
        if declared is not None and declared != len(values):
            raise LengthMismatchError(seq_id, declared, len(values))
        records.append(
            ScoredSequence(
                id=seq_id,
                residues=residues,
                token_logprobs=tuple(values),
                perplexity=perplexity(values),
            )
        )
    return records


# predicted-structure confidence ----------------------------------------------


@dataclass(frozen=True)
class StructureConfidence:
    id: str
    plddt: tuple[float, ...]
    mean_plddt: float


def parse_structure_plddt(
    data: bytes | str | IO,
    seq_id: str = "",
    fmt: str = "pdb",
    rescale: bool = False,
) -> StructureConfidence:
    """Per-residue confidence from alpha-carbon temperature factors, model 1.

    Files whose every value lies in [0, 1] are treated as 0-1 scaled:
    rejected unless ``rescale`` is set, in which case they are multiplied
    by 100.
    """
    if fmt != "pdb":
        raise ValueError(f"unsupported structure format {fmt!r}")
    values: list[float] = []
    model = 1
    for line_no, line in enumerate(_text(data).splitlines(), start=1):
        record = line[:6]
        if record == "MODEL ":
            try:
                model = int(line[10:14])
            except ValueError:
                raise MalformedAtomRowError(line_no, "unreadable MODEL number") from None
            continue
        if record == "ENDMDL":
            model = -1  # anything after the first ENDMDL is ignored
            continue
        if record != "ATOM  " or model != 1:
            continue
        if len(line) < 66:
            raise MalformedAtomRowError(line_no, "atom row shorter than 66 columns")
        if line[12:16].strip() != "CA":
            continue
        try:
            value = float(line[60:66])
        except ValueError:
            raise MalformedAtomRowError(line_no, "unreadable temperature factor") from None
        if not 0.0 <= value <= 100.0:
            raise ConfidenceOutOfRangeError(line_no, value)
        values.append(value)
    if not values:
        raise NoAtomsError(f"no alpha-carbon atoms in structure {seq_id!r}")
    if max(values) <= 1.0:
        if not rescale:
            raise ConfidenceOutOfRangeError(
                0,
                reason="all confidence values lie in [0, 1]; "
                "pass rescale=True for 0-1 scaled files",
            )
        values = [v * 100.0 for v in values]
    return StructureConfidence(
        id=seq_id,
        plddt=tuple(values),
        mean_plddt=math.fsum(values) / len(values),
    )


# structural-search hit tables -------------------------------------------------


@dataclass(frozen=True)
class StructuralHit:
    query: str
    target: str
    tm_score: float
    rank: int  # 1-based within query, by descending TM-score


def parse_structural_hits(
    data: bytes | str | IO,
    columns: tuple[str, ...] = ("query", "target", "tm"),
    tm_column: str = "tm",
) -> list[StructuralHit]:
    """Hits grouped by query and ranked by descending TM-score.

    ``columns`` declares the file layout (the table itself has no header);
    it must include ``query``, ``target`` and the TM-score column.
    """
    for needed in ("query", "target", tm_column):
        if needed not in columns:
            raise MissingColumnError(needed)
    qi = columns.index("query")
    ti = columns.index("target")
    si = columns.index(tm_column)
    raw: list[tuple[str, str, float]] = []
    for line_no, line in enumerate(_text(data).splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < len(columns):
            raise UnparsableRowError(line_no, f"expected {len(columns)} columns, got {len(fields)}")
        try:
            tm = float(fields[si])
        except ValueError:
            raise UnparsableRowError(line_no, f"unreadable TM-score {fields[si]!r}") from None
        if not 0.0 <= tm <= 1.0:
            raise UnparsableRowError(line_no, f"TM-score {tm} outside [0, 1]")
        raw.append((fields[qi], fields[ti], tm))
    grouped: dict[str, list[tuple[str, str, float]]] = {}
    for row in raw:
        grouped.setdefault(row[0], []).append(row)
    hits: list[StructuralHit] = []
    for query in sorted(grouped):
        rows = sorted(grouped[query], key=lambda r: -r[2])  # stable: input order on ties
        for rank, (q, t, tm) in enumerate(rows, start=1):
            hits.append(StructuralHit(q, t, tm, rank))
    return hits


def best_hits(hits: list[StructuralHit]) -> dict[str, StructuralHit]:
    return {hit.query: hit for hit in hits if hit.rank == 1}


def write_structural_hits(
    hits: list[StructuralHit], columns: tuple[str, ...] = ("query", "target", "tm"),
    tm_column: str = "tm",
) -> str:
    """Serialize hits so that re-parsing yields an identical list."""
    field_of = {"query": lambda h: h.query, "target": lambda h: h.target,
                tm_column: lambda h: repr(h.tm_score)}
    lines = []
    for hit in hits:
        lines.append("\t".join(field_of.get(col, lambda h: "-")(hit) for col in columns))
    return "".join(line + "\n" for line in lines)


# detector scores ---------------------------------------------------------------


def parse_detector_scores(data: bytes | str | IO) -> dict[str, float]:
    scores: dict[str, float] = {}
    first_line: dict[str, int] = {}
    for line_no, line in enumerate(_text(data).splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        seq_id, sep, raw = line.partition(",")
        seq_id = seq_id.strip()
        if not sep or not seq_id:
            raise UnparsableRowError(line_no, "expected 'id,score'")
        try:
            value = float(raw.strip())
        except ValueError:
            raise UnparsableRowError(line_no, f"unreadable score {raw.strip()!r}") from None
        if not 0.0 <= value <= 1.0:
            raise ScoreOutOfRangeError(line_no, value)
        if seq_id in scores:
            raise DuplicateIdError(
                seq_id, line=line_no, first_line=first_line[seq_id]
            )
        scores[seq_id] = value
        first_line[seq_id] = line_no
    return scores


# EC predictions -----------------------------------------------------------------


def _validate_ec(token: str, line_no: int) -> str:
    body = token
    if body.startswith("EC:"):
        body = body[3:]
    ec, _, conf = body.partition("/")
    if conf:
        try:
            float(conf)
        except ValueError:
            raise MalformedECError(token, line_no) from None
    fields = ec.split(".")
    if len(fields) != 4:
        raise MalformedECError(token, line_no)
    for field in fields[:3]:
        if not field.isdigit() or int(field) < 1:
            raise MalformedECError(token, line_no)
    last = fields[3]
    if last != "-" and not (last.isdigit() and int(last) >= 1):
        raise MalformedECError(token, line_no)
    return ec


def parse_ec_predictions(data: bytes | str | IO) -> dict[str, list[str]]:
    """id -> ordered EC numbers; tokens look like ``EC:4.2.3.75/0.88``."""
    predictions: dict[str, list[str]] = {}
    for line_no, line in enumerate(_text(data).splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = [part.strip() for part in line.split(",")]
        seq_id = parts[0]
        if not seq_id:
            raise UnparsableRowError(line_no, "missing id")
        if seq_id in predictions:
            raise DuplicateIdError(seq_id, line=line_no)
        predictions[seq_id] = [
            _validate_ec(token, line_no) for token in parts[1:] if token
        ]
    return predictions


# domain annotations ---------------------------------------------------------------


def parse_domain_annotations(
    data: bytes | str | IO,
    accession_col: int = 12,
    description_col: int = 13,
) -> dict[str, list[tuple[str, str]]]:
    """id -> (accession, description) pairs, deduplicated, order preserved.

    Column indices are 1-based; rows whose accession field is empty or '-'
    carry no domain assignment and are skipped.
    """
    annotations: dict[str, list[tuple[str, str]]] = {}
    seen: dict[str, set[str]] = {}
    needed = max(1, accession_col)
    for line_no, line in enumerate(_text(data).splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < needed:
            raise RowTooShortError(line_no, needed, len(fields))
        seq_id = fields[0].strip()
        if not seq_id:
            raise RowTooShortError(line_no, needed, 0)
        annotations.setdefault(seq_id, [])
        accession = fields[accession_col - 1].strip()
        if not accession or accession == "-":
            continue
        description = ""
        if len(fields) >= description_col:
            description = fields[description_col - 1].strip()
        if accession not in seen.setdefault(seq_id, set()):
            seen[seq_id].add(accession)
            annotations[seq_id].append((accession, description))
    return annotations


@dataclass(frozen=True)
class FunctionAnnotation:
    id: str
    detector_score: float | None
    ec_predictions: tuple[str, ...]
    domain_accessions: tuple[tuple[str, str], ...]


def join_function_annotations(
    detector: dict[str, float],
    ec: dict[str, list[str]],
    domains: dict[str, list[tuple[str, str]]],
) -> dict[str, FunctionAnnotation]:
    joined = {}
    for seq_id in sorted(set(detector) | set(ec) | set(domains)):
        joined[seq_id] = FunctionAnnotation(
            id=seq_id,
            detector_score=detector.get(seq_id),
            ec_predictions=tuple(ec.get(seq_id, ())),
            domain_accessions=tuple(domains.get(seq_id, ())),
        )
    return joined


# profile-search domain tables --------------------------------------------------


@dataclass(frozen=True)
class DomainHit:
    seq_id: str
    accession: str
    bit_score: float
    e_value: float


def parse_profile_hits(data: bytes | str | IO) -> list[DomainHit]:
    hits: list[DomainHit] = []
    for line_no, line in enumerate(_text(data).splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 8:
            raise UnparsableRowError(line_no, f"expected >= 8 columns, got {len(fields)}")
        accession = fields[4] if fields[4] != "-" else fields[3]
        try:
            e_value = float(fields[6])
            bit_score = float(fields[7])
        except ValueError:
            raise UnparsableRowError(line_no, "unreadable e-value or bit score") from None
        if not e_value > 0:
            raise UnparsableRowError(line_no, f"e-value {e_value} is not positive")
        hits.append(DomainHit(fields[0], accession, bit_score, e_value))
    return hits


def stronger_non_tps_filter(
    hits: list[DomainHit], tps_accessions: Iterable[str]
) -> set[str]:
    """Ids to exclude: best non-TPS hit strictly outscores the best TPS hit.

    Sequences with non-TPS hits and no TPS hit are excluded too; an exact
    bit-score tie keeps the sequence.
    """
    allow = {acc.split(".")[0] for acc in tps_accessions}
    best_tps: dict[str, float] = {}
    best_other: dict[str, float] = {}
    for hit in hits:
        bucket = best_tps if hit.accession.split(".")[0] in allow else best_other
        if hit.seq_id not in bucket or hit.bit_score > bucket[hit.seq_id]:
            bucket[hit.seq_id] = hit.bit_score
    excluded = set()
    for seq_id, other in best_other.items():
        tps = best_tps.get(seq_id)
        if tps is None or other > tps:
            excluded.add(seq_id)
    return excluded
