"""Evidence joining, the multi-stage candidate filter, and report emission.

Filter stages are per-card predicates over a Scorecard plus FilterConfig,
so the final passing set does not depend on stage order; the funnel counts
do, and the configured order is the report's narrative. The perplexity
stage is made per-card by precomputing top-fraction membership over the
whole input cohort once. Missing evidence fails closed for every enabled
stage and is reported distinctly from a failed comparison.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import io
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigInvalidError, EmptyInputError, UnknownEvidenceIdError

logger = logging.getLogger(__name__)

KNOWN_STAGES = ("perplexity", "maxid", "detector", "ec", "domain", "plddt", "tm")


@dataclass(frozen=True)
class FilterConfig:
    stages: tuple[str, ...] = KNOWN_STAGES
    perplexity_top_fraction: float = 0.10
    maxid_max_percent: float = 60.0
    maxid_round_percent: bool = True
    detector_min: float = 0.7
    plddt_min: float = 70.0
    tm_min: float = 0.6
    tm_max: float = 0.9
    ec_allowlist: tuple[str, ...] = ()
    domain_allowlist: tuple[str, ...] = ()

    def __post_init__(self):
        unknown = [s for s in self.stages if s not in KNOWN_STAGES]
        if unknown:
            raise ConfigInvalidError(f"unknown filter stages {unknown}")
        if len(set(self.stages)) != len(self.stages):
            raise ConfigInvalidError("filter stages repeat")
        if not 0.0 < self.perplexity_top_fraction <= 1.0:
            raise ConfigInvalidError("perplexity_top_fraction must be in (0, 1]")
        if not 0.0 <= self.detector_min <= 1.0:
            raise ConfigInvalidError("detector_min must be in [0, 1]")
        if not 0.0 <= self.plddt_min <= 100.0:
            raise ConfigInvalidError("plddt_min must be in [0, 100]")
        if not 0.0 <= self.tm_min <= self.tm_max <= 1.0:
            raise ConfigInvalidError("need 0 <= tm_min <= tm_max <= 1")
        if self.maxid_max_percent < 0:
            raise ConfigInvalidError("maxid_max_percent must be >= 0")

    @classmethod
    def from_config(cls, config) -> "FilterConfig":
        section = config.data["filters"]
        return cls(
            stages=tuple(section["stages"]),
            perplexity_top_fraction=float(section["perplexity_top_fraction"]),
            maxid_max_percent=float(section["maxid_max_percent"]),
            maxid_round_percent=bool(section["maxid_round_percent"]),
            detector_min=float(section["detector_min"]),
            plddt_min=float(section["plddt_min"]),
            tm_min=float(section["tm_min"]),
            tm_max=float(section["tm_max"]),
            ec_allowlist=tuple(section["ec_allowlist"]),
            domain_allowlist=tuple(section["domain_allowlist"]),
        )


@dataclass(frozen=True)
class Verdict:
    stage: str
    status: str  # "pass" | "fail" | "missing-evidence"
    reason: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class Scorecard:
    id: str
    perplexity: float | None = None
    maxid_identity: float | None = None
    maxid_target: str | None = None
    detector_score: float | None = None
    mean_plddt: float | None = None
    tm_score: float | None = None
    tm_target: str | None = None
    ec_predictions: tuple[str, ...] | None = None
    domain_accessions: tuple[str, ...] | None = None
    verdicts: tuple[Verdict, ...] = ()

    @property
    def maxid_percent(self) -> float | None:
        if self.maxid_identity is None:
            return None
        return self.maxid_identity * 100.0

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(v.passed for v in self.verdicts)

    def verdict(self, stage: str) -> Verdict | None:
        for v in self.verdicts:
            if v.stage == stage:
                return v
        return None


@dataclass(frozen=True)
class FunnelReport:
    stages: tuple[tuple[str, int, int], ...]  # (name, input count, output count)
    final_ids: tuple[str, ...]

    @property
    def counts(self) -> list[int]:
        if not self.stages:
            return []
        return [self.stages[0][1]] + [out for _, _, out in self.stages]


@dataclass(frozen=True)
class EvidenceBundle:
    """Per-id evidence maps; None means that evidence type was never ingested."""

    perplexity: dict[str, float] | None = None
    maxid: dict[str, tuple[float, str]] | None = None  # id -> (identity, target)
    detector: dict[str, float] | None = None
    ec: dict[str, list[str]] | None = None
    domains: dict[str, list[tuple[str, str]]] | None = None
    plddt: dict[str, float] | None = None
    tm: dict[str, tuple[float, str]] | None = None  # id -> (best tm, target)


def rank_by_perplexity(records, top_fraction: float):
    """The ceil(top_fraction * n) records of smallest perplexity.

    Ties break by id ascending; the result is sorted by (perplexity, id).
    """
    items = list(records)
    if not items:
        raise EmptyInputError("no records to rank")
    if not 0.0 < top_fraction <= 1.0:
        raise ConfigInvalidError("top fraction must be in (0, 1]")
    keep = math.ceil(top_fraction * len(items))
    return sorted(items, key=lambda r: (r.perplexity, r.id))[:keep]


def _check_known(evidence_ids, universe: set[str], source: str, strict: bool) -> None:
    for seq_id in evidence_ids:
        if seq_id not in universe:
            if strict:
                raise UnknownEvidenceIdError(seq_id, source)
            logger.warning("ignoring evidence for unknown id %r in %s", seq_id, source)


def build_scorecards(
    ids: list[str], evidence: EvidenceBundle, strict: bool = False
) -> list[Scorecard]:
    """Left-join evidence onto the candidate ids; output ordered by id."""
    if not ids:
        raise EmptyInputError("no candidate ids")
    universe = set(ids)
    for name in ("perplexity", "maxid", "detector", "ec", "domains", "plddt", "tm"):
        table = getattr(evidence, name)
        if table is not None:
            _check_known(table, universe, name, strict)
    cards = []
    for seq_id in sorted(ids):
        maxid = (evidence.maxid or {}).get(seq_id)
        tm = (evidence.tm or {}).get(seq_id)
        ec = None
        if evidence.ec is not None:
            ec = tuple(evidence.ec.get(seq_id, ())) if seq_id in evidence.ec else None
        domains = None
        if evidence.domains is not None:
            # the annotation table is row-per-domain: an id with no rows is a
            # real "no domains" result, not missing evidence
            domains = tuple(acc for acc, _ in evidence.domains.get(seq_id, ()))
        cards.append(
            Scorecard(
                id=seq_id,
                perplexity=(evidence.perplexity or {}).get(seq_id),
                maxid_identity=maxid[0] if maxid else None,
                maxid_target=maxid[1] if maxid else None,
                detector_score=(evidence.detector or {}).get(seq_id),
                mean_plddt=(evidence.plddt or {}).get(seq_id),
                tm_score=tm[0] if tm else None,
                tm_target=tm[1] if tm else None,
                ec_predictions=ec,
                domain_accessions=domains,
            )
        )
    return cards


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def _ec_matches(prediction: str, allowed: str) -> bool:
    pred = prediction.split(".")
    rule = allowed.split(".")
    if len(pred) != 4 or len(rule) != 4:
        return False
    return all(r == "-" or r == p for p, r in zip(pred, rule))


def _evaluate_stage(card: Scorecard, stage: str, cfg: FilterConfig, top_ids) -> Verdict:
    missing = Verdict(stage, "missing-evidence", "no evidence ingested for this filter")
    if stage == "perplexity":
        if card.perplexity is None:
            return missing
        if card.id in top_ids:
            return Verdict(stage, "pass", f"perplexity {card.perplexity:.4f} in top fraction")
        return Verdict(stage, "fail", f"perplexity {card.perplexity:.4f} below top fraction")
    if stage == "maxid":
        if card.maxid_identity is None:
            return missing
        percent = card.maxid_identity * 100.0
        compared = _round_half_up(percent) if cfg.maxid_round_percent else percent
        if compared <= cfg.maxid_max_percent:
            return Verdict(stage, "pass", f"maxID {percent:.2f}% <= {cfg.maxid_max_percent:g}%")
        return Verdict(stage, "fail", f"maxID {percent:.2f}% > {cfg.maxid_max_percent:g}%")
    if stage == "detector":
        if card.detector_score is None:
            return missing
        if card.detector_score >= cfg.detector_min:
            return Verdict(stage, "pass", f"detector {card.detector_score:.2f} >= {cfg.detector_min:g}")
        return Verdict(stage, "fail", f"detector {card.detector_score:.2f} < {cfg.detector_min:g}")
    if stage == "ec":
        if card.ec_predictions is None:
            return missing
        for prediction in card.ec_predictions:
            for allowed in cfg.ec_allowlist:
                if _ec_matches(prediction, allowed):
                    return Verdict(stage, "pass", f"EC {prediction} in allowlist")
        return Verdict(stage, "fail", "no EC prediction in allowlist")
    if stage == "domain":
        if card.domain_accessions is None:
            return missing
        for accession in card.domain_accessions:
            if accession in cfg.domain_allowlist:
                return Verdict(stage, "pass", f"domain {accession} in allowlist")
        return Verdict(stage, "fail", "no domain accession in allowlist")
    if stage == "plddt":
        if card.mean_plddt is None:
            return missing
        if card.mean_plddt >= cfg.plddt_min:
            return Verdict(stage, "pass", f"pLDDT {card.mean_plddt:.2f} >= {cfg.plddt_min:g}")
        return Verdict(stage, "fail", f"pLDDT {card.mean_plddt:.2f} < {cfg.plddt_min:g}")
    if stage == "tm":
        if card.tm_score is None:
            return missing
        if cfg.tm_min <= card.tm_score <= cfg.tm_max:
            return Verdict(stage, "pass", f"TM {card.tm_score:.2f} within [{cfg.tm_min:g}, {cfg.tm_max:g}]")
        return Verdict(stage, "fail", f"TM {card.tm_score:.2f} outside [{cfg.tm_min:g}, {cfg.tm_max:g}]")
    raise ConfigInvalidError(f"unknown stage {stage!r}")


def apply_filters(
    cards: list[Scorecard], cfg: FilterConfig
) -> tuple[list[Scorecard], FunnelReport, list[Scorecard]]:
    """Run the configured stages; returns (passing, funnel, all cards with verdicts).

    Top-fraction membership for the perplexity stage is computed once over
    the full input cohort, so every stage is a per-card predicate and the
    passing set is invariant under stage reordering.
    """
    top_ids: frozenset[str] = frozenset()
    if "perplexity" in cfg.stages:
        with_perp = [c for c in cards if c.perplexity is not None]
        if with_perp:
            keep = math.ceil(cfg.perplexity_top_fraction * len(with_perp))
            ranked = sorted(with_perp, key=lambda c: (c.perplexity, c.id))[:keep]
            top_ids = frozenset(c.id for c in ranked)
    evaluated = [
        replace(
            card,
            verdicts=tuple(
                _evaluate_stage(card, stage, cfg, top_ids) for stage in cfg.stages
            ),
        )
        for card in sorted(cards, key=lambda c: c.id)
    ]
    current = evaluated
    funnel_rows = []
    for stage in cfg.stages:
        survivors = [c for c in current if c.verdict(stage).passed]
        funnel_rows.append((stage, len(current), len(survivors)))
        current = survivors
    funnel = FunnelReport(
        stages=tuple(funnel_rows), final_ids=tuple(c.id for c in current)
    )
    return current, funnel, evaluated


def cdf(values) -> list[tuple[float, float]]:
    """Sorted unique values with cumulative fractions; the last is exactly 1.0."""
    items = sorted(values)
    if not items:
        raise EmptyInputError("cdf needs at least one value")
    n = len(items)
    points = []
    for idx, value in enumerate(items):
        if idx + 1 == n or items[idx + 1] != value:
            points.append((value, (idx + 1) / n))
    return points


def fraction_at_least(values, threshold: float) -> float:
    items = list(values)
    if not items:
        raise EmptyInputError("no values")
    return sum(1 for v in items if v >= threshold) / len(items)


# report emission ---------------------------------------------------------------


def _fmt(value: float | None, pattern: str = "{:.2f}") -> str:
    return "" if value is None else pattern.format(value)


def candidate_table(cards: list[Scorecard]) -> str:
    """The final-candidate summary table (CSV)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["id", "detector_score", "plddt", "tm_score", "maxid_percent", "ec", "domains"]
    )
    for card in cards:
        writer.writerow(
            [
                card.id,
                _fmt(card.detector_score),
                _fmt(card.mean_plddt),
                _fmt(card.tm_score),
                _fmt(card.maxid_percent),
                ";".join(card.ec_predictions or ()),
                ";".join(card.domain_accessions or ()),
            ]
        )
    return buf.getvalue()


def scorecard_table(cards: list[Scorecard]) -> str:
    """Full evidence and per-stage verdicts for every card (CSV)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "id",
            "perplexity",
            "maxid_percent",
            "maxid_target",
            "detector_score",
            "plddt",
            "tm_score",
            "tm_target",
            "ec",
            "domains",
            "verdicts",
            "passed",
        ]
    )
    for card in cards:
        writer.writerow(
            [
                card.id,
                _fmt(card.perplexity, "{:.6f}"),
                _fmt(card.maxid_percent),
                card.maxid_target or "",
                _fmt(card.detector_score),
                _fmt(card.mean_plddt),
                _fmt(card.tm_score),
                card.tm_target or "",
                ";".join(card.ec_predictions or ()),
                ";".join(card.domain_accessions or ()),
                ";".join(f"{v.stage}={v.status}" for v in card.verdicts),
                "yes" if card.passed else "no",
            ]
        )
    return buf.getvalue()


def funnel_table(funnel: FunnelReport) -> str:
    lines = ["stage\tinput\toutput"]
    for name, n_in, n_out in funnel.stages:
        lines.append(f"{name}\t{n_in}\t{n_out}")
    return "".join(line + "\n" for line in lines)


def cdf_table(values, threshold: float | None = None) -> str:
    """Two-column CDF data; an optional threshold adds a fraction-at-least line."""
    lines = []
    if threshold is not None:
        lines.append(f"# fraction_ge {threshold:g}: {fraction_at_least(values, threshold):.6f}")
    lines.append("value\tfraction")
    for value, fraction in cdf(values):
        lines.append(f"{value:.6f}\t{fraction:.9f}")
    return "".join(line + "\n" for line in lines)


def file_digest(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def manifest_text(
    config_digest: str,
    input_digests: dict[str, str],
    tool_versions: dict[str, str],
    counts: dict[str, int],
    timestamp: str | None = None,
) -> str:
    from . import __version__

    when = timestamp or datetime.datetime.now(datetime.timezone.utc).isoformat()
    lines = [
        "tpscurate_manifest: v1",
        f"tpscurate_version: {__version__}",
        f"config_digest: {config_digest}",
    ]
    for name in sorted(input_digests):
        lines.append(f"input {name}: {input_digests[name]}")
    for name in sorted(tool_versions):
        lines.append(f"tool {name}: {tool_versions[name]}")
    for name, value in counts.items():
        lines.append(f"count {name}: {value}")
    lines.append(f"generated_at: {when}")
    return "".join(line + "\n" for line in lines)


def emit_reports(
    outdir: Path,
    passing: list[Scorecard],
    funnel: FunnelReport,
    evaluated: list[Scorecard],
    config_digest: str,
    input_digests: dict[str, str],
    tool_versions: dict[str, str],
) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "candidates.csv").write_text(candidate_table(passing), encoding="ascii")
    (outdir / "funnel.tsv").write_text(funnel_table(funnel), encoding="ascii")
    (outdir / "scorecards.csv").write_text(scorecard_table(evaluated), encoding="ascii")
    counts = {"candidates": len(evaluated), "passing": len(passing)}
    (outdir / "manifest.txt").write_text(
        manifest_text(config_digest, input_digests, tool_versions, counts),
        encoding="ascii",
    )
