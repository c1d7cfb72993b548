"""Command-line interface.

Subcommands: curate, split, maxid, ingest, filter, report. Exit codes:
0 success, 1 validation errors, 2 I/O errors, 64 usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, partition
from .align import identity_screen, maxid_table
from .config import Config
from .errors import CurateError
from .motif import motif_filter
from .pipeline import (
    FilterConfig,
    FunnelReport,
    apply_filters,
    build_scorecards,
    cdf_table,
    emit_reports,
    funnel_table,
    manifest_text,
)
from .seqio import SequenceSet, length_filter, parse_fasta, write_fasta
from .store import EvidenceStore, format_maxid_csv, run_evidence_hooks
from .toolio import parse_profile_hits, stronger_non_tps_filter

logger = logging.getLogger("tpscurate")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="tpscurate", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", "-c", required=True, help="YAML run configuration")
    parser.add_argument("--threads", type=int, default=1, help="max worker threads")
    parser.add_argument("--strict", action="store_true", help="escalate warnings to errors")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curate", parents=[], help="length/motif/profile/blocklist screens")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--funnel", help="write per-stage funnel counts here")
    p.add_argument("--mode", choices=["strict", "lenient"], default="strict")

    p = sub.add_parser("split", help="homology-aware train/validation split")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True, help="split manifest path")
    p.add_argument("--verify", action="store_true", help="exhaustive leakage check")
    p.add_argument("--train-fasta")
    p.add_argument("--validation-fasta")
    p.add_argument("--mode", choices=["strict", "lenient"], default="strict")

    p = sub.add_parser("maxid", help="maximum identity of queries against a database")
    p.add_argument("--queries", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["strict", "lenient"], default="strict")

    p = sub.add_parser("ingest", help="validate and normalize evidence files")
    p.add_argument("--store", required=True)
    p.add_argument("--records", help="generation records (JSON lines)")
    p.add_argument("--fasta", help="candidate FASTA (when no records exist)")
    p.add_argument("--detector", help="detector scores CSV")
    p.add_argument("--ec", help="EC predictions CSV")
    p.add_argument("--domains", help="domain annotations TSV")
    p.add_argument("--structures", help="directory of predicted-structure .pdb files")
    p.add_argument("--hits", help="structural search hit table TSV")
    p.add_argument("--maxid", help="maxid CSV produced by the maxid subcommand")
    p.add_argument(
        "--run-hooks",
        action="store_true",
        help="run the configured evidence-hook commands and ingest their outputs",
    )
    p.add_argument("--mode", choices=["strict", "lenient"], default="strict")

    p = sub.add_parser("filter", help="apply the filter chain and emit reports")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="emit CDF report data from the store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    return parser


def _load_config(args) -> Config:
    return Config.load(args.config)


def _cmd_curate(args, config: Config) -> int:
    data = Path(args.infile).read_bytes()
    sset = parse_fasta(data, mode=args.mode, source=args.infile)
    section = config.data["curation"]
    params = config.align_params()
    stages: list[tuple[str, int, int]] = []

    current = length_filter(sset, section["min_length"], section["max_length"])
    stages.append(("length", len(sset), len(current)))

    rules = config.motif_rules()
    filtered = motif_filter(current, rules)
    stages.append(("motif", len(current), len(filtered)))
    current = filtered

    if section["profile_hits"]:
        hits = parse_profile_hits(Path(section["profile_hits"]).read_bytes())
        excluded = stronger_non_tps_filter(hits, section["tps_accessions"])
        kept = tuple(rec for rec in current if rec.id not in excluded)
        filtered = SequenceSet(records=kept, source=current.source)
        stages.append(("profile", len(current), len(filtered)))
        current = filtered

    if section["blocklist"]:
        blocklist = parse_fasta(
            Path(section["blocklist"]).read_bytes(), mode=args.mode
        )
        filtered = identity_screen(
            current,
            blocklist,
            section["blocklist_max_identity"],
            params,
            strict=args.strict,
        )
        stages.append(("blocklist", len(current), len(filtered)))
        current = filtered

    Path(args.outfile).write_bytes(write_fasta(current))
    funnel = FunnelReport(stages=tuple(stages), final_ids=tuple(current.ids()))
    if args.funnel:
        Path(args.funnel).write_text(funnel_table(funnel), encoding="ascii")
    for name, n_in, n_out in stages:
        print(f"curate {name}: {n_in} -> {n_out}")
    return EXIT_OK


def _cmd_split(args, config: Config) -> int:
    sset = parse_fasta(Path(args.infile).read_bytes(), mode=args.mode, source=args.infile)
    section = config.data["split"]
    params = config.align_params()
    threshold = float(section["threshold"])
    graph = partition.build_identity_graph(sset, threshold, params)
    clusters = partition.cluster(graph)
    assignment = partition.assign_partitions(clusters, int(section["partitions"]))
    split = partition.make_split(
        sset,
        clusters,
        assignment,
        int(section["partitions"]),
        train_partitions=section["train_partitions"],
        threshold=threshold,
        target_ratio=float(section["target_ratio"]),
    )
    with open(args.outfile, "w", encoding="ascii") as out:
        partition.write_split_manifest(split, out, config_digest=config.digest)
    print(
        f"split: {split.train_count} train / {split.validation_count} validation "
        f"(ratio {split.ratio:.4f})"
    )
    role_of = {e.seq_id: e.role for e in split.entries}
    if args.train_fasta:
        train = SequenceSet(tuple(r for r in sset if role_of[r.id] == "train"))
        Path(args.train_fasta).write_bytes(write_fasta(train))
    if args.validation_fasta:
        val = SequenceSet(tuple(r for r in sset if role_of[r.id] == "validation"))
        Path(args.validation_fasta).write_bytes(write_fasta(val))
    if args.verify:
        report = partition.verify_split(split, sset, threshold, params)
        print(
            f"verify: {len(report.violations)} violations over "
            f"{report.pairs_checked} cross-partition pairs"
        )
        if report.violations:
            for v in report.violations[:20]:
                print(f"  {v.id_a} ~ {v.id_b}: {v.identity:.4f}")
            return EXIT_VALIDATION
    return EXIT_OK


def _cmd_maxid(args, config: Config) -> int:
    queries = parse_fasta(Path(args.queries).read_bytes(), mode=args.mode)
    db = parse_fasta(Path(args.db).read_bytes(), mode=args.mode)
    params = config.align_params()
    results = maxid_table(queries, db, params, threads=args.threads)
    Path(args.out).write_text(format_maxid_csv(results), encoding="ascii")
    print(f"maxid: {len(results)} queries against {len(db)} targets")
    return EXIT_OK


def _cmd_ingest(args, config: Config) -> int:
    store = EvidenceStore(args.store)
    io_cfg = config.data["io"]
    did_anything = False
    if args.records:
        count = store.ingest_records(args.records, mode=args.mode)
        print(f"ingest records: {count}")
        did_anything = True
    if args.fasta:
        count = store.ingest_fasta(args.fasta, mode=args.mode)
        print(f"ingest candidates: {count}")
        did_anything = True
    if args.detector:
        print(f"ingest detector: {store.ingest_detector(args.detector)}")
        did_anything = True
    if args.ec:
        print(f"ingest ec: {store.ingest_ec(args.ec)}")
        did_anything = True
    if args.domains:
        count = store.ingest_domains(
            args.domains,
            accession_col=int(io_cfg["domain_accession_column"]),
            description_col=int(io_cfg["domain_description_column"]),
        )
        print(f"ingest domains: {count}")
        did_anything = True
    if args.structures:
        count = store.ingest_structures(
            args.structures, rescale=bool(io_cfg["plddt_rescale"])
        )
        print(f"ingest structures: {count}")
        did_anything = True
    if args.hits:
        count = store.ingest_hits(
            args.hits,
            columns=tuple(io_cfg["hits_columns"]),
            tm_column=io_cfg["tm_column"],
        )
        print(f"ingest hits: {count}")
        did_anything = True
    if args.maxid:
        print(f"ingest maxid: {store.ingest_maxid(args.maxid)}")
        did_anything = True
    if args.run_hooks:
        counts = run_evidence_hooks(store, dict(config.data["hooks"]), io_cfg)
        for kind, count in counts.items():
            print(f"ingest {kind} (hook): {count}")
        did_anything = did_anything or bool(counts)
    if not did_anything:
        print("ingest: nothing to do (no evidence flags given)", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _cmd_filter(args, config: Config) -> int:
    store = EvidenceStore(args.store)
    candidates = store.candidate_set(mode="lenient")
    evidence = store.load_evidence()
    cards = build_scorecards(candidates.ids(), evidence, strict=args.strict)
    cfg = FilterConfig.from_config(config)
    passing, funnel, evaluated = apply_filters(cards, cfg)
    emit_reports(
        Path(args.out),
        passing,
        funnel,
        evaluated,
        config_digest=config.digest,
        input_digests=store.source_digests(),
        tool_versions=dict(config.data["tool_versions"]),
    )
    for name, n_in, n_out in funnel.stages:
        print(f"filter {name}: {n_in} -> {n_out}")
    print(f"passing: {len(passing)} candidates")
    return EXIT_OK


def _cmd_report(args, config: Config) -> int:
    store = EvidenceStore(args.store)
    evidence = store.load_evidence()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if evidence.plddt is None:
        raise CurateError("no structure confidence evidence in store; ingest structures first")
    threshold = float(config.data["filters"]["plddt_min"])
    values = [evidence.plddt[k] for k in sorted(evidence.plddt)]
    (outdir / "plddt_cdf.tsv").write_text(
        cdf_table(values, threshold=threshold), encoding="ascii"
    )
    (outdir / "report_manifest.txt").write_text(
        manifest_text(
            config.digest,
            store.source_digests(),
            dict(config.data["tool_versions"]),
            {"plddt_values": len(values)},
        ),
        encoding="ascii",
    )
    print(f"report: CDF over {len(values)} pLDDT values -> {outdir / 'plddt_cdf.tsv'}")
    return EXIT_OK


_COMMANDS = {
    "curate": _cmd_curate,
    "split": _cmd_split,
    "maxid": _cmd_maxid,
    "ingest": _cmd_ingest,
    "filter": _cmd_filter,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = _load_config(args)
        return _COMMANDS[args.command](args, config)
    except CurateError as exc:
        print(f"tpscurate: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"tpscurate: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
