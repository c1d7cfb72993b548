"""On-disk evidence store: a directory of normalized files plus an index.

``ingest`` validates each raw tool report once and rewrites it in a
normalized form (full-precision floats via ``repr``), so a filter run is a
pure function of the store contents. ``index.json`` records what was
ingested and the sha256 of every source file for the run manifest.
No database anywhere; reruns read the same bytes.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
import tempfile
from pathlib import Path

from .errors import ConfigInvalidError, HookError
from .pipeline import EvidenceBundle, file_digest
from .seqio import SequenceSet, parse_fasta, write_fasta
from .toolio import (
    best_hits,
    parse_detector_scores,
    parse_domain_annotations,
    parse_ec_predictions,
    parse_generation_records,
    parse_structural_hits,
    parse_structure_plddt,
    write_structural_hits,
)

logger = logging.getLogger(__name__)

NORMALIZED_HITS_COLUMNS = ("query", "target", "tm")


class EvidenceStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- bookkeeping -----------------------------------------------------

    @property
    def index_path(self) -> Path:
        return self.root / "index.json"

    def _index(self) -> dict:
        if self.index_path.exists():
            return json.loads(self.index_path.read_text(encoding="utf-8"))
        return {"evidence": {}}

    def _record(self, kind: str, filename: str, sources: dict[str, str]) -> None:
        index = self._index()
        index["evidence"][kind] = {"file": filename, "sources": sources}
        self.root.mkdir(parents=True, exist_ok=True)
        self.index_path.write_text(
            json.dumps(index, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    def _write(self, kind: str, filename: str, payload: str | bytes, sources: dict[str, str]) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / filename
        if isinstance(payload, bytes):
            path.write_bytes(payload)
        else:
            path.write_text(payload, encoding="ascii")
        self._record(kind, filename, sources)

    def source_digests(self) -> dict[str, str]:
        digests = {}
        for kind, entry in sorted(self._index()["evidence"].items()):
            for name, digest in sorted(entry["sources"].items()):
                digests[f"{kind}:{name}"] = digest
        return digests

    # -- ingest ----------------------------------------------------------

    def ingest_records(self, path: str | Path, mode: str = "strict") -> int:
        path = Path(path)
        records = parse_generation_records(path.read_bytes(), mode=mode)
        fasta_lines = []
        perp_lines = []
        for rec in records:
            fasta_lines.append(f">{rec.id}\n{rec.residues}\n")
            perp_lines.append(f"{rec.id},{rec.perplexity!r},{len(rec.token_logprobs)}\n")
        digest = {path.name: file_digest(path)}
        self._write("candidates", "candidates.fasta", "".join(fasta_lines), digest)
        self._write("perplexity", "perplexity.csv", "".join(perp_lines), digest)
        return len(records)

    def ingest_fasta(self, path: str | Path, mode: str = "strict") -> int:
        path = Path(path)
        sset = parse_fasta(path.read_bytes(), mode=mode, source=str(path))
        self._write(
            "candidates",
            "candidates.fasta",
            write_fasta(sset),
            {path.name: file_digest(path)},
        )
        return len(sset)

    def ingest_detector(self, path: str | Path) -> int:
        path = Path(path)
        scores = parse_detector_scores(path.read_bytes())
        lines = [f"{seq_id},{value!r}\n" for seq_id, value in scores.items()]
        self._write("detector", "detector.csv", "".join(lines), {path.name: file_digest(path)})
        return len(scores)

    def ingest_ec(self, path: str | Path) -> int:
        path = Path(path)
        predictions = parse_ec_predictions(path.read_bytes())
        lines = [
            ",".join([seq_id] + [f"EC:{ec}" for ec in ecs]) + "\n"
            for seq_id, ecs in predictions.items()
        ]
        self._write("ec", "ec.csv", "".join(lines), {path.name: file_digest(path)})
        return len(predictions)

    def ingest_domains(
        self, path: str | Path, accession_col: int = 12, description_col: int = 13
    ) -> int:
        path = Path(path)
        table = parse_domain_annotations(
            path.read_bytes(), accession_col=accession_col, description_col=description_col
        )
        lines = []
        for seq_id, pairs in table.items():
            if not pairs:
                lines.append(f"{seq_id}\t-\t\n")
            for accession, description in pairs:
                lines.append(f"{seq_id}\t{accession}\t{description}\n")
        self._write("domains", "domains.tsv", "".join(lines), {path.name: file_digest(path)})
        return len(table)

    def ingest_structures(self, directory: str | Path, rescale: bool = False) -> int:
        directory = Path(directory)
        files = sorted(directory.glob("*.pdb"))
        if not files:
            raise ConfigInvalidError(f"no .pdb files under {directory}")
        lines = []
        digests = {}
        for path in files:
            conf = parse_structure_plddt(path.read_bytes(), seq_id=path.stem, rescale=rescale)
            lines.append(f"{path.stem},{conf.mean_plddt!r},{len(conf.plddt)}\n")
            digests[path.name] = file_digest(path)
        self._write("plddt", "plddt.csv", "".join(lines), digests)
        return len(files)

    def ingest_hits(
        self,
        path: str | Path,
        columns: tuple[str, ...] = NORMALIZED_HITS_COLUMNS,
        tm_column: str = "tm",
    ) -> int:
        path = Path(path)
        hits = parse_structural_hits(path.read_bytes(), columns=columns, tm_column=tm_column)
        self._write(
            "hits",
            "hits.tsv",
            write_structural_hits(hits, NORMALIZED_HITS_COLUMNS),
            {path.name: file_digest(path)},
        )
        return len(hits)

    def ingest_maxid(self, path: str | Path) -> int:
        path = Path(path)
        rows = parse_maxid_csv(path.read_text(encoding="ascii"))
        lines = [
            f"{seq_id},{target},{ident!r},{columns},{matches}\n"
            for seq_id, (target, ident, columns, matches) in rows.items()
        ]
        self._write("maxid", "maxid.csv", "".join(lines), {path.name: file_digest(path)})
        return len(rows)

    # -- load ------------------------------------------------------------

    def candidate_set(self, mode: str = "strict") -> SequenceSet:
        path = self.root / "candidates.fasta"
        if not path.exists():
            raise ConfigInvalidError(
                "no candidate universe in store; ingest generation records or a FASTA first"
            )
        return parse_fasta(path.read_bytes(), mode=mode, source=str(path))

    def load_evidence(self) -> EvidenceBundle:
        index = self._index()["evidence"]

        def maybe(kind: str) -> Path | None:
            if kind in index:
                return self.root / index[kind]["file"]
            return None

        perplexity = None
        if (path := maybe("perplexity")) is not None:
            perplexity = {}
            for line in path.read_text(encoding="ascii").splitlines():
                seq_id, value, _ = line.split(",")
                perplexity[seq_id] = float(value)
        detector = None
        if (path := maybe("detector")) is not None:
            detector = parse_detector_scores(path.read_text(encoding="ascii"))
        ec = None
        if (path := maybe("ec")) is not None:
            ec = parse_ec_predictions(path.read_text(encoding="ascii"))
        domains = None
        if (path := maybe("domains")) is not None:
            domains = parse_domain_annotations(
                path.read_text(encoding="ascii"), accession_col=2, description_col=3
            )
        plddt = None
        if (path := maybe("plddt")) is not None:
            plddt = {}
            for line in path.read_text(encoding="ascii").splitlines():
                seq_id, value, _ = line.split(",")
                plddt[seq_id] = float(value)
        tm = None
        if (path := maybe("hits")) is not None:
            hits = parse_structural_hits(
                path.read_text(encoding="ascii"), columns=NORMALIZED_HITS_COLUMNS
            )
            tm = {q: (hit.tm_score, hit.target) for q, hit in best_hits(hits).items()}
        maxid = None
        if (path := maybe("maxid")) is not None:
            maxid = {}
            for seq_id, (target, ident, _, _) in parse_maxid_csv(
                path.read_text(encoding="ascii")
            ).items():
                maxid[seq_id] = (ident, target)
        return EvidenceBundle(
            perplexity=perplexity,
            maxid=maxid,
            detector=detector,
            ec=ec,
            domains=domains,
            plddt=plddt,
            tm=tm,
        )


def run_evidence_hooks(
    store: EvidenceStore, hooks: dict[str, str], io_cfg: dict
) -> dict[str, int]:
    """Run configured command templates and ingest what they produce.

    Each template is split shell-style and formatted per token with
    ``{fasta}`` (the store's candidate FASTA) and ``{out}`` (the path the
    command must write: a file, or a directory for ``structures``).
    Correctness never depends on these hooks; they only automate the
    ingest of tool outputs.
    """
    if not hooks:
        return {}
    candidates = store.root / "candidates.fasta"
    if not candidates.exists():
        raise ConfigInvalidError("hooks need an ingested candidate FASTA to run on")
    counts: dict[str, int] = {}
    for kind in sorted(hooks):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / ("structures" if kind == "structures" else f"{kind}.out")
            if kind == "structures":
                out.mkdir()
            argv = [
                token.format(fasta=str(candidates), out=str(out))
                for token in shlex.split(hooks[kind])
            ]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True)
            except OSError as exc:
                raise HookError(kind, str(exc)) from None
            if proc.returncode != 0:
                raise HookError(
                    kind, f"exit {proc.returncode}: {proc.stderr.strip()[:500]}"
                )
            if kind == "detector":
                counts[kind] = store.ingest_detector(out)
            elif kind == "ec":
                counts[kind] = store.ingest_ec(out)
            elif kind == "domains":
                counts[kind] = store.ingest_domains(
                    out,
                    accession_col=int(io_cfg["domain_accession_column"]),
                    description_col=int(io_cfg["domain_description_column"]),
                )
            elif kind == "hits":
                counts[kind] = store.ingest_hits(
                    out,
                    columns=tuple(io_cfg["hits_columns"]),
                    tm_column=io_cfg["tm_column"],
                )
            elif kind == "structures":
                counts[kind] = store.ingest_structures(
                    out, rescale=bool(io_cfg["plddt_rescale"])
                )
            elif kind == "maxid":
                counts[kind] = store.ingest_maxid(out)
            else:
                raise ConfigInvalidError(f"no such hook target {kind!r}")
            logger.info("hook %s ingested %d entries", kind, counts[kind])
    return counts


def format_maxid_csv(results) -> str:
    """id,target,identity,columns,matches rows (identity at full precision)."""
    lines = []
    for r in results:
        target = r.target_id if r.target_id is not None else "-"
        lines.append(f"{r.query_id},{target},{r.identity!r},{r.columns},{r.matches}\n")
    return "".join(lines)


def parse_maxid_csv(text: str) -> dict[str, tuple[str, float, int, int]]:
    rows: dict[str, tuple[str, float, int, int]] = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        seq_id, target, ident, columns, matches = line.split(",")
        rows[seq_id] = (target, float(ident), int(columns), int(matches))
    return rows
