#!/usr/bin/env python3
"""Regenerate the committed candidate-validation fixture bundle.

Builds a 77-candidate evidence bundle in tests/fixtures/table1/: seven
candidates carry the reference scorecard values (detector, pLDDT, TM,
maxID percent, EC, domains) and must survive every filter; the other 70
each fail at least the identity screen. maxID values are planted as exact
alignment fractions: each query gets a training-set neighbor differing in
exactly (columns - matches) scattered substitutions, and the script
verifies the aligner reproduces the intended fraction before anything is
written. Deterministic under the fixed seed; rerunning rewrites identical
bytes (modulo nothing).

Usage: python tools/make_table1_fixture.py
"""

from __future__ import annotations

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from tpscurate.align import AlignParams, _align_stats, maxid_table
from tpscurate.seqio import ProteinSequence, SequenceSet, write_fasta
from tpscurate.store import format_maxid_csv

OUT = REPO / "tests" / "fixtures" / "table1"
AA = "ACDEFGHIKLMNPQRSTVWY"
PARAMS = AlignParams()

# (id, length, target percent string, detector, plddt, tm, ec, domains)
SEVEN = [
    ("TpsGPT1", 440, "49.67", 0.75, 78, 0.73, "4.2.3.75/0.88",
     [("IPR001906", "Terpene synthase, N-terminal domain"),
      ("IPR005630", "Terpene synthase, metal-binding domain")]),
    ("TpsGPT2", 560, "59.72", 0.72, 74, 0.79, "2.5.1.21/0.81",
     [("IPR044844", "Trans-isoprenyl diphosphate synthases, head-to-head domain")]),
    ("TpsGPT3", 400, "60.00", 0.73, 74, 0.84, "5.4.99.33/0.77",
     [("IPR032696", "Squalene-hopene cyclase, N-terminal domain")]),
    ("TpsGPT4", 485, "60.08", 0.73, 70, 0.65, "2.5.1.21/0.74",
     [("IPR044844", "Trans-isoprenyl diphosphate synthases, head-to-head domain")]),
    ("TpsGPT5", 390, "59.75", 0.78, 80, 0.72, "5.4.99.39/0.83",
     [("IPR032696", "Squalene-hopene cyclase, N-terminal domain")]),
    ("TpsGPT6", 376, "57.33", 0.73, 71, 0.69, "2.5.1.21/0.79",
     [("IPR044844", "Trans-isoprenyl diphosphate synthases, head-to-head domain")]),
    ("TpsGPT7", 422, "52.19", 0.74, 71, 0.72, "5.4.99.8/0.76",
     [("IPR032696", "Squalene-hopene cyclase, N-terminal domain")]),
]

OTHER_ECS = ["4.2.3.75/0.52", "1.1.1.1/0.66", "2.5.1.21/0.49", "3.2.1.4/0.71"]
OTHER_DOMAINS = [
    [("IPR001906", "Terpene synthase, N-terminal domain")],
    [("IPR008949", "Isoprenoid synthase domain superfamily")],
    [],
]


def random_protein(rng, length):
    return "".join(rng.choice(list(AA), size=length))


def substituted_copy(rng, query, substitutions):
    neighbor = list(query)
    for pos in rng.choice(len(query), size=substitutions, replace=False):
        choices = [c for c in AA if c != neighbor[pos]]
        neighbor[pos] = choices[rng.integers(len(choices))]
    return "".join(neighbor)


def planted_pair(rng, length, percent_str, max_tries=20000):
    """Query plus neighbor whose measured identity formats to ``percent_str``.

    The optimal alignment of a randomly substituted copy recovers a few
    score-neutral extra matches through gaps, so the realized identity sits
    above the substitution rate and jitters draw to draw; a feedback loop
    on the substitution count keeps draws centered on the target until one
    lands in the 0.01-point display window.
    """
    target = float(percent_str)
    matches_planted = round(target / 100.0 * length)
    for _ in range(max_tries):
        query = random_protein(rng, length)
        neighbor = substituted_copy(rng, query, length - matches_planted)
        _, cols, matches = _align_stats(query, neighbor, PARAMS)
        identity = matches / cols
        if f"{identity * 100.0:.2f}" == percent_str:
            return query, neighbor, cols, matches
        error = identity * 100.0 - target
        step = int(round(error / 100.0 * length))
        if step == 0:
            step = 1 if error > 0 else -1
        matches_planted = min(length - 1, max(1, matches_planted - step))
    raise RuntimeError(f"no draw hit {percent_str}% at length {length}")


def planted_failing_pair(rng, length, identity_target):
    """Query plus neighbor whose rounded maxID percent exceeds 60."""
    matches = round(identity_target * length)
    for _ in range(60):
        query = random_protein(rng, length)
        neighbor = substituted_copy(rng, query, length - matches)
        _, cols, m = _align_stats(query, neighbor, PARAMS)
        if int(np.floor(m * 100.0 / cols + 0.5)) >= 61:
            return query, neighbor
    raise RuntimeError("could not plant a failing pair")


def atom_row(serial, resseq, bfactor):
    return (
        f"ATOM  {serial:>5} CA   ALA A{resseq:>4}    "
        f"{float(resseq):8.3f}{0.0:8.3f}{0.0:8.3f}{1.00:6.2f}{bfactor:6.2f}"
        "          C  \n"
    )


def structure_text(mean, n_residues, rng):
    """CA-only coordinates whose temperature factors average exactly ``mean``."""
    deltas = []
    for _ in range(n_residues // 2):
        step = float(rng.integers(1, 8)) * 0.25
        deltas.extend((step, -step))
    if n_residues % 2:
        deltas.append(0.0)
    rows = [atom_row(i + 1, i + 1, mean + d) for i, d in enumerate(deltas)]
    return "".join(rows) + "TER\nEND\n"


def interpro_rows(seq_id, length, domains):
    rows = []
    for accession, description in domains:
        rows.append(
            "\t".join(
                [seq_id, "0" * 32, str(length), "ProSitePatterns", "PS99999",
                 "signature", "1", str(length), "1.0E-30", "T", "09-08-2026",
                 accession, description]
            )
        )
    return rows


def main():
    rng = np.random.default_rng(174403)
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "structures").mkdir(exist_ok=True)

    candidates = []
    train = []
    detector_rows = []
    hits_rows = []
    ec_rows = []
    domain_rows = []
    plddt_expect = {}

    planted_stats = {}
    for seq_id, length, percent, det, plddt, tm, ec, domains in SEVEN:
        query, neighbor, cols, matches = planted_pair(rng, length, percent)
        planted_stats[seq_id] = (cols, matches)
        candidates.append(ProteinSequence(seq_id, query))
        train.append(ProteinSequence(f"train-{seq_id}", neighbor))
        detector_rows.append(f"{seq_id},{det:.2f}")
        hits_rows.append(f"{seq_id}\ttrain-{seq_id}\t{tm:.2f}")
        hits_rows.append(f"{seq_id}\ttrain-decoy-00\t{max(tm - 0.21, 0.05):.2f}")
        ec_rows.append(f"{seq_id}, EC:{ec}")
        domain_rows.extend(interpro_rows(seq_id, len(query), domains))
        structure = structure_text(float(plddt), int(rng.integers(8, 25)) * 2, rng)
        (OUT / "structures" / f"{seq_id}.pdb").write_text(structure, encoding="ascii")
        plddt_expect[seq_id] = float(plddt)

    for i in range(70):
        seq_id = f"cand-{i + 8:02d}"
        length = int(rng.integers(300, 460))
        target_identity = float(rng.uniform(0.63, 0.92))
        query, neighbor = planted_failing_pair(rng, length, target_identity)
        candidates.append(ProteinSequence(seq_id, query))
        train.append(ProteinSequence(f"train-{seq_id}", neighbor))
        detector_rows.append(f"{seq_id},{rng.uniform(0.70, 0.99):.2f}")
        hits_rows.append(f"{seq_id}\ttrain-{seq_id}\t{rng.uniform(0.30, 0.95):.2f}")
        ec_rows.append(f"{seq_id}, EC:{OTHER_ECS[i % len(OTHER_ECS)]}")
        domain_rows.extend(
            interpro_rows(seq_id, length, OTHER_DOMAINS[i % len(OTHER_DOMAINS)])
        )
        mean = float(rng.integers(220, 360)) * 0.25  # 55.0 .. 90.0 in quarter steps
        structure = structure_text(mean, int(rng.integers(6, 20)) * 2, rng)
        (OUT / "structures" / f"{seq_id}.pdb").write_text(structure, encoding="ascii")
        plddt_expect[seq_id] = mean

    for i in range(20):
        train.append(
            ProteinSequence(f"train-decoy-{i:02d}", random_protein(rng, int(rng.integers(300, 500))))
        )

    candidate_set = SequenceSet(tuple(candidates))
    train_set = SequenceSet(tuple(train))
    (OUT / "candidates.fasta").write_bytes(write_fasta(candidate_set))
    (OUT / "train.fasta").write_bytes(write_fasta(train_set))

    # exact maxID of every candidate against the training set; the seven must
    # match their planted neighbors at the exact intended fraction
    results = maxid_table(candidate_set, train_set, PARAMS, threads=2)
    by_id = {r.query_id: r for r in results}
    for seq_id, length, percent, *_ in SEVEN:
        got = by_id[seq_id]
        assert got.target_id == f"train-{seq_id}", (seq_id, got)
        assert (got.columns, got.matches) == planted_stats[seq_id], (seq_id, got)
        assert f"{got.identity * 100.0:.2f}" == percent
    for i in range(70):
        seq_id = f"cand-{i + 8:02d}"
        got = by_id[seq_id]
        assert int(np.floor(got.identity * 100.0 + 0.5)) >= 61, (seq_id, got)
    (OUT / "maxid.csv").write_text(format_maxid_csv(results), encoding="ascii")

    (OUT / "detector.csv").write_text("\n".join(detector_rows) + "\n", encoding="ascii")
    (OUT / "hits.tsv").write_text("\n".join(hits_rows) + "\n", encoding="ascii")
    (OUT / "ec.csv").write_text("\n".join(ec_rows) + "\n", encoding="ascii")
    (OUT / "domains.tsv").write_text("\n".join(domain_rows) + "\n", encoding="ascii")

    (OUT / "config.yaml").write_text(
        """tool_versions:
  detector: "1.0"
  structure-predictor: "1.0"
  structure-search: "1.0"
filters:
  stages: [detector, maxid, ec, domain, plddt, tm]
  domain_allowlist: [IPR001906, IPR005630, IPR044844, IPR032696]
""",
        encoding="ascii",
    )

    # run the real CLI end to end and freeze the golden candidate table
    with tempfile.TemporaryDirectory() as tmp:
        store = Path(tmp) / "store"
        outdir = Path(tmp) / "out"
        base = [sys.executable, "-m", "tpscurate.cli", "--config", str(OUT / "config.yaml")]
        subprocess.run(
            base + ["ingest", "--store", str(store),
                    "--fasta", str(OUT / "candidates.fasta"),
                    "--detector", str(OUT / "detector.csv"),
                    "--ec", str(OUT / "ec.csv"),
                    "--domains", str(OUT / "domains.tsv"),
                    "--structures", str(OUT / "structures"),
                    "--hits", str(OUT / "hits.tsv"),
                    "--maxid", str(OUT / "maxid.csv")],
            check=True,
        )
        subprocess.run(base + ["filter", "--store", str(store), "--out", str(outdir)], check=True)
        table = (outdir / "candidates.csv").read_text(encoding="ascii")
        rows = table.splitlines()
        assert len(rows) == 8, rows
        ids = [row.split(",")[0] for row in rows[1:]]
        assert ids == [item[0] for item in SEVEN], ids
        for row, item in zip(rows[1:], SEVEN):
            seq_id, _, percent, det, plddt, tm, ec, domains = item
            fields = row.split(",")
            assert fields[1] == f"{det:.2f}", row
            assert fields[2] == f"{plddt:.2f}", row
            assert fields[3] == f"{tm:.2f}", row
            assert fields[4] == percent, row
            assert fields[5] == ec.split("/")[0], row
            assert fields[6] == ";".join(acc for acc, _ in domains), row
        (OUT / "golden").mkdir(exist_ok=True)
        (OUT / "golden" / "candidates.csv").write_text(table, encoding="ascii")
        funnel = (outdir / "funnel.tsv").read_text(encoding="ascii")
        (OUT / "golden" / "funnel.tsv").write_text(funnel, encoding="ascii")

    print(f"fixture bundle written under {OUT}")
    print("verified: seven reference candidates pass, 70 planted failures do not")


if __name__ == "__main__":
    main()
