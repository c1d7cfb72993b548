import pytest

from conftest import random_protein
from tpscurate.cli import main
from tpscurate.seqio import parse_fasta


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("filters:\n  detector_min: 0.7\n", encoding="ascii")
    return str(path)


def run(argv):
    return main(argv)


def test_usage_error_exits_64(capsys):
    with pytest.raises(SystemExit) as err:
        run(["bogus-subcommand", "--config", "x"])
    assert err.value.code == 64
    assert "usage:" in capsys.readouterr().err


def test_missing_config_flag_exits_64():
    with pytest.raises(SystemExit) as err:
        run(["curate", "--in", "a.fasta", "--out", "b.fasta"])
    assert err.value.code == 64


def test_missing_input_file_exits_2(config_path, tmp_path):
    code = run(
        ["--config", config_path, "curate", "--in", str(tmp_path / "nope.fasta"),
         "--out", str(tmp_path / "out.fasta")]
    )
    assert code == 2


def test_validation_error_exits_1(config_path, tmp_path):
    bad = tmp_path / "bad.fasta"
    bad.write_text(">a\nMKT\n>a\nMKV\n", encoding="ascii")
    code = run(
        ["--config", config_path, "curate", "--in", str(bad), "--out", str(tmp_path / "o.fasta")]
    )
    assert code == 1


def test_curate_length_stage_removal(config_path, tmp_path, rng, capsys):
    # two in-window sequences carrying a full class signature, one short one
    motif_block = "DDAAD" + "M" * 10 + "NDAATAAAE"
    body = random_protein(rng, 300)
    records = [
        (">keep1", body + motif_block),
        (">keep2", motif_block + body),
        (">short", "MKT" + motif_block),
    ]
    infile = tmp_path / "in.fasta"
    infile.write_text("".join(f"{h}\n{s}\n" for h, s in records), encoding="ascii")
    out = tmp_path / "curated.fasta"
    funnel = tmp_path / "funnel.tsv"
    code = run(
        ["--config", config_path, "curate", "--in", str(infile), "--out", str(out),
         "--funnel", str(funnel)]
    )
    assert code == 0
    kept = parse_fasta(out.read_bytes())
    assert kept.ids() == ["keep1", "keep2"]
    lines = funnel.read_text().splitlines()
    assert lines[1] == "length\t3\t2"  # the short sequence leaves at stage 1
    assert lines[2] == "motif\t2\t2"


def test_curate_blocklist_and_profile_stages(tmp_path, rng):
    motif_block = "DDAAD" + "M" * 10 + "NDAATAAAE"
    body_a = random_protein(rng, 300)
    body_b = random_protein(rng, 300)
    infile = tmp_path / "in.fasta"
    infile.write_text(
        f">novel\n{body_a + motif_block}\n"
        f">copycat\n{body_b + motif_block}\n"
        f">offtarget\n{body_a[::-1] + motif_block}\n",
        encoding="ascii",
    )
    blocklist = tmp_path / "blocklist.fasta"
    blocklist.write_text(f">known\n{body_b + motif_block}\n", encoding="ascii")
    profile = tmp_path / "profile.domtbl"
    profile.write_text(
        "# comment\n"
        "offtarget  -  400 Other_dom  PF00001.1  350 1e-30 150.0 1.0 "
        "1 1 1e-10 1e-9 40.0 0.1 1 350 1 350 1 350 0.9 desc\n",
        encoding="ascii",
    )
    config = tmp_path / "run.yaml"
    config.write_text(
        f"curation:\n"
        f"  blocklist: {blocklist}\n"
        f"  profile_hits: {profile}\n"
        f"  tps_accessions: [PF03936]\n",
        encoding="ascii",
    )
    out = tmp_path / "curated.fasta"
    code = run(["--config", str(config), "curate", "--in", str(infile), "--out", str(out)])
    assert code == 0
    kept = parse_fasta(out.read_bytes())
    # copycat is >80% identical to the blocklist, offtarget has only non-TPS hits
    assert kept.ids() == ["novel"]


def test_split_writes_manifest_and_verifies(config_path, tmp_path, rng):
    lines = []
    for fam, alphabet in enumerate(("ACDEFG", "HIKLMN", "PQRSTV", "WYACDE")):
        seed = random_protein(rng, 60, alphabet=alphabet)
        for member in range(5):
            residues = list(seed)
            for pos in rng.choice(60, size=6, replace=False):
                choices = [c for c in alphabet if c != residues[pos]]
                residues[pos] = choices[rng.integers(len(choices))]
            lines.append(f">f{fam}m{member}\n{''.join(residues)}\n")
    infile = tmp_path / "fams.fasta"
    infile.write_text("".join(lines), encoding="ascii")
    manifest = tmp_path / "split.tsv"
    train_fasta = tmp_path / "train.fasta"
    config = tmp_path / "split.yaml"
    config.write_text("split:\n  partitions: 4\n", encoding="ascii")
    code = run(
        ["--config", str(config), "split", "--in", str(infile), "--out", str(manifest),
         "--verify", "--train-fasta", str(train_fasta)]
    )
    assert code == 0
    body = manifest.read_text()
    assert body.startswith("# split-manifest v1\n")
    assert body.count("\n") == 9 + 20  # summary block + header + one row per sequence
    assert parse_fasta(train_fasta.read_bytes())


def test_maxid_ingest_filter_report_roundtrip(tmp_path, rng):
    config = tmp_path / "run.yaml"
    config.write_text(
        "filters:\n"
        "  stages: [maxid, detector]\n",
        encoding="ascii",
    )
    qdir = tmp_path
    queries = qdir / "queries.fasta"
    novel = random_protein(rng, 120)
    close = random_protein(rng, 120)
    queries.write_text(f">q-novel\n{novel}\n>q-close\n{close}\n", encoding="ascii")
    db = qdir / "db.fasta"
    db.write_text(f">t0\n{close}\n>t1\n{random_protein(rng, 120)}\n", encoding="ascii")
    maxid_csv = qdir / "maxid.csv"
    code = run(
        ["--config", str(config), "maxid", "--queries", str(queries), "--db", str(db),
         "--out", str(maxid_csv)]
    )
    assert code == 0
    detector = qdir / "detector.csv"
    detector.write_text("q-novel,0.9\nq-close,0.9\n", encoding="ascii")
    structures = qdir / "structs"
    structures.mkdir()
    row = (
        f"ATOM      1 CA   ALA A   1    {1.0:8.3f}{0.0:8.3f}{0.0:8.3f}"
        f"{1.00:6.2f}{75.0:6.2f}          C  \n"
    )
    (structures / "q-novel.pdb").write_text(row, encoding="ascii")
    (structures / "q-close.pdb").write_text(row, encoding="ascii")
    store = qdir / "store"
    code = run(
        ["--config", str(config), "ingest", "--store", str(store),
         "--fasta", str(queries), "--detector", str(detector),
         "--maxid", str(maxid_csv), "--structures", str(structures)]
    )
    assert code == 0
    out = qdir / "out"
    code = run(["--config", str(config), "filter", "--store", str(store), "--out", str(out)])
    assert code == 0
    table = (out / "candidates.csv").read_text()
    assert "q-novel" in table and "q-close" not in table  # 100% identical target
    funnel = (out / "funnel.tsv").read_text().splitlines()
    assert funnel[1].startswith("maxid\t2\t1")
    code = run(["--config", str(config), "report", "--store", str(store), "--out", str(out)])
    assert code == 0
    assert (out / "plddt_cdf.tsv").read_text().endswith("75.000000\t1.000000000\n")


def test_ingest_without_flags_is_usage_error(config_path, tmp_path):
    code = run(["--config", config_path, "ingest", "--store", str(tmp_path / "s")])
    assert code == 64


def test_version_flag():
    with pytest.raises(SystemExit) as err:
        run(["--version"])
    assert err.value.code == 0


def test_ingest_run_hooks_executes_configured_commands(tmp_path, rng):
    queries = tmp_path / "candidates.fasta"
    queries.write_text(
        f">c1\n{random_protein(rng, 40)}\n>c2\n{random_protein(rng, 40)}\n",
        encoding="ascii",
    )
    hook = tmp_path / "fake_detector.py"
    hook.write_text(
        "import sys\n"
        "ids = [l[1:].strip() for l in open(sys.argv[1]) if l.startswith('>')]\n"
        "open(sys.argv[2], 'w').write(''.join(f'{i},0.80\\n' for i in ids))\n",
        encoding="ascii",
    )
    config = tmp_path / "run.yaml"
    config.write_text(
        "hooks:\n"
        f"  detector: \"python3 {hook} {{fasta}} {{out}}\"\n",
        encoding="ascii",
    )
    store = tmp_path / "store"
    code = run(
        ["--config", str(config), "ingest", "--store", str(store),
         "--fasta", str(queries), "--run-hooks"]
    )
    assert code == 0
    assert (store / "detector.csv").read_text().splitlines() == ["c1,0.8", "c2,0.8"]


def test_failing_hook_exits_1(tmp_path, rng):
    queries = tmp_path / "candidates.fasta"
    queries.write_text(f">c1\n{random_protein(rng, 40)}\n", encoding="ascii")
    config = tmp_path / "run.yaml"
    config.write_text(
        'hooks:\n  detector: "python3 -c \'raise SystemExit(3)\' {fasta} {out}"\n',
        encoding="ascii",
    )
    code = run(
        ["--config", str(config), "ingest", "--store", str(tmp_path / "s"),
         "--fasta", str(queries), "--run-hooks"]
    )
    assert code == 1
