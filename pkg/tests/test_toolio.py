import json
import math

import numpy as np
import pytest

from tpscurate.errors import (
    ConfidenceOutOfRangeError,
    CurateError,
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
from tpscurate.toolio import (
    DomainHit,
    best_hits,
    join_function_annotations,
    parse_detector_scores,
    parse_domain_annotations,
    parse_ec_predictions,
    parse_generation_records,
    parse_profile_hits,
    parse_structural_hits,
    parse_structure_plddt,
    perplexity,
    stronger_non_tps_filter,
    write_structural_hits,
)


def record_line(seq_id, sequence, logprobs, **extra):
    payload = {"id": seq_id, "sequence": sequence, "token_logprobs": logprobs}
    payload.update(extra)
    return json.dumps(payload)


def atom_row(serial, resseq, bfactor, name="CA"):
    # strict fixed columns: serial 7-11, name 13-16, resSeq 23-26, x/y/z
    # 31-54, occupancy 55-60, temperature factor 61-66
    return (
        f"ATOM  {serial:>5} {name:<4} ALA A{resseq:>4}    "
        f"{1.0:8.3f}{2.0:8.3f}{3.0:8.3f}{1.00:6.2f}{bfactor:6.2f}"
        "          C  "
    )


# perplexity -------------------------------------------------------------


def test_perplexity_uniform_twenty():
    lp = [math.log(1 / 20)] * 7
    assert perplexity(lp) == pytest.approx(20.0, rel=1e-12)


def test_perplexity_zero_logprobs_is_one():
    assert perplexity([0.0, 0.0, 0.0]) == 1.0


def test_perplexity_empty_input():
    with pytest.raises(EmptyInputError):
        perplexity([])


def test_perplexity_permutation_invariant_exactly(rng):
    for _ in range(200):
        values = (-rng.random(int(rng.integers(1, 50))) * 5).tolist()
        shuffled = list(values)
        rng.shuffle(shuffled)
        assert perplexity(values) == perplexity(shuffled)


def test_perplexity_monotone_in_single_logprob(rng):
    values = (-rng.random(20) * 3).tolist()
    bumped = list(values)
    bumped[7] = bumped[7] / 2  # closer to zero = more probable
    assert perplexity(bumped) < perplexity(values)


def test_perplexity_matches_one_liner_oracle(rng):
    for _ in range(1000):
        values = (-rng.random(int(rng.integers(1, 80))) * 8).tolist()
        expected = math.exp(-sum(values) / len(values))
        assert perplexity(values) == pytest.approx(expected, rel=1e-12)


# generation records ------------------------------------------------------


def test_parse_records_computes_perplexity():
    text = "\n".join(
        [
            record_line("g1", "MKT", [math.log(1 / 20)] * 3),
            record_line("g2", "MKLV", [0.0, 0.0]),
        ]
    )
    records = parse_generation_records(text)
    assert [r.id for r in records] == ["g1", "g2"]
    assert records[0].perplexity == pytest.approx(20.0, rel=1e-12)
    assert records[1].perplexity == 1.0


def test_parse_records_schema_errors():
    with pytest.raises(SchemaError):
        parse_generation_records("not json\n")
    with pytest.raises(SchemaError):
        parse_generation_records('{"id": "a", "sequence": "MKT"}\n')
    with pytest.raises(SchemaError):
        parse_generation_records(record_line("a", "MK9T", [-1.0]))
    with pytest.raises(SchemaError):
        parse_generation_records(record_line("a", "MKT", []))
    with pytest.raises(SchemaError):
        parse_generation_records(
            record_line("a", "MKT", [-1.0]) + "\n" + record_line("a", "MKV", [-1.0])
        )


def test_parse_records_positive_logprob():
    with pytest.raises(LogprobPositiveError) as err:
        parse_generation_records(record_line("a", "MKT", [-0.5, 0.25]))
    assert (err.value.line, err.value.index) == (1, 1)


def test_parse_records_token_count_contract():
    ok = record_line("a", "MKT", [-0.5, -0.25], token_count=2)
    assert parse_generation_records(ok)[0].token_logprobs == (-0.5, -0.25)
    with pytest.raises(LengthMismatchError):
        parse_generation_records(record_line("a", "MKT", [-0.5], token_count=3))


def test_parse_records_perplexities_match_oracle(rng):
    lines = []
    expected = []
    for i in range(1000):
        values = (-rng.random(int(rng.integers(1, 40))) * 6).tolist()
        lines.append(record_line(f"g{i:04d}", "MKTLV", values))
        expected.append(math.exp(-sum(values) / len(values)))
    records = parse_generation_records("\n".join(lines))
    for rec, want in zip(records, expected):
        assert rec.perplexity == pytest.approx(want, rel=1e-12)


# structure confidence -----------------------------------------------------


def test_plddt_mean_of_three_residues():
    rows = [atom_row(i + 1, i + 1, value) for i, value in enumerate((70.0, 80.0, 90.0))]
    conf = parse_structure_plddt("\n".join(rows), seq_id="x")
    assert conf.mean_plddt == 80.0
    assert conf.plddt == (70.0, 80.0, 90.0)


def test_plddt_ignores_non_ca_and_later_models():
    rows = [
        "MODEL        1",
        atom_row(1, 1, 70.0),
        atom_row(2, 1, 10.0, name="CB"),
        atom_row(3, 2, 80.0),
        "ENDMDL",
        "MODEL        2",
        atom_row(4, 1, 5.0),
        "ENDMDL",
    ]
    conf = parse_structure_plddt("\n".join(rows), seq_id="x")
    assert conf.plddt == (70.0, 80.0)


def test_plddt_zero_to_one_scale_two_cases():
    rows = "\n".join(atom_row(i + 1, i + 1, v) for i, v in enumerate((0.70, 0.90)))
    with pytest.raises(ConfidenceOutOfRangeError):
        parse_structure_plddt(rows, seq_id="x")
    conf = parse_structure_plddt(rows, seq_id="x", rescale=True)
    assert conf.plddt == (70.0, 90.0)


def test_plddt_errors():
    with pytest.raises(NoAtomsError):
        parse_structure_plddt("REMARK nothing here\n", seq_id="x")
    with pytest.raises(MalformedAtomRowError):
        parse_structure_plddt("ATOM      1 CA  ALA A   1  bad-row", seq_id="x")
    bad_value = atom_row(1, 1, 150.0)
    with pytest.raises(ConfidenceOutOfRangeError):
        parse_structure_plddt(bad_value, seq_id="x")


def test_plddt_mean_within_min_max(rng):
    for _ in range(50):
        values = rng.uniform(2.0, 100.0, size=int(rng.integers(1, 30)))
        rows = "\n".join(atom_row(i + 1, i + 1, v) for i, v in enumerate(values))
        conf = parse_structure_plddt(rows, seq_id="x")
        assert min(values) <= conf.mean_plddt <= max(values)


# structural hits ------------------------------------------------------------


def test_hits_single_row():
    hits = parse_structural_hits("q1\tt9\t0.73\n")
    assert best_hits(hits)["q1"].tm_score == 0.73


def test_hits_ranked_descending():
    hits = parse_structural_hits("q1\tt1\t0.5\nq1\tt2\t0.9\n")
    assert [(h.target, h.tm_score, h.rank) for h in hits] == [
        ("t2", 0.9, 1),
        ("t1", 0.5, 2),
    ]


def test_hits_declared_columns():
    hits = parse_structural_hits(
        "t1\t0.88\tq1\textra\n", columns=("target", "alntm", "query", "junk"), tm_column="alntm"
    )
    assert best_hits(hits)["q1"].target == "t1"
    with pytest.raises(MissingColumnError):
        parse_structural_hits("x\n", columns=("query", "target"))


def test_hits_errors():
    with pytest.raises(UnparsableRowError):
        parse_structural_hits("q1\tt1\n")
    with pytest.raises(UnparsableRowError):
        parse_structural_hits("q1\tt1\tnope\n")
    with pytest.raises(UnparsableRowError):
        parse_structural_hits("q1\tt1\t1.5\n")


def test_hits_roundtrip():
    text = "q1\tt1\t0.5\nq1\tt2\t0.9\nq2\tt3\t0.25\n"
    hits = parse_structural_hits(text)
    assert parse_structural_hits(write_structural_hits(hits)) == hits


def test_hits_fuzz_total(rng):
    for _ in range(500):
        blob = bytes(rng.integers(0, 256, size=int(rng.integers(0, 100)), dtype=np.uint8))
        try:
            parse_structural_hits(blob)
        except CurateError:
            pass


# detector scores ---------------------------------------------------------------


def test_detector_basic_and_boundaries():
    scores = parse_detector_scores("TpsGPT1,0.75\nlow,0.0\nhigh,1.0\n")
    assert scores == {"TpsGPT1": 0.75, "low": 0.0, "high": 1.0}


def test_detector_out_of_range():
    with pytest.raises(ScoreOutOfRangeError):
        parse_detector_scores("a,1.5\n")


def test_detector_duplicate_lists_both_lines():
    with pytest.raises(DuplicateIdError) as err:
        parse_detector_scores("a,0.5\nb,0.6\na,0.7\n")
    assert (err.value.first_line, err.value.line) == (1, 3)
    assert "lines 1 and 3" in str(err.value)


# EC predictions ------------------------------------------------------------------


def test_ec_single_prediction():
    assert parse_ec_predictions("TpsGPT1, EC:4.2.3.75/0.88\n") == {
        "TpsGPT1": ["4.2.3.75"]
    }


def test_ec_multiple_in_order():
    preds = parse_ec_predictions("x, EC:2.5.1.21/0.5, EC:5.4.99.8/0.2\n")
    assert preds["x"] == ["2.5.1.21", "5.4.99.8"]


def test_ec_dash_last_field_allowed():
    assert parse_ec_predictions("x, EC:4.2.3.-\n")["x"] == ["4.2.3.-"]


def test_ec_malformed():
    with pytest.raises(MalformedECError):
        parse_ec_predictions("x, EC:4.2.banana\n")
    with pytest.raises(MalformedECError):
        parse_ec_predictions("x, EC:4.2.3\n")
    with pytest.raises(MalformedECError):
        parse_ec_predictions("x, EC:0.2.3.4\n")


# domain annotations ---------------------------------------------------------------


def interpro_row(seq_id, accession, description):
    fields = [seq_id, "md5", "300", "PANTHER", "PTHR1", "sig desc", "1", "300",
              "1e-20", "T", "01-01-2025", accession, description]
    return "\t".join(fields)


def test_domains_capture_accession():
    table = parse_domain_annotations(
        interpro_row("TpsGPT1", "IPR005630", "Terpene synthase, metal-binding domain")
    )
    assert table["TpsGPT1"] == [
        ("IPR005630", "Terpene synthase, metal-binding domain")
    ]


def test_domains_zero_rows_is_empty_not_error():
    assert parse_domain_annotations("") == {}


def test_domains_deduplicate_preserving_order():
    text = "\n".join(
        [
            interpro_row("a", "IPR001906", "N-terminal"),
            interpro_row("a", "IPR005630", "metal-binding"),
            interpro_row("a", "IPR001906", "N-terminal"),
        ]
    )
    assert [acc for acc, _ in parse_domain_annotations(text)["a"]] == [
        "IPR001906",
        "IPR005630",
    ]


def test_domains_dash_accession_rows_are_unassigned():
    table = parse_domain_annotations(interpro_row("a", "-", ""))
    assert table["a"] == []


def test_domains_row_too_short():
    with pytest.raises(RowTooShortError):
        parse_domain_annotations("a\tb\tc\n")


def test_domains_custom_columns():
    table = parse_domain_annotations("a\tIPR9\tdesc\n", accession_col=2, description_col=3)
    assert table["a"] == [("IPR9", "desc")]


def test_join_function_annotations():
    joined = join_function_annotations(
        {"a": 0.8}, {"a": ["4.2.3.75"], "b": ["1.1.1.1"]}, {"a": [("IPR1", "d")]}
    )
    assert joined["a"].detector_score == 0.8
    assert joined["b"].detector_score is None
    assert joined["a"].domain_accessions == (("IPR1", "d"),)


# profile hits ----------------------------------------------------------------------


def domtbl_row(seq_id, profile, accession, evalue, score):
    return (
        f"{seq_id}  -  400 {profile}  {accession}  350 {evalue} {score} 1.0 "
        "1 1 1e-10 1e-9 40.0 0.1 1 350 1 350 1 350 0.9 description"
    )


def test_profile_hits_parse_and_comments():
    text = "\n".join(
        [
            "# comment line",
            domtbl_row("seq1", "TPS_dom", "PF03936.20", "1e-50", "200.0"),
            domtbl_row("seq1", "Other_dom", "PF00001.1", "1e-30", "150.0"),
        ]
    )
    hits = parse_profile_hits(text)
    assert hits[0] == DomainHit("seq1", "PF03936.20", 200.0, 1e-50)
    assert len(hits) == 2


def test_profile_hits_dash_accession_falls_back_to_name():
    hits = parse_profile_hits(domtbl_row("s", "TPS_dom", "-", "1e-5", "22.0"))
    assert hits[0].accession == "TPS_dom"


def test_profile_hits_unparsable():
    with pytest.raises(UnparsableRowError):
        parse_profile_hits("a b c\n")
    with pytest.raises(UnparsableRowError):
        parse_profile_hits(domtbl_row("s", "p", "PF1", "zero", "1.0"))
    with pytest.raises(UnparsableRowError):
        parse_profile_hits(domtbl_row("s", "p", "PF1", "0.0", "1.0"))


TPS_ACCESSIONS = ["PF03936", "PF01397"]


def _hits(*rows):
    return [DomainHit(*row) for row in rows]


def test_stronger_non_tps_keeps_stronger_tps():
    hits = _hits(
        ("s1", "PF03936.20", 200.0, 1e-50), ("s1", "PF09999.1", 150.0, 1e-30)
    )
    assert stronger_non_tps_filter(hits, TPS_ACCESSIONS) == set()


def test_stronger_non_tps_tie_keeps():
    hits = _hits(("s1", "PF03936", 150.0, 1e-30), ("s1", "PF09999", 150.0, 1e-30))
    assert stronger_non_tps_filter(hits, TPS_ACCESSIONS) == set()


def test_only_non_tps_hits_excluded():
    hits = _hits(("s1", "PF09999", 10.0, 1e-3))
    assert stronger_non_tps_filter(hits, TPS_ACCESSIONS) == {"s1"}


def test_stronger_non_tps_excludes():
    hits = _hits(("s1", "PF03936", 100.0, 1e-20), ("s1", "PF09999", 180.0, 1e-40))
    assert stronger_non_tps_filter(hits, TPS_ACCESSIONS) == {"s1"}


# totality fuzz over every parser ------------------------------------------------


@pytest.mark.parametrize(
    "parser",
    [
        parse_generation_records,
        lambda data: parse_structure_plddt(data, seq_id="f"),
        parse_structural_hits,
        parse_detector_scores,
        parse_ec_predictions,
        parse_domain_annotations,
        parse_profile_hits,
    ],
    ids=["records", "plddt", "hits", "detector", "ec", "domains", "profile"],
)
def test_parsers_total_on_random_bytes(parser, rng):
    for _ in range(300):
        blob = bytes(rng.integers(0, 256, size=int(rng.integers(0, 80)), dtype=np.uint8))
        try:
            parser(blob)
        except CurateError:
            pass
