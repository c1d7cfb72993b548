import io
import itertools

import pytest

from conftest import mutate, random_protein
from oracles import UnionFind
from tpscurate.align import AlignParams
from tpscurate.errors import InvalidPartitionSelectionError
from tpscurate.partition import (
    Cluster,
    IdentityGraph,
    assign_partitions,
    build_identity_graph,
    cluster,
    make_split,
    read_split_manifest,
    verify_split,
    write_split_manifest,
)
from tpscurate.seqio import ProteinSequence, SequenceSet

P = AlignParams()

# three families over pairwise-disjoint residue subsets: cross-family identity
# is exactly zero, so the planted edge structure is certain
FAMILY_ALPHABETS = ("ACDEFG", "HIKLMN", "PQRSTV")


def planted_families(rng, sizes=(6, 5, 4), length=60, mutation=0.2):
    records = []
    membership = {}
    for fam, (size, alphabet) in enumerate(zip(sizes, FAMILY_ALPHABETS)):
        seed = random_protein(rng, length, alphabet=alphabet)
        for member in range(size):
            seq_id = f"f{fam}m{member}"
            records.append(
                ProteinSequence(seq_id, mutate(rng, seed, mutation, alphabet=alphabet))
            )
            membership[seq_id] = fam
    return SequenceSet(tuple(records)), membership


def test_identical_pair_is_one_edge():
    sset = SequenceSet(
        (ProteinSequence("a", "MKTLLV"), ProteinSequence("b", "MKTLLV"))
    )
    graph = build_identity_graph(sset, 0.3, P)
    assert graph.edges == frozenset({("a", "b")})


def test_empty_set_gives_empty_graph():
    graph = build_identity_graph(SequenceSet(()), 0.3, P)
    assert graph.nodes == () and graph.edges == frozenset()


def test_planted_families_edges_exactly_within(rng):
    sset, membership = planted_families(rng)
    graph = build_identity_graph(sset, 0.3, P)
    for a, b in graph.edges:
        assert membership[a] == membership[b]
    # oracle: exact all-pairs check of the same aligner contract
    from oracles import oracle_identity

    expected = frozenset(
        tuple(sorted((x.id, y.id)))
        for x, y in itertools.combinations(list(sset), 2)
        if oracle_identity(x.residues, y.residues) >= 0.3
    )
    assert graph.edges == expected
    # every family forms one component
    components = cluster(graph)
    assert len(components) == 3


def test_prefilter_proposals_confirmed_exactly(rng):
    sset, _ = planted_families(rng)
    exact = build_identity_graph(sset, 0.3, AlignParams(prefilter=False))
    heuristic = build_identity_graph(
        sset, 0.3, AlignParams(prefilter=True, kmer_k=3, min_shared_kmers=1)
    )
    # proposals are confirmed by exact alignment, so no extra edges ever
    assert heuristic.edges <= exact.edges


def test_cluster_edgeless_graph_is_singletons():
    graph = IdentityGraph(nodes=("c", "a", "b"), edges=frozenset(), threshold=0.3)
    clusters = cluster(graph)
    assert [c.id for c in clusters] == ["a", "b", "c"]
    assert all(len(c) == 1 for c in clusters)


def test_cluster_chain_transitivity():
    graph = IdentityGraph(
        nodes=("a", "b", "c"),
        edges=frozenset({("a", "b"), ("b", "c")}),
        threshold=0.3,
    )
    clusters = cluster(graph)
    assert len(clusters) == 1
    assert clusters[0].members == ("a", "b", "c")


def test_cluster_matches_union_find_oracle(rng):
    for _ in range(30):
        n = int(rng.integers(2, 200))
        nodes = tuple(f"n{i:03d}" for i in range(n))
        edges = set()
        for _ in range(int(rng.integers(0, n))):
            i, j = rng.integers(0, n, 2)
            if i != j:
                edges.add(tuple(sorted((nodes[i], nodes[j]))))
        graph = IdentityGraph(nodes=nodes, edges=frozenset(edges), threshold=0.3)
        mine = {c.members for c in cluster(graph)}
        oracle = UnionFind(nodes)
        for a, b in edges:
            oracle.union(a, b)
        assert mine == {tuple(sorted(group)) for group in oracle.components()}


def _clusters(sizes):
    out = []
    start = 0
    for idx, size in enumerate(sizes):
        members = tuple(f"c{idx}s{j}" for j in range(size))
        out.append(Cluster(id=members[0], members=members))
        start += size
    return out


def test_assign_equal_clusters_one_per_partition():
    clusters = _clusters([3, 3, 3, 3, 3, 3])
    assignment = assign_partitions(clusters, 6)
    assert sorted(assignment.values()) == [1, 2, 3, 4, 5, 6]


def test_assign_greedy_trace():
    # greedy, biggest first into the emptiest partition:
    # 10 -> P1, 9 -> P2, 2 -> P2 (9<10), 2 -> P1 (10<11), 1 -> P2
    # loads: P1 = {10, 2} = 12, P2 = {9, 2, 1} = 12 (also the minimal imbalance)
    clusters = _clusters([10, 9, 2, 2, 1])
    assignment = assign_partitions(clusters, 2)
    loads = {1: 0, 2: 0}
    for cl in clusters:
        loads[assignment[cl.id]] += len(cl)
    assert sorted(loads.values()) == [12, 12]
    # exhaustive minimal-imbalance search at this size agrees
    best = min(
        abs(sum(sizes := [10, 9, 2, 2, 1][i] for i in subset) - (24 - sum([10, 9, 2, 2, 1][i] for i in subset)))
        for r in range(6)
        for subset in itertools.combinations(range(5), r)
    )
    assert abs(loads[1] - loads[2]) == best


def test_assign_balance_bound(rng):
    for _ in range(30):
        sizes = [int(rng.integers(1, 40)) for _ in range(int(rng.integers(2, 30)))]
        partitions = int(rng.integers(2, 8))
        clusters = _clusters(sizes)
        assignment = assign_partitions(clusters, partitions)
        loads = [0] * partitions
        for cl in clusters:
            loads[assignment[cl.id] - 1] += len(cl)
        assert max(loads) - min(loads) <= max(sizes)


def test_assign_fewer_clusters_than_partitions_warns(caplog):
    clusters = _clusters([4, 2])
    with caplog.at_level("WARNING"):
        assignment = assign_partitions(clusters, 4)
    assert len(assignment) == 2
    assert "partitions stay empty" in caplog.text


def test_assign_rejects_degenerate_inputs():
    with pytest.raises(InvalidPartitionSelectionError):
        assign_partitions(_clusters([3]), 1)
    with pytest.raises(InvalidPartitionSelectionError):
        assign_partitions([], 2)


def _full_split(sset, partitions=6, train="auto", threshold=0.3, p=P):
    graph = build_identity_graph(sset, threshold, p)
    clusters = cluster(graph)
    assignment = assign_partitions(clusters, partitions)
    return make_split(
        sset, clusters, assignment, partitions, train_partitions=train, threshold=threshold
    )


def test_make_split_explicit_partitions(rng):
    sset, _ = planted_families(rng, sizes=(8, 6, 5), length=40)
    split = _full_split(sset, partitions=6, train={1, 2, 3, 4, 5})
    assert split.train_partitions == frozenset({1, 2, 3, 4, 5})
    for entry in split.entries:
        assert (entry.role == "train") == (entry.partition in split.train_partitions)
    assert len(split.entries) == len(sset)


def test_make_split_auto_minimizes_ratio_deviation(rng):
    sset, _ = planted_families(rng, sizes=(8, 6, 5), length=40)
    graph = build_identity_graph(sset, 0.3, P)
    clusters = cluster(graph)
    assignment = assign_partitions(clusters, 6)
    auto = make_split(sset, clusters, assignment, 6, train_partitions="auto")
    total = len(sset)
    deviations = []
    for leave_out in range(1, 7):
        train = frozenset(i for i in range(1, 7) if i != leave_out)
        split = make_split(sset, clusters, assignment, 6, train_partitions=train)
        deviations.append(abs(split.ratio - 0.8))
    assert abs(auto.ratio - 0.8) == min(deviations)


def test_make_split_two_partitions_warns_on_deviation(rng, caplog):
    sset, _ = planted_families(rng, sizes=(7, 7), length=40)
    with caplog.at_level("WARNING"):
        split = _full_split(sset, partitions=2, train={1})
    assert 0.4 < split.ratio < 0.6
    assert "deviates" in caplog.text


def test_make_split_invalid_selection(rng):
    sset, _ = planted_families(rng, sizes=(4, 4), length=30)
    graph = build_identity_graph(sset, 0.3, P)
    clusters = cluster(graph)
    assignment = assign_partitions(clusters, 4)
    for bad in (set(), {1, 2, 3, 4}, {0}, {5}):
        with pytest.raises(InvalidPartitionSelectionError):
            make_split(sset, clusters, assignment, 4, train_partitions=bad)


def test_verify_split_clean_on_produced_split(rng):
    sset, _ = planted_families(rng)
    split = _full_split(sset)
    report = verify_split(split, sset, 0.3, P)
    assert report.leakage_free
    assert report.sample_rate == 1.0
    assert report.pairs_checked == report.cross_partition_pairs


def test_verify_split_flags_adversarial_assignment(rng):
    sset = SequenceSet(
        (
            ProteinSequence("a", "MKTLLVMKTLLV"),
            ProteinSequence("b", "MKTLLVMKTLLV"),
        )
    )
    from tpscurate.partition import SplitAssignment, SplitEntry

    forged = SplitAssignment(
        entries=(
            SplitEntry("a", "a", 1, "train"),
            SplitEntry("b", "b", 2, "validation"),
        ),
        partition_count=2,
        train_partitions=frozenset({1}),
        threshold=0.3,
    )
    report = verify_split(forged, sset, 0.3, P)
    assert len(report.violations) == 1
    assert report.violations[0].identity == 1.0


def test_verify_split_sampled_mode_records_rate(rng):
    sset, _ = planted_families(rng)
    split = _full_split(sset)
    report = verify_split(split, sset, 0.3, P, sample_rate=0.5)
    assert report.sample_rate == 0.5
    assert report.pairs_checked <= report.cross_partition_pairs


def test_split_determinism_and_manifest_roundtrip(rng):
    sset, _ = planted_families(rng)
    split_a = _full_split(sset)
    split_b = _full_split(sset)
    buf_a, buf_b = io.StringIO(), io.StringIO()
    write_split_manifest(split_a, buf_a, config_digest="sha256:x")
    write_split_manifest(split_b, buf_b, config_digest="sha256:x")
    assert buf_a.getvalue() == buf_b.getvalue()
    entries = read_split_manifest(buf_a.getvalue())
    assert tuple(entries) == split_a.entries
