"""Homology-aware dataset splitting.

Sequences are clustered by single-linkage connected components over an
exact identity graph, clusters are greedily balanced across partitions,
and train/validation roles follow the partition selection. Because edges
join every pair at or above the threshold, no cross-partition pair can
reach it: the leakage guarantee is structural, and ``verify_split`` checks
it exhaustively anyway. The k-mer prefilter may propose candidate pairs,
but every edge is confirmed by exact alignment, so the graph never depends
on the heuristic (missed edges are the residual risk; exhaustive mode
exists for test scale).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import IO, Iterable

from .align import AlignParams, KmerIndex, identity
from .errors import InvalidPartitionSelectionError
from .seqio import SequenceSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IdentityGraph:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]  # pairs stored sorted, no self-edges
    threshold: float


@dataclass(frozen=True)
class Cluster:
    id: str  # smallest member id
    members: tuple[str, ...]  # sorted

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class SplitEntry:
    seq_id: str
    cluster_id: str
    partition: int
    role: str  # "train" | "validation"


@dataclass(frozen=True)
class SplitAssignment:
    entries: tuple[SplitEntry, ...]  # input order of the sequence set
    partition_count: int
    train_partitions: frozenset[int]
    threshold: float

    @property
    def train_count(self) -> int:
        return sum(1 for e in self.entries if e.role == "train")

    @property
    def validation_count(self) -> int:
        return len(self.entries) - self.train_count

    @property
    def ratio(self) -> float:
        return self.train_count / len(self.entries)


@dataclass(frozen=True)
class LeakageViolation:
    id_a: str
    id_b: str
    identity: float
    partition_a: int
    partition_b: int


@dataclass(frozen=True)
class LeakageReport:
    violations: tuple[LeakageViolation, ...]
    pairs_checked: int
    cross_partition_pairs: int
    threshold: float
    sample_rate: float  # 1.0 = exhaustive

    @property
    def leakage_free(self) -> bool:
        return not self.violations


def build_identity_graph(
    sset: SequenceSet, threshold: float, p: AlignParams = AlignParams()
) -> IdentityGraph:
    """Edge (a, b) present iff exact identity(a, b) >= threshold.

    With ``p.prefilter`` on, the k-mer index proposes candidate pairs and
    exact alignment confirms each one; prefilter never adds edges.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    records = list(sset)
    edges: set[tuple[str, str]] = set()
    if p.prefilter and len(records) > 1:
        index = KmerIndex(sset, p.kmer_k)
        candidate_pairs = []
        for i, rec in enumerate(records):
            counts = index.shared_counts(rec.residues)
            for j in range(i + 1, len(records)):
                if counts[j] >= p.min_shared_kmers:
                    candidate_pairs.append((i, j))
        logger.debug(
            "prefilter proposed %d of %d pairs",
            len(candidate_pairs),
            len(records) * (len(records) - 1) // 2,
        )
    else:
        candidate_pairs = list(itertools.combinations(range(len(records)), 2))
    for i, j in candidate_pairs:
        if identity(records[i], records[j], p) >= threshold:
            a, b = sorted((records[i].id, records[j].id))
            edges.add((a, b))
    return IdentityGraph(
        nodes=tuple(rec.id for rec in records),
        edges=frozenset(edges),
        threshold=threshold,
    )


def cluster(graph: IdentityGraph) -> list[Cluster]:
    """Connected components (single linkage), ordered by cluster id."""
    adjacency: dict[str, list[str]] = {node: [] for node in graph.nodes}
    for a, b in graph.edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    seen: set[str] = set()
    clusters: list[Cluster] = []
    for node in graph.nodes:
        if node in seen:
            continue
        stack = [node]
        component = []
        seen.add(node)
        while stack:
            current = stack.pop()
            component.append(current)
            for neighbor in adjacency[current]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    stack.append(neighbor)
        members = tuple(sorted(component))
        clusters.append(Cluster(id=members[0], members=members))
    clusters.sort(key=lambda cl: cl.id)
    return clusters


def assign_partitions(clusters: list[Cluster], partition_count: int) -> dict[str, int]:
    """Greedy balance: big clusters first, each into the emptiest partition.

    Ties between clusters break by cluster id; ties between partitions by
    lowest index. Returns cluster id -> partition index (1-based).
    """
    if partition_count < 2:
        raise InvalidPartitionSelectionError("need at least 2 partitions")
    if not clusters:
        raise InvalidPartitionSelectionError("no clusters to assign")
    if len(clusters) < partition_count:
        logger.warning(
            "only %d clusters for %d partitions; some partitions stay empty",
            len(clusters),
            partition_count,
        )
    loads = [0] * partition_count
    assignment: dict[str, int] = {}
    for cl in sorted(clusters, key=lambda cl: (-len(cl), cl.id)):
        target = loads.index(min(loads))
        assignment[cl.id] = target + 1
        loads[target] += len(cl)
    total = sum(loads)
    if total and max(loads) > 0.8 * total:
        logger.warning(
            "partition %d holds %.0f%% of the data (giant cluster); "
            "split balance will be poor",
            loads.index(max(loads)) + 1,
            100.0 * max(loads) / total,
        )
    return assignment


def _resolve_train_partitions(
    selection: Iterable[int] | str,
    partition_loads: dict[int, int],
    partition_count: int,
    target_ratio: float,
) -> frozenset[int]:
    if selection == "auto":
        total = sum(partition_loads.values()) or 1
        best_idx = min(
            range(1, partition_count + 1),
            key=lambda v: (abs((total - partition_loads.get(v, 0)) / total - target_ratio), v),
        )
        return frozenset(i for i in range(1, partition_count + 1) if i != best_idx)
    chosen = frozenset(int(i) for i in selection)
    valid = set(range(1, partition_count + 1))
    if not chosen or not chosen < valid:
        raise InvalidPartitionSelectionError(
            f"train partitions must be a proper nonempty subset of 1..{partition_count}"
        )
    return chosen


def make_split(
    sset: SequenceSet,
    clusters: list[Cluster],
    assignment: dict[str, int],
    partition_count: int,
    train_partitions: Iterable[int] | str = "auto",
    threshold: float = 0.3,
    target_ratio: float = 0.8,
) -> SplitAssignment:
    """Attach partition indices and train/validation roles to every sequence."""
    member_to_cluster = {
        member: cl.id for cl in clusters for member in cl.members
    }
    loads: dict[int, int] = {}
    for cl in clusters:
        part = assignment[cl.id]
        loads[part] = loads.get(part, 0) + len(cl)
    chosen = _resolve_train_partitions(
        train_partitions, loads, partition_count, target_ratio
    )
    entries = []
    for rec in sset:
        cluster_id = member_to_cluster[rec.id]
        part = assignment[cluster_id]
        role = "train" if part in chosen else "validation"
        entries.append(SplitEntry(rec.id, cluster_id, part, role))
    split = SplitAssignment(
        entries=tuple(entries),
        partition_count=partition_count,
        train_partitions=chosen,
        threshold=threshold,
    )
    logger.info(
        "split: %d train / %d validation (ratio %.4f)",
        split.train_count,
        split.validation_count,
        split.ratio,
    )
    if abs(split.ratio - target_ratio) > 0.1:
        logger.warning(
            "achieved train ratio %.3f deviates from target %.2f by more than 0.1",
            split.ratio,
            target_ratio,
        )
    return split


def verify_split(
    split: SplitAssignment,
    sset: SequenceSet,
    threshold: float,
    p: AlignParams = AlignParams(),
    sample_rate: float = 1.0,
) -> LeakageReport:
    """Check cross-partition pairs for identity >= threshold.

    ``sample_rate`` < 1 checks a deterministic subsample (every k-th
    cross-partition pair); the rate is recorded in the report.
    """
    part_of = {e.seq_id: e.partition for e in split.entries}
    records = list(sset)
    cross = [
        (i, j)
        for i, j in itertools.combinations(range(len(records)), 2)
        if part_of[records[i].id] != part_of[records[j].id]
    ]
    if sample_rate < 1.0:
        stride = max(1, round(1.0 / max(sample_rate, 1e-9)))
        checked = cross[::stride]
    else:
        checked = cross
    violations = []
    for i, j in checked:
        value = identity(records[i], records[j], p)
        if value >= threshold:
            a, b = records[i], records[j]
            violations.append(
                LeakageViolation(a.id, b.id, value, part_of[a.id], part_of[b.id])
            )
    return LeakageReport(
        violations=tuple(violations),
        pairs_checked=len(checked),
        cross_partition_pairs=len(cross),
        threshold=threshold,
        sample_rate=1.0 if sample_rate >= 1.0 else sample_rate,
    )


def write_split_manifest(
    split: SplitAssignment, out: IO[str], config_digest: str = ""
) -> None:
    """Tabular manifest: summary block in '#' comments, then one row per sequence."""
    out.write("# split-manifest v1\n")
    out.write(f"# threshold: {split.threshold:.4f}\n")
    out.write(f"# partitions: {split.partition_count}\n")
    train = ",".join(str(i) for i in sorted(split.train_partitions))
    out.write(f"# train_partitions: {train}\n")
    out.write(f"# train_count: {split.train_count}\n")
    out.write(f"# validation_count: {split.validation_count}\n")
    out.write(f"# ratio: {split.ratio:.4f}\n")
    out.write(f"# config_digest: {config_digest}\n")
    out.write("id\tcluster\tpartition\trole\n")
    for e in split.entries:
        out.write(f"{e.seq_id}\t{e.cluster_id}\t{e.partition}\t{e.role}\n")


def read_split_manifest(data: str) -> list[SplitEntry]:
    """Rows of a manifest written by :func:`write_split_manifest`."""
    entries = []
    for line in data.splitlines():
        if not line or line.startswith("#") or line.startswith("id\t"):
            continue
        seq_id, cluster_id, part, role = line.split("\t")
        entries.append(SplitEntry(seq_id, cluster_id, int(part), role))
    return entries
