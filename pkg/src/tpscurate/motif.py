"""Degenerate catalytic-motif patterns and the class-signature filter.

Pattern language: uppercase canonical letters are fixed residues, ``X`` is
a wildcard, and a bracketed group such as ``[ND]`` lists alternatives.
Patterns are anchored: the first and last positions must not be wildcards.
Matching is a plain linear scan per rule; overlapping sites all count, and
patterns are short enough (~10 positions) that no automaton is warranted,
so do not swap one in and change the overlap semantics.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import (
    EmptyAlternativeGroupError,
    IllegalResidueError,
    MotifSyntaxError,
    NoRulesConfiguredError,
)
from .seqio import CANONICAL_ALPHABET, ProteinSequence, SequenceSet

WILDCARD = None  # position value meaning "any residue"


class EnzymeClass(Enum):
    CLASS1 = "class1"
    CLASS2 = "class2"


@dataclass(frozen=True)
class MotifRule:
    name: str
    # each position: None (wildcard) or a frozenset of admissible residues
    positions: tuple[frozenset[str] | None, ...]
    enzyme_class: EnzymeClass

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class MatchSite:
    rule_name: str
    start: int
    matched: str


@dataclass(frozen=True)
class ClassHits:
    sites: dict[str, tuple[MatchSite, ...]]  # rule name -> sites
    has_class1: bool
    has_class2: bool


def compile_motif(pattern: str, enzyme_class: EnzymeClass, name: str | None = None) -> MotifRule:
    """Compile a pattern string into a rule; position indices are 0-based."""
    positions: list[frozenset[str] | None] = []
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "[":
            end = pattern.find("]", i + 1)
            if end == -1:
                raise MotifSyntaxError(i, "unclosed alternative group")
            group = pattern[i + 1 : end]
            if not group:
                raise EmptyAlternativeGroupError(i)
            for alt in group:
                if alt not in CANONICAL_ALPHABET:
                    raise IllegalResidueError(name or pattern, i, alt)
            positions.append(frozenset(group))
            i = end + 1
        elif ch == "X":
            positions.append(WILDCARD)
            i += 1
        elif ch in CANONICAL_ALPHABET:
            positions.append(frozenset(ch))
            i += 1
        elif ch == "]":
            raise MotifSyntaxError(i, "unmatched ']'")
        else:
            raise IllegalResidueError(name or pattern, i, ch)
    if len(positions) < 3:
        raise MotifSyntaxError(len(pattern), "pattern needs at least 3 positions")
    if positions[0] is WILDCARD or positions[-1] is WILDCARD:
        raise MotifSyntaxError(
            0 if positions[0] is WILDCARD else len(pattern) - 1,
            "patterns are anchored; wildcards cannot open or close one",
        )
    return MotifRule(
        name=name or pattern,
        positions=tuple(positions),
        enzyme_class=enzyme_class,
    )


def scan(seq: ProteinSequence, rule: MotifRule) -> list[MatchSite]:
    """All (possibly overlapping) match sites, in ascending offset order."""
    res = seq.residues
    span = len(rule)
    sites: list[MatchSite] = []
    for start in range(len(res) - span + 1):
        for off, allowed in enumerate(rule.positions):
            if allowed is not WILDCARD and res[start + off] not in allowed:
                break
        else:
            sites.append(MatchSite(rule.name, start, res[start : start + span]))
    return sites


def classify(seq: ProteinSequence, rules: list[MotifRule]) -> ClassHits:
    """Class booleans: every rule of the class matched at least once.

    A class with no rules configured is vacuously false (never satisfied).
    """
    sites = {rule.name: tuple(scan(seq, rule)) for rule in rules}
    by_class: dict[EnzymeClass, list[MotifRule]] = {}
    for rule in rules:
        by_class.setdefault(rule.enzyme_class, []).append(rule)

    def satisfied(cls: EnzymeClass) -> bool:
        members = by_class.get(cls, [])
        return bool(members) and all(sites[r.name] for r in members)

    return ClassHits(
        sites=sites,
        has_class1=satisfied(EnzymeClass.CLASS1),
        has_class2=satisfied(EnzymeClass.CLASS2),
    )


def motif_filter(sset: SequenceSet, rules: list[MotifRule]) -> SequenceSet:
    """Keep sequences carrying a complete Class I or complete Class II signature."""
    if not rules:
        raise NoRulesConfiguredError("motif filter needs at least one rule")
    kept = tuple(
        rec
        for rec in sset
        if (hits := classify(rec, rules)).has_class1 or hits.has_class2
    )
    return SequenceSet(records=kept, source=sset.source)


def default_rules() -> list[MotifRule]:
    """The shipped Class I / Class II signature set.

    The NSE/DTE triad is encoded with the widely used consensus
    ``[ND]DXX[ST]XXXE``; override it in the rule config if your family
    needs a different degeneracy.
    """
    return [
        compile_motif("DDXXD", EnzymeClass.CLASS1, name="DDXXD"),
        compile_motif("[ND]DXX[ST]XXXE", EnzymeClass.CLASS1, name="NSE/DTE"),
        compile_motif("DXDD", EnzymeClass.CLASS2, name="DXDD"),
    ]
