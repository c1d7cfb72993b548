"""Exception types raised across the toolkit.

Every parser and operation raises a subclass of :class:`CurateError` so
callers (and the fuzz suite) can catch one base type and still branch on
the specific failure. Context (line numbers, offending tokens) travels in
attributes as well as the message.
"""

from __future__ import annotations


class CurateError(Exception):
    """Base class for all structured errors raised by this package."""


# sequence I/O ---------------------------------------------------------------


class DuplicateIdError(CurateError):
    def __init__(
        self, seq_id: str, line: int | None = None, first_line: int | None = None
    ):
        self.seq_id = seq_id
        self.line = line
        self.first_line = first_line
        if line is not None and first_line is not None:
            at = f" (lines {first_line} and {line})"
        elif line is not None:
            at = f" (line {line})"
        else:
            at = ""
        super().__init__(f"duplicate sequence id {seq_id!r}{at}")


class IllegalResidueError(CurateError):
    def __init__(self, seq_id: str, position: int, char: str):
        self.seq_id = seq_id
        self.position = position
        self.char = char
        super().__init__(
            f"illegal residue {char!r} at position {position} in {seq_id!r}"
        )


class EmptySequenceError(CurateError):
    def __init__(self, seq_id: str):
        self.seq_id = seq_id
        super().__init__(f"empty sequence for id {seq_id!r}")


class MalformedHeaderError(CurateError):
    def __init__(self, line: int, reason: str = "malformed header"):
        self.line = line
        super().__init__(f"{reason} at line {line}")


class InvalidRangeError(CurateError):
    pass


# motif compilation ----------------------------------------------------------


class MotifSyntaxError(CurateError):
    def __init__(self, position: int, reason: str):
        self.position = position
        super().__init__(f"motif pattern error at position {position}: {reason}")


class EmptyAlternativeGroupError(CurateError):
    def __init__(self, position: int):
        self.position = position
        super().__init__(f"empty alternative group at position {position}")


class NoRulesConfiguredError(CurateError):
    pass


# alignment ------------------------------------------------------------------


class BandTooNarrowError(CurateError):
    def __init__(self, len_a: int, len_b: int, band: int):
        self.len_a = len_a
        self.len_b = len_b
        self.band = band
        super().__init__(
            f"band half-width {band} cannot align lengths {len_a} and {len_b}"
        )


class EmptyDatabaseError(CurateError):
    pass


class InvalidParamsError(CurateError):
    pass


# partitioning ---------------------------------------------------------------


class InvalidPartitionSelectionError(CurateError):
    pass


# tool-report parsing --------------------------------------------------------


class SchemaError(CurateError):
    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"bad record at line {line}: {reason}")


class LogprobPositiveError(CurateError):
    def __init__(self, line: int, index: int, value: float):
        self.line = line
        self.index = index
        super().__init__(
            f"positive log-probability {value!r} at line {line}, index {index}"
        )


class LengthMismatchError(CurateError):
    def __init__(self, seq_id: str, declared: int, actual: int):
        self.seq_id = seq_id
        super().__init__(
            f"{seq_id!r} declares {declared} tokens but carries {actual} log-probabilities"
        )


class EmptyInputError(CurateError):
    pass


class NoAtomsError(CurateError):
    pass


class MalformedAtomRowError(CurateError):
    def __init__(self, line: int, reason: str = "malformed atom row"):
        self.line = line
        super().__init__(f"{reason} at line {line}")


class ConfidenceOutOfRangeError(CurateError):
    def __init__(self, line: int, value: float | None = None, reason: str | None = None):
        self.line = line
        self.value = value
        msg = reason or f"confidence {value!r} outside [0, 100] at line {line}"
        super().__init__(msg)


class MissingColumnError(CurateError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"declared column list is missing {name!r}")


class UnparsableRowError(CurateError):
    def __init__(self, line: int, reason: str = "unparsable row"):
        self.line = line
        super().__init__(f"{reason} at line {line}")


class ScoreOutOfRangeError(CurateError):
    def __init__(self, line: int, value: float):
        self.line = line
        self.value = value
        super().__init__(f"score {value!r} outside [0, 1] at line {line}")


class MalformedECError(CurateError):
    def __init__(self, token: str, line: int | None = None):
        self.token = token
        self.line = line
        at = f" at line {line}" if line is not None else ""
        super().__init__(f"malformed EC token {token!r}{at}")


class RowTooShortError(CurateError):
    def __init__(self, line: int, needed: int, got: int):
        self.line = line
        super().__init__(f"row at line {line} has {got} columns, {needed} required")


class UnknownEvidenceIdError(CurateError):
    def __init__(self, seq_id: str, source: str):
        self.seq_id = seq_id
        self.source = source
        super().__init__(f"evidence in {source} references unknown id {seq_id!r}")


# pipeline -------------------------------------------------------------------


class ConfigInvalidError(CurateError):
    pass


class HookError(CurateError):
    def __init__(self, kind: str, detail: str):
        self.kind = kind
        super().__init__(f"evidence hook {kind!r} failed: {detail}")
