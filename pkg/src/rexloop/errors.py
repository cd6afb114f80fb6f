"""Exception types shared across the package."""

from __future__ import annotations


class RexloopError(Exception):
    """Base class for all rexloop errors."""


class FormatError(RexloopError):
    """Malformed input file or record."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(RexloopError):
    """Relation name or schema operation is inconsistent with the schema."""


class LengthError(RexloopError):
    """Sentence exceeds the configured maximum length."""


class ContractError(RexloopError):
    """A caller violated an operation precondition."""


class StaleRoundError(RexloopError):
    """Verdicts were submitted against a round that is no longer current."""

    def __init__(self, submitted: int, current: int):
        self.submitted = submitted
        self.current = current
        super().__init__(
            f"verdicts target round {submitted} but the current round is {current}")


class EmptiedRelationError(RexloopError):
    """Filtering removed every training sentence of a relation, so the
    retraining round cannot proceed."""

    def __init__(self, relations: list[str]):
        self.relations = list(relations)
        super().__init__(
            "filtering emptied the training data for: " + ", ".join(self.relations))
