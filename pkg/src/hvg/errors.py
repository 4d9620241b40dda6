"""Exception hierarchy shared by the engine and the CLI."""


class HVGError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 1


class GameValidationError(HVGError):
    """A game description violates the structural or rule invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid game")


class DomainError(HVGError, ValueError):
    """Bad argument for a well-formed game (unknown node, wrong member list, ...)."""


class CapExceededError(HVGError):
    """An exponential enumeration would exceed its configured size cap."""

    exit_code = 2


class DocumentError(HVGError):
    """A game or result document could not be parsed."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
