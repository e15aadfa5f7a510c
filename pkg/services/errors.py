"""
Errors Module - Exception hierarchy for the anti-unification service layer.

Library code raises these; the CLI (vnau.py) and the JSON API (routes/)
translate them into exit codes and HTTP status codes at the boundary.
"""

from typing import Optional


class VnauError(Exception):
    """Base class for every error raised by the services package."""


class ProblemSyntaxError(VnauError, ValueError):
    """
    A problem file or term text does not conform to the grammar.

    Args:
        message: Human readable description
        line: 1-based line of the offending token (None when unknown)
        column: 1-based column of the offending token (None when unknown)
        position: 0-based offset into the parsed text
    """

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, position: Optional[int] = None):
        self.line = line
        self.column = column
        self.position = position
        if line is not None and column is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class UndeclaredIdentifierError(ProblemSyntaxError):
    """An identifier is used in a term without being declared."""


class NamespaceClashError(ProblemSyntaxError):
    """An identifier is declared in more than one name space."""


class AtomBaseError(VnauError, ValueError):
    """The atom base does not cover the atoms of the inputs."""


class FreshnessViolation(VnauError):
    """
    An atom occurs free where a freshness constraint forbids it.

    Raised by instantiate_context when the substitution does not respect
    the context it is applied to.
    """

    def __init__(self, atom, term):
        self.atom = atom
        self.term = term
        super().__init__(f"atom {atom} occurs free in {term}")


class VerificationError(VnauError):
    """A computed generalization failed re-verification."""


class IndexOutOfBoundsError(VnauError, IndexError):
    """A subhedge index lies outside the hedge."""
