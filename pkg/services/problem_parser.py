"""
Problem Parser Module - Reading problem files and term text

A problem file is a sequence of header sections:

    atoms: a, b, c
    funs: f, g, "="
    indvars: x
    hedgevars: X, Y
    context: a # X, b # x
    left: c.f(a, c)
    right: b.f(b, c)

Each section runs until the next header and may span several lines. Lines
whose first non-blank character is '#' are comments. Every identifier used
in a term must be declared in exactly one of the four name spaces; names
that are not plain identifiers (operators, numerals) are written quoted.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from services.errors import NamespaceClashError, ProblemSyntaxError, UndeclaredIdentifierError
from services.nominal import FreshnessConstraint, FreshnessContext, TermInContext
from services.terms import (
    EPSILON, Abstraction, Application, Atom, FunSymbol, Hedge, HedgeVar, IndVar,
    Permutation, Suspension, TermOrHedge, as_term, atoms_of, flatten,
    function_symbols_of, render, variables_of,
)

__all__ = [
    "ProblemFile", "Signature", "load_problem", "parse_context", "parse_problem",
    "parse_term", "render",
]

SECTIONS = ("atoms", "funs", "indvars", "hedgevars", "context", "left", "right")

_HEADER = re.compile(r"^[ \t]*(" + "|".join(SECTIONS) + r")[ \t]*:", re.MULTILINE)
_COMMENT = re.compile(r"^[ \t]*#[^\n]*", re.MULTILINE)
_TOKEN = re.compile(
    r'(?P<name>[A-Za-z_][A-Za-z0-9_]*)|"(?P<quoted>[^"\n]*)"|(?P<punct>[(){},.#])'
)
_SPACE = re.compile(r"\s*")


# ============================================================================
# Declarations
# ============================================================================

@dataclass(frozen=True)
class Signature:
    """The four disjoint name spaces of a problem."""
    atoms: FrozenSet[str] = frozenset()
    funs: FrozenSet[str] = frozenset()
    indvars: FrozenSet[str] = frozenset()
    hedgevars: FrozenSet[str] = frozenset()

    @classmethod
    def declare(cls, atoms: Iterable[str] = (), funs: Iterable[str] = (),
                indvars: Iterable[str] = (), hedgevars: Iterable[str] = ()) -> "Signature":
        """
        Build a signature, rejecting names declared in two name spaces.

        Raises:
            NamespaceClashError: if a name appears in more than one list
        """
        spaces = {"atoms": frozenset(atoms), "funs": frozenset(funs),
                  "indvars": frozenset(indvars), "hedgevars": frozenset(hedgevars)}
        owner: Dict[str, str] = {}
        for space, names in spaces.items():
            for name in sorted(names):
                if name in owner:
                    raise NamespaceClashError(f"{name!r} is declared in both {owner[name]} and {space}")
                owner[name] = space
        return cls(**spaces)

    @classmethod
    def of_terms(cls, *values: TermOrHedge) -> "Signature":
        """The signature declaring exactly the symbols occurring in values."""
        atoms, funs, indvars, hedgevars = set(), set(), set(), set()
        for value in values:
            atoms |= {a.name for a in atoms_of(value)}
            funs |= {f.name for f in function_symbols_of(value)}
            for var in variables_of(value):
                (indvars if isinstance(var, IndVar) else hedgevars).add(var.name)
        return cls.declare(atoms, funs, indvars, hedgevars)

    def kind_of(self, name: str) -> Optional[str]:
        for space in ("atoms", "funs", "indvars", "hedgevars"):
            if name in getattr(self, space):
                return space
        return None


@dataclass(frozen=True)
class ProblemFile:
    """A parsed problem: declarations, context and the two inputs."""
    signature: Signature
    context: FreshnessContext
    left: TermOrHedge
    right: TermOrHedge
    source: str = "<string>"

    def left_in_context(self) -> TermInContext:
        return TermInContext(self.context, self.left)

    def right_in_context(self) -> TermInContext:
        return TermInContext(self.context, self.right)


# ============================================================================
# Tokens
# ============================================================================

@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    position: int


def _location(text: str, position: int) -> Tuple[int, int]:
    line = text.count("\n", 0, position) + 1
    column = position - text.rfind("\n", 0, position)
    return line, column


def _tokenize(text: str, start: int, end: int) -> List[_Token]:
    tokens = []
    position = _SPACE.match(text, start).end()
    while position < end:
        found = _TOKEN.match(text, position)
        if found is None or found.end() > end:
            line, column = _location(text, position)
            raise ProblemSyntaxError(f"unexpected character {text[position]!r}", line, column, position)
        kind = found.lastgroup
        tokens.append(_Token(kind, found.group(kind), position))
        position = _SPACE.match(text, found.end()).end()
    tokens.append(_Token("end", "", min(end, len(text))))
    return tokens


class _Parser:
    """Recursive descent over one section of a problem text."""

    def __init__(self, text: str, signature: Signature, start: int = 0, end: Optional[int] = None):
        self.text = text
        self.signature = signature
        self.tokens = _tokenize(text, start, len(text) if end is None else end)
        self.index = 0

    # ------------------------------------------------------------- plumbing

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def _error(self, message: str, token: Optional[_Token] = None, cls=ProblemSyntaxError):
        token = token or self.current
        line, column = _location(self.text, token.position)
        return cls(message, line, column, token.position)

    def _advance(self) -> _Token:
        token = self.current
        self.index += 1
        return token

    def _at(self, text: str) -> bool:
        return self.current.kind == "punct" and self.current.text == text

    def _expect(self, text: str) -> _Token:
        if not self._at(text):
            found = self.current.text or "end of input"
            raise self._error(f"expected {text!r} but found {found!r}")
        return self._advance()

    def _at_epsilon(self) -> bool:
        return self.current.kind == "name" and self.current.text == EPSILON

    def _name(self) -> Tuple[str, _Token]:
        token = self.current
        if token.kind not in ("name", "quoted"):
            raise self._error(f"expected a name but found {token.text or 'end of input'!r}")
        self._advance()
        return token.text, token

    def _declared(self, name: str, token: _Token) -> str:
        kind = self.signature.kind_of(name)
        if kind is None:
            raise self._error(f"undeclared identifier {name!r}", token, UndeclaredIdentifierError)
        return kind

    def finish(self) -> None:
        if self.current.kind != "end":
            raise self._error(f"unexpected {self.current.text!r} after the end of the term")

    # -------------------------------------------------------------- grammar

    def hedge(self) -> TermOrHedge:
        """A term, eps, or a parenthesized comma sequence."""
        if self._at_epsilon():
            self._advance()
            return ()
        if self._at("("):
            self._advance()
            return self._sequence(")")
        return self.term()

    def _sequence(self, closing: str) -> Hedge:
        """Comma separated hedges up to closing, spliced into one flat hedge."""
        items = []
        if self._at(closing):
            self._advance()
            return ()
        while True:
            items.append(self.hedge())
            if self._at(","):
                self._advance()
                continue
            self._expect(closing)
            return flatten(items)

    def term(self):
        if self._at("{"):
            return self._suspension()
        name, token = self._name()
        kind = self._declared(name, token)
        if kind == "atoms":
            if self._at("."):
                self._advance()
                body = as_term(self.hedge())
                if isinstance(body, tuple):
                    raise self._error("the body of an abstraction must be a single term", token)
                return Abstraction(Atom(name), body)
            return Atom(name)
        if kind == "funs":
            if self._at("("):
                self._advance()
                return Application(FunSymbol(name), self._sequence(")"))
            return Application(FunSymbol(name), ())
        return Suspension(Permutation(), self._variable(name, kind))

    def _variable(self, name: str, kind: str):
        return IndVar(name) if kind == "indvars" else HedgeVar(name)

    def _suspension(self) -> Suspension:
        self._expect("{")
        swaps = []
        while self._at("("):
            self._advance()
            swaps.append((self._atom(), self._atom()))
            self._expect(")")
        self._expect("}")
        name, token = self._name()
        kind = self._declared(name, token)
        if kind not in ("indvars", "hedgevars"):
            raise self._error(f"{name!r} is not a variable", token)
        return Suspension(Permutation(tuple(swaps)), self._variable(name, kind))

    def _atom(self) -> Atom:
        name, token = self._name()
        if self._declared(name, token) != "atoms":
            raise self._error(f"{name!r} is not an atom", token)
        return Atom(name)

    def constraints(self) -> FreshnessContext:
        found = []
        while self.current.kind != "end":
            atom = self._atom()
            self._expect("#")
            name, token = self._name()
            kind = self._declared(name, token)
            if kind not in ("indvars", "hedgevars"):
                raise self._error(f"{name!r} is not a variable", token)
            found.append(FreshnessConstraint(atom, self._variable(name, kind)))
            if self._at(","):
                self._advance()
        return FreshnessContext.from_constraints(found)

    def names(self) -> List[str]:
        found = []
        while self.current.kind != "end":
            name, token = self._name()
            if token.kind == "name" and name == EPSILON:
                raise self._error(f"{EPSILON!r} is reserved for the empty hedge", token)
            found.append(name)
            if self._at(","):
                self._advance()
        return found


# ============================================================================
# Entry points
# ============================================================================

def parse_term(text: str, signature: Signature) -> TermOrHedge:
    """
    Parse a term or hedge.

    Args:
        text: Term text, e.g. "c.f(a, c)" or "(a, {(a b)} X)"
        signature: Declared names

    Returns:
        the term, or a tuple for a hedge

    Raises:
        ProblemSyntaxError: with the line and column of the offending token
    """
    parser = _Parser(text, signature)
    value = parser.hedge()
    parser.finish()
    return value


def parse_context(text: str, signature: Signature) -> FreshnessContext:
    """Parse comma separated freshness constraints "a # X, b # y"."""
    return _Parser(text, signature).constraints()


def _blank_comments(text: str) -> str:
    return _COMMENT.sub(lambda m: " " * len(m.group(0)), text)


def parse_problem(text: str, source: str = "<string>") -> ProblemFile:
    """
    Parse a whole problem file.

    Raises:
        ProblemSyntaxError: malformed sections or terms
        UndeclaredIdentifierError: a term uses an undeclared name
        NamespaceClashError: a name is declared in two name spaces
    """
    text = _blank_comments(text)
    headers = list(_HEADER.finditer(text))
    leading = text[:headers[0].start()] if headers else text
    if leading.strip():
        position = len(leading) - len(leading.lstrip())
        line, column = _location(text, position)
        raise ProblemSyntaxError("expected a section header such as 'atoms:'", line, column, position)

    spans: Dict[str, Tuple[int, int]] = {}
    for index, header in enumerate(headers):
        section = header.group(1)
        if section in spans:
            line, column = _location(text, header.start(1))
            raise ProblemSyntaxError(f"duplicate section {section!r}", line, column, header.start(1))
        end = headers[index + 1].start() if index + 1 < len(headers) else len(text)
        spans[section] = (header.end(), end)
    for required in ("left", "right"):
        if required not in spans:
            raise ProblemSyntaxError(f"missing section {required!r}")

    empty = Signature()
    declared = {
        space: _Parser(text, empty, *spans[space]).names() if space in spans else []
        for space in ("atoms", "funs", "indvars", "hedgevars")
    }
    signature = Signature.declare(**declared)

    def section(name: str) -> TermOrHedge:
        start, end = spans[name]
        parser = _Parser(text, signature, start, end)
        if parser.current.kind == "end":
            raise parser._error(f"section {name!r} is empty")
        value = parser.hedge()
        parser.finish()
        return value

    context = FreshnessContext()
    if "context" in spans:
        context = _Parser(text, signature, *spans["context"]).constraints()
    return ProblemFile(signature, context, section("left"), section("right"), source)


def load_problem(path: Union[str, Path]) -> ProblemFile:
    """Read and parse a problem file from disk."""
    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), source=str(path))
