"""
Parser for textual labeled combinatorial specifications (.bz files).

A specification is a list of class definitions written with the symbolic
method constructors:

    # Cayley trees
    T = Z * SET(T)

Grammar:
    system := defn+
    defn   := NAME "=" expr
    expr   := term ("+" term)*
    term   := factor ("*" factor)*
    factor := "1" | "Z" | "Z<" LETTER ">"
            | ("SEQ" | "SET" | "CYC") [">=" INT] "(" expr ")"
            | NAME | "(" expr ")"

The first defined class is the root. Parsing resolves every reference;
validate() then checks well-foundedness structurally.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Set as TypingSet, Tuple

from .errors import IllFoundedError, SpecSyntaxError, UnknownNameError

logger = logging.getLogger(__name__)


# Expression tree

class SpecExpr:
    """Base class of specification expressions"""

    __slots__ = ()


@dataclass(frozen=True)
class Epsilon(SpecExpr):
    """Neutral object of size 0"""


@dataclass(frozen=True)
class Atom(SpecExpr):
    """Labeled atom of size 1, optionally tagged with a letter"""
    letter: Optional[str] = None


@dataclass(frozen=True)
class Union(SpecExpr):
    left: SpecExpr
    right: SpecExpr


@dataclass(frozen=True)
class Product(SpecExpr):
    left: SpecExpr
    right: SpecExpr


@dataclass(frozen=True)
class Seq(SpecExpr):
    inner: SpecExpr
    minimum: int = 0


@dataclass(frozen=True)
class Set(SpecExpr):
    inner: SpecExpr
    minimum: int = 0


@dataclass(frozen=True)
class Cyc(SpecExpr):
    inner: SpecExpr
    minimum: int = 1


@dataclass(frozen=True)
class Ref(SpecExpr):
    """Reference to a named class"""
    name: str


COLLECTIONS = (Seq, Set, Cyc)


@dataclass(frozen=True)
class SpecSystem:
    """Parsed specification: class definitions in source order, root first"""
    definitions: Dict[str, SpecExpr] = field(hash=False)
    root: str
    positions: Dict[str, Tuple[int, int]] = field(default_factory=dict, compare=False, hash=False)

    @property
    def classes(self) -> List[str]:
        return list(self.definitions)

    def definition(self, name: str) -> SpecExpr:
        try:
            return self.definitions[name]
        except KeyError:
            raise UnknownNameError(name) from None


# Tokenizer

@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<newline>\n)
  | (?P<space>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<tagged>Z<(?P<letter>[^<>\s])>)
  | (?P<ge>>=)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[=+*()])
    """,
    re.VERBOSE,
)

RESERVED = {"Z", "SEQ", "SET", "CYC"}


def tokenize(text: str) -> Iterator[Token]:
    """
    Split specification text into tokens.

    Args:
        text: Specification source

    Yields:
        Tokens, ending with an "eof" token

    Raises:
        SpecSyntaxError: on a character no token can start with
    """
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            raise SpecSyntaxError(f"unexpected character {text[pos]!r}", line, column)
        kind = match.lastgroup
        if kind == "letter":
            kind = "tagged"
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind == "tagged":
            yield Token("tagged", match.group("letter"), line, column)
        elif kind not in ("space", "comment"):
            yield Token(kind, match.group(), line, column)
        pos = match.end()
    yield Token("eof", "", line, pos - line_start + 1)


# Parser

class SpecParser:
    """Recursive-descent parser for the specification language"""

    def __init__(self, text: str):
        """
        Initialize parser.

        Args:
            text: Specification source
        """
        self.text = text
        self._tokens: List[Token] = []
        self._index = 0
        self._refs: List[Tuple[str, int, int]] = []

    def parse(self) -> SpecSystem:
        """
        Parse the whole source.

        Returns:
            SpecSystem with every reference resolved

        Raises:
            SpecSyntaxError: malformed text
            UnknownNameError: reference to an undefined class
        """
        self._tokens = list(tokenize(self.text))
        self._index = 0
        definitions: Dict[str, SpecExpr] = {}
        positions: Dict[str, Tuple[int, int]] = {}

        while self._peek().kind != "eof":
            name_token = self._expect("name", "class name")
            if name_token.text in RESERVED:
                raise SpecSyntaxError(
                    f"'{name_token.text}' is reserved and cannot name a class",
                    name_token.line, name_token.column,
                )
            if name_token.text in definitions:
                raise SpecSyntaxError(
                    f"class '{name_token.text}' defined twice",
                    name_token.line, name_token.column,
                )
            self._expect_op("=")
            definitions[name_token.text] = self._expr()
            positions[name_token.text] = (name_token.line, name_token.column)

        if not definitions:
            raise SpecSyntaxError("empty specification", 1, 1)

        for name, line, column in self._refs:
            if name not in definitions:
                raise UnknownNameError(name, line, column)

        root = next(iter(definitions))
        logger.debug("parsed %d class(es), root %s", len(definitions), root)
        return SpecSystem(definitions=definitions, root=root, positions=positions)

    def _peek(self) -> Token:
        return self._tokens[self._index]

    def _advance(self) -> Token:
        token = self._tokens[self._index]
        self._index += 1
        return token

    def _fail(self, token: Token, expected: str) -> SpecSyntaxError:
        found = "end of input" if token.kind == "eof" else repr(token.text)
        return SpecSyntaxError(f"expected {expected}, found {found}", token.line, token.column)

    def _expect(self, kind: str, expected: str) -> Token:
        token = self._advance()
        if token.kind != kind:
            raise self._fail(token, expected)
        return token

    def _expect_op(self, op: str) -> Token:
        token = self._advance()
        if token.kind != "op" or token.text != op:
            raise self._fail(token, f"'{op}'")
        return token

    def _at_op(self, op: str) -> bool:
        token = self._peek()
        return token.kind == "op" and token.text == op

    def _expr(self) -> SpecExpr:
        node = self._term()
        while self._at_op("+"):
            self._advance()
            node = Union(node, self._term())
        return node

    def _term(self) -> SpecExpr:
        node = self._factor()
        while self._at_op("*"):
            self._advance()
            node = Product(node, self._factor())
        return node

    def _factor(self) -> SpecExpr:
        token = self._advance()
        if token.kind == "int":
            if token.text != "1":
                raise SpecSyntaxError(
                    f"only '1' may appear as a constant, found {token.text}",
                    token.line, token.column,
                )
            return Epsilon()
        if token.kind == "tagged":
            return Atom(token.text)
        if token.kind == "op" and token.text == "(":
            node = self._expr()
            self._expect_op(")")
            return node
        if token.kind == "name":
            if token.text == "Z":
                return Atom()
            if token.text in ("SEQ", "SET", "CYC"):
                return self._collection(token)
            self._refs.append((token.text, token.line, token.column))
            return Ref(token.text)
        raise self._fail(token, "an expression")

    def _collection(self, keyword: Token) -> SpecExpr:
        minimum: Optional[int] = None
        if self._peek().kind == "ge":
            self._advance()
            minimum = int(self._expect("int", "a cardinality bound").text)
        self._expect_op("(")
        inner = self._expr()
        self._expect_op(")")
        if keyword.text == "SEQ":
            return Seq(inner, minimum or 0)
        if keyword.text == "SET":
            return Set(inner, minimum or 0)
        if minimum is not None and minimum < 1:
            raise SpecSyntaxError("CYC needs at least one component", keyword.line, keyword.column)
        return Cyc(inner, 1 if minimum is None else minimum)


def parse_spec(text: str) -> SpecSystem:
    """
    Parse specification text.

    Args:
        text: Specification source

    Returns:
        Parsed SpecSystem
    """
    return SpecParser(text).parse()


# Pretty-printer

def format_expr(expr: SpecExpr, precedence: int = 0) -> str:
    """
    Render an expression in the specification language.

    Left-associative chains print without parentheses, so printing then
    parsing gives back the same tree.

    Args:
        expr: Expression to render
        precedence: Binding strength of the surrounding context

    Returns:
        Source text
    """
    if isinstance(expr, Epsilon):
        return "1"
    if isinstance(expr, Atom):
        return "Z" if expr.letter is None else f"Z<{expr.letter}>"
    if isinstance(expr, Ref):
        return expr.name
    if isinstance(expr, Union):
        text = f"{format_expr(expr.left, 1)} + {format_expr(expr.right, 2)}"
        return f"({text})" if precedence > 1 else text
    if isinstance(expr, Product):
        text = f"{format_expr(expr.left, 2)} * {format_expr(expr.right, 3)}"
        return f"({text})" if precedence > 2 else text
    if isinstance(expr, (Seq, Set, Cyc)):
        keyword = type(expr).__name__.upper()
        default = 1 if isinstance(expr, Cyc) else 0
        bound = f">={expr.minimum}" if expr.minimum != default else ""
        return f"{keyword}{bound}({format_expr(expr.inner)})"
    raise TypeError(f"not a specification expression: {expr!r}")


def format_spec(system: SpecSystem) -> str:
    """Render a whole system, one definition per line"""
    return "".join(f"{name} = {format_expr(expr)}\n" for name, expr in system.definitions.items())


# Validation

def _fixed_point(system: SpecSystem, rule) -> Dict[str, bool]:
    env = {name: False for name in system.definitions}
    changed = True
    while changed:
        changed = False
        for name, expr in system.definitions.items():
            value = rule(expr, env)
            if value != env[name]:
                env[name] = value
                changed = True
    return env


def _admits_object(expr: SpecExpr, env: Dict[str, bool]) -> bool:
    if isinstance(expr, (Epsilon, Atom)):
        return True
    if isinstance(expr, Ref):
        return env[expr.name]
    if isinstance(expr, Union):
        return _admits_object(expr.left, env) or _admits_object(expr.right, env)
    if isinstance(expr, Product):
        return _admits_object(expr.left, env) and _admits_object(expr.right, env)
    if expr.minimum == 0:
        return True
    return _admits_object(expr.inner, env)


def _admits_empty(expr: SpecExpr, env: Dict[str, bool]) -> bool:
    if isinstance(expr, Epsilon):
        return True
    if isinstance(expr, Atom):
        return False
    if isinstance(expr, Ref):
        return env[expr.name]
    if isinstance(expr, Union):
        return _admits_empty(expr.left, env) or _admits_empty(expr.right, env)
    if isinstance(expr, Product):
        return _admits_empty(expr.left, env) and _admits_empty(expr.right, env)
    if isinstance(expr, (Seq, Set)) and expr.minimum == 0:
        return True
    return _admits_empty(expr.inner, env)


def _subexpressions(expr: SpecExpr) -> Iterator[SpecExpr]:
    yield expr
    if isinstance(expr, (Union, Product)):
        yield from _subexpressions(expr.left)
        yield from _subexpressions(expr.right)
    elif isinstance(expr, COLLECTIONS):
        yield from _subexpressions(expr.inner)


def _refs(expr: SpecExpr) -> TypingSet[str]:
    return {e.name for e in _subexpressions(expr) if isinstance(e, Ref)}


def _size_preserving_refs(expr: SpecExpr, empty: Dict[str, bool]) -> TypingSet[str]:
    """Classes an object of expr can consist of, up to size-0 padding"""
    if isinstance(expr, Ref):
        return {expr.name}
    if isinstance(expr, (Epsilon, Atom)):
        return set()
    if isinstance(expr, Union):
        return _size_preserving_refs(expr.left, empty) | _size_preserving_refs(expr.right, empty)
    if isinstance(expr, Product):
        found: TypingSet[str] = set()
        if _admits_empty(expr.right, empty):
            found |= _size_preserving_refs(expr.left, empty)
        if _admits_empty(expr.left, empty):
            found |= _size_preserving_refs(expr.right, empty)
        return found
    if expr.minimum <= 1:
        return _size_preserving_refs(expr.inner, empty)
    return set()


def _find_cycle(graph: Dict[str, TypingSet[str]]) -> Optional[str]:
    state: Dict[str, int] = {}

    def visit(node: str) -> Optional[str]:
        state[node] = 1
        for succ in sorted(graph[node]):
            if state.get(succ) == 1:
                return succ
            if succ not in state:
                hit = visit(succ)
                if hit:
                    return hit
        state[node] = 2
        return None

    for node in graph:
        if node not in state:
            hit = visit(node)
            if hit:
                return hit
    return None


@dataclass(frozen=True)
class ValidatedSpec:
    """Well-founded specification, immutable and shareable"""
    system: SpecSystem
    admits_empty: Dict[str, bool] = field(hash=False)
    degrees: Dict[str, Optional[int]] = field(hash=False)
    recursive: FrozenSet[str] = frozenset()

    @property
    def root(self) -> str:
        return self.system.root

    @property
    def classes(self) -> List[str]:
        return self.system.classes

    def definition(self, name: str) -> SpecExpr:
        return self.system.definition(name)

    def resolve(self, name: Optional[str]) -> str:
        """Class name to use, the root when name is None"""
        if name is None:
            return self.root
        self.system.definition(name)
        return name

    def is_finite(self, name: str) -> bool:
        return self.degrees[self.resolve(name)] is not None

    def degree(self, name: str) -> Optional[int]:
        """Largest object size of a finite class, None for an infinite one"""
        return self.degrees[self.resolve(name)]


def _degree(expr: SpecExpr, degrees: Dict[str, Optional[int]]) -> Optional[int]:
    if isinstance(expr, Epsilon):
        return 0
    if isinstance(expr, Atom):
        return 1
    if isinstance(expr, Ref):
        return degrees[expr.name]
    if isinstance(expr, COLLECTIONS):
        return None
    left = _degree(expr.left, degrees)
    right = _degree(expr.right, degrees)
    if left is None or right is None:
        return None
    return max(left, right) if isinstance(expr, Union) else left + right


def validate(system: SpecSystem) -> ValidatedSpec:
    """
    Check that every class has finitely many objects of each size.

    Args:
        system: Parsed specification

    Returns:
        ValidatedSpec carrying the structural flags

    Raises:
        IllFoundedError: collection over a class with a size-0 object,
            unproductive recursion, or recursion through a size-0 path
    """
    empty = _fixed_point(system, _admits_empty)
    productive = _fixed_point(system, _admits_object)

    for name, expr in system.definitions.items():
        if not productive[name]:
            raise IllFoundedError(name, "no terminating derivation (unproductive recursion)")
        for sub in _subexpressions(expr):
            if isinstance(sub, COLLECTIONS) and _admits_empty(sub.inner, empty):
                keyword = type(sub).__name__.upper()
                raise IllFoundedError(
                    name, f"{keyword} over a class containing a size-0 object"
                )

    graph = {name: _size_preserving_refs(expr, empty) for name, expr in system.definitions.items()}
    culprit = _find_cycle(graph)
    if culprit is not None:
        raise IllFoundedError(
            culprit, "recursion through a size-0 path gives infinitely many objects of one size"
        )

    deps = {name: _refs(expr) for name, expr in system.definitions.items()}
    reach = {name: _reach(name, deps) for name in system.definitions}
    # a class is recursive when it reaches a cycle of references
    recursive = {
        name for name in system.definitions
        if any(n in reach[n] for n in reach[name] | {name})
    }

    # classes reaching no recursive class come first in a topological order
    degrees: Dict[str, Optional[int]] = {name: None for name in recursive}
    pending = [n for n in system.definitions if n not in recursive]
    while pending:
        for name in list(pending):
            if all(dep in degrees for dep in deps[name]):
                degrees[name] = _degree(system.definitions[name], degrees)
                pending.remove(name)

    logger.debug("validated %s: recursive=%s", system.root, sorted(recursive))
    return ValidatedSpec(
        system=system,
        admits_empty=empty,
        degrees=degrees,
        recursive=frozenset(recursive),
    )


def _reach(start: str, deps: Dict[str, TypingSet[str]]) -> TypingSet[str]:
    seen, stack = set(), list(deps[start])
    while stack:
        current = stack.pop()
        if current in seen:
            continue
        seen.add(current)
        stack.extend(deps[current])
    return seen


def load_spec(text: str) -> ValidatedSpec:
    """Parse and validate in one step"""
    return validate(parse_spec(text))
