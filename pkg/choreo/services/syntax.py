"""
Choreography Syntax - AST, DSL Parser and Renderer

This module defines the global-interaction language:
- Roles, operations (public or private `o*`) and interactions a->b:o
- The choreography term: interaction, 1, 0, `;`, `|`, `+`
- A lark-based parser for the DSL and a precedence-aware renderer
- Structural utilities: roles, subterm addressing, functional replacement

Concrete syntax: `;` binds tighter than `|`, which binds tighter than `+`;
all binary operators are right-associative; `#` starts a line comment.
`0` is a runtime-only term and is rejected by `parse` unless runtime=True.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, Optional, Union

from lark import Lark, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedInput, UnexpectedToken, VisitError

from choreo.config import PRIVATE_MARK
from choreo.errors import ChoreographyError, InvalidPathError, ParseError
from choreo.utils import validate_identifier

logger = logging.getLogger(__name__)


# ============================================================================
# PATHS
# ============================================================================

LEFT = 0
RIGHT = 1

# Steps from the root; 0 selects the left operand, 1 the right one
Path = tuple[int, ...]

Role = str


# ============================================================================
# AST
# ============================================================================

class Visibility(str, Enum):
    """Whether an operation shows up in weak traces."""
    PUBLIC = "public"
    PRIVATE = "private"


@dataclass(frozen=True, slots=True, order=True)
class Operation:
    """A named operation; private ones print with a trailing `*`."""
    name: str
    visibility: Visibility = Visibility.PUBLIC

    def __post_init__(self):
        validate_identifier(self.name, "operation")

    @classmethod
    def private(cls, name: str) -> "Operation":
        return cls(name, Visibility.PRIVATE)

    @property
    def is_private(self) -> bool:
        return self.visibility is Visibility.PRIVATE

    def __str__(self) -> str:
        return f"{self.name}{PRIVATE_MARK}" if self.is_private else self.name


@dataclass(frozen=True, slots=True, order=True)
class Interaction:
    """Role `sender` sends a message on `op` to role `receiver`."""
    sender: Role
    receiver: Role
    op: Operation

    def __post_init__(self):
        validate_identifier(self.sender, "sender")
        validate_identifier(self.receiver, "receiver")
        if self.sender == self.receiver:
            raise ChoreographyError(f"Interaction needs two distinct roles, got {self.sender!r} twice")

    def __str__(self) -> str:
        return f"{self.sender}->{self.receiver}:{self.op}"


@dataclass(frozen=True, slots=True)
class One:
    """The terminated choreography."""


@dataclass(frozen=True, slots=True)
class Zero:
    """The deadlocked choreography (runtime only)."""


@dataclass(frozen=True, slots=True)
class Seq:
    left: "Choreography"
    right: "Choreography"


@dataclass(frozen=True, slots=True)
class Par:
    left: "Choreography"
    right: "Choreography"


@dataclass(frozen=True, slots=True)
class Choice:
    left: "Choreography"
    right: "Choreography"


Choreography = Union[Interaction, One, Zero, Seq, Par, Choice]
BINARY_NODES = (Seq, Par, Choice)


def is_binary(c: Choreography) -> bool:
    return isinstance(c, BINARY_NODES)


# ============================================================================
# STRUCTURAL UTILITIES
# ============================================================================

def interactions(c: Choreography, prefix: Path = ()) -> list[tuple[Path, Interaction]]:
    """
    List every interaction leaf with its path, left to right.

    Args:
        c: Choreography to scan
        prefix: Path of `c` inside an enclosing term

    Returns:
        (path, interaction) pairs in path order
    """
    found: list[tuple[Path, Interaction]] = []
    stack: list[tuple[Path, Choreography]] = [(prefix, c)]
    while stack:
        path, node = stack.pop()
        if isinstance(node, Interaction):
            found.append((path, node))
        elif is_binary(node):
            stack.append((path + (RIGHT,), node.right))
            stack.append((path + (LEFT,), node.left))
    return found


def roles(c: Choreography) -> frozenset[Role]:
    """Roles occurring in any interaction of c."""
    names = set()
    for _, interaction in interactions(c):
        names.add(interaction.sender)
        names.add(interaction.receiver)
    return frozenset(names)


def operations(c: Choreography) -> frozenset[Operation]:
    """Operations used by any interaction of c."""
    return frozenset(interaction.op for _, interaction in interactions(c))


def subterm_at(c: Choreography, path: Path) -> Choreography:
    """
    Resolve a path against a term.

    Raises:
        InvalidPathError: If a step leaves the tree or is not 0/1
    """
    node = c
    for step in path:
        if not is_binary(node) or step not in (LEFT, RIGHT):
            raise InvalidPathError(path)
        node = node.left if step == LEFT else node.right
    return node


def replace_at(c: Choreography, path: Path, new: Choreography) -> Choreography:
    """
    Return a copy of c with the subterm at path replaced by new.

    Raises:
        InvalidPathError: If the path does not resolve
    """
    if not path:
        return new
    if not is_binary(c) or path[0] not in (LEFT, RIGHT):
        raise InvalidPathError(path)
    node_type = type(c)
    try:
        if path[0] == LEFT:
            return node_type(replace_at(c.left, path[1:], new), c.right)
        return node_type(c.left, replace_at(c.right, path[1:], new))
    except InvalidPathError:
        raise InvalidPathError(path) from None


def internal_paths(c: Choreography, prefix: Path = ()) -> list[Path]:
    """Paths of all binary nodes, children before parents (post-order)."""
    if not is_binary(c):
        return []
    return (internal_paths(c.left, prefix + (LEFT,))
            + internal_paths(c.right, prefix + (RIGHT,))
            + [prefix])


def right_associate(c: Choreography) -> Choreography:
    """Re-associate chains of the same operator to the right."""
    if not is_binary(c):
        return c
    node_type = type(c)
    operands = [right_associate(operand) for operand in _chain(c, node_type)]
    return _fold(node_type, operands)


def _chain(c: Choreography, node_type: type) -> Iterator[Choreography]:
    if isinstance(c, node_type):
        yield from _chain(c.left, node_type)
        yield from _chain(c.right, node_type)
    else:
        yield c


def rename(c: Choreography,
           role_map: Optional[Mapping[str, str]] = None,
           operation_map: Optional[Mapping[str, str]] = None) -> Choreography:
    """
    Rename roles and operation names; names missing from a map stay put.

    Visibility of renamed operations is preserved.
    """
    role_map = role_map or {}
    operation_map = operation_map or {}
    if isinstance(c, Interaction):
        op = Operation(operation_map.get(c.op.name, c.op.name), c.op.visibility)
        return Interaction(role_map.get(c.sender, c.sender),
                           role_map.get(c.receiver, c.receiver), op)
    if is_binary(c):
        return type(c)(rename(c.left, role_map, operation_map),
                       rename(c.right, role_map, operation_map))
    return c


def seq_all(*parts: Choreography) -> Choreography:
    """Right-nested sequence of the given parts."""
    return _fold(Seq, list(parts))


def par_all(*parts: Choreography) -> Choreography:
    """Right-nested parallel composition of the given parts."""
    return _fold(Par, list(parts))


def choice_all(*parts: Choreography) -> Choreography:
    """Right-nested choice between the given parts; 0 when there are none."""
    return _fold(Choice, list(parts)) if parts else Zero()


def _fold(node_type: type, items: list) -> Choreography:
    result = items[-1]
    for item in reversed(items[:-1]):
        result = node_type(item, result)
    return result


# ============================================================================
# PARSER
# ============================================================================

GRAMMAR = r"""
    start: choice

    ?choice: par ("+" par)*
    ?par: seq ("|" seq)*
    ?seq: atom (";" atom)*
    ?atom: interaction
         | "1"              -> one
         | ZERO             -> zero
         | "(" choice ")"

    interaction: IDENT "->" IDENT ":" IDENT STAR?

    ZERO: "0"
    STAR: "*"
    IDENT: /[A-Za-z_][A-Za-z0-9_]*/
    COMMENT: /#[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, parser="lalr")


class _ChoreographyBuilder(Transformer):
    """Turns the lark parse tree into AST nodes."""

    def __init__(self, runtime: bool):
        super().__init__()
        self._runtime = runtime

    def start(self, children):
        return children[0]

    def choice(self, children):
        return _fold(Choice, children)

    def par(self, children):
        return _fold(Par, children)

    def seq(self, children):
        return _fold(Seq, children)

    def one(self, _children):
        return One()

    def zero(self, children):
        token = children[0]
        if not self._runtime:
            raise ParseError("0 is a runtime-only term and cannot be written", token.line, token.column)
        return Zero()

    def interaction(self, children):
        sender, receiver, name = children[:3]
        if str(sender) == str(receiver):
            raise ParseError(f"role {sender} cannot send to itself", sender.line, sender.column)
        visibility = Visibility.PRIVATE if len(children) == 4 else Visibility.PUBLIC
        return Interaction(str(sender), str(receiver), Operation(str(name), visibility))


def parse(text: str, runtime: bool = False) -> Choreography:
    """
    Parse DSL text into a choreography.

    Args:
        text: Source text
        runtime: Also accept the runtime-only term `0`

    Returns:
        The parsed choreography

    Raises:
        ParseError: With line/column for malformed input, `0` in user
            syntax, or an interaction whose sender equals its receiver
    """
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as exc:
        raise ParseError(_describe(exc), _position(exc.line), _position(exc.column)) from None
    try:
        return _ChoreographyBuilder(runtime).transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, ChoreographyError):
            raise exc.orig_exc from None
        raise


def _describe(exc: UnexpectedInput) -> str:
    if isinstance(exc, UnexpectedCharacters):
        return f"unexpected character {exc.char!r}"
    if isinstance(exc, UnexpectedToken):
        if exc.token.type == "$END":
            return "unexpected end of input"
        return f"unexpected token {str(exc.token)!r}"
    return "unexpected end of input"


def _position(value) -> Optional[int]:
    return value if isinstance(value, int) and value > 0 else None


# ============================================================================
# RENDERER
# ============================================================================

# Binding strength, loosest first; a parenthesized parallel group is atomic
_CHOICE, _PAR, _SEQ, _ATOM = range(4)


def render(c: Choreography) -> str:
    """
    Render a choreography in the DSL.

    Parallel compositions are always parenthesized, e.g.
    "(a->b:o | c->d:o)"; other operators get parentheses only where
    precedence or right-associativity demands them.
    """
    return _render(c)[0]


def _render(c: Choreography) -> tuple[str, int]:
    if isinstance(c, Interaction):
        return str(c), _ATOM
    if isinstance(c, One):
        return "1", _ATOM
    if isinstance(c, Zero):
        return "0", _ATOM
    if isinstance(c, Par):
        return "(" + " | ".join(_par_items(c)) + ")", _ATOM
    if isinstance(c, Seq):
        return f"{_operand(c.left, _SEQ, True)} ; {_operand(c.right, _SEQ, False)}", _SEQ
    if isinstance(c, Choice):
        return f"{_operand(c.left, _CHOICE, True)} + {_operand(c.right, _CHOICE, False)}", _CHOICE
    raise ChoreographyError(f"Not a choreography: {c!r}")


def _operand(c: Choreography, level: int, is_left: bool) -> str:
    text, own = _render(c)
    # Left operands of a right-associative operator need parentheses at equal strength
    needs_parens = own <= level if is_left else own < level
    return f"({text})" if needs_parens else text


def _par_items(c: Par) -> list[str]:
    items = [_operand(c.left, _PAR, True)]
    rest = c.right
    while isinstance(rest, Par):
        items.append(_operand(rest.left, _PAR, True))
        rest = rest.right
    items.append(_operand(rest, _PAR, False))
    return items
