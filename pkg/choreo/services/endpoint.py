"""
Endpoint Systems - Processes, Synchronous and Asynchronous Semantics

This module implements projected systems:
- Process terms (input, output, in-flight message, 1, 0, `;`, `|`, `+`)
- Endpoint systems: uniquely named roles, each running one process
- The asynchronous LTS (outputs become messages stored at the sender)
  and the synchronous LTS (outputs offer themselves directly)
- Strong and weak system traces over the alphabet of each mode
- A lark parser and a renderer for the system DSL `[P]@a || [Q]@b`
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Union

from lark import Lark, Transformer
from lark.exceptions import UnexpectedInput, VisitError

from choreo.config import DEFAULT_TRACE_CAP, TICK_TEXT
from choreo.errors import ChoreographyError, ParseError
from choreo.models import SystemSemantics
from choreo.services.semantics import TICK, Tick, is_private, maximal_traces
from choreo.services.syntax import Interaction, Operation, Role, Visibility
from choreo.utils import validate_identifier

logger = logging.getLogger(__name__)


# ============================================================================
# PROCESSES
# ============================================================================

@dataclass(frozen=True, slots=True)
class Input:
    op: Operation


@dataclass(frozen=True, slots=True)
class Output:
    op: Operation


@dataclass(frozen=True, slots=True)
class Msg:
    """A message sent on `op`, waiting to be received (asynchronous runtime only)."""
    op: Operation


@dataclass(frozen=True, slots=True)
class ProcOne:
    pass


@dataclass(frozen=True, slots=True)
class ProcZero:
    pass


@dataclass(frozen=True, slots=True)
class ProcSeq:
    left: "Process"
    right: "Process"


@dataclass(frozen=True, slots=True)
class ProcPar:
    left: "Process"
    right: "Process"


@dataclass(frozen=True, slots=True)
class ProcChoice:
    left: "Process"
    right: "Process"


Process = Union[Input, Output, Msg, ProcOne, ProcZero, ProcSeq, ProcPar, ProcChoice]


@dataclass(frozen=True, slots=True)
class EndpointSystem:
    """Roles with their processes, in a fixed order; names are unique."""
    roles: tuple[tuple[Role, Process], ...]

    def __post_init__(self):
        seen = set()
        for role, _ in self.roles:
            validate_identifier(role, "role")
            if role in seen:
                raise ChoreographyError(f"Role {role!r} appears twice in the system")
            seen.add(role)

    @property
    def role_names(self) -> list[Role]:
        return [role for role, _ in self.roles]

    def process_of(self, role: Role) -> Process:
        for name, process in self.roles:
            if name == role:
                return process
        raise KeyError(role)

    def with_process(self, index: int, process: Process) -> "EndpointSystem":
        updated = list(self.roles)
        updated[index] = (updated[index][0], process)
        return EndpointSystem(tuple(updated))


# ============================================================================
# LABELS
# ============================================================================

@dataclass(frozen=True, slots=True, order=True)
class LocalOut:
    """Role emitted a message on op (asynchronous only)."""
    op: Operation
    role: Role

    def __str__(self) -> str:
        return f"!{self.op}@{self.role}"


@dataclass(frozen=True, slots=True, order=True)
class LocalIn:
    op: Operation
    role: Role

    def __str__(self) -> str:
        return f"?{self.op}@{self.role}"


@dataclass(frozen=True, slots=True, order=True)
class MsgAvail:
    """A message on op is ready to be consumed from role."""
    op: Operation
    role: Role

    def __str__(self) -> str:
        return f"<{self.op}>@{self.role}"


SysLabel = Union[LocalIn, LocalOut, MsgAvail, Interaction, Tick]


def format_sys_label(label) -> str:
    """System label text: "!o@a", "?o@a", "<o>@a", "o:a->b" or "TICK"."""
    if label is TICK:
        return TICK_TEXT
    if isinstance(label, Interaction):
        return f"{label.op}:{label.sender}->{label.receiver}"
    return str(label)


class Action(str, Enum):
    """Process-level action kinds before lifting to a role."""
    IN = "in"
    OUT = "out"
    AVAIL = "avail"


# ============================================================================
# PROCESS TRANSITIONS
# ============================================================================

@lru_cache(maxsize=1 << 16)
def process_step(p: Process, mode: SystemSemantics) -> frozenset:
    """
    Transitions of a single process.

    Labels are TICK or (action, operation). Under the synchronous
    semantics an output directly offers its message; under the
    asynchronous one it first becomes a stored message.
    """
    if isinstance(p, Input):
        return frozenset({((Action.IN, p.op), ProcOne())})
    if isinstance(p, Output):
        action = Action.OUT if mode is SystemSemantics.ASYNC else Action.AVAIL
        return frozenset({((action, p.op), ProcOne())})
    if isinstance(p, Msg):
        if mode is SystemSemantics.SYNC:
            return frozenset()
        return frozenset({((Action.AVAIL, p.op), ProcOne())})
    if isinstance(p, ProcOne):
        return frozenset({(TICK, ProcZero())})
    if isinstance(p, ProcZero):
        return frozenset()

    left_moves = process_step(p.left, mode)
    if isinstance(p, ProcChoice):
        return left_moves | process_step(p.right, mode)
    if isinstance(p, ProcSeq):
        moves = {(label, ProcSeq(target, p.right)) for label, target in left_moves if label is not TICK}
        if any(label is TICK for label, _ in left_moves):
            moves.update(process_step(p.right, mode))
        return frozenset(moves)
    if isinstance(p, ProcPar):
        right_moves = process_step(p.right, mode)
        moves = {(label, ProcPar(target, p.right)) for label, target in left_moves if label is not TICK}
        moves.update((label, ProcPar(p.left, target)) for label, target in right_moves if label is not TICK)
        moves.update(
            (TICK, ProcPar(left_end, right_end))
            for left_label, left_end in left_moves if left_label is TICK
            for right_label, right_end in right_moves if right_label is TICK
        )
        return frozenset(moves)
    raise TypeError(f"Not a process: {p!r}")


# ============================================================================
# SYSTEM TRANSITIONS
# ============================================================================

@lru_cache(maxsize=1 << 16)
def system_step(s: EndpointSystem, mode: SystemSemantics) -> frozenset:
    """
    All transitions of a system under the given semantics.

    Process:
    1. Lift every non-terminating move of a role to a located label;
       an asynchronous output leaves the message next to the sender
    2. Pair a ready message at one role with an input at another role
       on the same operation into a communication
    3. Terminate only when every role terminates at once
    """
    per_role = [process_step(process, mode) for _, process in s.roles]
    moves = set()
    offers: list[tuple[int, Operation, Process]] = []
    inputs: list[tuple[int, Operation, Process]] = []

    for index, (role, _) in enumerate(s.roles):
        for action, target in per_role[index]:
            if action is TICK:
                continue
            kind, op = action
            if kind is Action.OUT:
                moves.add((LocalOut(op, role), s.with_process(index, ProcPar(target, Msg(op)))))
            elif kind is Action.IN:
                moves.add((LocalIn(op, role), s.with_process(index, target)))
                inputs.append((index, op, target))
            else:
                moves.add((MsgAvail(op, role), s.with_process(index, target)))
                offers.append((index, op, target))

    for sender_index, op, sender_target in offers:
        for receiver_index, wanted, receiver_target in inputs:
            if receiver_index == sender_index or wanted != op:
                continue
            label = Interaction(s.roles[sender_index][0], s.roles[receiver_index][0], op)
            target = s.with_process(sender_index, sender_target).with_process(receiver_index, receiver_target)
            moves.add((label, target))

    endings = [[end for label, end in options if label is TICK] for options in per_role]
    if all(endings):
        for combination in itertools.product(*endings):
            terminated = tuple((role, end) for (role, _), end in zip(s.roles, combination))
            moves.add((TICK, EndpointSystem(terminated)))

    return frozenset(moves)


def step_sync(s: EndpointSystem) -> frozenset:
    """Transitions under the synchronous semantics."""
    return system_step(s, SystemSemantics.SYNC)


def step_async(s: EndpointSystem) -> frozenset:
    """Transitions under the asynchronous semantics."""
    return system_step(s, SystemSemantics.ASYNC)


# ============================================================================
# SYSTEM TRACES
# ============================================================================

def in_trace_alphabet(label, mode: SystemSemantics) -> bool:
    """Labels a trace of the given mode may contain; everything else is internal."""
    if label is TICK or isinstance(label, Interaction):
        return True
    return mode is SystemSemantics.ASYNC and isinstance(label, LocalOut)


def _observable_successors(mode: SystemSemantics):
    def successors(s: EndpointSystem):
        return [(label, target) for label, target in system_step(s, mode) if in_trace_alphabet(label, mode)]
    return successors


def sys_strong_traces(s: EndpointSystem, mode: SystemSemantics = SystemSemantics.SYNC,
                      cap: int = DEFAULT_TRACE_CAP) -> frozenset:
    """
    Strong maximal traces of a system.

    A state ends a trace when it has no transition labelled in the
    mode's alphabet, even if bare inputs or offers remain.

    Raises:
        CapExceeded: If more than `cap` traces exist
    """
    traces = maximal_traces(s, _observable_successors(mode), cap)
    logger.info("System %s traces: %d", mode.value, len(traces))
    return traces


def sys_weak_traces(s: EndpointSystem, mode: SystemSemantics = SystemSemantics.SYNC,
                    cap: int = DEFAULT_TRACE_CAP) -> frozenset:
    """Strong system traces with every private-operation label erased."""
    return maximal_traces(s, _observable_successors(mode), cap, hidden=is_private)


# ============================================================================
# SYSTEM DSL
# ============================================================================

SYSTEM_GRAMMAR = r"""
    start: located ("||" located)*

    located: "[" choice "]" "@" IDENT

    ?choice: par ("+" par)*
    ?par: seq ("|" seq)*
    ?seq: atom (";" atom)*
    ?atom: "!" op               -> output
         | "?" op               -> input
         | "<" op ">"           -> message
         | "1"                  -> one
         | "0"                  -> zero
         | "(" choice ")"

    op: IDENT STAR?

    STAR: "*"
    IDENT: /[A-Za-z_][A-Za-z0-9_]*/
    COMMENT: /#[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_SYSTEM_PARSER = Lark(SYSTEM_GRAMMAR, parser="lalr")


def _fold(node_type: type, items: list) -> Process:
    result = items[-1]
    for item in reversed(items[:-1]):
        result = node_type(item, result)
    return result


class _SystemBuilder(Transformer):
    def start(self, children):
        return EndpointSystem(tuple(children))

    def located(self, children):
        process, role = children
        return str(role), process

    def choice(self, children):
        return _fold(ProcChoice, children)

    def par(self, children):
        return _fold(ProcPar, children)

    def seq(self, children):
        return _fold(ProcSeq, children)

    def output(self, children):
        return Output(children[0])

    def input(self, children):
        return Input(children[0])

    def message(self, children):
        return Msg(children[0])

    def one(self, _children):
        return ProcOne()

    def zero(self, _children):
        return ProcZero()

    def op(self, children):
        visibility = Visibility.PRIVATE if len(children) == 2 else Visibility.PUBLIC
        return Operation(str(children[0]), visibility)


def parse_system(text: str) -> EndpointSystem:
    """
    Parse the system DSL, e.g. "[!o ; ?p]@a || [?o ; !p]@b".

    Raises:
        ParseError: For malformed text or repeated role names
    """
    try:
        tree = _SYSTEM_PARSER.parse(text)
    except UnexpectedInput as exc:
        line = exc.line if isinstance(exc.line, int) and exc.line > 0 else None
        column = exc.column if isinstance(exc.column, int) and exc.column > 0 else None
        raise ParseError("malformed endpoint system", line, column) from None
    try:
        return _SystemBuilder().transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, ChoreographyError):
            raise ParseError(str(exc.orig_exc)) from None
        raise


_CHOICE, _PAR, _SEQ, _ATOM = range(4)


def render_process(p: Process) -> str:
    """Render a process; parallel compositions are always parenthesized."""
    return _render(p)[0]


def render_system(s: EndpointSystem) -> str:
    return " || ".join(f"[{render_process(process)}]@{role}" for role, process in s.roles)


def _render(p: Process) -> tuple[str, int]:
    if isinstance(p, Input):
        return f"?{p.op}", _ATOM
    if isinstance(p, Output):
        return f"!{p.op}", _ATOM
    if isinstance(p, Msg):
        return f"<{p.op}>", _ATOM
    if isinstance(p, ProcOne):
        return "1", _ATOM
    if isinstance(p, ProcZero):
        return "0", _ATOM
    if isinstance(p, ProcPar):
        items = []
        rest = p
        while isinstance(rest, ProcPar):
            items.append(_operand(rest.left, _PAR, True))
            rest = rest.right
        items.append(_operand(rest, _PAR, False))
        return "(" + " | ".join(items) + ")", _ATOM
    if isinstance(p, ProcSeq):
        return f"{_operand(p.left, _SEQ, True)} ; {_operand(p.right, _SEQ, False)}", _SEQ
    if isinstance(p, ProcChoice):
        return f"{_operand(p.left, _CHOICE, True)} + {_operand(p.right, _CHOICE, False)}", _CHOICE
    raise ChoreographyError(f"Not a process: {p!r}")


def _operand(p: Process, level: int, is_left: bool) -> str:
    text, own = _render(p)
    needs_parens = own <= level if is_left else own < level
    return f"({text})" if needs_parens else text
