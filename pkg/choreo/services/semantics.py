"""
Choreography Semantics - Labelled Transitions and Maximal Traces

This module implements the operational semantics of choreographies:
- step(): all transitions of a term (interaction, end, sequence,
  parallel, choice, sequence-end, parallel-end and symmetric variants)
- can_tick(): whether a term can terminate right now
- Strong and weak maximal trace enumeration with a trace cap

Traces are maximal: they end in a state with no outgoing transition. A
weak trace is a strong trace with every private-operation label erased.
"""

import logging
from collections import deque
from enum import Enum
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Optional, Union

from choreo.config import DEFAULT_TRACE_CAP, TICK_TEXT
from choreo.errors import CapExceeded
from choreo.services.syntax import (
    Choice,
    Choreography,
    Interaction,
    One,
    Par,
    Seq,
    Zero,
)

logger = logging.getLogger(__name__)


# ============================================================================
# LABELS AND TRACES
# ============================================================================

class Tick(Enum):
    """The termination label."""
    TICK = TICK_TEXT

    def __str__(self) -> str:
        return TICK_TEXT


TICK = Tick.TICK

ChorLabel = Union[Interaction, Tick]
Trace = tuple  # tuple of labels


def is_private(label) -> bool:
    """True for labels carrying a private operation."""
    op = getattr(label, "op", None)
    return op is not None and op.is_private


def format_label(label) -> str:
    """Choreography label text: "a->b:o" or "TICK"."""
    return TICK_TEXT if label is TICK else str(label)


def format_trace(trace: Trace, formatter: Callable = format_label) -> list[str]:
    return [formatter(label) for label in trace]


def sorted_traces(traces: Iterable[Trace], formatter: Callable = format_label) -> list[list[str]]:
    """Traces as JSON-ready string lists in a stable order."""
    return sorted(format_trace(trace, formatter) for trace in traces)


# ============================================================================
# TRANSITIONS
# ============================================================================

@lru_cache(maxsize=1 << 16)
def step(c: Choreography) -> frozenset:
    """
    All transitions of a choreography.

    Args:
        c: Current term

    Returns:
        Set of (label, successor) pairs
    """
    if isinstance(c, Interaction):
        return frozenset({(c, One())})
    if isinstance(c, One):
        return frozenset({(TICK, Zero())})
    if isinstance(c, Zero):
        return frozenset()

    left_moves = step(c.left)
    if isinstance(c, Choice):
        return left_moves | step(c.right)

    if isinstance(c, Seq):
        moves = {(label, Seq(target, c.right)) for label, target in left_moves if label is not TICK}
        if any(label is TICK for label, _ in left_moves):
            # Left part may terminate: the right part moves on its own, any label
            moves.update(step(c.right))
        return frozenset(moves)

    if isinstance(c, Par):
        right_moves = step(c.right)
        moves = {(label, Par(target, c.right)) for label, target in left_moves if label is not TICK}
        moves.update((label, Par(c.left, target)) for label, target in right_moves if label is not TICK)
        moves.update(
            (TICK, Par(left_end, right_end))
            for left_label, left_end in left_moves if left_label is TICK
            for right_label, right_end in right_moves if right_label is TICK
        )
        return frozenset(moves)

    raise TypeError(f"Not a choreography: {c!r}")


def can_tick(c: Choreography) -> bool:
    """True iff c has a termination transition of its own."""
    if isinstance(c, One):
        return True
    if isinstance(c, (Interaction, Zero)):
        return False
    if isinstance(c, Choice):
        return can_tick(c.left) or can_tick(c.right)
    return can_tick(c.left) and can_tick(c.right)


def reachable_states(c: Choreography) -> set:
    """Every term reachable from c, c included."""
    seen = {c}
    queue = deque([c])
    while queue:
        for _, target in step(queue.popleft()):
            if target not in seen:
                seen.add(target)
                queue.append(target)
    return seen


# ============================================================================
# TRACE ENUMERATION
# ============================================================================

def maximal_traces(initial: Hashable,
                   successors: Callable[[Hashable], Iterable],
                   cap: int = DEFAULT_TRACE_CAP,
                   hidden: Optional[Callable[[object], bool]] = None) -> frozenset:
    """
    Enumerate the maximal traces of a finite acyclic transition system.

    Results are memoized per state. Labels for which `hidden` returns True
    are erased on the fly, so weak traces never materialize the strong set.

    Args:
        initial: Start state
        successors: Function from a state to its (label, state) pairs
        cap: Maximum number of traces at any state
        hidden: Optional predicate selecting labels to erase

    Returns:
        Set of traces (tuples of labels)

    Raises:
        CapExceeded: If any state has more than `cap` traces
    """
    memo: dict = {}

    def visit(state) -> frozenset:
        cached = memo.get(state)
        if cached is not None:
            return cached
        moves = successors(state)
        if not moves:
            result = frozenset({()})
        else:
            collected = set()
            for label, target in moves:
                tails = visit(target)
                if hidden is not None and hidden(label):
                    collected.update(tails)
                else:
                    collected.update((label,) + tail for tail in tails)
                # Traces of a reachable state extend injectively to traces of the root
                if len(collected) > cap:
                    raise CapExceeded(cap)
            result = frozenset(collected)
        memo[state] = result
        return result

    traces = visit(initial)
    logger.debug("Enumerated %d traces over %d states", len(traces), len(memo))
    return traces


def strong_traces(c: Choreography, cap: int = DEFAULT_TRACE_CAP) -> frozenset:
    """
    Strong maximal traces of c.

    Raises:
        CapExceeded: If more than `cap` traces exist
    """
    return maximal_traces(c, step, cap)


def weak_traces(c: Choreography, cap: int = DEFAULT_TRACE_CAP) -> frozenset:
    """Maximal traces of c with private interactions erased."""
    return maximal_traces(c, step, cap, hidden=is_private)
