"""
Connectedness Analysis - Initial/Final Interactions, Events and Checks

This module implements the static conditions under which a choreography
projects correctly:
- trans_i / trans_f: initial and final interactions of a term
- events, the causality partial order and the full-conflict relation
- check_sequence: connectedness for sequence
- check_choice: unique points of choice (Cond1 senders, Cond2 roles)
- check_causality: causality safety, classified as parallel, sequential
  or choice issue by the operator at the smallest common ancestor
- advise_renames: renaming hints for causality issues on public operations

Events are identified by the path of their interaction, so relations are
recomputed after a rewrite. check_causality answers point queries through a
per-term CausalOrder; causality() and full_conflict() build whole relations.
"""

import logging
from collections import defaultdict, deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from itertools import combinations, product
from typing import Optional

from choreo.models import RenameAdvice, Violation, ViolationDetail, ViolationKind
from choreo.services.semantics import can_tick
from choreo.services.syntax import (
    LEFT,
    RIGHT,
    Choice,
    Choreography,
    Interaction,
    Operation,
    Par,
    Path,
    Role,
    Seq,
    internal_paths,
    interactions,
    is_binary,
    operations,
    roles,
    subterm_at,
)

logger = logging.getLogger(__name__)


# ============================================================================
# INITIAL AND FINAL INTERACTIONS
# ============================================================================

@dataclass(frozen=True, slots=True, order=True)
class LocatedInteraction:
    """An interaction leaf together with its path."""
    path: Path
    interaction: Interaction

    def __str__(self) -> str:
        return str(self.interaction)


def trans_i(c: Choreography, prefix: Path = ()) -> frozenset[LocatedInteraction]:
    """
    Interactions that can be executed first.

    The right operand of a sequence contributes only when the left
    operand can terminate.

    Args:
        c: Choreography
        prefix: Path of c in an enclosing term (paths in the result are absolute)

    Returns:
        Set of located interactions
    """
    if isinstance(c, Interaction):
        return frozenset({LocatedInteraction(prefix, c)})
    if not is_binary(c):
        return frozenset()
    left = trans_i(c.left, prefix + (LEFT,))
    if isinstance(c, Seq) and not can_tick(c.left):
        return left
    return left | trans_i(c.right, prefix + (RIGHT,))


def trans_f(c: Choreography, prefix: Path = ()) -> frozenset[LocatedInteraction]:
    """Interactions that can be executed last (dual of trans_i)."""
    if isinstance(c, Interaction):
        return frozenset({LocatedInteraction(prefix, c)})
    if not is_binary(c):
        return frozenset()
    right = trans_f(c.right, prefix + (RIGHT,))
    if isinstance(c, Seq) and not can_tick(c.right):
        return right
    return trans_f(c.left, prefix + (LEFT,)) | right


def senders(located) -> set[Role]:
    return {item.interaction.sender for item in located}


def receivers(located) -> set[Role]:
    return {item.interaction.receiver for item in located}


# ============================================================================
# EVENTS AND RELATIONS
# ============================================================================

class Polarity(str, Enum):
    SEND = "send"
    RECEIVE = "receive"


@dataclass(frozen=True, slots=True, order=True)
class Event:
    """Send or receive half of the interaction at interaction_path."""
    interaction_path: Path
    polarity: Polarity
    role: Role
    op: Operation

    def __str__(self) -> str:
        return f"{self.polarity.value}@{self.role}({self.op}){list(self.interaction_path)}"


@dataclass(frozen=True)
class EventRelation:
    """A binary relation over events."""
    pairs: frozenset

    def holds(self, first: Event, second: Event) -> bool:
        return (first, second) in self.pairs

    def successors(self, event: Event) -> frozenset:
        return self._successor_map.get(event, frozenset())

    @cached_property
    def _successor_map(self) -> dict:
        mapping = defaultdict(set)
        for first, second in self.pairs:
            mapping[first].add(second)
        return {event: frozenset(targets) for event, targets in mapping.items()}

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


def events(c: Choreography) -> frozenset[Event]:
    """Two events, a send and a receive, per interaction leaf."""
    found = set()
    for path, interaction in interactions(c):
        found.update(_events_of(path, interaction))
    return frozenset(found)


def _events_of(path: Path, interaction: Interaction) -> tuple[Event, Event]:
    return (Event(path, Polarity.SEND, interaction.sender, interaction.op),
            Event(path, Polarity.RECEIVE, interaction.receiver, interaction.op))


def _partners(c: Choreography) -> dict[Event, Event]:
    partner = {}
    for path, interaction in interactions(c):
        send, receive = _events_of(path, interaction)
        partner[send] = receive
        partner[receive] = send
    return partner


def _sequentiality(c: Choreography, prefix: Path, pairs: set) -> list[Event]:
    # A receive in the left part of `;` precedes every event at the same role in the right part
    if isinstance(c, Interaction):
        return list(_events_of(prefix, c))
    if not is_binary(c):
        return []
    left = _sequentiality(c.left, prefix + (LEFT,), pairs)
    right = _sequentiality(c.right, prefix + (RIGHT,), pairs)
    if isinstance(c, Seq):
        by_role = defaultdict(list)
        for event in right:
            by_role[event.role].append(event)
        for event in left:
            if event.polarity is Polarity.RECEIVE:
                pairs.update((event, later) for later in by_role[event.role])
    return left + right


def _choice_conflicts(c: Choreography, prefix: Path, pairs: set) -> list[Event]:
    # Events at the same role in opposite branches of `+`, both orientations
    if isinstance(c, Interaction):
        return list(_events_of(prefix, c))
    if not is_binary(c):
        return []
    left = _choice_conflicts(c.left, prefix + (LEFT,), pairs)
    right = _choice_conflicts(c.right, prefix + (RIGHT,), pairs)
    if isinstance(c, Choice):
        by_role = defaultdict(list)
        for event in right:
            by_role[event.role].append(event)
        for event in left:
            for other in by_role[event.role]:
                pairs.add((event, other))
                pairs.add((other, event))
    return left + right


def causality(c: Choreography, method: str = "worklist") -> EventRelation:
    """
    Causality partial order over the events of c.

    Least relation containing the sequentiality pairs, closed under
    synchronization (r <= e implies the matching send of r is <= e, for
    e distinct from r) and transitivity; reflexive pairs are added last.

    Args:
        c: Choreography
        method: "worklist" (default) or "naive" fixpoint iteration

    Returns:
        The causality relation
    """
    base: set = set()
    _sequentiality(c, (), base)
    partner = _partners(c)
    if method == "naive":
        strict = _naive_causality(base, partner)
    elif method == "worklist":
        strict = _worklist_causality(base, partner)
    else:
        raise ValueError(f"Unknown fixpoint method: {method}")
    reflexive = {(event, event) for event in partner}
    return EventRelation(frozenset(strict | reflexive))


def _worklist_causality(base: set, partner: dict) -> set:
    successors = defaultdict(set)
    predecessors = defaultdict(set)
    queue = deque()

    def add(first, second):
        if first == second or second in successors[first]:
            return
        successors[first].add(second)
        predecessors[second].add(first)
        queue.append((first, second))

    for first, second in sorted(base):
        add(first, second)
    while queue:
        first, second = queue.popleft()
        if first.polarity is Polarity.RECEIVE:
            add(partner[first], second)
        for later in list(successors[second]):
            add(first, later)
        for earlier in list(predecessors[first]):
            add(earlier, second)
    return {(first, second) for first, targets in successors.items() for second in targets}


def _naive_causality(base: set, partner: dict) -> set:
    pairs = {(first, second) for first, second in base if first != second}
    rounds = 0
    while True:
        rounds += 1
        successors = defaultdict(set)
        for first, second in pairs:
            successors[first].add(second)
        derived = set()
        for first, second in pairs:
            if first.polarity is Polarity.RECEIVE:
                derived.add((partner[first], second))
            derived.update((first, later) for later in successors[second])
        derived = {(first, second) for first, second in derived if first != second}
        if derived <= pairs:
            logger.debug("Naive causality fixpoint after %d rounds", rounds)
            return pairs
        pairs |= derived


def full_conflict(c: Choreography, method: str = "worklist",
                  order: Optional[EventRelation] = None) -> EventRelation:
    """
    Full-conflict relation over the events of c.

    Least relation containing the choice pairs that is symmetric and closed
    to the right under causality (x # y and y <= z gives x # z).

    Args:
        c: Choreography
        method: "worklist" (default) or "naive"
        order: Causality relation of c, when already computed

    Returns:
        The full-conflict relation
    """
    if order is None:
        order = causality(c)
    base: set = set()
    _choice_conflicts(c, (), base)
    if method == "naive":
        return EventRelation(frozenset(_naive_conflict(base, order)))
    if method != "worklist":
        raise ValueError(f"Unknown fixpoint method: {method}")

    pairs = set()
    queue = deque()

    def add(first, second):
        if (first, second) not in pairs:
            pairs.add((first, second))
            queue.append((first, second))

    for first, second in sorted(base):
        add(first, second)
    while queue:
        first, second = queue.popleft()
        add(second, first)
        for later in order.successors(second):
            add(first, later)
    return EventRelation(frozenset(pairs))


def _naive_conflict(base: set, order: EventRelation) -> set:
    pairs = set(base)
    while True:
        derived = {(second, first) for first, second in pairs}
        derived.update((first, later) for first, second in pairs for later in order.successors(second))
        if derived <= pairs:
            return pairs
        pairs |= derived


# ============================================================================
# CAUSAL QUERIES
# ============================================================================

class CausalOrder:
    """
    Point queries on the causality and full-conflict relations of one term.

    Strict predecessor sets are found by a backward search over the
    sequentiality edges of the event, only for events that are queried:
    - x <= y iff x == y or x is a predecessor of y
    - x # y iff u <= x and v <= y for events u, v at the same role in
      opposite branches of a choice
    Both answers agree with causality() and full_conflict().
    """

    def __init__(self, c: Choreography):
        self.leaves = dict(interactions(c))
        self.choices = set()
        self._left_receives: dict[Path, dict[Role, list[Event]]] = {}
        self._predecessors: dict[Event, frozenset] = {}
        self._by_role: dict[Event, dict[Role, list[Event]]] = {}
        self._index(c, ())

    def _index(self, c: Choreography, prefix: Path) -> list[Event]:
        if isinstance(c, Interaction):
            return list(_events_of(prefix, c))
        if not is_binary(c):
            return []
        left = self._index(c.left, prefix + (LEFT,))
        right = self._index(c.right, prefix + (RIGHT,))
        if isinstance(c, Choice):
            self.choices.add(prefix)
        elif isinstance(c, Seq):
            receives = defaultdict(list)
            for event in left:
                if event.polarity is Polarity.RECEIVE:
                    receives[event.role].append(event)
            self._left_receives[prefix] = dict(receives)
        return left + right

    def _direct(self, event: Event) -> list[Event]:
        # Receives at the same role in the left part of every `;` whose right part holds the event
        path = event.interaction_path
        found = []
        for depth, step in enumerate(path):
            if step == RIGHT:
                found.extend(self._left_receives.get(path[:depth], {}).get(event.role, ()))
        return found

    def _partner(self, event: Event) -> Event:
        send, receive = _events_of(event.interaction_path, self.leaves[event.interaction_path])
        return send if event.polarity is Polarity.RECEIVE else receive

    def predecessors(self, event: Event) -> frozenset:
        """Events strictly below `event` in the causality order."""
        cached = self._predecessors.get(event)
        if cached is not None:
            return cached
        found = set()
        pending = self._direct(event)
        while pending:
            earlier = pending.pop()
            if earlier in found or earlier == event:
                continue
            found.add(earlier)
            pending.extend(self._direct(earlier))
            if earlier.polarity is Polarity.RECEIVE:
                pending.append(self._partner(earlier))
        result = frozenset(found)
        self._predecessors[event] = result
        return result

    def precedes(self, first: Event, second: Event) -> bool:
        return first == second or first in self.predecessors(second)

    def in_conflict(self, first: Event, second: Event) -> bool:
        below_second = self._roles_below(second)
        for earlier in self.predecessors(first) | {first}:
            for other in below_second.get(earlier.role, ()):
                common = lca(earlier.interaction_path, other.interaction_path)
                if common in self.choices:
                    return True
        return False

    def _roles_below(self, event: Event) -> dict[Role, list[Event]]:
        cached = self._by_role.get(event)
        if cached is None:
            cached = defaultdict(list)
            for earlier in self.predecessors(event) | {event}:
                cached[earlier.role].append(earlier)
            self._by_role[event] = cached
        return cached


@lru_cache(maxsize=64)
def causal_order(c: Choreography) -> CausalOrder:
    """Cached CausalOrder of c; terms are immutable."""
    return CausalOrder(c)


# ============================================================================
# CONNECTEDNESS CHECKS
# ============================================================================

def check_sequence(c: Choreography) -> list[Violation]:
    """
    Connectedness for sequence.

    Every receiver of a final interaction of the left operand of `;` must
    be the sender of every initial interaction of the right operand.

    Returns:
        One SeqNotConnected violation per offending `;`, with the first
        offending (final, initial) pair as witnesses
    """
    violations = []
    for path in internal_paths(c):
        node = subterm_at(c, path)
        if not isinstance(node, Seq):
            continue
        finals = sorted(trans_f(node.left, path + (LEFT,)))
        initials = sorted(trans_i(node.right, path + (RIGHT,)))
        offending = next(
            ((last, first) for last, first in product(finals, initials)
             if last.interaction.receiver != first.interaction.sender),
            None
        )
        if offending:
            violations.append(_pair_violation(ViolationKind.SEQ_NOT_CONNECTED, None, path, offending))
    return violations


def check_choice(c: Choreography) -> list[Violation]:
    """
    Unique points of choice.

    Cond1: initial interactions of the two branches share their sender.
    Cond2: both branches involve the same roles.
    """
    violations = []
    for path in internal_paths(c):
        node = subterm_at(c, path)
        if not isinstance(node, Choice):
            continue
        left_initial = sorted(trans_i(node.left, path + (LEFT,)))
        right_initial = sorted(trans_i(node.right, path + (RIGHT,)))
        offending = next(
            ((x, y) for x, y in product(left_initial, right_initial)
             if x.interaction.sender != y.interaction.sender),
            None
        )
        if offending:
            violations.append(
                _pair_violation(ViolationKind.CHOICE_NOT_UNIQUE_POINT, ViolationDetail.COND1, path, offending)
            )
        left_roles, right_roles = roles(node.left), roles(node.right)
        if left_roles != right_roles:
            violations.append(Violation(
                kind=ViolationKind.CHOICE_NOT_UNIQUE_POINT,
                detail=ViolationDetail.COND2,
                path=list(path),
                witnesses=sorted(left_roles ^ right_roles),
            ))
    return violations


def check_causality(c: Choreography) -> list[Violation]:
    """
    Causality safety.

    For every pair of distinct interactions on the same operation, each
    send must be ordered with, or in full conflict with, the other
    interaction's receive (in either direction).

    Returns:
        One CausalityUnsafe violation per failing pair, sorted by
        (ancestor path, interaction paths)
    """
    by_op = defaultdict(list)
    for path, interaction in interactions(c):
        by_op[interaction.op].append((path, interaction))
    candidates = [group for group in by_op.values() if len(group) > 1]
    if not candidates:
        return []

    order = causal_order(c)

    def separated(send: Event, receive: Event) -> bool:
        return (order.precedes(send, receive) or order.precedes(receive, send)
                or order.in_conflict(send, receive))

    violations = []
    for group in candidates:
        for (first_path, first), (second_path, second) in combinations(group, 2):
            first_send, first_receive = _events_of(first_path, first)
            second_send, second_receive = _events_of(second_path, second)
            first_safe = separated(first_send, second_receive)
            second_safe = separated(second_send, first_receive)
            if first_safe and second_safe:
                continue
            endangered = []
            if not second_safe:
                endangered.append(list(first_path))
            if not first_safe:
                endangered.append(list(second_path))
            ancestor = lca(first_path, second_path)
            violations.append(Violation(
                kind=ViolationKind.CAUSALITY_UNSAFE,
                detail=_classify(subterm_at(c, ancestor)),
                path=list(ancestor),
                witnesses=[str(first), str(second)],
                witness_paths=[list(first_path), list(second_path)],
                endangered=endangered,
            ))
    violations.sort(key=lambda v: (v.path, v.witness_paths))
    logger.debug("Causality check: %d violations", len(violations))
    return violations


def check_all(c: Choreography) -> list[Violation]:
    """All violations: sequence, then choice, then causality."""
    return check_sequence(c) + check_choice(c) + check_causality(c)


def is_connected(c: Choreography) -> bool:
    return not check_all(c)


def lca(first: Path, second: Path) -> Path:
    """Longest common prefix of two paths."""
    common = []
    for a, b in zip(first, second):
        if a != b:
            break
        common.append(a)
    return tuple(common)


def _classify(ancestor: Choreography) -> ViolationDetail:
    if isinstance(ancestor, Par):
        return ViolationDetail.PARALLEL_ISSUE
    if isinstance(ancestor, Seq):
        return ViolationDetail.SEQUENTIAL_ISSUE
    return ViolationDetail.CHOICE_ISSUE


def _pair_violation(kind, detail, path: Path, pair) -> Violation:
    return Violation(
        kind=kind,
        detail=detail,
        path=list(path),
        witnesses=[str(item) for item in pair],
        witness_paths=[list(item.path) for item in pair],
    )


# ============================================================================
# RENAME ADVICE
# ============================================================================

def advise_renames(c: Choreography) -> list[RenameAdvice]:
    """
    Suggest renamings that remove causality issues on public operations.

    For each violation the later interaction gets a fresh public operation
    name; nothing is rewritten. Parallel issues are marked recommended,
    since fixing them by amendment costs a normal-form expansion.
    """
    taken = {op.name for op in operations(c)}
    advised_paths = set()
    advice = []
    for violation in check_causality(c):
        path = tuple(violation.witness_paths[1])
        interaction = subterm_at(c, path)
        if interaction.op.is_private or path in advised_paths:
            continue
        suffix = 2
        while f"{interaction.op.name}_{suffix}" in taken:
            suffix += 1
        suggested = f"{interaction.op.name}_{suffix}"
        taken.add(suggested)
        advised_paths.add(path)
        advice.append(RenameAdvice(
            path=list(path),
            interaction=str(interaction),
            operation=str(interaction.op),
            suggested=suggested,
            issue=violation.detail,
            recommended=violation.detail is ViolationDetail.PARALLEL_ISSUE,
        ))
    return advice
