"""
Amendment Engine - Rewrite Patterns and the Terminating Driver

This module turns an arbitrary choreography into a connected one with the
same weak traces, adding only interactions on fresh private operations:
- connect_sequence: route the end of `C'` to the start of `C''` through a fresh role
- connect_choice_cond1 / cond2: give a choice one deciding sender and equal roles
- normal_form / expansion_law: eliminate parallel composition where it
  causes a parallel causality issue
- fix_seq_causality / fix_choice_causality: add round-trips that order or
  separate two interactions on the same operation
- amend(): normalize, connect bottom-up, fix causality, verify, repeat

Every rewrite is recorded in an AmendReport that replays to the output.
"""

import logging
from typing import Iterable, Optional

from choreo.config import (
    DEFAULT_EXPANSION_BUDGET,
    DEFAULT_FRESH_PREFIX,
    FRESH_OPERATION_STEM,
    FRESH_ROLE_STEM,
    ONE_REPLACEMENT_ROLE_STEM,
)
from choreo.errors import (
    ExpansionBudgetExceeded,
    NoCommonSender,
    NonConvergence,
    PreconditionViolation,
)
from choreo.models import (
    AmendConfig,
    AmendPattern,
    AmendReport,
    AmendStep,
    Violation,
    ViolationDetail,
    ViolationKind,
)
from choreo.services.analysis import (
    check_all,
    check_causality,
    receivers,
    senders,
    trans_f,
    trans_i,
)
from choreo.services.syntax import (
    LEFT,
    RIGHT,
    Choice,
    Choreography,
    Interaction,
    One,
    Operation,
    Par,
    Path,
    Seq,
    Zero,
    choice_all,
    internal_paths,
    interactions,
    is_binary,
    operations,
    par_all,
    parse,
    render,
    replace_at,
    roles,
    seq_all,
    subterm_at,
)

logger = logging.getLogger(__name__)


# ============================================================================
# FRESH NAMES
# ============================================================================

class FreshSupply:
    """
    Deterministic source of fresh role and private-operation names.

    Names are <prefix>e1, <prefix>e2, ... for roles, <prefix>f1*, ... for
    operations and <prefix>r1, ... for the role pairs that stand in for a
    replaced `1`; any name in `reserved` is skipped.
    """

    def __init__(self, reserved: Iterable[str] = (), prefix: str = DEFAULT_FRESH_PREFIX):
        self.prefix = prefix
        self.reserved = set(reserved)
        self.role_counter = 0
        self.op_counter = 0
        self.placeholder_counter = 0
        self.emitted_roles: list[str] = []
        self.emitted_operations: list[str] = []

    @classmethod
    def for_term(cls, c: Choreography, prefix: str = DEFAULT_FRESH_PREFIX) -> "FreshSupply":
        """Supply that avoids every role and operation name of c."""
        return cls(set(roles(c)) | {op.name for op in operations(c)}, prefix)

    def role(self) -> str:
        self.role_counter, name = self._next(FRESH_ROLE_STEM, self.role_counter)
        self.emitted_roles.append(name)
        return name

    def operation(self) -> Operation:
        self.op_counter, name = self._next(FRESH_OPERATION_STEM, self.op_counter)
        self.emitted_operations.append(name)
        return Operation.private(name)

    def placeholder_roles(self) -> tuple[str, str]:
        self.placeholder_counter, first = self._next(ONE_REPLACEMENT_ROLE_STEM, self.placeholder_counter)
        self.placeholder_counter, second = self._next(ONE_REPLACEMENT_ROLE_STEM, self.placeholder_counter)
        self.emitted_roles.extend((first, second))
        return first, second

    def _next(self, stem: str, counter: int) -> tuple[int, str]:
        while True:
            counter += 1
            name = f"{self.prefix}{stem}{counter}"
            if name not in self.reserved:
                self.reserved.add(name)
                return counter, name


# ============================================================================
# CONNECTEDNESS PATTERNS
# ============================================================================

def connect_sequence(c: Choreography, at: Path, fresh: FreshSupply) -> Choreography:
    """
    Connect the `;` at `at` through one fresh role e.

    Every final interaction a->b:o of the left part becomes
    a->b:o ; b->e:f*, every initial interaction c->d:o of the right part
    becomes e->c:g* ; c->d:o, each with its own fresh operation.

    Raises:
        PreconditionViolation: If the node is not a disconnected `;`
    """
    at = tuple(at)
    node = subterm_at(c, at)
    if not isinstance(node, Seq) or _seq_connected(node):
        raise PreconditionViolation(f"No disconnected sequence at {list(at)}")

    hub = fresh.role()
    replacements = {}
    for item in sorted(trans_f(node.left, at + (LEFT,))):
        last = item.interaction
        replacements[item.path] = Seq(last, Interaction(last.receiver, hub, fresh.operation()))
    for item in sorted(trans_i(node.right, at + (RIGHT,))):
        first = item.interaction
        replacements[item.path] = Seq(Interaction(hub, first.sender, fresh.operation()), first)
    logger.debug("Connected sequence at %s through %s", list(at), hub)
    return _replace_leaves(c, replacements)


def connect_choice_cond1(c: Choreography, at: Path, fresh: FreshSupply) -> Choreography:
    """
    Give the choice at `at` a single deciding role.

    A fresh role e prefixes every initial interaction a->b:o of both
    branches with e->a:f*.

    Raises:
        PreconditionViolation: If the initial interactions already share one sender
    """
    at = tuple(at)
    node = subterm_at(c, at)
    if not isinstance(node, Choice) or len(senders(trans_i(node))) < 2:
        raise PreconditionViolation(f"No choice without a common initial sender at {list(at)}")

    decider = fresh.role()
    replacements = {}
    for item in sorted(trans_i(node, at)):
        first = item.interaction
        replacements[item.path] = Seq(Interaction(decider, first.sender, fresh.operation()), first)
    return _replace_leaves(c, replacements)


def connect_choice_cond2(c: Choreography, at: Path, fresh: FreshSupply) -> Choreography:
    """
    Equalize the roles of the two branches of the choice at `at`.

    Each role missing from a branch is told about the choice by the
    common initial sender e, in parallel with that branch. The left
    branch is completed first. Equal role sets leave c unchanged.

    Raises:
        PreconditionViolation: If `at` is not a choice, or its initial
            interactions do not share one sender
        NoCommonSender: If the choice has no initial interaction at all
    """
    at = tuple(at)
    node = subterm_at(c, at)
    if not isinstance(node, Choice):
        raise PreconditionViolation(f"No choice at {list(at)}")
    left_roles, right_roles = roles(node.left), roles(node.right)
    if left_roles == right_roles:
        return c

    initial_senders = senders(trans_i(node))
    if not initial_senders:
        raise NoCommonSender(f"Choice at {list(at)} has no initial interaction to decide it")
    if len(initial_senders) > 1:
        raise PreconditionViolation(
            f"Choice at {list(at)} has several initial senders {sorted(initial_senders)}"
        )
    (decider,) = initial_senders

    left = _notify_in_parallel(node.left, decider, right_roles - left_roles - {decider}, fresh)
    right = _notify_in_parallel(node.right, decider, left_roles - right_roles - {decider}, fresh)
    return replace_at(c, at, Choice(left, right))


def _notify_in_parallel(branch: Choreography, decider: str, missing: set, fresh: FreshSupply) -> Choreography:
    if not missing:
        return branch
    notices = [Interaction(decider, role, fresh.operation()) for role in sorted(missing)]
    return Par(branch, par_all(*notices))


def _seq_connected(node: Seq) -> bool:
    last_receivers = receivers(trans_f(node.left))
    first_senders = senders(trans_i(node.right))
    if not last_receivers or not first_senders:
        return True
    return len(last_receivers) == 1 and last_receivers == first_senders


def _cond1_holds(node: Choice) -> bool:
    left_senders = senders(trans_i(node.left))
    right_senders = senders(trans_i(node.right))
    if not left_senders or not right_senders:
        return True
    return len(left_senders) == 1 and left_senders == right_senders


def _replace_leaves(c: Choreography, replacements: dict) -> Choreography:
    # Leaves are disjoint, so replacing one never moves another
    for path, term in replacements.items():
        c = replace_at(c, path, term)
    return c


# ============================================================================
# NORMAL FORM AND EXPANSION LAW
# ============================================================================

# A normal form is a sum of (interaction, continuation) branches. The
# continuation None stands for successful termination; the empty sum is 0.

class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, nodes: int) -> None:
        self.used += nodes
        if self.used > self.limit:
            raise ExpansionBudgetExceeded(self.limit)


def normal_form(c: Choreography, fresh: FreshSupply,
                budget: int = DEFAULT_EXPANSION_BUDGET) -> Choreography:
    """
    Weak-trace-equivalent normal form of c.

    `1` becomes a fresh private interaction between two fresh roles,
    sequence distributes over sums, and parallel composition is
    interleaved away.

    Args:
        c: Choreography
        fresh: Name supply
        budget: Maximum number of nodes to create

    Returns:
        A term accepted by is_normal_form

    Raises:
        ExpansionBudgetExceeded: If the expansion outgrows the budget
    """
    tracker = _Budget(budget)
    result = _to_term(_normalize(c, fresh, tracker))
    logger.info("Normal form built with %d nodes", tracker.used)
    return result


def _normalize(c: Choreography, fresh: FreshSupply, budget: _Budget) -> tuple:
    if isinstance(c, Interaction):
        budget.spend(1)
        return ((c, None),)
    if isinstance(c, One):
        budget.spend(1)
        sender, receiver = fresh.placeholder_roles()
        return ((Interaction(sender, receiver, fresh.operation()), None),)
    if isinstance(c, Zero):
        return ()
    if isinstance(c, Choice):
        return _normalize(c.left, fresh, budget) + _normalize(c.right, fresh, budget)
    if isinstance(c, Seq):
        return _then(_normalize(c.left, fresh, budget), c.right, fresh, budget)
    if isinstance(c, Par):
        return _expand(_normalize(c.left, fresh, budget), _normalize(c.right, fresh, budget), budget)
    raise TypeError(f"Not a choreography: {c!r}")


def _then(summands: tuple, tail: Choreography, fresh: FreshSupply, budget: _Budget) -> tuple:
    # Each terminating branch gets its own copy of the tail, with its own fresh names
    branches = []
    for head, rest in summands:
        if rest is None:
            branches.append((head, _normalize(tail, fresh, budget)))
        else:
            branches.append((head, _then(rest, tail, fresh, budget)))
    return tuple(branches)


def _expand(left: tuple, right: tuple, budget: _Budget) -> tuple:
    budget.spend(3 * (len(left) + len(right)))
    branches = [(head, _merge(rest, right, budget)) for head, rest in left]
    branches.extend((head, _merge(left, rest, budget)) for head, rest in right)
    return tuple(branches)


def _merge(first: Optional[tuple], second: Optional[tuple], budget: _Budget) -> Optional[tuple]:
    if first is None:
        return second
    if second is None:
        return first
    return _expand(first, second, budget)


def _to_term(summands: tuple) -> Choreography:
    branches = [head if rest is None else Seq(head, _to_term(rest)) for head, rest in summands]
    return choice_all(*branches)


def is_normal_form(c: Choreography) -> bool:
    """True iff c is a (possibly empty) sum of interaction-prefixed normal forms."""
    return all(_is_prefixed(summand) for summand in _summands(c))


def _summands(c: Choreography) -> list:
    if isinstance(c, Choice):
        return _summands(c.left) + _summands(c.right)
    if isinstance(c, Zero):
        return []
    return [c]


def _is_prefixed(c: Choreography) -> bool:
    if isinstance(c, Interaction):
        return True
    return isinstance(c, Seq) and isinstance(c.left, Interaction) and is_normal_form(c.right)


def expansion_law(left: Choreography, right: Choreography) -> Choreography:
    """
    One application of the expansion law to `left | right`.

    Every prefix of either side is hoisted, its remainder kept in
    parallel with the untouched other side; a bare interaction has an
    empty remainder, so it is followed by the other side alone.

    Raises:
        PreconditionViolation: If an operand is not in normal form
    """
    if not (is_normal_form(left) and is_normal_form(right)):
        raise PreconditionViolation("Expansion law needs both operands in normal form")
    branches = []
    for head, rest in _prefixes(left):
        branches.append(Seq(head, right if rest is None else Par(rest, right)))
    for head, rest in _prefixes(right):
        branches.append(Seq(head, left if rest is None else Par(left, rest)))
    return choice_all(*branches)


def _prefixes(c: Choreography) -> list[tuple[Interaction, Optional[Choreography]]]:
    return [(s, None) if isinstance(s, Interaction) else (s.left, s.right) for s in _summands(c)]


# ============================================================================
# CAUSALITY FIXES
# ============================================================================

def fix_seq_causality(c: Choreography, violation: Violation, fresh: FreshSupply) -> Choreography:
    """
    Order two same-operation interactions separated by `;`.

    The earlier interaction a->b:o is followed by the round-trip
    b->d:f* ; d->b:g*, d being the receiver of the later one.

    Raises:
        PreconditionViolation: If the violation is not a sequential issue
            of the current term whose later receive is endangered
    """
    return _fix_sequential(c, violation, fresh)[0]


def fix_choice_causality(c: Choreography, violation: Violation, fresh: FreshSupply) -> Choreography:
    """
    Separate two same-operation interactions in opposite branches.

    The interaction c->d:o whose receive is endangered is prefixed with
    the round-trip c->d:f* ; d->c:g*.

    Raises:
        PreconditionViolation: If the violation is not a choice issue of
            the current term
    """
    return _fix_choice(c, violation, fresh)[0]


def _fix_sequential(c: Choreography, violation: Violation, fresh: FreshSupply) -> tuple[Choreography, Path]:
    ancestor, first_path, second_path = _located_pair(c, violation, ViolationDetail.SEQUENTIAL_ISSUE, Seq)
    if first_path[len(ancestor)] == LEFT:
        earlier_path, later_path = first_path, second_path
    else:
        earlier_path, later_path = second_path, first_path
    if list(later_path) not in violation.endangered:
        raise PreconditionViolation(
            f"Sequential issue at {list(ancestor)} endangers the earlier interaction; "
            "the enclosing term is not connected for sequence"
        )
    earlier = subterm_at(c, earlier_path)
    later = subterm_at(c, later_path)
    if earlier.receiver == later.receiver:
        raise PreconditionViolation(f"Sequential issue at {list(ancestor)} needs no round-trip")
    round_trip = seq_all(
        earlier,
        Interaction(earlier.receiver, later.receiver, fresh.operation()),
        Interaction(later.receiver, earlier.receiver, fresh.operation()),
    )
    return replace_at(c, earlier_path, round_trip), earlier_path


def _fix_choice(c: Choreography, violation: Violation, fresh: FreshSupply) -> tuple[Choreography, Path]:
    _located_pair(c, violation, ViolationDetail.CHOICE_ISSUE, Choice)
    if not violation.endangered:
        raise PreconditionViolation("Choice issue without an endangered receive")
    target = tuple(violation.endangered[0])
    endangered = subterm_at(c, target)
    round_trip = seq_all(
        Interaction(endangered.sender, endangered.receiver, fresh.operation()),
        Interaction(endangered.receiver, endangered.sender, fresh.operation()),
        endangered,
    )
    return replace_at(c, target, round_trip), target


def _located_pair(c: Choreography, violation: Violation, detail: ViolationDetail, node_type: type):
    if violation.kind is not ViolationKind.CAUSALITY_UNSAFE or violation.detail is not detail:
        raise PreconditionViolation(f"Expected a {detail.value}, got {violation.kind.value}/{violation.detail}")
    ancestor = tuple(violation.path)
    if not isinstance(subterm_at(c, ancestor), node_type) or len(violation.witness_paths) != 2:
        raise PreconditionViolation(f"Violation does not match the term at {list(ancestor)}")
    first_path, second_path = (tuple(path) for path in violation.witness_paths)
    for path, text in zip((first_path, second_path), violation.witnesses):
        leaf = subterm_at(c, path)
        if not isinstance(leaf, Interaction) or str(leaf) != text:
            raise PreconditionViolation(f"Violation does not match the term at {list(path)}")
    return ancestor, first_path, second_path


# ============================================================================
# DRIVER
# ============================================================================

def amend(c: Choreography, config: Optional[AmendConfig] = None) -> tuple[Choreography, AmendReport]:
    """
    Amend c into a connected, weak-trace-equivalent choreography.

    Process (per round):
    1. Normalize subterms with parallel causality issues, outermost first
    2. Bottom-up, repair choices (Cond1, then Cond2) and sequences
    3. Fix sequential, then choice causality issues one at a time
    4. Verify; start another round if violations remain

    Args:
        c: User-syntax choreography (no 0)
        config: Driver settings; defaults from choreo.config

    Returns:
        The amended term and the report that replays to it

    Raises:
        PreconditionViolation: If c contains 0
        ExpansionBudgetExceeded: If a normalization outgrows its budget
        NonConvergence: If violations remain after config.max_rounds rounds
    """
    config = config or AmendConfig()
    if _contains_zero(c):
        raise PreconditionViolation("Amendment expects user syntax; the term contains 0")

    residual = check_all(c)
    if not residual:
        return c, AmendReport()

    fresh = FreshSupply.for_term(c, config.fresh_prefix)
    steps: list[AmendStep] = []
    current = c
    for round_number in range(1, config.max_rounds + 1):
        logger.info("Amend round %d: %d violations", round_number, len(residual))
        current = _normalize_parallel_issues(current, fresh, config.expansion_budget, steps)
        current = _connect_pass(current, fresh, steps)
        current = _fix_causality_issues(current, fresh, steps)
        residual = check_all(current)
        if not residual:
            fresh_ops = set(fresh.emitted_operations)
            report = AmendReport(
                steps=steps,
                rounds=round_number,
                added_interactions=sum(1 for _, i in interactions(current) if i.op.name in fresh_ops),
                fresh_roles=len(set(fresh.emitted_roles) & roles(current)),
            )
            logger.info("Amendment finished after %d rounds with %d steps", round_number, len(steps))
            return current, report

    raise NonConvergence(config.max_rounds, residual)


def replay(c: Choreography, report: AmendReport) -> Choreography:
    """
    Re-apply the steps of a report to c.

    Raises:
        PreconditionViolation: If a step's `before` text does not match
    """
    current = c
    for index, step in enumerate(report.steps):
        at = tuple(step.at)
        found = render(subterm_at(current, at))
        if found != step.before:
            raise PreconditionViolation(f"Step {index} expected {step.before!r} at {step.at}, found {found!r}")
        current = replace_at(current, at, parse(step.after, runtime=True))
    return current


def _normalize_parallel_issues(current: Choreography, fresh: FreshSupply,
                               budget: int, steps: list) -> Choreography:
    while True:
        issues = [v for v in check_causality(current) if v.detail is ViolationDetail.PARALLEL_ISSUE]
        if not issues:
            return current
        # Outermost ancestor first; its normal form has no parallel node left below it
        target = min(issues, key=lambda v: (len(v.path), v.path))
        at = tuple(target.path)
        logger.info("Normalizing parallel subterm at %s", list(at))
        expanded = normal_form(subterm_at(current, at), fresh, budget)
        current = _record(steps, AmendPattern.NORMALIZE, current, at, replace_at(current, at, expanded))


def _connect_pass(current: Choreography, fresh: FreshSupply, steps: list) -> Choreography:
    # Rewrites only touch the subtree of the node being repaired, so the
    # remaining post-order paths stay valid
    for path in internal_paths(current):
        node = subterm_at(current, path)
        if isinstance(node, Choice):
            roles_differ = roles(node.left) != roles(node.right)
            if len(senders(trans_i(node))) > 1 and (roles_differ or not _cond1_holds(node)):
                updated = connect_choice_cond1(current, path, fresh)
                current = _record(steps, AmendPattern.CONNECT_CHOICE_COND1, current, path, updated)
                node = subterm_at(current, path)
            if roles(node.left) != roles(node.right):
                updated = connect_choice_cond2(current, path, fresh)
                current = _record(steps, AmendPattern.CONNECT_CHOICE_COND2, current, path, updated)
        elif isinstance(node, Seq) and not _seq_connected(node):
            updated = connect_sequence(current, path, fresh)
            current = _record(steps, AmendPattern.CONNECT_SEQ, current, path, updated)
    return current


def _fix_causality_issues(current: Choreography, fresh: FreshSupply, steps: list) -> Choreography:
    deferred = set()
    attempts = 4 * len(interactions(current)) + 16
    for _ in range(attempts):
        issues = [
            v for v in check_causality(current)
            if v.detail in (ViolationDetail.SEQUENTIAL_ISSUE, ViolationDetail.CHOICE_ISSUE)
            and _issue_key(v) not in deferred
        ]
        if not issues:
            return current
        issue = min(issues, key=_fix_order)
        try:
            if issue.detail is ViolationDetail.SEQUENTIAL_ISSUE:
                updated, at = _fix_sequential(current, issue, fresh)
                pattern = AmendPattern.FIX_SEQ_CAUSALITY
            else:
                updated, at = _fix_choice(current, issue, fresh)
                pattern = AmendPattern.FIX_CHOICE_CAUSALITY
        except PreconditionViolation as exc:
            logger.info("Deferring causality issue at %s to the next round: %s", issue.path, exc)
            deferred.add(_issue_key(issue))
            continue
        current = _record(steps, pattern, current, at, updated)
    return current


def _fix_order(violation: Violation):
    rank = 0 if violation.detail is ViolationDetail.SEQUENTIAL_ISSUE else 1
    return rank, violation.path, violation.witness_paths


def _issue_key(violation: Violation) -> tuple:
    return tuple(violation.path), tuple(tuple(path) for path in violation.witness_paths)


def _record(steps: list, pattern: AmendPattern, before: Choreography,
            at: Path, after: Choreography) -> Choreography:
    steps.append(AmendStep(
        pattern=pattern,
        at=list(at),
        before=render(subterm_at(before, at)),
        after=render(subterm_at(after, at)),
    ))
    logger.debug("%s at %s", pattern.value, list(at))
    return after


def _contains_zero(c: Choreography) -> bool:
    if isinstance(c, Zero):
        return True
    return is_binary(c) and (_contains_zero(c.left) or _contains_zero(c.right))
