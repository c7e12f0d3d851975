"""
Trace Equivalence and Projection Conformance

Equivalence is exact equality of maximal trace sets, compared on the
rendered label text, between:
- two choreographies (strong or weak)
- two endpoint systems (sync or async, strong or weak)
- a choreography and its synchronous projection (strong)
"""

import logging
from typing import Iterable, Optional

from choreo.config import DEFAULT_TRACE_CAP
from choreo.models import ConformanceResult, SystemSemantics, TraceMode, VerifyResult
from choreo.services.endpoint import (
    EndpointSystem,
    LocalOut,
    format_sys_label,
    sys_strong_traces,
    sys_weak_traces,
)
from choreo.services.projection import project
from choreo.services.semantics import format_label, strong_traces, weak_traces
from choreo.services.syntax import Choreography

logger = logging.getLogger(__name__)


def chor_traces(c: Choreography, mode: TraceMode = TraceMode.STRONG,
                cap: int = DEFAULT_TRACE_CAP) -> frozenset:
    if mode is TraceMode.WEAK:
        return weak_traces(c, cap)
    return strong_traces(c, cap)


def sys_traces(s: EndpointSystem, semantics: SystemSemantics = SystemSemantics.SYNC,
               mode: TraceMode = TraceMode.STRONG, cap: int = DEFAULT_TRACE_CAP) -> frozenset:
    if mode is TraceMode.WEAK:
        return sys_weak_traces(s, semantics, cap)
    return sys_strong_traces(s, semantics, cap)


def canonical(traces: Iterable[tuple], formatter=format_sys_label) -> set[tuple[str, ...]]:
    """Traces as tuples of label text."""
    return {tuple(formatter(label) for label in trace) for trace in traces}


def chor_label_to_system(label) -> str:
    """Choreography label in system form: a->b:o becomes "o:a->b"."""
    return format_sys_label(label)


def strip_outputs(trace: tuple) -> tuple:
    """Drop the local-output labels of an asynchronous trace."""
    return tuple(label for label in trace if not isinstance(label, LocalOut))


def trace_witness(first: set, second: set) -> Optional[list[str]]:
    """Smallest trace present in exactly one of two canonical trace sets."""
    difference = first ^ second
    return list(min(difference)) if difference else None


def chor_equiv(a: Choreography, b: Choreography, mode: TraceMode = TraceMode.WEAK,
               cap: int = DEFAULT_TRACE_CAP) -> bool:
    """
    True iff a and b have the same trace sets.

    Raises:
        CapExceeded: If either enumeration exceeds the cap
    """
    return verify(a, b, mode, cap).equivalent


def verify(a: Choreography, b: Choreography, mode: TraceMode = TraceMode.WEAK,
           cap: int = DEFAULT_TRACE_CAP) -> VerifyResult:
    """
    Compare two choreographies and explain a difference.

    Returns:
        VerifyResult with a witness trace when the sets differ
    """
    first = canonical(chor_traces(a, mode, cap), format_label)
    second = canonical(chor_traces(b, mode, cap), format_label)
    witness = trace_witness(first, second)
    logger.info("Compared %d and %d %s traces", len(first), len(second), mode.value)
    return VerifyResult(
        equivalent=witness is None,
        mode=mode,
        witness=witness,
        first_traces=len(first),
        second_traces=len(second),
    )


def sys_equiv(first: EndpointSystem, second: EndpointSystem,
              semantics: SystemSemantics = SystemSemantics.SYNC,
              mode: TraceMode = TraceMode.STRONG,
              cap: int = DEFAULT_TRACE_CAP) -> bool:
    """True iff two systems have the same traces under the given semantics."""
    return sys_traces(first, semantics, mode, cap) == sys_traces(second, semantics, mode, cap)


def proj_conformance(c: Choreography, cap: int = DEFAULT_TRACE_CAP) -> ConformanceResult:
    """
    Compare the strong traces of c with the strong synchronous traces of
    its projection.

    Raises:
        CapExceeded: If either enumeration exceeds the cap
        EmptyChoreography: If c has no roles
    """
    expected = canonical(strong_traces(c, cap), chor_label_to_system)
    actual = canonical(sys_strong_traces(project(c), SystemSemantics.SYNC, cap))
    counterexample = trace_witness(expected, actual)
    if counterexample is not None:
        logger.info("Projection does not conform: %s", counterexample)
    return ConformanceResult(
        sync_strong_equal=counterexample is None,
        counterexample=counterexample,
        choreography_traces=len(expected),
        system_traces=len(actual),
    )
