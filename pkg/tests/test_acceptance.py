"""Corpus runs over seeded random choreographies. Deselected by default; run with `-m slow`."""

import logging
import random

import pytest

from choreo.errors import CapExceeded, NonConvergence
from choreo.models import SystemSemantics, TraceMode
from choreo.services.amend import FreshSupply, amend, expansion_law, is_normal_form, normal_form
from choreo.services.analysis import check_all
from choreo.services.endpoint import sys_weak_traces
from choreo.services.equivalence import chor_equiv, proj_conformance, strip_outputs
from choreo.services.projection import project
from choreo.services.semantics import strong_traces, weak_traces
from choreo.services.syntax import Par, render
from tests.generators import random_choreography, random_normal_form

pytestmark = pytest.mark.slow

logger = logging.getLogger(__name__)

SEED = 20240601
CORPUS_SIZE = 1000


@pytest.fixture(scope="module")
def amended_corpus():
    rng = random.Random(SEED)
    results, skipped, stuck = [], 0, []
    for _ in range(CORPUS_SIZE):
        c = random_choreography(rng)
        try:
            amended, _ = amend(c)
        except CapExceeded:
            skipped += 1
            continue
        except NonConvergence:
            stuck.append(render(c))
            continue
        results.append((c, amended))
    logger.info("Corpus: %d amended, %d over the cap, %d not converged", len(results), skipped, len(stuck))
    return results, skipped, stuck


def test_amend_converges_on_corpus(amended_corpus):
    results, skipped, stuck = amended_corpus
    attempted = CORPUS_SIZE - skipped
    assert len(stuck) <= attempted // 100, stuck[:5]
    assert len(results) >= attempted - len(stuck)


def test_amended_corpus_is_connected_and_equivalent(amended_corpus):
    results, _, _ = amended_corpus
    for original, amended in results:
        assert check_all(amended) == [], render(original)
        assert chor_equiv(original, amended, TraceMode.WEAK), render(original)


def test_amended_corpus_projects_faithfully(amended_corpus):
    results, _, _ = amended_corpus
    checked = 0
    for original, amended in results:
        try:
            result = proj_conformance(amended)
        except CapExceeded:
            continue
        checked += 1
        assert result.sync_strong_equal, (render(original), result.counterexample)
    assert checked > 0


def test_synchronous_traces_embed_in_asynchronous_ones(amended_corpus):
    results, _, _ = amended_corpus
    for original, amended in results[:100]:
        try:
            s = project(amended)
            synchronous = sys_weak_traces(s, SystemSemantics.SYNC)
            asynchronous = {strip_outputs(t) for t in sys_weak_traces(s, SystemSemantics.ASYNC)}
        except CapExceeded:
            continue
        assert synchronous <= asynchronous, render(original)


def test_expansion_law_on_random_normal_forms():
    rng = random.Random(SEED + 1)
    for _ in range(300):
        left, right = random_normal_form(rng), random_normal_form(rng)
        expanded = expansion_law(left, right)
        assert strong_traces(expanded) == strong_traces(Par(left, right))
        assert weak_traces(expanded) == weak_traces(Par(left, right))


def test_normal_form_on_random_choreographies():
    rng = random.Random(SEED + 2)
    for _ in range(300):
        c = random_choreography(rng, max_interactions=6)
        try:
            result = normal_form(c, FreshSupply.for_term(c))
        except CapExceeded:
            continue
        assert is_normal_form(result)
        assert weak_traces(result) == weak_traces(c), render(c)
