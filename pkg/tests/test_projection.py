import pytest
from hypothesis import given, settings

from choreo.errors import EmptyChoreography
from choreo.services.amend import amend
from choreo.services.endpoint import (
    Input,
    Output,
    ProcChoice,
    ProcOne,
    ProcPar,
    ProcSeq,
    ProcZero,
    render_process,
    render_system,
)
from choreo.services.projection import project, project_role
from choreo.services.syntax import Choice, Interaction, Operation, Par, Seq, parse
from tests.generators import choreographies


def has_actions(p) -> bool:
    if isinstance(p, (Input, Output)):
        return True
    if isinstance(p, (ProcSeq, ProcPar, ProcChoice)):
        return has_actions(p.left) or has_actions(p.right)
    return False


def test_sender_outputs_and_receiver_inputs():
    c = Interaction("a", "b", Operation("o"))
    assert project_role(c, "a") == Output(Operation("o"))
    assert project_role(c, "b") == Input(Operation("o"))
    assert project_role(c, "c") == ProcOne()


def test_intro_roles(intro):
    assert render_process(project_role(intro, "a")) == "!o1 ; 1"
    assert render_process(project_role(intro, "c")) == "1 ; !o2"
    assert project_role(intro, "d") == ProcSeq(ProcOne(), Input(Operation("o2")))


def test_runtime_terms_project():
    c = parse("a->b:o + 0", runtime=True)
    assert project_role(c, "a") == ProcChoice(Output(Operation("o")), ProcZero())


def test_project_whole_choreography(intro):
    s = project(intro)
    assert s.role_names == ["a", "b", "c", "d"]
    assert render_system(project(parse("a->b:o"))) == "[!o]@a || [?o]@b"


def test_private_operations_stay_private():
    s = project(parse("a->b:o*"))
    assert render_system(s) == "[!o*]@a || [?o*]@b"


def test_project_without_roles():
    with pytest.raises(EmptyChoreography):
        project(parse("1"))
    with pytest.raises(EmptyChoreography):
        project(parse("1 ; 1 | 1"))


def test_amended_two_buyers_includes_fresh_role(two_buyers):
    amended, _ = amend(two_buyers)
    s = project(amended)
    assert s.role_names == ["_e1", "b1", "b2", "s"]
    assert render_process(s.process_of("_e1")).count("?") == 2


@settings(max_examples=60, deadline=None)
@given(choreographies(max_leaves=6))
def test_projection_is_homomorphic(c):
    for role in ("a", "b", "c"):
        p = project_role(c, role)
        if isinstance(c, Seq):
            assert p == ProcSeq(project_role(c.left, role), project_role(c.right, role))
        elif isinstance(c, Par):
            assert p == ProcPar(project_role(c.left, role), project_role(c.right, role))
        elif isinstance(c, Choice):
            assert p == ProcChoice(project_role(c.left, role), project_role(c.right, role))


@settings(max_examples=60, deadline=None)
@given(choreographies(max_leaves=6))
def test_non_participants_project_to_inaction(c):
    assert not has_actions(project_role(c, "nobody"))
