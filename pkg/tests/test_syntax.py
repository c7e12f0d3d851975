import pytest
from hypothesis import given, settings

from choreo.errors import ChoreographyError, InvalidPathError, ParseError
from choreo.services.syntax import (
    Choice,
    Interaction,
    One,
    Operation,
    Par,
    Seq,
    Visibility,
    Zero,
    internal_paths,
    interactions,
    operations,
    parse,
    rename,
    render,
    replace_at,
    right_associate,
    roles,
    subterm_at,
)
from tests.generators import choreographies

AB = Interaction("a", "b", Operation("o1"))
CD = Interaction("c", "d", Operation("o2"))
EF = Interaction("e", "f", Operation("o3"))


def test_parse_interaction():
    assert parse("a->b:o1") == AB


def test_parse_private_operation():
    c = parse("a->b:o*")
    assert c.op == Operation("o", Visibility.PRIVATE)
    assert c.op.is_private
    assert str(c) == "a->b:o*"


def test_precedence_seq_over_par_over_choice():
    c = parse("a->b:o1 ; c->d:o2 | e->f:o3 + 1")
    assert c == Choice(Par(Seq(AB, CD), EF), One())


def test_operators_associate_to_the_right():
    assert parse("a->b:o1 ; c->d:o2 ; e->f:o3") == Seq(AB, Seq(CD, EF))
    assert parse("a->b:o1 + c->d:o2 + e->f:o3") == Choice(AB, Choice(CD, EF))


def test_parentheses_and_comments():
    text = """
    # left-nested on purpose
    (a->b:o1 ; c->d:o2) ; e->f:o3   # trailing comment
    """
    assert parse(text) == Seq(Seq(AB, CD), EF)


def test_leading_underscore_identifiers():
    c = parse("_e1->a:_f1*")
    assert c == Interaction("_e1", "a", Operation.private("_f1"))


def test_zero_only_in_runtime_syntax():
    with pytest.raises(ParseError):
        parse("a->b:o ; 0")
    assert parse("a->b:o ; 0", runtime=True) == Seq(Interaction("a", "b", Operation("o")), Zero())


def test_self_interaction_rejected():
    with pytest.raises(ParseError, match="itself"):
        parse("a->a:o")
    with pytest.raises(ChoreographyError):
        Interaction("a", "a", Operation("o"))


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse("a->b:o1 ;\n  ; c->d:o2")
    assert info.value.line == 2
    assert info.value.column == 3
    assert str(info.value).startswith("line 2, column 3")


@pytest.mark.parametrize("text", ["", "a->b", "a->b:o1 +", "(a->b:o1", "a->b:o1 c->d:o2", "a-b:o"])
def test_malformed_input(text):
    with pytest.raises(ParseError):
        parse(text)


def test_invalid_identifier_rejected():
    with pytest.raises(ChoreographyError):
        Operation("1x")


def test_render_parenthesizes_parallel():
    assert render(Par(AB, CD)) == "(a->b:o1 | c->d:o2)"
    assert render(Par(AB, Par(CD, EF))) == "(a->b:o1 | c->d:o2 | e->f:o3)"
    assert render(Seq(Par(AB, CD), EF)) == "(a->b:o1 | c->d:o2) ; e->f:o3"


def test_render_left_nesting_and_choice():
    assert render(Seq(Seq(AB, CD), EF)) == "(a->b:o1 ; c->d:o2) ; e->f:o3"
    assert render(Seq(AB, Choice(CD, One()))) == "a->b:o1 ; (c->d:o2 + 1)"
    assert render(Choice(Seq(AB, CD), One())) == "a->b:o1 ; c->d:o2 + 1"


@settings(max_examples=200, deadline=None)
@given(choreographies(runtime=True))
def test_render_then_parse_is_identity(c):
    assert parse(render(c), runtime=True) == c


def test_interactions_in_path_order():
    c = Seq(Par(AB, CD), EF)
    assert interactions(c) == [((0, 0), AB), ((0, 1), CD), ((1,), EF)]
    assert roles(c) == {"a", "b", "c", "d", "e", "f"}
    assert operations(c) == {Operation("o1"), Operation("o2"), Operation("o3")}


def test_subterm_and_replace():
    c = Seq(Par(AB, CD), EF)
    assert subterm_at(c, (0, 1)) == CD
    assert replace_at(c, (0, 1), One()) == Seq(Par(AB, One()), EF)
    assert replace_at(c, (), One()) == One()
    # original untouched
    assert subterm_at(c, (0, 1)) == CD


@pytest.mark.parametrize("path", [(1, 0), (2,), (0, 0, 0)])
def test_invalid_paths(path):
    c = Seq(Par(AB, CD), EF)
    with pytest.raises(InvalidPathError):
        subterm_at(c, path)
    with pytest.raises(InvalidPathError):
        replace_at(c, path, One())


def test_internal_paths_children_first():
    c = Choice(Seq(AB, CD), Seq(CD, AB))
    assert internal_paths(c) == [(0,), (1,), ()]


def test_right_associate():
    assert right_associate(Seq(Seq(AB, CD), EF)) == Seq(AB, Seq(CD, EF))
    assert right_associate(Choice(Par(Par(AB, CD), EF), One())) == Choice(Par(AB, Par(CD, EF)), One())


def test_rename_keeps_visibility():
    c = parse("a->b:o* ; b->c:p")
    renamed = rename(c, {"b": "x"}, {"o": "q"})
    assert render(renamed) == "a->x:q* ; x->c:p"
