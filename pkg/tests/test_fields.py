import numpy as np
import pytest
from hypothesis import given, strategies as st

from heisenberg_cr.fields import (BinOp, Call, Field, FieldDomain, FieldDomainError, Ident, Neg,
                                  Num, ParseError, Pow, UnknownIdentifierError, builtin_corpus,
                                  eval_field, parse_field, print_expr, probe_lattice,
                                  PROBE_MAX_POINTS)
from heisenberg_cr.core_group import Point, gauge_norm
from heisenberg_cr.jets import sublaplacian


def test_parse_constant():
    assert parse_field("1") == Num(1.0)
    j = eval_field(parse_field("5"), Point([0.2], [0.3], 0.4))
    assert j.val == 5.0 and not j.grad.any() and not j.hess.any()


def test_precedence_and_associativity():
    assert parse_field("-x1^2") == Neg(Pow(Ident("x1"), Num(2.0)))
    assert parse_field("2^3^2") == Pow(Num(2.0), Pow(Num(3.0), Num(2.0)))
    assert parse_field("1 - 2 - 3") == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))
    assert parse_field("1 + 2*t") == BinOp("+", Num(1.0), BinOp("*", Num(2.0), Ident("t")))
    v = eval_field(parse_field("2^3^2"), Point([0.0], [0.0], 0.0)).val
    assert v == 512.0


def test_builtins_with_and_without_parentheses():
    assert parse_field("znorm2") == parse_field("znorm2()") == Call("znorm2", ())
    assert parse_field("exp(0.1*znorm2)") == Call(
        "exp", (BinOp("*", Num(0.1), Call("znorm2", ())),))


def test_t_field_jet():
    p = Point([0.5], [0.5], -1.5)
    j = eval_field(parse_field("t"), p)
    assert j.val == -1.5 and np.array_equal(j.grad, [0, 0, 1]) and not j.hess.any()


def test_znorm2_jet():
    j = eval_field(parse_field("znorm2"), Point([1.0], [0.0], 0.0))
    assert j.val == 1.0
    assert np.array_equal(j.grad, [2, 0, 0])
    assert np.array_equal(j.hess, np.diag([2.0, 2.0, 0.0]))


def test_gauge_power_expression():
    # gnorm4^(-(Q-2)/4) = |xi|^-(Q-2)
    for n in (1, 2):
        e = parse_field("gnorm4^(-0.25*(QM2))", n)
        p = Point(np.full(n, 0.4), np.full(n, -0.7), 1.1)
        assert eval_field(e, p).val == pytest.approx(gauge_norm(p) ** -(2 * n), rel=1e-14)


def test_bound_constants_follow_dimension():
    p = Point([0.0, 0.0], [0.0, 0.0], 0.0)
    assert eval_field(parse_field("Q + 10*QM2 + 100*n", 2), p).val == 6 + 40 + 200


@pytest.mark.parametrize("text, offset", [("1 +", 3), ("exp(x1", 6), ("2 * * 3", 4),
                                          ("(1))", 3), ("1 $ 2", 2), ("", 0)])
def test_parse_error_offsets(text, offset):
    with pytest.raises(ParseError) as info:
        parse_field(text)
    assert info.value.offset == offset
    assert f"byte {offset}" in str(info.value)


@pytest.mark.parametrize("text, name", [("x", "x"), ("x2 + 1", "x2"), ("z1", "z1"),
                                        ("sin(t)", "sin")])
def test_unknown_identifiers(text, name):
    with pytest.raises(UnknownIdentifierError) as info:
        parse_field(text, 1)
    assert info.value.name == name


def test_exponent_must_be_constant():
    with pytest.raises(ParseError):
        parse_field("x1^t")
    with pytest.raises(ParseError):
        parse_field("2^znorm2()")
    parse_field("x1^(QM2/2 + n)")


def test_domain_error_reports_subexpression():
    p = Point([0.0], [0.0], -1.0)
    with pytest.raises(FieldDomainError) as info:
        eval_field(parse_field("1 + log(t)"), p)
    assert info.value.op == "log"
    assert info.value.position == 4
    assert "log(t)" in info.value.subexpr


def test_division_by_zero_is_domain_error():
    with pytest.raises(FieldDomainError):
        eval_field(parse_field("1/x1"), Point([0.0], [1.0], 0.0))


_atoms = st.sampled_from(["x1", "y1", "t", "2", "0.5", "znorm2()", "Q"])


@st.composite
def expr_text(draw, depth=3):
    if depth == 0:
        return draw(_atoms)
    kind = draw(st.integers(0, 4))
    if kind == 0:
        return draw(_atoms)
    if kind == 1:
        return f"-({draw(expr_text(depth=depth - 1))})"
    if kind == 2:
        op = draw(st.sampled_from("+-*/"))
        return f"({draw(expr_text(depth=depth - 1))}) {op} ({draw(expr_text(depth=depth - 1))})"
    if kind == 3:
        return f"exp({draw(expr_text(depth=depth - 1))})"
    return f"({draw(expr_text(depth=depth - 1))})^{draw(st.sampled_from(['2', '3', 'n']))}"


@given(expr_text())
def test_print_parse_round_trip(text):
    e = parse_field(text)
    assert parse_field(print_expr(e)) == e


def test_vectorized_values_match_points(rng):
    f = Field.from_expr("exp(0.3*x1 - y1*t) + znorm2()", 1)
    pts = rng.uniform(-1, 1, (40, 3))
    vals = f.values(pts)
    for row, v in zip(pts, vals):
        assert v == pytest.approx(f.value(Point.from_array(row)), rel=1e-15)
    assert np.array_equal(Field.constant(2.0, 1).values(pts), np.full(40, 2.0))


def test_field_dimension_mismatch():
    with pytest.raises(ValueError):
        Field.from_expr("x1", 1).jet(Point([0, 0], [0, 0], 0))


# -- corpus ------------------------------------------------------------------

def test_corpus_families(n):
    c = builtin_corpus(n)
    assert len(c) == 10
    assert {e.family for e in c} == set("abcdef")
    assert len(c.by_family("b")) == 3 and len(c.by_family("f")) == 2
    assert c.by_name("jerison_lee").text == "((1 + znorm2())^2 + t^2)^(-QM2/4)"
    with pytest.raises(KeyError):
        c.by_name("nope")


def test_corpus_is_deterministic():
    builtin_corpus.cache_clear()
    a = [e.text for e in builtin_corpus(2, seed=3)]
    builtin_corpus.cache_clear()
    b = [e.text for e in builtin_corpus(2, seed=3)]
    assert a == b
    assert a != [e.text for e in builtin_corpus(2, seed=4)]


def test_corpus_positive_on_samples(n, rng):
    for e in builtin_corpus(n):
        pts = np.array([p.as_array() for p in e.domain.sample(n, 1000, rng)])
        assert np.all(e.field.values(pts) > 0), e.name


def test_gauge_power_member_is_harmonic(rng):
    e = builtin_corpus(1).by_name("gauge_power")
    for p in FieldDomain(min_gauge=0.1).sample(1, 200, rng):
        h = e.field.horizontal(p)
        assert abs(sublaplacian(h)) <= 1e-9 * gauge_norm(p) ** -p.Q


def test_probe_lattice_size():
    assert probe_lattice(1).shape == (17 ** 3, 3)
    pts = probe_lattice(2)
    assert pts.shape[0] <= PROBE_MAX_POINTS and pts.shape[1] == 5
    holed = probe_lattice(1, FieldDomain(min_gauge=0.5))
    assert np.all((np.sum(holed[:, :2] ** 2, 1) ** 2 + holed[:, 2] ** 2) ** 0.25 >= 0.5)
