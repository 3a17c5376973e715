from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from corpus import SYNTAX_ERRORS, builder_corpus
from qct.ct import GeomFactor, SeriesExpr, constant_term
from qct.dsl import CTNode, ElaborationError, ParseError, Poch, ct_variables, elaborate, evaluate, parse
from qct.multipoly import Z0, Monomial, MultiLaurent, free, z
from qct.qblocks import LParams, MorrisParams, build_L, build_morris_lhs, zs

MORRIS = """
CT[z0, z[1,*]]
  prod(i=1..k; poch(z0/z[1,i], a) * poch(q*z[1,i]/z0, b))
  * prod(i=1..k; prod(j=i+1..k; poch(z[1,i]/z[1,j], c) * poch(q*z[1,j]/z[1,i], c)))
"""

L_TEXT = """
CT[z[1,*]]
  prod(i=1..k1; poch(z0/z[1,i], a) * poch(q*z[1,i]/z0, b))
  * prod(i=1..k1; prod(j=i+1..k1; poch(z[1,i]/z[1,j], c) * poch(q*z[1,j]/z[1,i], c)))
  / prod(i=1..k1; prod(j=1..k2; poch(z[1,i]/z[2,j], c)))
"""


CORPUS = builder_corpus()


@pytest.mark.parametrize("idx", range(len(CORPUS)))
def test_round_trip_builder_corpus(idx):
    e = CORPUS[idx]
    assert elaborate(parse(e.to_dsl())) == e


def test_parse_examples():
    node = parse("poch(z0/z[1,1], 2)")
    assert isinstance(node, Poch) and node.n.value == 2
    node = parse("CT[z[1,*]] prod(i=1..2; poch(z0/z[1,i],1))")
    assert isinstance(node, CTNode)
    assert ct_variables(node) == [z(1, 1), z(1, 2)]


@pytest.mark.parametrize("k, a, b, c", [(1, 1, 1, 1), (2, 1, 0, 2), (3, 2, 1, 1)])
def test_morris_text_matches_builder(k, a, b, c):
    ast = parse(MORRIS)
    binds = {"k": k, "a": a, "b": b, "c": c}
    assert elaborate(ast, binds) == build_morris_lhs(MorrisParams(k, a, b, c))
    got = evaluate(ast, binds)
    assert got.denom == () and got.numerator == constant_term(build_morris_lhs(MorrisParams(k, a, b, c)),
                                                             [Z0] + zs(1, k))


@pytest.mark.parametrize("k1", range(0, 3))
@pytest.mark.parametrize("k2", range(0, 3))
def test_L_text_matches_builder(k1, k2):
    binds = {"k1": k1, "k2": k2, "a": 1, "b": 1, "c": 2}
    assert elaborate(parse(L_TEXT), binds) == build_L(LParams(k1, k2, 1, 1, 2))


def test_evaluate_L_example():
    got = evaluate(parse(L_TEXT), {"k1": 1, "k2": 1, "a": 1, "b": 0, "c": 1})
    assert got.numerator == MultiLaurent.one() - MultiLaurent.var(Z0) * MultiLaurent.var(z(2, 1), -1)


def test_free_identifiers_and_bindings():
    e = elaborate(parse("y1 * w + n"), {"n": 3})
    assert e.numerator == MultiLaurent.var(free("y", 1)) * MultiLaurent.var(free("w")) + 3
    e = elaborate(parse("q^(n-1) * x^-2"), {"n": 3})
    assert e.numerator == MultiLaurent.q(2) * MultiLaurent.var(free("x"), -2)


def test_division_rules():
    e = elaborate(parse("(1 - q^2) / poch(q, 1)"))
    assert e.numerator == 1 + MultiLaurent.q()
    assert elaborate(parse("z0 / (2*z0)")).numerator * 2 == MultiLaurent.one()
    with pytest.raises(ElaborationError, match="only allowed"):
        elaborate(parse("1 / (1 - z0)"))
    with pytest.raises(ElaborationError, match="smallness"):
        elaborate(parse("1 / poch(z[2,1]/z[1,1], 1)"))
    with pytest.raises(ElaborationError, match="division by zero"):
        elaborate(parse("1 / poch(q^-1, 2)"))
    with pytest.raises(ElaborationError, match="share"):
        elaborate(parse("1 + 1/poch(z[1,1]/z[2,1], 1)"))


@pytest.mark.parametrize("text, msg", [
    ("z[k,1]", "unbound"),
    ("poch(z0, n)", "unbound"),
    ("z[0,1]", "positive"),
    ("poch(1 + z0, 2)", "monomial"),
])
def test_elaboration_errors(text, msg):
    with pytest.raises(ElaborationError, match=msg) as err:
        elaborate(parse(text))
    assert err.value.line == 1 and err.value.col >= 1


@pytest.mark.parametrize("text, line, col, expected", SYNTAX_ERRORS)
def test_syntax_errors_are_positioned(text, line, col, expected):
    with pytest.raises(ParseError) as err:
        parse(text)
    e = err.value
    assert (e.line, e.col) == (line, col)
    assert expected <= set(e.expected)
    assert f"line {line}, column {col}" in str(e)


def test_end_of_input_diagnostic():
    with pytest.raises(ParseError) as err:
        parse("poch(z0/z[1,1]")
    assert "end of input" in str(err.value)
    assert "','" in str(err.value)


def test_comments_and_whitespace():
    assert elaborate(parse("# a comment\n 1 +\n q  # trailing\n")).numerator == 1 + MultiLaurent.q()


@given(st.integers(0, 10_000))
def test_round_trip_random_series(seed):
    rng = random.Random(seed)
    vs = [Z0, z(1, 1), z(1, 2), z(2, 1), free("x"), free("y", 2)]
    num = MultiLaurent.zero()
    for _ in range(rng.randint(0, 4)):
        exps = {v: rng.randint(-2, 2) for v in rng.sample(vs, 2)}
        num = num + MultiLaurent.mono(Monomial.of(exps, rng.randint(-2, 2)), rng.choice([-3, -1, 1, 2]))
    if rng.random() < 0.3:
        num = num.divide_den([rng.choice([1, 2, -1])])
    factors = [GeomFactor(rng.randint(-1, 2), z(1, 1), z(2, 1)) for _ in range(rng.randint(0, 3))]
    e = SeriesExpr(num, factors)
    assert elaborate(parse(e.to_dsl())) == e
