from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qct import theorems
from qct.coeff import QPoly
from qct.multipoly import Z0, MultiLaurent, free, z
from qct.qblocks import ChainParams, morris_M
from qct.symfun import Alphabet, Partition, h_eval, sf_e, sf_h, sf_p
from qct.theorems import (
    Insertion,
    _prefactor,
    g_insertion,
    verify_lemma_bc,
    verify_lemma_bc2,
    verify_prop_g_equiv,
    verify_prop_h,
    verify_prop_h_equiv,
    verify_theorem_chain_plain,
    verify_thm2,
    verify_thm2_at_z0_1,
    verify_thm3,
    verify_thm_chain,
    verify_thm_g_general,
)

ONE = MultiLaurent.one()
Q = MultiLaurent.q()
x, y = free("x"), free("y")


def V(v, e=1):
    return MultiLaurent.var(v, e)


def p_ins(f, size, X="", Y=None):
    Xa = theorems.alphabet_named(X)
    Ya = None if Y is None else theorems.alphabet_named(Y)
    return Insertion(f, Partition((size,)), Xa, Ya)


def test_lemma_bc_examples():
    rep = verify_lemma_bc(1, 1, 1, 1)
    assert rep.passed
    lhs, rhs = rep.sides
    assert lhs == rhs == ONE - V(Z0) * V(z(2, 1), -1)
    rep = verify_lemma_bc(1, 1, 0, 2)
    assert rep.passed and rep.sides[0] == ONE


@pytest.mark.parametrize("k1, a, c", [(1, 1, 1), (2, 2, 2), (3, 1, 1)])
def test_lemma_bc_without_second_level_is_morris(k1, a, c):
    rep = verify_lemma_bc(k1, 0, a, c)
    assert rep.passed
    assert rep.sides[0] == MultiLaurent.from_qpoly(morris_M(k1, a, c - 1, c))


def test_prop_h_examples():
    empty = verify_prop_h(2, 1, 1, 2, ())
    plain = verify_lemma_bc(2, 1, 1, 2)
    assert empty.passed and empty.sides == plain.sides
    assert verify_prop_h(2, 1, 1, 1, (1,)).passed
    A = Alphabet((MultiLaurent.q(2) - 1).divide_den([1]))
    assert h_eval(1, A) == -(1 + Q)


def test_prop_h_hypothesis_reported():
    rep = verify_prop_h(2, 1, 1, 1, (1, 1))
    assert rep.passed is None and rep.status == "hypothesis-violated"
    assert "l(lambda)" in rep.detail


def test_thm2_examples():
    via_g = verify_thm2(2, 0, 1, 2, [g_insertion((2,), 2)])
    via_h = verify_prop_h(2, 0, 1, 2, (2,))
    assert via_g.passed and via_h.passed
    assert via_g.sides[1] == via_h.sides[1]
    assert verify_thm2(2, 1, 1, 1, [g_insertion((1,), 1, "x")]).passed
    assert verify_thm2(3, 1, 1, 2, [g_insertion((1,), 2, "x"), g_insertion((1,), 2, "q")]).passed


def test_thm2_rejects_uncertified_insertion():
    # h_2 needs g_(1,1) in its expansion, so a length-one budget is not enough
    rep = verify_thm2(2, 1, 1, 2, [Insertion(sf_h(2), Partition((2,)))])
    assert rep.status == "hypothesis-violated"


def test_thm3_examples():
    c = 2
    p1 = verify_thm3(2, 1, 1, c, [p_ins(sf_p(1), 1, Y="1")])
    g1 = verify_thm2(2, 1, 1, c, [g_insertion((1,), c)])
    assert p1.passed and g1.passed
    scale = MultiLaurent.from_qpoly(QPoly((1, 1)))  # (1 - q^2)/(1 - q)
    assert p1.sides[0] * scale == g1.sides[0]
    assert verify_thm3(2, 0, 1, 2, [p_ins(sf_p(2), 2, Y="y")]).passed
    e1 = verify_thm3(2, 1, 1, c, [p_ins(sf_e(1), 1)])
    assert e1.sides == p1.sides


def test_thm3_size_budget():
    rep = verify_thm3(2, 1, 1, 1, [p_ins(sf_p(2), 2, Y="y")])
    assert rep.status == "hypothesis-violated" and "sizes" in rep.detail


def test_lemma_bc2_examples():
    a = verify_lemma_bc2(2, 1, 1, 1, 2)
    b = verify_lemma_bc(2, 1, 1, 2)
    assert a.passed and a.sides == b.sides
    rep = verify_lemma_bc2(1, 0, 1, 0, 1)
    assert rep.passed and rep.sides[1] == ONE
    assert verify_lemma_bc2(1, 1, 1, 1, 1).passed
    assert verify_lemma_bc2(1, 1, 0, 0, 2).status == "hypothesis-violated"


def test_prop_h_equiv_examples():
    assert verify_prop_h_equiv(2, 1, 1, 1, 2, (1,)).sides == verify_prop_h(2, 1, 1, 2, (1,)).sides
    assert verify_prop_h_equiv(2, 1, 1, 0, 1, ()).sides == verify_lemma_bc2(2, 1, 1, 0, 1).sides
    assert verify_prop_h_equiv(2, 1, 1, 1, 1, (1,)).passed


def test_general_b_forms_with_insertions():
    spec = [g_insertion((1,), 2, "x")]
    for b in range(3):
        assert verify_prop_g_equiv(2, 1, 1, b, 2, spec).passed
        assert verify_thm_g_general(2, 1, 1, b, 2, spec).passed
    assert verify_prop_g_equiv(2, 1, 1, 1, 2, spec).sides == verify_thm2_at_z0_1(2, 1, 1, 2, spec).sides


def test_chain_examples():
    rep = verify_thm_chain(ChainParams((1, 0), 1, (0,), 1))
    assert rep.passed and rep.sides == (ONE, ONE)
    assert verify_thm_chain(ChainParams((2, 1, 0), 1, (1, 1), 1)).passed
    assert verify_theorem_chain_plain((2, 2, 0), 1, (1, 0), 2).passed


def test_chain_normalizations_coincide_at_b_equal_c_minus_1():
    cp = ChainParams((2, 1), 1, (1,), 2)
    spec = [g_insertion((1,), 2, "x")]
    general = verify_thm_chain(cp, spec, "g", "general")
    special = verify_thm_chain(cp, spec, "g", "b=c-1")
    assert general.passed and special.passed and general.sides == special.sides
    assert verify_thm_chain(ChainParams((2, 1), 1, (0,), 2), (), "g", "b=c-1").status == "hypothesis-violated"


def test_chain_single_level_matches_z0_one_form():
    spec = [g_insertion((1,), 2, "x")]
    chain = verify_thm_chain(ChainParams((2, 1), 1, (1,), 2), spec)
    single = verify_thm2_at_z0_1(2, 1, 1, 2, spec)
    assert chain.sides == single.sides


def test_chain_p_variant():
    cp = ChainParams((2, 1, 0), 1, (1, 1), 1)
    spec = [p_ins(sf_p(1), 1, X="x", Y="y"), Insertion(sf_p(1), Partition((1,)), Alphabet.empty(), None, 2)]
    assert verify_thm_chain(cp, spec, "p").passed


def test_chain_admissibility():
    rep = verify_thm_chain(ChainParams((1, 0), 0, (0,), 2))
    assert rep.status == "hypothesis-violated"


@given(st.lists(st.integers(0, 3), min_size=1, max_size=3), st.integers(1, 3))
def test_prefactor_collapses_at_b_equal_c_minus_1(ks, c):
    assert _prefactor(ks, [c - 1] * len(ks), c) == ONE


def test_wrong_virtual_alphabet_is_caught(monkeypatch):
    def shifted(a_exp, b, c, den):
        return Alphabet((MultiLaurent.q(a_exp + 1) - MultiLaurent.q(c - b - 1)).divide_den([den]))

    monkeypatch.setattr(theorems, "_virtual", shifted)
    rep = verify_thm2(2, 1, 1, 2, [g_insertion((1,), 2, "x")])
    assert rep.passed is False and rep.status == "fail"
    assert rep.lhs and rep.rhs and rep.lhs != rep.rhs


def test_wrong_morris_factor_is_caught(monkeypatch):
    monkeypatch.setattr(theorems, "morris_M", lambda k, a, b, c: morris_M(k, a, b, c) * QPoly((1, 1)))
    assert verify_lemma_bc(2, 1, 1, 1).passed is False
    assert verify_thm_chain(ChainParams((2, 1, 0), 1, (1, 1), 1)).passed is False
