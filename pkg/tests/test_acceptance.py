"""Acceptance gate: each criterion runs its full grid, checks exact equality and
its time limit, and adds one PASS/FAIL line to the terminal summary."""

from __future__ import annotations

import random
import time
from io import StringIO
from itertools import product

import pytest

from corpus import SYNTAX_ERRORS, builder_corpus
from qct import cli, qblocks
from qct.coeff import QPoly, q_binomial, q_factorial, qpoly_exact_div
from qct.ct import GeomFactor, SeriesExpr, constant_term, ct_via_splitting
from qct.dsl import ParseError, elaborate, parse
from qct.multipoly import Monomial, MultiLaurent, free, pochhammer, z
from qct.qblocks import ChainParams, LParams, MorrisParams, split_vars, splitting_series, zs
from qct.symfun import (
    Alphabet,
    Partition,
    dominance_leq,
    e_eval,
    g_eval,
    h_eval,
    p_eval,
    p_from_h_determinant,
    partitions,
    sf_e,
    sf_g,
    sf_h,
    sf_p,
)
from qct.theorems import (
    Insertion,
    alphabet_named,
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


@pytest.fixture
def gate(request):
    """Collects (ok, detail) for one criterion and enforces its time limit."""

    class Gate:
        def __init__(self):
            self.t0 = time.perf_counter()
            self.failures: list[str] = []
            self.count = 0

        def check(self, ok, what):
            self.count += 1
            if not ok:
                self.failures.append(str(what))

        def finish(self, number: int, title: str, limit: float | None):
            elapsed = time.perf_counter() - self.t0
            slow = limit is not None and elapsed > limit
            ok = not self.failures and not slow and self.count > 0
            budget = f" (limit {limit:g} s)" if limit is not None else ""
            line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {self.count} checks, "
                    f"{len(self.failures)} failed, {elapsed:.1f} s{budget}")
            request.config.acceptance_lines.append(line)
            print(line)
            assert not self.failures, self.failures[:5]
            assert self.count > 0
            assert not slow, f"took {elapsed:.1f} s, limit {limit} s"

    return Gate()


def passed(rep) -> bool:
    return rep.passed is True


# ---------------------------------------------------------------- 1-5: single blocks

def test_c01_q_morris(gate):
    for k, a, b, c in product(range(1, 4), range(3), range(3), range(1, 3)):
        rep = qblocks.verify_morris(MorrisParams(k, a, b, c))
        gate.check(passed(rep), rep.params)
    gate.finish(1, "q-Morris constant term", 120)


def test_c02_splitting(gate):
    for n, c in product(range(1, 4), range(1, 3)):
        rep = qblocks.verify_splitting(n, c)
        gate.check(rep.checks.get("identity") is True, ("identity", n, c))
        for i, j in product(range(1, n + 1), range(c)):
            gate.check(qblocks.splitting_coefficient(n, c, i, j) == qblocks.splitting_residue(n, c, i, j),
                       ("residue", n, c, i, j))
    gate.finish(2, "splitting formula and residue oracle", 60)


def test_c03_pochhammer_shifts(gate):
    for i, j in product(range(1, 5), range(1, 5)):
        for t in range(0, j + 1):
            gate.check(passed(qblocks.verify_pochhammer_shift(i, j, t, "a")), ("a", i, j, t))
        for t in range(-1, j):
            gate.check(passed(qblocks.verify_pochhammer_shift(i, j, t, "b")), ("b", i, j, t))
    gate.finish(3, "Pochhammer shifts", 5)


def test_c04_vanishing(gate):
    for k1, k2, c, t in qblocks.vanishing_grid(3, 2, -2, 3):
        rep = qblocks.verify_vanishing(k1, k2, c, t)
        gate.check(passed(rep), rep.params)
    gate.finish(4, "vanishing constant terms", 120)


def test_c05_L_structure(gate):
    for k1, a, b, c in product(range(0, 4), range(3), range(2), range(1, 3)):
        if not b + 1 <= c <= min(2, a + b + 1):
            continue
        for k2 in range(0, k1 + 1):
            rep = qblocks.verify_L_structure(LParams(k1, k2, a, b, c))
            gate.check(passed(rep) and len(rep.checks) == 5 and all(rep.checks.values()), rep.params)
    gate.finish(5, "structure of L", 180)


# ---------------------------------------------------------------- 6-8: insertion identities

SINGLE = [(k1, k2, a, c) for k1 in range(1, 4) for k2 in range(0, k1 + 1) for a in range(3) for c in (1, 2)]
SINGLE_B = [(k1, k2, a, b, c) for k1, k2, a, c in SINGLE for b in range(3) if a + b + 1 >= c]
LAMBDAS = [lam for n in range(1, 4) for lam in partitions(n)]
X_NAMES = ("", "x", "q")
P_FUNCS = [(sf_p(1), 1), (sf_p(2), 2), (sf_e(2), 2), (sf_h(2), 2)]


def p_insertion(f, size, X, Y):
    return Insertion(f, Partition((size,)), alphabet_named(X), alphabet_named(Y))


def test_c06_single_level_insertions(gate):
    for k1, k2, a, c in SINGLE:
        rep = verify_lemma_bc(k1, k2, a, c)
        gate.check(passed(rep), rep.params)
        for lam in LAMBDAS:
            if lam.length > k1 - k2:
                continue
            rep = verify_prop_h(k1, k2, a, c, lam)
            gate.check(passed(rep), rep.params)
            for X in X_NAMES:
                rep = verify_thm2(k1, k2, a, c, [g_insertion(lam, c, X)])
                gate.check(passed(rep), rep.params)
        for (f, size), Y, X in product(P_FUNCS, ("1", "y"), ("", "x")):
            if size <= k1 - k2:
                rep = verify_thm3(k1, k2, a, c, [p_insertion(f, size, X, Y)])
                gate.check(passed(rep), rep.params)
    gate.finish(6, "single-level insertions with b = c-1", 600)


def theorem_chain_verbatim(k, a, b, c):
    """Both sides of the plain chain identity assembled straight from its statement."""
    n = len(b)
    num, den = ONE, []
    for s in range(1, n + 1):
        a_s, b_s = (a if s == 1 else 0), b[s - 1]
        vs = zs(s, k[s - 1])
        for v in vs:
            num = num * pochhammer(Monomial.of({v: -1}), a_s) * pochhammer(Monomial.of({v: 1}, 1), b_s)
            num = num * MultiLaurent.var(v, -(b_s + 1 - c))
        for i, j in product(range(len(vs)), repeat=2):
            if i < j:
                num = num * pochhammer(Monomial.of({vs[i]: 1, vs[j]: -1}), c)
                num = num * pochhammer(Monomial.of({vs[j]: 1, vs[i]: -1}, 1), c)
        for v, w in product(vs, zs(s + 1, k[s]) if s < n else []):
            den += [GeomFactor(b_s + 1 - c + m, v, w) for m in range(c)]
    vars_ = [v for s in range(1, n + 1) for v in zs(s, k[s - 1])]
    lhs = constant_term(SeriesExpr(num, den), vars_)

    def M(kk, aa, bb, cc):
        top, bot = QPoly.one(), QPoly.one()
        for i in range(kk):
            top = top * q_factorial(aa + bb + i * cc) * q_factorial((i + 1) * cc)
            bot = bot * q_factorial(aa + i * cc) * q_factorial(bb + i * cc) * q_factorial(cc)
        return qpoly_exact_div(top, bot)

    sign = sum(k[s] * (b[s] + 1 - c) for s in range(n))
    qpow = sum(k[s] * (b[s] + 2 - c) * (b[s] + 1 - c) // 2 for s in range(n))
    rhs = QPoly.q(qpow, (-1) ** sign)
    for s in range(1, n + 1):
        rhs = rhs * M(k[s - 1], a + sum(b[:s]) + s * (1 - c), c - 1, c)
    return lhs, MultiLaurent.from_qpoly(rhs)


CHAIN_KS = [(1, 0), (2, 0), (2, 1, 0), (2, 2, 0)]


def chain_points():
    for k in CHAIN_KS:
        n = len(k) - 1
        for b, a, c in product(product(range(3), repeat=n), range(3), (1, 2)):
            if all(a + sum(b[:s]) + s >= s * c for s in range(1, n + 1)):
                yield ChainParams(k, a, b, c)


def test_c07_general_b_and_chains(gate):
    for k1, k2, a, b, c in SINGLE_B:
        rep = verify_lemma_bc2(k1, k2, a, b, c)
        gate.check(passed(rep), rep.params)
        for lam in LAMBDAS:
            if lam.length > k1 - k2:
                continue
            rep = verify_prop_h_equiv(k1, k2, a, b, c, lam)
            gate.check(passed(rep), rep.params)
            for X in X_NAMES:
                spec = [g_insertion(lam, c, X)]
                for verify in (verify_prop_g_equiv, verify_thm_g_general):
                    rep = verify(k1, k2, a, b, c, spec)
                    gate.check(passed(rep), rep.params)
    for cp in chain_points():
        plain = verify_theorem_chain_plain(cp.k, cp.a, cp.b, cp.c)
        gate.check(passed(plain), plain.params)
        lhs, rhs = theorem_chain_verbatim(cp.k, cp.a, cp.b, cp.c)
        gate.check(lhs == rhs and plain.sides == (lhs, rhs), ("verbatim", plain.params))
        for s in range(1, cp.n + 1):
            budget = cp.k[s - 1] - cp.k[s]
            for lam in LAMBDAS:
                if lam.size <= 2 and lam.length <= budget:
                    rep = verify_thm_chain(cp, [g_insertion(lam, cp.c, "x", s)])
                    gate.check(passed(rep), rep.params)
    gate.finish(7, "general-b insertions and chain identities", 900)


def test_c08_equivalence_at_b_equal_c_minus_1(gate):
    def same(r1, r2):
        return r1.status == r2.status and r1.passed is True and r1.sides == r2.sides

    for k1, k2, a, c in SINGLE:
        b = c - 1
        gate.check(same(verify_lemma_bc2(k1, k2, a, b, c), verify_lemma_bc(k1, k2, a, c)), ("bc", k1, k2, a, c))
        for lam in LAMBDAS:
            if lam.length > k1 - k2:
                continue
            gate.check(same(verify_prop_h_equiv(k1, k2, a, b, c, lam), verify_prop_h(k1, k2, a, c, lam)),
                       ("h", k1, k2, a, c, lam))
            for X in X_NAMES:
                spec = [g_insertion(lam, c, X)]
                gate.check(same(verify_prop_g_equiv(k1, k2, a, b, c, spec), verify_thm2_at_z0_1(k1, k2, a, c, spec)),
                           ("g z0=1", k1, k2, a, c, lam, X))
                gate.check(same(verify_thm_g_general(k1, k2, a, b, c, spec), verify_thm2(k1, k2, a, c, spec)),
                           ("g", k1, k2, a, c, lam, X))
    for cp in chain_points():
        if any(b != cp.c - 1 for b in cp.b):
            continue
        specs = [()] + [[g_insertion((1,), cp.c, "x", s)] for s in range(1, cp.n + 1) if cp.k[s - 1] > cp.k[s]]
        for spec in specs:
            gate.check(same(verify_thm_chain(cp, spec, "g", "general"), verify_thm_chain(cp, spec, "g", "b=c-1")),
                       ("chain", cp, len(spec)))
    gate.finish(8, "general-b forms agree with their b = c-1 counterparts", None)


# ---------------------------------------------------------------- 9: plethysm properties

def random_alphabet(rng: random.Random) -> Alphabet:
    letters = [MultiLaurent.var(free("x")), MultiLaurent.var(free("y")), MultiLaurent.q(),
               MultiLaurent.var(z(1, 1)), MultiLaurent.q() * MultiLaurent.var(free("x"))]
    out = MultiLaurent.zero()
    for _ in range(rng.randint(0, 3)):
        out = out + rng.choice([1, 1, -1]) * rng.choice(letters)
    return Alphabet(out)


def test_c09_plethysm_properties(gate):
    rng = random.Random(9)
    zero = MultiLaurent.zero()
    for _ in range(25):
        A, B = random_alphabet(rng), random_alphabet(rng)
        for r in range(6):
            gate.check(h_eval(r, A + B) == sum((h_eval(i, A) * h_eval(r - i, B) for i in range(r + 1)), zero),
                       ("h convolution", A, B, r))
            gate.check(h_eval(r, A * -1) == (-1) ** r * e_eval(r, A), ("h[-X]", A, r))
            for c in (1, 2, 3):
                gate.check(g_eval(r, A + B, c) == sum((g_eval(i, A, c) * g_eval(r - i, B, c) for i in range(r + 1)),
                                                      zero), ("g convolution", A, B, r, c))
        letter = rng.choice([MultiLaurent.var(free("x")), MultiLaurent.q(), MultiLaurent.q(-1)])
        for k in range(1, 4):
            for f in (sf_h(k), sf_e(k), sf_g(k, 2), sf_p([k])):
                gate.check(f.evaluate(Alphabet(letter) * A) == letter**k * f.evaluate(A), ("homogeneity", f.name))
            m = rng.randint(-3, 3)
            gate.check(p_eval(k, A * m) == m * p_eval(k, A), ("power-sum scaling", m, k))
    for a, r in product(range(6), range(6)):
        closed = q_binomial(a, r) * QPoly.q(r * (r - 1) // 2, (-1) ** r)
        gate.check(h_eval(r, Alphabet((MultiLaurent.q(a) - 1).divide_den([1]))) == MultiLaurent.from_qpoly(closed),
                   ("virtual h", a, r))
    for n in range(1, 6):
        for A in [Alphabet.of(free("x"), free("y")) + Alphabet(MultiLaurent.q()), random_alphabet(rng)]:
            gate.check(p_from_h_determinant(n, A) == p_eval(n, A), ("determinant", n))
    gate.check(dominance_leq(Partition((1, 1, 1)), Partition((3,))), "dominance example")
    gate.check(not dominance_leq(Partition((3,)), Partition((1, 1, 1))), "dominance example")
    gate.check(dominance_leq(Partition((2, 2)), Partition((3, 1))), "dominance example")
    for n in range(1, 7):
        ps = partitions(n)
        for lam in ps:
            gate.check(dominance_leq(Partition((1,) * n), lam) and dominance_leq(lam, Partition((n,))),
                       ("dominance extremes", lam))
        for lam, mu in product(ps, repeat=2):
            if lam != mu:
                gate.check(not (dominance_leq(lam, mu) and dominance_leq(mu, lam)), ("antisymmetry", lam, mu))
            for nu in ps:
                if dominance_leq(lam, mu) and dominance_leq(mu, nu):
                    gate.check(dominance_leq(lam, nu), ("transitivity", lam, mu, nu))
    gate.finish(9, "plethysm properties", 30)


# ---------------------------------------------------------------- 10: oracle equivalence

def test_c10_oracle_equivalence(gate):
    for seed in range(50):
        rng = random.Random(1000 + seed)
        n, c = rng.randint(1, 3), rng.randint(1, 2)
        ys, _ = split_vars(n)
        mult = MultiLaurent.zero()
        for _ in range(rng.randint(1, 3)):
            exps = {y: rng.randint(-2, 1) for y in ys}
            mult = mult + MultiLaurent.mono(Monomial.of(exps, rng.randint(-1, 2)), rng.choice([-2, -1, 1, 2]))
        e = splitting_series(n, c)
        e = SeriesExpr(e.numerator * mult, e.denom)
        direct = constant_term(e, ys)
        gate.check(ct_via_splitting(e) == direct, ("splitting route", seed))
        gate.check(constant_term(e, ys, extra_cap=1) == direct, ("caps + 1", seed))
    gate.finish(10, "constant_term against the splitting route, and cap robustness", None)


# ---------------------------------------------------------------- 11: parser and CLI contract

def test_c11_parser_and_exit_codes(gate, tmp_path, monkeypatch, capsys):
    for e in builder_corpus():
        gate.check(elaborate(parse(e.to_dsl())) == e, "round trip")
    for text, line, col, expected in SYNTAX_ERRORS:
        try:
            parse(text)
        except ParseError as err:
            gate.check((err.line, err.col) == (line, col) and expected <= set(err.expected), (text, err))
        else:
            gate.check(False, f"{text!r} parsed")

    def code(*argv):
        return cli.main(list(argv), out=StringIO())

    gate.check(code("verify", "q-morris", "--param", "k=1..2") == cli.EXIT_OK, "exit 0")
    gate.check(code("verify", "q-morris", "--param", "k=3", "--param", "a=2", "--param", "b=2",
                    "--budget", "5") == cli.EXIT_BUDGET, "exit 2")
    for argv in (["verify", "nope"], ["verify", "q-morris", "--param", "k=2..1"]):
        gate.check(code(*argv) == cli.EXIT_USAGE, argv)
    try:
        code("bogus")
    except SystemExit as exc:
        gate.check(exc.code == cli.EXIT_USAGE, "argparse usage")
    else:
        gate.check(False, "argparse accepted a bad subcommand")
    bad = tmp_path / "bad.qct"
    bad.write_text("poch(z0, 2")
    gate.check(code("ct", "--file", str(bad)) == cli.EXIT_DATA, "exit 65")
    good = tmp_path / "good.qct"
    good.write_text("CT[z[1,*]] poch(1/z[1,1], 1) * poch(q*z[1,1], 1)")
    gate.check(code("ct", "--file", str(good)) == cli.EXIT_OK, "ct exit 0")
    monkeypatch.setattr(qblocks, "morris_product", lambda p: QPoly.q(0, 7))
    gate.check(code("verify", "q-morris", "--param", "k=1", "--param", "a=1", "--param", "b=1",
                    "--param", "c=1") == cli.EXIT_FAIL, "exit 1")
    capsys.readouterr()
    gate.finish(11, "parser round trip, positioned syntax errors, exit codes", None)
