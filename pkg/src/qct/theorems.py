"""End-to-end checks of the symmetric-function constant term identities.

Single-level identities live on the integrand

    z0^{(b+1-c)k1} prod_i (z0/z_i)_a (q z_i/z0)_b Vand_c(z)
    ------------------------------------------------------------
    prod_i z_i^{b+1-c} prod_{i,j} (q^{b+1-c} z_i/z_j^{(2)})_c

(for b = c-1 the normalisation and shift disappear), multiplied by
insertions f[Y Z + X] and z0^{-sum |lambda|}.  Chains set z0 = 1 and couple
level s to level s+1 through the same kind of denominator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .ct import SeriesExpr, constant_term
from .multipoly import Z0, Monomial, MultiLaurent, free, pochhammer, vandermonde, z
from .qblocks import ChainParams, l_factors, morris_M, zs
from .report import HYPOTHESIS, Outcome, VerifyReport, verified
from .symfun import Alphabet, Partition, SymFunc, convert_to_g_basis, h_eval, q_alphabet, sf_g_lambda


def binom2(x: int) -> int:
    return x * (x - 1) // 2


@dataclass(frozen=True)
class Insertion:
    """One inserted factor f[Y Z^{(level)} + X]; lam carries the length/size budget."""

    f: SymFunc
    lam: Partition
    X: Alphabet = field(default_factory=Alphabet.empty, compare=False)
    Y: Alphabet | None = field(default=None, compare=False)
    level: int = 1
    label: str = ""

    def describe(self) -> str:
        if self.label:
            return self.label
        parts = [self.f.name]
        if self.X.value:
            parts.append(f"X={self.X.value}")
        if self.Y is not None:
            parts.append(f"Y={self.Y.value}")
        if self.level != 1:
            parts.append(f"level={self.level}")
        return " ".join(parts)


InsertionSpec = tuple[Insertion, ...]


def alphabet_named(name: str) -> Alphabet:
    """Small alphabets used in grids: '' (empty), a number, 'q', or a fresh letter name."""
    name = name.strip()
    if name in ("", "0", "empty"):
        return Alphabet.empty()
    if name.lstrip("-").isdigit():
        return Alphabet(MultiLaurent.const(int(name)))
    if name == "q":
        return Alphabet(MultiLaurent.q())
    return Alphabet.of(free(name))


def g_insertion(lam: Iterable[int], c: int, X: str | Alphabet = "", level: int = 1) -> Insertion:
    lam = Partition(sorted(lam, reverse=True))
    X = alphabet_named(X) if isinstance(X, str) else X
    return Insertion(sf_g_lambda(lam, c), lam, X, None, level)


def spec_text(spec: Sequence[Insertion]) -> list[str]:
    return [ins.describe() for ins in spec]


@lru_cache(maxsize=None)
def _certified(f: SymFunc, lam: Partition, c: int) -> bool:
    if f.degree() != lam.size:
        return False
    return all(mu.length <= lam.length for mu in convert_to_g_basis(f, c))


def _is_rational(f: SymFunc) -> bool:
    return all(v.lo == 0 and len(v.c) == 1 for v in f.terms.values())


def _check_spec(spec: Sequence[Insertion], budgets: dict[int, int], variant: str, c: int) -> list[str]:
    """Hypothesis violations of an insertion spec, as readable strings."""
    problems = []
    used: dict[int, int] = {}
    for ins in spec:
        if ins.level not in budgets:
            problems.append(f"insertion {ins.describe()} at level {ins.level} outside 1..{len(budgets)}")
            continue
        if variant == "g":
            used[ins.level] = used.get(ins.level, 0) + ins.lam.length
            if ins.Y is not None:
                problems.append(f"{ins.describe()}: g-basis identities take no Y alphabet")
            if not _certified(ins.f, ins.lam, c):
                problems.append(f"{ins.f.name} is not in the span of g_mu with l(mu) <= {ins.lam.length}")
        else:
            used[ins.level] = used.get(ins.level, 0) + ins.lam.size
            if not _is_rational(ins.f):
                problems.append(f"{ins.f.name} has coefficients outside Q")
            if ins.f.degree() != ins.lam.size:
                problems.append(f"{ins.f.name} is not homogeneous of degree {ins.lam.size}")
    for s, u in used.items():
        if u > budgets.get(s, 0):
            kind = "lengths" if variant == "g" else "sizes"
            problems.append(f"level {s}: insertion {kind} sum to {u} > {budgets[s]}")
    return problems


def _zalpha(level: int, k: int) -> Alphabet:
    return Alphabet.of(*zs(level, k))


def _lhs_insertions(spec: Sequence[Insertion], sizes: dict[int, int]) -> MultiLaurent:
    out = MultiLaurent.one()
    for ins in spec:
        Z = _zalpha(ins.level, sizes[ins.level])
        A = (Z if ins.Y is None else ins.Y * Z) + ins.X
        out = out * ins.f.evaluate(A)
    return out.reduced()


def _level_numerator(k: int, a: int, b: int, c: int, level: int, with_z0: bool) -> MultiLaurent:
    """prod_i (z0/z_i)_a (q z_i/z0)_b z_i^{c-1-b} Vand_c, z0 set to 1 unless with_z0."""
    out = MultiLaurent.one()
    shift = b + 1 - c
    for v in zs(level, k):
        r = Monomial.of({Z0: 1, v: -1} if with_z0 else {v: -1})
        out = out * pochhammer(r, a) * pochhammer(Monomial.q() / r, b)
    out = out * vandermonde(zs(level, k), c)
    if shift:
        out = out * MultiLaurent.mono(Monomial.of({v: -shift for v in zs(level, k)}))
        if with_z0:
            out = out * MultiLaurent.var(Z0, shift * k)
    return out


def _prefactor(ks: Sequence[int], bs: Sequence[int], c: int) -> MultiLaurent:
    sign = (-1) ** (sum(k * (b + 1 - c) for k, b in zip(ks, bs)) % 2)
    return MultiLaurent.q(sum(k * binom2(b + 2 - c) for k, b in zip(ks, bs))) * sign


def _tail(k: int, level: int, length: int, with_z0: bool) -> MultiLaurent:
    out = MultiLaurent.one()
    for j in range(1, k + 1):
        out = out * pochhammer(Monomial.of({Z0: 1, z(level, j): -1} if with_z0 else {z(level, j): -1}), length)
    return out


def _virtual(a_exp: int, b: int, c: int, den: int) -> Alphabet:
    """(q^{a_exp} - q^{c-b-1}) / (1 - q^den)."""
    num = MultiLaurent.q(a_exp) - MultiLaurent.q(c - b - 1)
    return Alphabet(num.divide_den([den]))


def _rhs_insertions(spec: Sequence[Insertion], virtual: dict[int, Alphabet], with_z0: bool) -> MultiLaurent:
    out = MultiLaurent.one()
    for ins in spec:
        V = virtual[ins.level]
        X = ins.X / Z0 if (with_z0 and ins.X.value) else ins.X
        A = (V if ins.Y is None else V * ins.Y) + X
        out = out * ins.f.evaluate(A)
    return out.reduced()


def _compare(lhs: MultiLaurent, rhs: MultiLaurent, detail: str = "") -> Outcome:
    return Outcome(lhs == rhs, detail, lhs=lhs.reduced(), rhs=rhs.reduced())


# ---------------------------------------------------------------- single level, general z0

def _single_level(identity: str, params: dict, k1: int, k2: int, a: int, b: int, c: int,
                  spec: Sequence[Insertion], variant: str, with_z0: bool,
                  h_form: Partition | None = None) -> VerifyReport:
    """Common engine for the one-level identities.

    h_form, when given, replaces the insertion spec by g_lambda on the left and
    h_lambda[(q^a - q^{c-b-1})/(1 - q)] on the right, evaluated independently.
    """

    def body() -> Outcome:
        problems = []
        if k1 < k2:
            problems.append(f"k1={k1} < k2={k2}")
        if a + b + 1 < c:
            problems.append(f"a+b+1={a + b + 1} < c={c}")
        if h_form is not None and h_form.length > k1 - k2:
            problems.append(f"l(lambda)={h_form.length} > k1-k2={k1 - k2}")
        problems += _check_spec(spec, {1: k1 - k2}, variant, c)
        if problems:
            return Outcome(None, "; ".join(problems), status=HYPOTHESIS)
        num = _level_numerator(k1, a, b, c, 1, with_z0)
        if h_form is not None:
            ins = sf_g_lambda(h_form, c).evaluate(_zalpha(1, k1))
            weight = h_form.size
        else:
            ins = _lhs_insertions(spec, {1: k1})
            weight = sum(i.lam.size for i in spec)
        if with_z0 and weight:
            ins = ins * MultiLaurent.var(Z0, -weight)
        e = SeriesExpr(num * ins, l_factors(k1, k2, c, shift=b + 1 - c))
        lhs = constant_term(e, zs(1, k1))
        rhs = (_prefactor([k1], [b], c) * MultiLaurent.from_qpoly(morris_M(k1, a + b + 1 - c, c - 1, c))
               * _tail(k2, 2, a + b + 1 - c, with_z0))
        if h_form is not None:
            H = Alphabet((MultiLaurent.q(a) - MultiLaurent.q(c - b - 1)).divide_den([1]))
            for part in h_form:
                rhs = rhs * h_eval(part, H)
        else:
            rhs = rhs * _rhs_insertions(spec, {1: _virtual(a, b, c, c)}, with_z0)
        return _compare(lhs, rhs)

    return verified(identity, params, body)


def verify_lemma_bc(k1: int, k2: int, a: int, c: int) -> VerifyReport:
    """CT of L_{k1,k2}(a, c-1, c) = M_{k1}(a, c-1, c) prod_j (z0/z_j^{(2)})_a."""
    return _single_level("lemma-bc", {"k1": k1, "k2": k2, "a": a, "c": c}, k1, k2, a, c - 1, c, (), "g", True)


def verify_prop_h(k1: int, k2: int, a: int, c: int, lam: Iterable[int]) -> VerifyReport:
    lam = Partition(sorted(lam, reverse=True))
    return _single_level("prop-h", {"k1": k1, "k2": k2, "a": a, "c": c, "lambda": list(lam)},
                         k1, k2, a, c - 1, c, (), "g", True, h_form=lam)


def verify_thm2(k1: int, k2: int, a: int, c: int, spec: Sequence[Insertion]) -> VerifyReport:
    """g-span insertions f[Z + X]; the right side evaluates f at (q^a - 1)/(1 - q^c) + X/z0."""
    params = {"k1": k1, "k2": k2, "a": a, "c": c, "spec": spec_text(spec)}
    return _single_level("thm-g", params, k1, k2, a, c - 1, c, tuple(spec), "g", True)


def verify_thm3(k1: int, k2: int, a: int, c: int, spec: Sequence[Insertion]) -> VerifyReport:
    """Insertions f[Y Z + X] with f over Q; right side f[(q^a - 1)/(1 - q^c) Y + X/z0]."""
    spec = tuple(ins if ins.Y is not None else Insertion(ins.f, ins.lam, ins.X, Alphabet(1), ins.level, ins.label)
                 for ins in spec)
    params = {"k1": k1, "k2": k2, "a": a, "c": c, "spec": spec_text(spec)}
    return _single_level("thm-p", params, k1, k2, a, c - 1, c, spec, "p", True)


def verify_lemma_bc2(k1: int, k2: int, a: int, b: int, c: int) -> VerifyReport:
    return _single_level("lemma-bc2", {"k1": k1, "k2": k2, "a": a, "b": b, "c": c},
                         k1, k2, a, b, c, (), "g", True)


def verify_prop_h_equiv(k1: int, k2: int, a: int, b: int, c: int, lam: Iterable[int]) -> VerifyReport:
    lam = Partition(sorted(lam, reverse=True))
    return _single_level("prop-h-equiv", {"k1": k1, "k2": k2, "a": a, "b": b, "c": c, "lambda": list(lam)},
                         k1, k2, a, b, c, (), "g", True, h_form=lam)


def verify_prop_g_equiv(k1: int, k2: int, a: int, b: int, c: int, spec: Sequence[Insertion]) -> VerifyReport:
    """z0 = 1 form with general b: f[Z + X] -> f[(q^a - q^{c-b-1})/(1 - q^c) + X]."""
    params = {"k1": k1, "k2": k2, "a": a, "b": b, "c": c, "spec": spec_text(spec)}
    return _single_level("prop-g-equiv", params, k1, k2, a, b, c, tuple(spec), "g", False)


def verify_thm_g_general(k1: int, k2: int, a: int, b: int, c: int, spec: Sequence[Insertion]) -> VerifyReport:
    """General-b form with z0 kept: f[Z + X] -> f[(q^a - q^{c-b-1})/(1 - q^c) + X/z0]."""
    params = {"k1": k1, "k2": k2, "a": a, "b": b, "c": c, "spec": spec_text(spec)}
    return _single_level("thm-g-general", params, k1, k2, a, b, c, tuple(spec), "g", True)


def verify_thm2_at_z0_1(k1: int, k2: int, a: int, c: int, spec: Sequence[Insertion]) -> VerifyReport:
    """The b = c-1 form of verify_prop_g_equiv, used for the equivalence check."""
    params = {"k1": k1, "k2": k2, "a": a, "c": c, "spec": spec_text(spec)}
    return _single_level("thm-g-z0=1", params, k1, k2, a, c - 1, c, tuple(spec), "g", False)


# ---------------------------------------------------------------- chains

def chain_series(cp: ChainParams, spec: Sequence[Insertion] = ()) -> SeriesExpr:
    num = MultiLaurent.one()
    factors = []
    for s in range(1, cp.n + 1):
        a_s = cp.a if s == 1 else 0
        num = num * _level_numerator(cp.k[s - 1], a_s, cp.b[s - 1], cp.c, s, False)
        factors += l_factors(cp.k[s - 1], cp.k[s], cp.c, shift=cp.b[s - 1] + 1 - cp.c, level=s)
    sizes = {s: cp.k[s - 1] for s in range(1, cp.n + 1)}
    return SeriesExpr(num * _lhs_insertions(spec, sizes), factors)


def chain_rhs(cp: ChainParams, spec: Sequence[Insertion] = ()) -> MultiLaurent:
    c, n = cp.c, cp.n
    rhs = _prefactor(cp.k[:n], cp.b, c)
    for s in range(1, n + 1):
        rhs = rhs * MultiLaurent.from_qpoly(morris_M(cp.k[s - 1], cp.a + cp.sigma(s) + s * (1 - c), c - 1, c))
    rhs = rhs * _tail(cp.k[n], n + 1, cp.a + cp.sigma(n) + n * (1 - c), False)
    virtual = {s: _virtual(cp.a + cp.sigma(s - 1) + (s - 1) * (1 - c), cp.b[s - 1], c, c) for s in range(1, n + 1)}
    return rhs * _rhs_insertions(spec, virtual, False)


def verify_thm_chain(cp: ChainParams, spec: Sequence[Insertion] = (), variant: str = "g",
                     normalization: str = "general") -> VerifyReport:
    """n-level identity at z0 = 1.

    variant "g": insertions in the g-span, budgets on lengths; "p": f over Q with
    Y alphabets, budgets on sizes.  normalization "b=c-1" requires every b_s = c-1;
    "general" is the form with arbitrary b_s.  Empty spec with k_{n+1} = 0 is the
    plain chain constant term identity.
    """
    if variant not in ("g", "p"):
        raise ValueError(f"unknown variant {variant!r}")
    if normalization not in ("general", "b=c-1"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if variant == "p":
        spec = tuple(ins if ins.Y is not None else Insertion(ins.f, ins.lam, ins.X, Alphabet(1), ins.level, ins.label)
                     for ins in spec)
    params = {"k": list(cp.k), "a": cp.a, "b": list(cp.b), "c": cp.c, "variant": variant,
              "normalization": normalization, "spec": spec_text(spec)}

    def body() -> Outcome:
        problems = []
        if normalization == "b=c-1" and any(b != cp.c - 1 for b in cp.b):
            problems.append(f"normalization b=c-1 needs every b_s = {cp.c - 1}")
        for s in range(1, cp.n + 1):
            if cp.a + cp.sigma(s) + s < s * cp.c:
                problems.append(f"a+sigma_{s}+{s} < {s}c")
        budgets = {s: cp.k[s - 1] - cp.k[s] for s in range(1, cp.n + 1)}
        problems += _check_spec(spec, budgets, variant, cp.c)
        if problems:
            return Outcome(None, "; ".join(problems), status=HYPOTHESIS)
        vars_ = [v for s in range(1, cp.n + 1) for v in zs(s, cp.k[s - 1])]
        lhs = constant_term(chain_series(cp, spec), vars_)
        return _compare(lhs, chain_rhs(cp, spec))

    return verified("chain", params, body)


def verify_theorem_chain_plain(k: Sequence[int], a: int, b: Sequence[int], c: int) -> VerifyReport:
    """The chain identity without insertions (requires k_{n+1} = 0)."""
    cp = ChainParams(tuple(k), a, tuple(b), c)
    if cp.k[-1] != 0:
        raise ValueError("the plain chain identity needs k_{n+1} = 0")
    rep = verify_thm_chain(cp)
    rep.identity = "chain-plain"
    return rep
