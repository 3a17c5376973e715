"""Partitions, plethystic alphabets and the p/h/e/g symmetric functions.

Every evaluation goes through power sums.  An `Alphabet` is stored as its
first moment, a MultiLaurent value A with a (1 - q^m)-product denominator;
then p_r[A] is the Adams operation A(q^r, z^r) with denominators
(1 - q^{rm}).  Sums, differences and Cartesian products of alphabets are
sums, differences and products of these values, and dividing by (1 - t)
with t = q^c is a denominator factor.

The parameter t of the g-functions is always specialised to q^c.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping

from .coeff import QPoly, QRat, q_binomial
from .multipoly import Monomial, MultiLaurent, VarId

# values of symmetric functions live in the same ring as everything else
SymValue = MultiLaurent


class Partition(tuple):
    """Weakly decreasing tuple of positive integers."""

    def __new__(cls, parts: Iterable[int] = ()):
        parts = tuple(int(x) for x in parts)
        if any(x <= 0 for x in parts):
            parts = tuple(x for x in parts if x != 0)
            if any(x < 0 for x in parts):
                raise ValueError(f"negative part in {parts}")
        if any(x < y for x, y in zip(parts, parts[1:])):
            raise ValueError(f"parts {parts} are not weakly decreasing")
        return super().__new__(cls, parts)

    @property
    def size(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    def multiplicities(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for x in self:
            out[x] = out.get(x, 0) + 1
        return out

    def z(self) -> int:
        """Order of the centraliser of a permutation of cycle type self."""
        out = 1
        for part, m in self.multiplicities().items():
            out *= part**m * factorial(m)
        return out

    def __repr__(self) -> str:
        return f"Partition({tuple(self)})"


@lru_cache(maxsize=None)
def _partitions(n: int, largest: int) -> tuple[tuple[int, ...], ...]:
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def partitions(n: int) -> list[Partition]:
    """Partitions of n in reverse lexicographic order."""
    if n < 0:
        return []
    return [Partition(p) for p in _partitions(n, n)]


def dominance_leq(lam: Partition, mu: Partition) -> bool:
    """lam <= mu in dominance order: every prefix sum of lam is at most mu's."""
    lam, mu = Partition(lam), Partition(mu)
    if lam.size != mu.size:
        raise ValueError(f"dominance compares partitions of equal size, got {lam.size} and {mu.size}")
    sl = sm = 0
    for i in range(max(len(lam), len(mu))):
        sl += lam[i] if i < len(lam) else 0
        sm += mu[i] if i < len(mu) else 0
        if sl > sm:
            return False
    return True


# ---------------------------------------------------------------- alphabets

class Alphabet:
    """Formal plethystic alphabet, represented by its first power-sum moment."""

    __slots__ = ("value",)

    def __init__(self, value: MultiLaurent | int = 0):
        self.value = value if isinstance(value, MultiLaurent) else MultiLaurent.const(value)

    @classmethod
    def empty(cls) -> Alphabet:
        return cls(MultiLaurent.zero())

    @classmethod
    def of(cls, *letters) -> Alphabet:
        """Sum of letters; each letter is a VarId, Monomial, int, or MultiLaurent monomial."""
        total = MultiLaurent.zero()
        for x in letters:
            if isinstance(x, VarId):
                x = MultiLaurent.var(x)
            elif isinstance(x, Monomial):
                x = MultiLaurent.mono(x)
            total = total + x
        return cls(total)

    @classmethod
    def variables(cls, vs: Iterable[VarId]) -> Alphabet:
        return cls.of(*vs)

    @classmethod
    def virtual(cls, numerator: MultiLaurent, *cs: int) -> Alphabet:
        """numerator / prod (1 - q^c)."""
        return cls(numerator.divide_den(list(cs)))

    def __add__(self, other: Alphabet) -> Alphabet:
        return Alphabet(self.value + _alpha(other).value)

    def __sub__(self, other: Alphabet) -> Alphabet:
        return Alphabet(self.value - _alpha(other).value)

    def __neg__(self) -> Alphabet:
        return Alphabet(-self.value)

    def __mul__(self, other) -> Alphabet:
        """Cartesian product; an int, Monomial or MultiLaurent acts as an alphabet too."""
        return Alphabet(self.value * _alpha(other).value)

    __rmul__ = __mul__

    def divide_by_one_minus_q(self, c: int) -> Alphabet:
        """A / (1 - q^c)."""
        return Alphabet(self.value.divide_den([c]))

    def __truediv__(self, other) -> Alphabet:
        """Division by a single letter (a monomial)."""
        other = _alpha(other).value
        return Alphabet(self.value * other ** -1)

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and self.value == other.value

    def __repr__(self) -> str:
        return f"Alphabet({self.value})"


def _alpha(x) -> Alphabet:
    if isinstance(x, Alphabet):
        return x
    if isinstance(x, (VarId, Monomial)):
        return Alphabet.of(x)
    return Alphabet(MultiLaurent.const(x))


def q_alphabet(num: dict[int, int], c: int) -> Alphabet:
    """(sum_e coeff * q^e) / (1 - q^c), e.g. {a: 1, 0: -1} gives (q^a - 1)/(1 - q^c)."""
    return Alphabet(MultiLaurent(dict(num)).divide_den([c]))


# ---------------------------------------------------------------- evaluations

def p_eval(r: int, A: Alphabet) -> SymValue:
    if r < 1:
        raise ValueError("p_r needs r >= 1")
    return _alpha(A).value.adams(r)


def _h_values(rmax: int, A: Alphabet) -> list[SymValue]:
    ps = [None] + [p_eval(i, A) for i in range(1, rmax + 1)]
    hs = [MultiLaurent.one()]
    for r in range(1, rmax + 1):
        acc = MultiLaurent.zero()
        for i in range(1, r + 1):
            acc = acc + ps[i] * hs[r - i]
        hs.append((acc * Fraction(1, r)).reduced())
    return hs


def h_eval(r: int, A: Alphabet) -> SymValue:
    """Complete homogeneous h_r[A] via r h_r = sum_i p_i h_{r-i}."""
    if r < 0:
        return MultiLaurent.zero()
    return _h_values(r, A)[r]


def e_eval(r: int, A: Alphabet) -> SymValue:
    """Elementary e_r[A] = (-1)^r h_r[-A]."""
    if r < 0:
        return MultiLaurent.zero()
    return h_eval(r, -_alpha(A)) * (-1) ** r


def g_transform(A: Alphabet, c: int) -> Alphabet:
    """(1 - q^c)/(1 - q) A."""
    return Alphabet((_alpha(A).value * (1 - MultiLaurent.q(c))).divide_den([1]))


def g_eval(r: int, A: Alphabet, c: int) -> SymValue:
    """Modified complete function g_r(A; q, q^c) = h_r[(1 - q^c)/(1 - q) A]."""
    return h_eval(r, g_transform(A, c))


def p_from_h_determinant(n: int, A: Alphabet) -> SymValue:
    """(-1)^{n-1} times the lower Hessenberg determinant in h_1..h_n; equals p_n[A]."""
    if n < 1:
        raise ValueError("n >= 1 required")
    hs = _h_values(n, A)

    def entry(i: int, j: int) -> SymValue:
        if j == 0:
            return hs[i + 1] * (i + 1)
        d = i - j + 1
        return hs[d] if d >= 0 else MultiLaurent.zero()

    det = _determinant([[entry(i, j) for j in range(n)] for i in range(n)])
    return (det * (-1) ** (n - 1)).reduced()


def _determinant(m: list[list[SymValue]]) -> SymValue:
    """Laplace expansion along the first row, memoised on the remaining columns."""
    n = len(m)
    memo: dict[tuple[int, tuple[int, ...]], SymValue] = {}

    def minor(row: int, cols: tuple[int, ...]) -> SymValue:
        if row == n:
            return MultiLaurent.one()
        key = (row, cols)
        if key not in memo:
            acc = MultiLaurent.zero()
            for pos, col in enumerate(cols):
                x = m[row][col]
                if x:
                    term = x * minor(row + 1, cols[:pos] + cols[pos + 1:])
                    acc = acc + (term if pos % 2 == 0 else -term)
            memo[key] = acc
        return memo[key]

    return minor(0, tuple(range(n)))


# ---------------------------------------------------------------- symmetric functions

class SymFunc:
    """Finite expansion sum_mu coeff_mu p_mu with coefficients in Q[q, 1/q]."""

    __slots__ = ("terms", "name")

    def __init__(self, terms: Mapping[Partition, QPoly] | None = None, name: str | None = None):
        self.terms = {Partition(k): QPoly.coerce(v) for k, v in (terms or {}).items() if QPoly.coerce(v)}
        self.name = name or self._auto_name()

    def _auto_name(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({v})*p{list(k)}" for k, v in sorted(self.terms.items()))

    def __repr__(self) -> str:
        return f"SymFunc({self.name})"

    def degrees(self) -> set[int]:
        return {k.size for k in self.terms}

    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) > 1:
            raise ValueError(f"{self.name} is not homogeneous")
        return ds.pop() if ds else 0

    def __add__(self, other: SymFunc) -> SymFunc:
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, QPoly()) + v
        return SymFunc(out, f"{self.name} + {other.name}")

    def __mul__(self, other) -> SymFunc:
        if not isinstance(other, SymFunc):
            c = QPoly.coerce(other)
            return SymFunc({k: v * c for k, v in self.terms.items()}, f"({c})*{self.name}")
        out: dict[Partition, QPoly] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = Partition(sorted(k1 + k2, reverse=True))
                out[k] = out.get(k, QPoly()) + v1 * v2
        return SymFunc(out, f"{self.name}*{other.name}")

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, SymFunc) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def evaluate(self, A: Alphabet) -> SymValue:
        """f[A]."""
        cache: dict[int, SymValue] = {}
        total = MultiLaurent.zero()
        for mu, coef in sorted(self.terms.items()):
            term = MultiLaurent.from_qpoly(coef)
            for part in mu:
                if part not in cache:
                    cache[part] = p_eval(part, A)
                term = term * cache[part]
            total = total + term
        return total.reduced()


def sf_p(lam: Iterable[int] | int) -> SymFunc:
    lam = Partition([lam] if isinstance(lam, int) else sorted(lam, reverse=True))
    return SymFunc({lam: QPoly.one()}, f"p{list(lam)}")


def sf_h(n: int) -> SymFunc:
    return SymFunc({mu: QPoly.const(Fraction(1, mu.z())) for mu in partitions(n)}, f"h{n}")


def sf_e(n: int) -> SymFunc:
    return SymFunc({mu: QPoly.const(Fraction((-1) ** (n - mu.length), mu.z())) for mu in partitions(n)}, f"e{n}")


def _g_factor(m: int, c: int) -> QPoly:
    """(1 - q^{cm})/(1 - q^m) = 1 + q^m + ... + q^{m(c-1)}."""
    return QPoly.from_dict({m * i: 1 for i in range(c)})


def sf_g(n: int, c: int) -> SymFunc:
    """g_n with t = q^c, expanded in power sums."""
    terms = {}
    for mu in partitions(n):
        coef = QPoly.const(Fraction(1, mu.z()))
        for part in mu:
            coef = coef * _g_factor(part, c)
        terms[mu] = coef
    return SymFunc(terms, f"g{n}")


def sf_prod(fs: Iterable[SymFunc], name: str | None = None) -> SymFunc:
    out = SymFunc({Partition(): QPoly.one()}, "1")
    for f in fs:
        out = out * f
    if name:
        out.name = name
    return out


def sf_g_lambda(lam: Iterable[int], c: int) -> SymFunc:
    lam = Partition(sorted(lam, reverse=True))
    return sf_prod((sf_g(r, c) for r in lam), f"g{list(lam)}")


def sf_h_lambda(lam: Iterable[int]) -> SymFunc:
    lam = Partition(sorted(lam, reverse=True))
    return sf_prod((sf_h(r) for r in lam), f"h{list(lam)}")


# ---------------------------------------------------------------- change of basis

def convert_to_g_basis(f: SymFunc, c: int) -> dict[Partition, QRat]:
    """Coefficients d_mu with f = sum d_mu g_mu(q, q^c), f homogeneous.

    The g_mu and f are compared in the power-sum basis, giving a square
    linear system over Q(q) solved by exact Gaussian elimination.
    """
    d = f.degree()
    basis = partitions(d)
    gs = [sf_g_lambda(mu, c) for mu in basis]
    rows = [[QRat(g.terms.get(nu, QPoly())) for g in gs] + [QRat(f.terms.get(nu, QPoly()))] for nu in basis]
    sol = _solve(rows)
    return {mu: x for mu, x in zip(basis, sol) if x}


def _solve(rows: list[list[QRat]]) -> list[QRat]:
    n = len(rows)
    rows = [list(r) for r in rows]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col]), None)
        if piv is None:
            raise ArithmeticError("singular system in basis change")
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = 1 / rows[col][col]
        rows[col] = [(x * inv).normalized() for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                fac = rows[r][col]
                rows[r] = [(x - fac * y).normalized() for x, y in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


def g_support_ok(f: SymFunc, bound: int, c: int) -> bool:
    """True if every g_mu in the g-expansion of f has length at most bound."""
    return all(mu.length <= bound for mu in convert_to_g_basis(f, c))


# ---------------------------------------------------------------- closed forms used as oracles

def h_virtual_closed_form(r: int, a: int) -> QPoly:
    """(-1)^r q^{r(r-1)/2} [a choose r]_q, the value of h_r[(q^a - 1)/(1 - q)]."""
    return q_binomial(a, r) * QPoly.q(r * (r - 1) // 2, (-1) ** r)


def e_principal_closed_form(r: int, a: int) -> QPoly:
    """q^{r(r-1)/2} [a choose r]_q, the value of e_r(1, q, ..., q^{a-1})."""
    return q_binomial(a, r) * QPoly.q(r * (r - 1) // 2)
