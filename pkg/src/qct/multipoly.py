"""Sparse multivariate Laurent polynomials in q and indexed variables.

A term is stored as ``packed exponent key -> rational coefficient``.  The
exponent of q lives in slot 0 of the key, so a coefficient in Q[q, 1/q] is
spread over several terms.  Each variable gets a slot from a process-wide
registry; a key is ``sum(e_slot << (BITS * slot))`` with signed digits, so
multiplying monomials is integer addition.  Comparing keys as integers is a
valid monomial order (lex with the newest slot most significant), which is
what exact division relies on.

A value may also carry a denominator that is a product of factors (1 - q^m),
m > 0, stored as a sorted tuple of ``(m, multiplicity)``.  That covers every
denominator the plethystic evaluations produce.
"""

from __future__ import annotations

import contextvars
import threading
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Mapping, NamedTuple

from .coeff import InexactDivisionError, QPoly, QRat, Scalar, _clean, _div, qpoly_exact_div

BITS = 16
HALF = 1 << (BITS - 1)
MASK = (1 << BITS) - 1
FREE_LEVEL = 1000


class BudgetExceeded(RuntimeError):
    """An intermediate result grew past the active term budget."""


class VarId(NamedTuple):
    """Variable identity: z0 is (0, 0), z_i^{(s)} is (s, i), free names use FREE_LEVEL."""

    level: int
    index: int = 0
    name: str = "z"

    @property
    def is_free(self) -> bool:
        return self.level >= FREE_LEVEL

    def __str__(self) -> str:
        if self.is_free:
            return f"{self.name}{self.index}" if self.index else self.name
        if self.level == 0:
            return "z0"
        return f"z[{self.level},{self.index}]"


Z0 = VarId(0, 0)


def z(level: int, index: int) -> VarId:
    if level < 1 or index < 1:
        raise ValueError("z[s,i] needs s >= 1 and i >= 1")
    return VarId(level, index)


def free(name: str, index: int = 0) -> VarId:
    return VarId(FREE_LEVEL, index, name)


class _Registry:
    def __init__(self):
        self._lock = threading.Lock()
        self.slots: dict[VarId, int] = {}
        self.vars: list[VarId | None] = [None]  # slot 0 is q
        self.offsets: list[int] = [HALF]

    def slot(self, v: VarId) -> int:
        s = self.slots.get(v)
        if s is not None:
            return s
        with self._lock:
            s = self.slots.get(v)
            if s is None:
                s = len(self.vars)
                self.vars.append(v)
                self.offsets.append(self.offsets[-1] + (HALF << (BITS * s)))
                self.slots[v] = s
        return s


_REG = _Registry()


def slot_of(v: VarId) -> int:
    return _REG.slot(v)


def unit_key(v: VarId) -> int:
    return 1 << (BITS * _REG.slot(v))


def digit(key: int, slot: int) -> int:
    """Exponent stored in one slot of a packed key."""
    return (((key + _REG.offsets[slot]) >> (BITS * slot)) & MASK) - HALF


def decode(key: int) -> tuple[int, dict[VarId, int]]:
    """Split a packed key into (q exponent, {var: exponent})."""
    out = {}
    qe = None
    s = 0
    while key or qe is None:
        d = ((key + HALF) & MASK) - HALF
        key = (key - d) >> BITS
        if s == 0:
            qe = d
        elif d:
            out[_REG.vars[s]] = d
        s += 1
    return qe, out


def encode(qpow: int, exps: Mapping[VarId, int]) -> int:
    key = qpow
    for v, e in exps.items():
        if e:
            if not -HALF < e < HALF:
                raise OverflowError(f"exponent {e} of {v} out of range")
            key += e << (BITS * _REG.slot(v))
    return key


def var_slots(key: int) -> list[int]:
    """Slots (other than q) with a nonzero digit."""
    out = []
    s = 0
    while key:
        d = ((key + HALF) & MASK) - HALF
        key = (key - d) >> BITS
        if d and s:
            out.append(s)
        s += 1
    return out


# term budget
_BUDGET: contextvars.ContextVar[int | None] = contextvars.ContextVar("qct_term_budget", default=None)


class term_budget:
    """Context manager bounding the size of products computed inside it."""

    def __init__(self, limit: int | None):
        self.limit = limit

    def __enter__(self):
        self._tok = _BUDGET.set(self.limit)
        return self

    def __exit__(self, *exc):
        _BUDGET.reset(self._tok)
        return False


def check_budget(n: int) -> None:
    lim = _BUDGET.get()
    if lim is not None and n > lim:
        raise BudgetExceeded(f"{n} terms exceeds budget {lim}")


@dataclass(frozen=True)
class Monomial:
    """q^qpow times a product of variable powers."""

    exps: tuple[tuple[VarId, int], ...] = ()
    qpow: int = 0

    @staticmethod
    def of(exps: Mapping[VarId, int] | None = None, qpow: int = 0) -> Monomial:
        items = tuple(sorted((v, e) for v, e in (exps or {}).items() if e))
        return Monomial(items, qpow)

    @staticmethod
    def var(v: VarId, e: int = 1) -> Monomial:
        return Monomial.of({v: e})

    @staticmethod
    def q(e: int = 1) -> Monomial:
        return Monomial((), e)

    @staticmethod
    def from_key(key: int) -> Monomial:
        qe, ex = decode(key)
        return Monomial.of(ex, qe)

    @property
    def key(self) -> int:
        return encode(self.qpow, dict(self.exps))

    def as_dict(self) -> dict[VarId, int]:
        return dict(self.exps)

    def variables(self) -> set[VarId]:
        return {v for v, _ in self.exps}

    def __mul__(self, other: Monomial) -> Monomial:
        d = self.as_dict()
        for v, e in other.exps:
            d[v] = d.get(v, 0) + e
        return Monomial.of(d, self.qpow + other.qpow)

    def __truediv__(self, other: Monomial) -> Monomial:
        return self * other ** -1

    def __pow__(self, n: int) -> Monomial:
        return Monomial(tuple((v, e * n) for v, e in self.exps) if n else (), self.qpow * n)

    def __str__(self) -> str:
        return format_monomial(1, self.qpow, self.as_dict()) if self.exps or self.qpow else "1"


def _exp_str(base: str, e: int) -> str:
    if e == 1:
        return base
    return f"{base}^{e}"


def format_monomial(coeff: Scalar, qe: int, exps: Mapping[VarId, int]) -> str:
    """Render coeff * q^qe * vars in DSL syntax; coeff sign is the caller's business."""
    parts = []
    if coeff != 1 or (not qe and not exps):
        parts.append(str(coeff) if type(coeff) is int else f"{coeff.numerator}/{coeff.denominator}")
    if qe:
        parts.append(_exp_str("q", qe))
    for v in sorted(exps):
        parts.append(_exp_str(str(v), exps[v]))
    return "*".join(parts)


def _merge_den(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for m, k in b:
        d[m] = d.get(m, 0) + k
    return tuple(sorted(d.items()))


def _den_sub(a: tuple, b: tuple) -> tuple:
    """Factors of a left after removing b (b must be contained in a)."""
    d = dict(a)
    for m, k in b:
        d[m] -= k
    return tuple(sorted((m, k) for m, k in d.items() if k))


def _den_lcm(a: tuple, b: tuple) -> tuple:
    d = dict(a)
    for m, k in b:
        d[m] = max(d.get(m, 0), k)
    return tuple(sorted(d.items()))


def _one_minus_q_terms(m: int) -> dict[int, int]:
    return {0: 1, m: -1}


def _mul_terms(a: dict, b: dict) -> dict:
    if len(a) < len(b):
        a, b = b, a
    out: dict[int, Scalar] = {}
    get = out.get
    for kb, vb in b.items():
        for ka, va in a.items():
            k = ka + kb
            out[k] = get(k, 0) + va * vb
    res = {k: _clean(v) for k, v in out.items() if v}
    check_budget(len(res))
    return res


def _times_den(terms: dict, den: tuple) -> dict:
    """Multiply a term dict by the polynomial prod (1 - q^m)^k."""
    for m, k in den:
        for _ in range(k):
            out = dict(terms)
            for key, v in terms.items():
                nk = key + m
                nv = out.get(nk, 0) - v
                if nv:
                    out[nk] = nv
                else:
                    out.pop(nk, None)
            terms = out
    return terms


class MultiLaurent:
    """Laurent polynomial over Q(q) in the z-families and free variables.

    Values are immutable; every operation returns a new object.
    """

    __slots__ = ("terms", "den")

    def __init__(self, terms: Mapping[int, Scalar] | None = None, den: tuple = ()):
        self.terms: dict[int, Scalar] = {k: _clean(v) for k, v in (terms or {}).items() if v}
        self.den: tuple = den if self.terms else ()

    # constructors
    @classmethod
    def _raw(cls, terms: dict, den: tuple = ()) -> MultiLaurent:
        obj = cls.__new__(cls)
        obj.terms = terms
        obj.den = den if terms else ()
        return obj

    @classmethod
    def zero(cls) -> MultiLaurent:
        return cls._raw({})

    @classmethod
    def one(cls) -> MultiLaurent:
        return cls._raw({0: 1})

    @classmethod
    def const(cls, x) -> MultiLaurent:
        if isinstance(x, MultiLaurent):
            return x
        if isinstance(x, QPoly):
            return cls.from_qpoly(x)
        if isinstance(x, QRat):
            return cls.from_qrat(x)
        if isinstance(x, Rational):
            return cls._raw({0: _clean(x)} if x else {})
        raise TypeError(f"cannot convert {type(x).__name__} to MultiLaurent")

    @classmethod
    def var(cls, v: VarId, e: int = 1) -> MultiLaurent:
        return cls._raw({e * unit_key(v): 1})

    @classmethod
    def q(cls, e: int = 1) -> MultiLaurent:
        return cls._raw({e: 1})

    @classmethod
    def mono(cls, m: Monomial, coeff: Scalar = 1) -> MultiLaurent:
        return cls._raw({m.key: _clean(coeff)} if coeff else {})

    @classmethod
    def from_qpoly(cls, p: QPoly) -> MultiLaurent:
        return cls._raw(dict(p.items()))

    @classmethod
    def from_qrat(cls, r: QRat) -> MultiLaurent:
        """Embed a QRat whose denominator is a product of (1 - q^m) factors up to a unit."""
        r = r.normalized()
        num = cls.from_qpoly(r.num)
        if r.den == 1:
            return num
        den, unit = factor_den(r.den)
        return (num * unit).divide_den(den)

    @classmethod
    def from_terms(cls, items: Iterable[tuple[Monomial, Scalar]]) -> MultiLaurent:
        out: dict[int, Scalar] = {}
        for m, c in items:
            k = m.key
            out[k] = out.get(k, 0) + c
        return cls(out)

    # queries
    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def variables(self) -> set[VarId]:
        slots = set()
        for k in self.terms:
            slots.update(var_slots(k))
        return {_REG.vars[s] for s in slots}

    def items(self) -> Iterator[tuple[Monomial, Scalar]]:
        """Terms as (Monomial, rational coefficient) in canonical order."""
        for qe, ex, v in self._sorted():
            yield Monomial.of(ex, qe), v

    def _sorted(self):
        rows = []
        for k, v in self.terms.items():
            qe, ex = decode(k)
            rows.append((tuple(sorted(ex.items())), qe, ex, v))
        rows.sort(key=lambda r: (r[0], r[1]))
        return [(qe, ex, v) for _, qe, ex, v in rows]

    def degree_range(self, v: VarId) -> tuple[int, int]:
        s = slot_of(v)
        ds = [digit(k, s) for k in self.terms]
        return (min(ds), max(ds)) if ds else (0, 0)

    def den_poly(self) -> MultiLaurent:
        return MultiLaurent._raw(_times_den({0: 1}, self.den))

    def numerator(self) -> MultiLaurent:
        return MultiLaurent._raw(dict(self.terms))

    # arithmetic
    def __neg__(self) -> MultiLaurent:
        return MultiLaurent._raw({k: -v for k, v in self.terms.items()}, self.den)

    def _coerce(self, other) -> MultiLaurent:
        return other if isinstance(other, MultiLaurent) else MultiLaurent.const(other)

    def __add__(self, other) -> MultiLaurent:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        if self.den == other.den:
            a, b, den = self.terms, other.terms, self.den
        else:
            den = _den_lcm(self.den, other.den)
            a = _times_den(self.terms, _den_sub(den, self.den))
            b = _times_den(other.terms, _den_sub(den, other.den))
        out = dict(a)
        for k, v in b.items():
            nv = out.get(k, 0) + v
            if nv:
                out[k] = _clean(nv)
            else:
                out.pop(k, None)
        return MultiLaurent._raw(out, den)

    __radd__ = __add__

    def __sub__(self, other) -> MultiLaurent:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> MultiLaurent:
        return self._coerce(other) - self

    def __mul__(self, other) -> MultiLaurent:
        if isinstance(other, Rational) and not isinstance(other, bool):
            if not other:
                return MultiLaurent.zero()
            return MultiLaurent._raw({k: _clean(v * other) for k, v in self.terms.items()}, self.den)
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if not self.terms or not other.terms:
            return MultiLaurent.zero()
        return MultiLaurent._raw(_mul_terms(self.terms, other.terms), _merge_den(self.den, other.den))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> MultiLaurent:
        if n < 0:
            if len(self.terms) != 1 or self.den:
                raise ValueError("negative power of a non-monomial")
            (k, v), = self.terms.items()
            return MultiLaurent._raw({k * n: _clean(Fraction(1, 1) / Fraction(v) ** -n)})
        result, base = MultiLaurent.one(), self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mul_monomial(self, key: int, coeff: Scalar = 1) -> MultiLaurent:
        return MultiLaurent._raw({k + key: _clean(v * coeff) for k, v in self.terms.items()}, self.den)

    def divide_den(self, factors: Iterable[int] | tuple) -> MultiLaurent:
        """Divide by prod (1 - q^m); accepts ints m (m != 0) or (m, k) pairs."""
        extra: dict[int, int] = {}
        val = self
        for f in factors:
            m, k = f if isinstance(f, tuple) else (f, 1)
            if m == 0:
                raise ZeroDivisionError("division by 1 - q^0")
            if m < 0:
                # 1 - q^m = -q^m (1 - q^-m)
                val = val.mul_monomial(-m * k, (-1) ** k)
                m = -m
            extra[m] = extra.get(m, 0) + k
        return MultiLaurent._raw(val.terms, _merge_den(val.den, tuple(sorted(extra.items()))))

    def exact_div(self, d: MultiLaurent) -> MultiLaurent:
        """Quotient self/d; raises InexactDivisionError if d does not divide exactly."""
        if not d.terms:
            raise ZeroDivisionError("division by zero MultiLaurent")
        q = _exact_div_terms(self.terms, d.terms)
        return MultiLaurent._raw(_times_den(q, d.den), self.den)

    def reduced(self) -> MultiLaurent:
        """Cancel denominator factors that divide the numerator."""
        if not self.den:
            return self
        terms = self.terms
        left = []
        for m, k in self.den:
            kept = 0
            for _ in range(k):
                try:
                    terms = _exact_div_terms(terms, {0: 1, m: -1})
                except InexactDivisionError:
                    kept += 1
            if kept:
                left.append((m, kept))
        return MultiLaurent._raw(terms, tuple(left))

    def is_polynomial(self) -> bool:
        return not self.reduced().den

    def __eq__(self, other) -> bool:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if self.den == other.den:
            return self.terms == other.terms
        a = _times_den(self.terms, other.den)
        b = _times_den(other.terms, self.den)
        return {k: v for k, v in a.items() if v} == {k: v for k, v in b.items() if v}

    def __hash__(self):
        raise TypeError("MultiLaurent is not hashable")

    def adams(self, r: int) -> MultiLaurent:
        """Replace every variable and q by its r-th power (plethysm with p_r)."""
        return MultiLaurent._raw({k * r: v for k, v in self.terms.items()},
                                 tuple((m * r, k) for m, k in self.den))

    # variable manipulation
    def substitute(self, v: VarId, m: Monomial | MultiLaurent) -> MultiLaurent:
        """Replace v by a monomial (possibly carrying q and a rational coefficient)."""
        s = slot_of(v)
        if isinstance(m, Monomial):
            mk, mc = m.key, 1
            mvars = m.variables()
        else:
            if len(m.terms) != 1 or m.den:
                raise ValueError("substitute expects a monomial")
            (mk, mc), = m.terms.items()
            mvars = m.variables()
        if v in mvars:
            raise ValueError(f"substituted monomial contains {v}")
        unit = 1 << (BITS * s)
        out: dict[int, Scalar] = {}
        for k, c in self.terms.items():
            e = digit(k, s)
            if e:
                nk = k - e * unit + e * mk
                c = c * (Fraction(mc) ** e if mc != 1 else 1)
            else:
                nk = k
            out[nk] = out.get(nk, 0) + c
        return MultiLaurent(out, self.den)

    def coefficient_of(self, expo: Mapping[VarId, int], vars: Iterable[VarId] | None = None) -> MultiLaurent:
        """Coefficient of prod v^expo[v] over vars (default: the keys of expo)."""
        vs = set(vars) if vars is not None else set(expo)
        vs |= set(expo)
        sel = [(slot_of(v), expo.get(v, 0)) for v in vs]
        shift = sum(e << (BITS * s) for s, e in sel)
        out = {}
        for k, c in self.terms.items():
            if all(digit(k, s) == e for s, e in sel):
                out[k - shift] = c
        return MultiLaurent._raw(out, self.den)

    def constant_term_in(self, vars: Iterable[VarId]) -> MultiLaurent:
        return self.coefficient_of({}, vars)

    def q_coefficients(self) -> dict[int, QPoly]:
        """Group by variable part: packed var key -> coefficient polynomial in q."""
        groups: dict[int, dict[int, Scalar]] = {}
        for k, c in self.terms.items():
            qe = ((k + HALF) & MASK) - HALF
            groups.setdefault(k - qe, {})[qe] = c
        return {vk: QPoly.from_dict(d) for vk, d in groups.items()}

    def as_qrat(self) -> QRat:
        """Value as an element of Q(q); raises if variables remain."""
        if self.variables():
            raise ValueError("expression still contains variables")
        num = QPoly.from_dict(self.terms)
        den = QPoly.one()
        for m, k in self.den:
            den = den * QPoly.from_dict({0: 1, m: -1}) ** k
        return QRat(num, den)

    # printing
    def __str__(self) -> str:
        return self.to_dsl()

    def __repr__(self) -> str:
        return f"MultiLaurent('{self}')"

    def to_dsl(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for qe, ex, v in self._sorted():
            body = format_monomial(abs(v), qe, ex)
            if not parts:
                parts.append(("-" if v < 0 else "") + body)
            else:
                parts.append(("- " if v < 0 else "+ ") + body)
        text = " ".join(parts)
        if not self.den:
            return text
        dens = []
        for m, k in self.den:
            dens.extend([f"poch({_exp_str('q', m)}, 1)"] * k)
        return f"({text})/(" + "*".join(dens) + ")" if len(dens) > 1 else f"({text})/{dens[0]}"


def _exact_div_terms(p: dict, d: dict) -> dict:
    if not p:
        return {}
    if len(d) == 1:
        (kd, vd), = d.items()
        return {k - kd: _div(v, vd) for k, v in p.items()}
    # bounding box on every slot: quotient exponents are confined to it if exact
    slots = set()
    for k in p:
        slots.update(var_slots(k))
    for k in d:
        slots.update(var_slots(k))
    slots.add(0)
    box = {}
    for s in slots:
        pd = [digit(k, s) for k in p]
        dd = [digit(k, s) for k in d]
        box[s] = (min(pd) - min(dd), max(pd) - max(dd))
        if box[s][0] > box[s][1]:
            raise InexactDivisionError(MultiLaurent._raw(dict(p)))
    lead_d = max(d)
    lead_c = d[lead_d]
    rest_d = [(k - lead_d, v) for k, v in d.items() if k != lead_d]
    rem = dict(p)
    quot: dict[int, Scalar] = {}
    while rem:
        lk = max(rem)
        qk = lk - lead_d
        for s, (lo, hi) in box.items():
            e = digit(qk, s)
            if e < lo or e > hi:
                raise InexactDivisionError(MultiLaurent._raw(rem))
        t = _div(rem.pop(lk), lead_c)
        quot[qk] = t
        for dk, dv in rest_d:
            nk = lk + dk
            nv = rem.get(nk, 0) - t * dv
            if nv:
                rem[nk] = nv
            else:
                rem.pop(nk, None)
        check_budget(len(rem))
    return quot


def factor_den(den: QPoly) -> tuple[tuple, QRat]:
    """Write 1/den as (cofactor) / prod (1 - q^m)^k.

    Works whenever den is a monomial times a product of cyclotomic
    polynomials: each Phi_m is traded for (1 - q^m), the quotient
    (1 - q^m)/Phi_m moving to the numerator.  Returns (factors, cofactor).
    """
    shift = den.lo
    rest = QPoly(den.c)
    factors: dict[int, int] = {}
    cofactor = QPoly.one()
    deg = rest.hi
    for m in range(1, 2 * deg * deg + 2):
        if rest.hi == 0:
            break
        phi = cyclotomic(m)
        while phi.hi <= rest.hi:
            quot, r = rest.divmod_poly(phi)
            if r:
                break
            rest = quot
            factors[m] = factors.get(m, 0) + 1
            cofactor = cofactor * qpoly_exact_div(QPoly.from_dict({0: 1, m: -1}), phi)
    if rest.hi != 0:
        raise ValueError(f"denominator {den} is not a product of cyclotomic factors")
    return tuple(sorted(factors.items())), QRat(cofactor, QPoly.q(shift, rest.c[0]))


_CYC: dict[int, QPoly] = {}


def cyclotomic(m: int) -> QPoly:
    if m not in _CYC:
        p = QPoly.from_dict({0: -1, m: 1})
        for d in range(1, m):
            if m % d == 0:
                p = qpoly_exact_div(p, cyclotomic(d))
        _CYC[m] = p
    return _CYC[m]


# builders
def ml_mul(p1: MultiLaurent, p2: MultiLaurent) -> MultiLaurent:
    return p1 * p2


def pochhammer(m: Monomial | MultiLaurent, n: int) -> MultiLaurent:
    """(m; q)_n = prod_{i<n} (1 - q^i m)."""
    if n < 0:
        raise ValueError("pochhammer needs n >= 0")
    if isinstance(m, Monomial):
        mk, mc = m.key, 1
    else:
        if len(m.terms) != 1 or m.den:
            raise ValueError("pochhammer base must be a monomial")
        (mk, mc), = m.terms.items()
    out = MultiLaurent.one()
    for i in range(n):
        out = out * MultiLaurent._raw({0: 1, mk + i: -mc} if mk + i else ({0: 1 - mc} if mc != 1 else {}))
    return out


def substitute(p: MultiLaurent, v: VarId, m: Monomial) -> MultiLaurent:
    return p.substitute(v, m)


def coefficient_of(p: MultiLaurent, vars: Iterable[VarId], expo: Mapping[VarId, int]) -> MultiLaurent:
    return p.coefficient_of(expo, vars)


def vandermonde(vars: list[VarId], c: int) -> MultiLaurent:
    """prod_{i<j} (y_i/y_j)_c (q y_j/y_i)_c in the given order."""
    out = MultiLaurent.one()
    for i in range(len(vars)):
        for j in range(i + 1, len(vars)):
            r = Monomial.of({vars[i]: 1, vars[j]: -1})
            out = out * pochhammer(r, c) * pochhammer(Monomial.q() * r ** -1, c)
    return out

