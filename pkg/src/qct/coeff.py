"""Exact arithmetic in Q[q, 1/q] and Q(q).

`QPoly` is a Laurent polynomial in q with rational coefficients, stored densely
as a lowest exponent plus a coefficient tuple.  `QRat` is a quotient of two
QPolys; it is only reduced on demand.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Union

Scalar = Union[int, Fraction]


class InexactDivisionError(ArithmeticError):
    """Raised when an exact division leaves a nonzero remainder."""

    def __init__(self, remainder, message: str = "division is not exact"):
        super().__init__(f"{message}; remainder {remainder}")
        self.remainder = remainder


def _clean(x: Scalar) -> Scalar:
    if type(x) is Fraction and x.denominator == 1:
        return x.numerator
    return x


def _div(a: Scalar, b: Scalar) -> Scalar:
    if type(a) is int and type(b) is int and a % b == 0:
        return a // b
    return _clean(Fraction(a) / b)


class QPoly:
    """Laurent polynomial in q over Q.

    >>> (QPoly.one() - QPoly.q(2)) // (QPoly.one() - QPoly.q())
    QPoly('1 + q')
    """

    __slots__ = ("lo", "c", "_hash")

    def __init__(self, coeffs: Iterable[Scalar] = (), lo: int = 0):
        c = [_clean(x) for x in coeffs]
        start = 0
        while start < len(c) and c[start] == 0:
            start += 1
        end = len(c)
        while end > start and c[end - 1] == 0:
            end -= 1
        self.c = tuple(c[start:end])
        self.lo = lo + start if self.c else 0
        self._hash = None

    # construction helpers
    @classmethod
    def zero(cls) -> QPoly:
        return cls()

    @classmethod
    def one(cls) -> QPoly:
        return cls((1,))

    @classmethod
    def const(cls, x: Scalar) -> QPoly:
        return cls((x,))

    @classmethod
    def q(cls, e: int = 1, coeff: Scalar = 1) -> QPoly:
        return cls((coeff,), e)

    @classmethod
    def from_dict(cls, d: Mapping[int, Scalar]) -> QPoly:
        d = {e: v for e, v in d.items() if v != 0}
        if not d:
            return cls()
        lo, hi = min(d), max(d)
        return cls([d.get(e, 0) for e in range(lo, hi + 1)], lo)

    @staticmethod
    def coerce(x) -> QPoly:
        if isinstance(x, QPoly):
            return x
        if isinstance(x, Rational):
            return QPoly((x,))
        raise TypeError(f"cannot convert {type(x).__name__} to QPoly")

    # basic queries
    @property
    def hi(self) -> int:
        return self.lo + len(self.c) - 1

    def __bool__(self) -> bool:
        return bool(self.c)

    def is_zero(self) -> bool:
        return not self.c

    def is_monomial(self) -> bool:
        return len(self.c) == 1

    def items(self):
        for i, v in enumerate(self.c):
            if v:
                yield self.lo + i, v

    def to_dict(self) -> dict[int, Scalar]:
        return dict(self.items())

    def __getitem__(self, e: int) -> Scalar:
        i = e - self.lo
        if 0 <= i < len(self.c):
            return self.c[i]
        return 0

    def __call__(self, x):
        total = 0
        for e, v in self.items():
            total += v * (Fraction(x) ** e if e < 0 else x**e)
        return total

    # arithmetic
    def __neg__(self) -> QPoly:
        return QPoly([-v for v in self.c], self.lo)

    def __add__(self, other) -> QPoly:
        try:
            other = QPoly.coerce(other)
        except TypeError:
            return NotImplemented
        if not other.c:
            return self
        if not self.c:
            return other
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        out = [0] * (hi - lo + 1)
        for i, v in enumerate(self.c):
            out[self.lo - lo + i] += v
        for i, v in enumerate(other.c):
            out[other.lo - lo + i] += v
        return QPoly(out, lo)

    __radd__ = __add__

    def __sub__(self, other) -> QPoly:
        try:
            other = QPoly.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> QPoly:
        return QPoly.coerce(other) - self

    def __mul__(self, other) -> QPoly:
        if isinstance(other, Rational):
            return QPoly([v * other for v in self.c], self.lo)
        if not isinstance(other, QPoly):
            return NotImplemented
        if not self.c or not other.c:
            return QPoly()
        a, b = self.c, other.c
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return QPoly(out, self.lo + other.lo)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> QPoly:
        if n < 0:
            if not self.is_monomial():
                raise ValueError("negative power of a non-monomial QPoly")
            return QPoly((_div(1, self.c[0]) if abs(n) == 1 else Fraction(1, self.c[0]) ** -n,), self.lo * n)
        result, base = QPoly.one(), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, e: int) -> QPoly:
        """Multiply by q^e."""
        return QPoly(self.c, self.lo + e) if self.c else self

    def divmod_poly(self, d: QPoly) -> tuple[QPoly, QPoly]:
        """Division with remainder after stripping the q-power units of both sides."""
        if not d:
            raise ZeroDivisionError("QPoly division by zero")
        if not self:
            return QPoly(), QPoly()
        num = list(self.c)
        den = d.c
        lead = den[-1]
        nq = len(num) - len(den) + 1
        if nq <= 0:
            return QPoly(), QPoly(num, self.lo)
        quot = [0] * nq
        for i in range(nq - 1, -1, -1):
            coef = num[i + len(den) - 1]
            if coef:
                t = _div(coef, lead)
                quot[i] = t
                for j, y in enumerate(den):
                    num[i + j] -= t * y
        return QPoly(quot, self.lo - d.lo), QPoly(num[: len(den) - 1], self.lo)

    def __floordiv__(self, d) -> QPoly:
        return qpoly_exact_div(self, QPoly.coerce(d))

    def __truediv__(self, d) -> QRat:
        return QRat(self, QPoly.coerce(d))

    def __rtruediv__(self, n) -> QRat:
        return QRat(QPoly.coerce(n), self)

    def monic_gcd(self, other: QPoly) -> QPoly:
        """gcd in Q[q] of the unit-stripped polynomials, normalised to leading coefficient 1."""
        a = QPoly(self.c)
        b = QPoly(other.c)
        while b:
            _, r = a.divmod_poly(b)
            a, b = b, QPoly(r.c)
        if not a:
            return QPoly()
        return a * Fraction(1, a.c[-1]) if a.c[-1] != 1 else a

    def __eq__(self, other) -> bool:
        if isinstance(other, QPoly):
            return self.lo == other.lo and self.c == other.c
        if isinstance(other, Rational):
            return self == QPoly.coerce(other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.lo, self.c))
        return self._hash

    def __str__(self) -> str:
        if not self.c:
            return "0"
        parts = []
        for e, v in self.items():
            if e == 0:
                body = str(abs(v))
            else:
                qs = "q" if e == 1 else f"q^{e}"
                body = qs if abs(v) == 1 else f"{abs(v)}*{qs}"
            if not parts:
                parts.append(("-" if v < 0 else "") + body)
            else:
                parts.append(("- " if v < 0 else "+ ") + body)
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"QPoly('{self}')"


class QRat:
    """Element of Q(q) as num/den; reduction is lazy."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=1):
        num = QPoly.coerce(num)
        den = QPoly.coerce(den)
        if not den:
            raise ZeroDivisionError("QRat with zero denominator")
        self.num = num
        self.den = den

    @staticmethod
    def coerce(x) -> QRat:
        if isinstance(x, QRat):
            return x
        return QRat(QPoly.coerce(x))

    def normalized(self) -> QRat:
        """Cancel the gcd; the result has a q-power-free monic denominator."""
        if not self.num:
            return QRat(QPoly(), QPoly.one())
        g = self.num.monic_gcd(self.den)
        num = qpoly_exact_div(self.num, g)
        den = qpoly_exact_div(self.den, g)
        shift = den.lo
        lead = den.c[-1]
        num = num.shift(-shift) * Fraction(1, lead)
        den = den.shift(-shift) * Fraction(1, lead)
        return QRat(num, den)

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    def to_qpoly(self) -> QPoly:
        """The value as a Laurent polynomial; raises if it is not one."""
        return qpoly_exact_div(self.num, self.den)

    def __neg__(self) -> QRat:
        return QRat(-self.num, self.den)

    def __add__(self, other) -> QRat:
        try:
            other = QRat.coerce(other)
        except TypeError:
            return NotImplemented
        if self.den == other.den:
            return QRat(self.num + other.num, self.den)
        return QRat(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other) -> QRat:
        try:
            other = QRat.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> QRat:
        return QRat.coerce(other) - self

    def __mul__(self, other) -> QRat:
        try:
            other = QRat.coerce(other)
        except TypeError:
            return NotImplemented
        return QRat(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> QRat:
        other = QRat.coerce(other)
        if not other.num:
            raise ZeroDivisionError("QRat division by zero")
        return QRat(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> QRat:
        return QRat.coerce(other) / self

    def __pow__(self, n: int) -> QRat:
        if n < 0:
            return QRat(self.den**-n, self.num**-n)
        return QRat(self.num**n, self.den**n)

    def __eq__(self, other) -> bool:
        try:
            other = QRat.coerce(other)
        except TypeError:
            return NotImplemented
        return self.num * other.den == other.num * self.den

    def __hash__(self) -> int:
        r = self.normalized()
        return hash((r.num, r.den))

    def __str__(self) -> str:
        r = self.normalized()
        if r.den == 1:
            return str(r.num)
        return f"({r.num})/({r.den})"

    def __repr__(self) -> str:
        return f"QRat('{self}')"


def qpoly_exact_div(p: QPoly, d: QPoly) -> QPoly:
    """Quotient p/d in Q[q, 1/q]; raises InexactDivisionError unless d divides p."""
    quot, rem = p.divmod_poly(d)
    if rem:
        raise InexactDivisionError(rem)
    return quot


def q_factorial(n: int) -> QPoly:
    """(q; q)_n = (1 - q)(1 - q^2)...(1 - q^n)."""
    if n < 0:
        raise ValueError("q_factorial needs n >= 0")
    out = QPoly.one()
    for i in range(1, n + 1):
        out = out * _one_minus_q(i)
    return out


def _one_minus_q(m: int) -> QPoly:
    return QPoly.from_dict({0: 1, m: -1}) if m else QPoly()


def q_pochhammer_q(u: int, n: int) -> QPoly:
    """(q^u; q)_n as a Laurent polynomial in q."""
    out = QPoly.one()
    for i in range(n):
        out = out * _one_minus_q(u + i)
    return out


def q_binomial(n: int, t: int) -> QPoly:
    """Gaussian binomial coefficient [n choose t]_q; zero outside 0 <= t <= n."""
    if t < 0 or t > n or n < 0:
        return QPoly()
    return qpoly_exact_div(q_pochhammer_q(n - t + 1, t), q_factorial(t))
