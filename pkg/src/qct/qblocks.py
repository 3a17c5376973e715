"""Builders for the Morris-type integrands and checks of the infrastructure results.

Conventions: z^{(s)}_i is ``z(s, i)``, z_0 is ``Z0``; the Vandermonde-type
product prod_{i<j} (z_i/z_j)_c (q z_j/z_i)_c uses index order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import product

from .coeff import InexactDivisionError, QPoly, q_binomial, q_factorial, qpoly_exact_div
from .ct import GeomFactor, SeriesExpr, constant_term, ct_via_splitting, splitting_coefficient_vars
from .multipoly import Z0, Monomial, MultiLaurent, VarId, free, pochhammer, vandermonde, z
from .report import Outcome, VerifyReport, verified


@dataclass(frozen=True)
class MorrisParams:
    k: int
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.c < 1 or min(self.k, self.a, self.b) < 0:
            raise ValueError(f"invalid Morris parameters {self}")


@dataclass(frozen=True)
class LParams:
    k1: int
    k2: int
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.c < 1 or min(self.k1, self.k2, self.a, self.b) < 0:
            raise ValueError(f"invalid L parameters {self}")


@dataclass(frozen=True)
class ChainParams:
    """n levels with sizes k_1 >= ... >= k_{n+1}; only level 1 carries the a-factor."""

    k: tuple[int, ...]
    a: int
    b: tuple[int, ...]
    c: int
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(self.k))
        object.__setattr__(self, "b", tuple(self.b))
        object.__setattr__(self, "n", len(self.b))
        if self.n < 1 or len(self.k) != self.n + 1:
            raise ValueError("need n >= 1 exponents b and n+1 sizes k")
        if any(x < y for x, y in zip(self.k, self.k[1:])) or self.k[-1] < 0:
            raise ValueError(f"sizes {self.k} must be weakly decreasing and nonnegative")
        if self.c < 1 or self.a < 0 or min(self.b) < 0:
            raise ValueError(f"invalid chain parameters {self}")

    def sigma(self, s: int) -> int:
        return sum(self.b[:s])

    def admissible(self) -> bool:
        """a + sigma_s + s >= s c for every level s."""
        return all(self.a + self.sigma(s) + s >= s * self.c for s in range(1, self.n + 1))


def zs(level: int, k: int) -> list[VarId]:
    return [z(level, i) for i in range(1, k + 1)]


def morris_product(p: MorrisParams) -> QPoly:
    """M_k(a,b,c) = prod_{i<k} (q)_{a+b+ic}(q)_{(i+1)c} / ((q)_{a+ic}(q)_{b+ic}(q)_c)."""
    return morris_M(p.k, p.a, p.b, p.c)


def morris_M(k: int, a: int, b: int, c: int) -> QPoly:
    num = QPoly.one()
    den = QPoly.one()
    for i in range(k):
        num = num * q_factorial(a + b + i * c) * q_factorial((i + 1) * c)
        den = den * q_factorial(a + i * c) * q_factorial(b + i * c) * q_factorial(c)
    return qpoly_exact_div(num, den)


def _morris_numerator(k: int, a: int, b: int, c: int, level: int = 1) -> MultiLaurent:
    out = MultiLaurent.one()
    for v in zs(level, k):
        r = Monomial.of({Z0: 1, v: -1})
        out = out * pochhammer(r, a) * pochhammer(Monomial.q() / r, b)
    return out * vandermonde(zs(level, k), c)


def build_morris_lhs(p: MorrisParams) -> SeriesExpr:
    return SeriesExpr(_morris_numerator(p.k, p.a, p.b, p.c))


def l_factors(k1: int, k2: int, c: int, shift: int = 0, level: int = 1) -> list[GeomFactor]:
    """Factors of prod_{j<=k2} prod_{i<=k1} (q^shift z_i^{(s)}/z_j^{(s+1)})_c."""
    return [GeomFactor(shift + m, z(level, i), z(level + 1, j))
            for j in range(1, k2 + 1) for i in range(1, k1 + 1) for m in range(c)]


def build_L(p: LParams) -> SeriesExpr:
    return SeriesExpr(_morris_numerator(p.k1, p.a, p.b, p.c), l_factors(p.k1, p.k2, p.c))


def compute_L(p: LParams, method: str = "factored") -> MultiLaurent:
    """L_{k1,k2}(a,b,c): CT over z^{(1)} of build_L, a Laurent polynomial in z_0, z^{(2)}."""
    return constant_term(build_L(p), zs(1, p.k1), method)


# ---------------------------------------------------------------- splitting

def split_vars(n: int) -> tuple[list[VarId], VarId]:
    return [free("y", i) for i in range(1, n + 1)], free("w")


def splitting_coefficient(n: int, c: int, i: int, j: int) -> MultiLaurent:
    """A_ij of the partial-fraction expansion of Vand_c(y)/prod_l (y_l/w)_c, in y_1..y_n."""
    ys, _ = split_vars(n)
    return splitting_coefficient_vars(ys, c, i, j)


def splitting_residue(n: int, c: int, i: int, j: int) -> MultiLaurent:
    """A_ij recomputed as the residue: Vand_c(y) / prod over the other factors at w = q^j y_i."""
    if not (1 <= i <= n and 0 <= j < c):
        raise IndexError(f"coefficient index (i={i}, j={j}) out of range")
    ys, _ = split_vars(n)
    yi = ys[i - 1]
    den = MultiLaurent.one()
    for yl in ys:
        if yl != yi:
            den = den * pochhammer(Monomial.of({yl: 1, yi: -1}, -j), c)
    # the l = i factors are pure q: prod_{m != j} (1 - q^{m-j})
    quot = vandermonde(ys, c).exact_div(den)
    return quot.divide_den([m - j for m in range(c) if m != j])


def splitting_series(n: int, c: int) -> SeriesExpr:
    ys, w = split_vars(n)
    return SeriesExpr(vandermonde(ys, c), [GeomFactor(m, y, w) for y in ys for m in range(c)])


def verify_splitting(n: int, c: int) -> VerifyReport:
    """Vand_c(y) = sum_{i,j} A_ij * prod_{(l,m) != (i,j)} (1 - q^m y_l/w), plus the residue oracle."""

    def body() -> Outcome:
        ys, w = split_vars(n)
        lin = {(l, m): MultiLaurent.one() - MultiLaurent.mono(Monomial.of({ys[l - 1]: 1, w: -1}, m))
               for l in range(1, n + 1) for m in range(c)}
        lhs = vandermonde(ys, c)
        rhs = MultiLaurent.zero()
        checks = {}
        for i in range(1, n + 1):
            for j in range(c):
                a_ij = splitting_coefficient(n, c, i, j)
                checks[f"residue[{i},{j}]"] = a_ij == splitting_residue(n, c, i, j)
                rest = MultiLaurent.one()
                for key, f in lin.items():
                    if key != (i, j):
                        rest = rest * f
                rhs = rhs + a_ij * rest
        rhs = rhs.reduced()
        checks["identity"] = lhs == rhs
        detail = f"lhs terms {len(lhs)}, rhs terms {len(rhs)}"
        return Outcome(all(checks.values()), detail, checks, lhs, rhs)

    return verified("splitting", {"n": n, "c": c}, body)


# ---------------------------------------------------------------- Pochhammer shifts

def verify_pochhammer_shift(i: int, j: int, t: int, form: str = "a") -> VerifyReport:
    """Form "a": (1/y)_i (qy)_j = q^{it} (q^{1-i}y)_t (q^{t+1}y)_{j-t} (q^{-t}/y)_i, 0 <= t <= j.
    Form "b": (y)_j (q/y)_i = q^{i(t+1)} (q^{-i}y)_{t+1} (q^{t+1}y)_{j-t-1} (q^{-t}/y)_i, -1 <= t <= j-1.
    """
    if i < 1 or j < 1:
        raise ValueError("i and j must be positive")
    if form == "a" and not 0 <= t <= j:
        raise ValueError(f"t={t} outside 0..{j}")
    if form == "b" and not -1 <= t <= j - 1:
        raise ValueError(f"t={t} outside -1..{j - 1}")
    if form not in ("a", "b"):
        raise ValueError(f"unknown form {form!r}")
    y = free("y")
    Y = Monomial.var(y)

    def body() -> Outcome:
        inv = Y ** -1
        if form == "a":
            lhs = pochhammer(inv, i) * pochhammer(Monomial.q() * Y, j)
            rhs = (MultiLaurent.q(i * t) * pochhammer(Monomial.q(1 - i) * Y, t)
                   * pochhammer(Monomial.q(t + 1) * Y, j - t) * pochhammer(Monomial.q(-t) * inv, i))
        else:
            lhs = pochhammer(Y, j) * pochhammer(Monomial.q() * inv, i)
            rhs = (MultiLaurent.q(i * (t + 1)) * pochhammer(Monomial.q(-i) * Y, t + 1)
                   * pochhammer(Monomial.q(t + 1) * Y, j - t - 1) * pochhammer(Monomial.q(-t) * inv, i))
        return Outcome(lhs == rhs, lhs=lhs, rhs=rhs)

    return verified(f"pochhammer-shift-{form}", {"i": i, "j": j, "t": t}, body)


# ---------------------------------------------------------------- vanishing

def vanishing_hypothesis(k2: int, t_vec) -> bool:
    """sum of the nonpositive t's plus the smallest p - k2 positive ones is positive."""
    nonpos = [t for t in t_vec if t <= 0]
    pos = sorted(t for t in t_vec if t > 0)
    return sum(nonpos) + sum(pos[: max(0, len(pos) - k2)]) > 0


def vanishing_series(k1: int, k2: int, c: int, t_vec) -> SeriesExpr:
    mono = Monomial.of({v: -t for v, t in zip(zs(1, k1), t_vec)})
    return SeriesExpr(vandermonde(zs(1, k1), c) * MultiLaurent.mono(mono), l_factors(k1, k2, c))


def verify_vanishing(k1: int, k2: int, c: int, t_vec) -> VerifyReport:
    t_vec = tuple(t_vec)
    params = {"k1": k1, "k2": k2, "c": c, "t": list(t_vec)}

    def body() -> Outcome:
        if not (k1 > k2 >= 0 and c >= 1 and len(t_vec) == k1):
            return Outcome(None, "hypothesis not satisfied, no claim: need k1 > k2 >= 0, c >= 1, len(t) = k1",
                           status="no-claim")
        if not vanishing_hypothesis(k2, t_vec):
            return Outcome(None, "hypothesis not satisfied, no claim")
        val = constant_term(vanishing_series(k1, k2, c, t_vec), zs(1, k1))
        return Outcome(val.is_zero(), lhs=val, rhs=MultiLaurent.zero())

    return verified("vanishing", params, body)


# ---------------------------------------------------------------- structure of L

def z0_degrees(L: MultiLaurent) -> list[int]:
    lo, hi = L.degree_range(Z0)
    return [d for d in range(lo, hi + 1) if L.coefficient_of({Z0: d})] if L else []


def verify_L_structure(p: LParams, L: MultiLaurent | None = None) -> VerifyReport:
    """Five structural facts about L_{k1,k2}(a,b,c), all checked on one computed L."""
    k1, k2, a, b, c = p.k1, p.k2, p.a, p.b, p.c

    def body() -> Outcome:
        if k1 < k2:
            return Outcome(None, "hypothesis not satisfied, no claim: k1 < k2")
        val = compute_L(p) if L is None else L
        checks: dict[str, bool] = {}
        notes = []
        degs = z0_degrees(val)
        checks["no_negative_z0"] = all(d >= 0 for d in degs)
        checks["z0_degree_bound"] = all(d <= k2 * a for d in degs)
        M = MultiLaurent.from_qpoly(morris_M(k1, a, b, c))
        checks["constant_coefficient"] = val.coefficient_of({Z0: 0}) == M
        if b + 1 <= c <= a + b + 1:
            ok = True
            for l in range(1, k2 + 1):
                for m in range(1 - a, b + 2 - c):
                    if val.substitute(Z0, Monomial.of({z(2, l): 1}, m)):
                        ok = False
                        notes.append(f"nonzero at z0 = q^{m} z[2,{l}]")
            checks["vanishes_at_roots"] = ok
            checks["factored_form"] = _check_factored_form(val, M, k2, a, b, c, notes)
        else:
            notes.append("root and factor claims need b+1 <= c <= a+b+1; skipped")
        return Outcome(all(checks.values()), "; ".join(notes), checks, val)

    return verified("L-structure", asdict(p), body)


def _check_factored_form(L, M, k2, a, b, c, notes) -> bool:
    """L = M prod_j (q^{c-1-b} z0/z_j^{(2)})_{a+b+1-c} (1 + C_1 z0 + ... + C_{k2(c-1-b)} z0^{k2(c-1-b)})."""
    fac = MultiLaurent.one()
    for j in range(1, k2 + 1):
        fac = fac * pochhammer(Monomial.of({Z0: 1, z(2, j): -1}, c - 1 - b), a + b + 1 - c)
    try:
        quot = L.exact_div(fac)
    except InexactDivisionError:
        notes.append("claimed Pochhammer factor does not divide L")
        return False
    degs = z0_degrees(quot)
    if degs and (min(degs) < 0 or max(degs) > k2 * (c - 1 - b)):
        notes.append(f"cofactor has z0-degrees {degs}")
        return False
    if quot.coefficient_of({Z0: 0}) != M:
        notes.append("cofactor constant coefficient differs from M")
        return False
    return True


def verify_morris(p: MorrisParams, method: str = "factored") -> VerifyReport:
    """CT of the Morris product equals M_k(a,b,c)."""

    def body() -> Outcome:
        lhs = constant_term(build_morris_lhs(p), [Z0] + zs(1, p.k), method)
        rhs = MultiLaurent.from_qpoly(morris_product(p))
        return Outcome(lhs == rhs, lhs=lhs, rhs=rhs)

    return verified("q-morris", asdict(p), body)


def morris_k1_is_binomial(a: int, b: int) -> bool:
    """M_1(a,b,c) collapses to the q-binomial [a+b choose a]."""
    return all(morris_M(1, a, b, c) == q_binomial(a + b, a) for c in (1, 2, 3))


def vanishing_grid(max_k1: int = 3, max_c: int = 2, lo: int = -2, hi: int = 3):
    """Every (k1, k2, c, t) satisfying the vanishing hypothesis."""
    for k1 in range(1, max_k1 + 1):
        for k2 in range(0, k1):
            for c in range(1, max_c + 1):
                for t in product(range(lo, hi + 1), repeat=k1):
                    if vanishing_hypothesis(k2, t):
                        yield k1, k2, c, t


def ct_by_splitting(n: int, c: int, multiplier: MultiLaurent) -> tuple[MultiLaurent, MultiLaurent]:
    """(constant_term, ct_via_splitting) for Vand_c(y) * multiplier / prod (y_l/w)_c."""
    e = splitting_series(n, c)
    e = SeriesExpr(e.numerator * multiplier, e.denom)
    ys, _ = split_vars(n)
    return constant_term(e, ys), ct_via_splitting(e)
