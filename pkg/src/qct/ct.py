"""Constant-term extraction for Laurent series with geometric denominators.

A `SeriesExpr` is a finite numerator times a product of factors
1/(1 - q^u x/y), each expanded as a geometric series in the "small" ratio
x/y.  Variables are eliminated one batch at a time; a batch is a level of
the z-family (or all indices of one free name).

Two independent routes are provided:

* ``method="factored"`` (default): for a batch V, the coefficient extraction
  reduces to complete homogeneous polynomials in the letters q^u/y of the
  factors attached to each v in V, so no truncation is involved.
* ``method="expand"``: explicit truncated expansion of every factor up to the
  caps returned by `truncation_bounds`, followed by coefficient extraction.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Sequence

from .coeff import InexactDivisionError
from .multipoly import (
    BITS,
    Monomial,
    MultiLaurent,
    VarId,
    check_budget,
    digit,
    pochhammer,
    slot_of,
    unit_key,
    vandermonde,
)


class SmallnessError(ValueError):
    """A denominator factor is not oriented as a convergent geometric series."""


class EliminationError(ValueError):
    """The requested constant term is not a finite computation."""


@dataclass(frozen=True, order=True)
class GeomFactor:
    """The factor (1 - q^qshift * num_var/den_var), expanded in powers of num_var/den_var."""

    qshift: int
    num_var: VarId
    den_var: VarId

    def __post_init__(self):
        if self.num_var == self.den_var:
            raise SmallnessError(f"factor {self} has equal variables")
        if not (self.den_var.is_free or self.num_var.level < self.den_var.level):
            raise SmallnessError(f"factor {self} violates the smallness order: "
                                 f"{self.num_var} must lie below {self.den_var}")

    @property
    def letter(self) -> int:
        """Packed key of q^u / den_var: what one unit of expansion multiplies by, besides num_var."""
        return self.qshift - unit_key(self.den_var)

    def monomial(self) -> Monomial:
        return Monomial.of({self.num_var: 1, self.den_var: -1}, self.qshift)

    def __str__(self) -> str:
        return f"(1 - {self.monomial()})"


def batch_of(v: VarId) -> tuple:
    return (v.level, v.name) if v.is_free else (v.level,)


class SeriesExpr:
    """numerator / prod(denom); denominators form a multiset."""

    __slots__ = ("numerator", "denom")

    def __init__(self, numerator: MultiLaurent, denom: Iterable[GeomFactor] = ()):
        self.numerator = numerator if isinstance(numerator, MultiLaurent) else MultiLaurent.const(numerator)
        self.denom = tuple(sorted(denom))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SeriesExpr):
            return NotImplemented
        return self.denom == other.denom and self.numerator == other.numerator

    def __hash__(self):
        raise TypeError("SeriesExpr is not hashable")

    def __mul__(self, other) -> SeriesExpr:
        if isinstance(other, SeriesExpr):
            return SeriesExpr(self.numerator * other.numerator, self.denom + other.denom)
        return SeriesExpr(self.numerator * other, self.denom)

    __rmul__ = __mul__

    def variables(self) -> set[VarId]:
        out = self.numerator.variables()
        for f in self.denom:
            out |= {f.num_var, f.den_var}
        return out

    def __repr__(self) -> str:
        return f"SeriesExpr('{self.to_dsl()}')"

    def to_dsl(self) -> str:
        """DSL text that parses and elaborates back to an equal SeriesExpr."""
        num = self.numerator
        divisors = []
        for m, k in num.den:
            divisors.extend([f"poch(q^{m}, 1)" if m != 1 else "poch(q, 1)"] * k)
        # runs of consecutive shifts print as one Pochhammer symbol
        groups: dict[tuple, list[int]] = {}
        for f in self.denom:
            groups.setdefault((f.num_var, f.den_var), []).append(f.qshift)
        for (x, y), shifts in sorted(groups.items()):
            shifts.sort()
            start = prev = shifts[0]
            runs = []
            for u in shifts[1:]:
                if u == prev + 1:
                    prev = u
                    continue
                runs.append((start, prev - start + 1))
                start = prev = u
            runs.append((start, prev - start + 1))
            for u, n in runs:
                divisors.append(f"poch({Monomial.of({x: 1, y: -1}, u)}, {n})")
        body = num.numerator().to_dsl()
        if not divisors:
            return body
        return f"({body}) / (" + " * ".join(divisors) + ")"


# ---------------------------------------------------------------- ordering

def _batches(e: SeriesExpr, vars: Iterable[VarId]) -> list[list[VarId]]:
    """Eliminable batches of vars in an order compatible with every factor."""
    vs = set(vars)
    groups: dict[tuple, list[VarId]] = {}
    for v in sorted(vs):
        groups.setdefault(batch_of(v), []).append(v)
    ts = TopologicalSorter()
    for b in sorted(groups):
        ts.add(b)
    for f in e.denom:
        if f.den_var in vs:
            if f.num_var not in vs:
                raise EliminationError(f"cannot take CT in {f.den_var}: factor {f} is an infinite series "
                                       f"in {f.den_var}^-1 and {f.num_var} is not eliminated")
            nb, db = batch_of(f.num_var), batch_of(f.den_var)
            if nb == db:
                raise EliminationError(f"factor {f} couples variables of one batch")
            ts.add(db, nb)
    try:
        order = list(ts.static_order())
    except CycleError as exc:
        raise EliminationError(f"cyclic smallness order among {exc.args[1]}") from None
    return [groups[b] for b in order]


# ---------------------------------------------------------------- factored route

_H_CACHE: dict[tuple, list[dict]] = {}
_H_LOCK = threading.Lock()


def _complete_table(letters: tuple[int, ...], dmax: int) -> list[dict]:
    """[h_0, ..., h_dmax] of the letters, as term dicts (keys are packed monomials)."""
    with _H_LOCK:
        table = _H_CACHE.get(letters)
        if table is not None and len(table) > dmax:
            return table
    # prod_x 1/(1 - x t) truncated at t^dmax, one letter at a time
    rows = [{0: 1}] + [{} for _ in range(dmax)]
    for x in letters:
        for d in range(1, dmax + 1):
            prev = rows[d - 1]
            if not prev:
                continue
            cur = rows[d]
            for k, v in prev.items():
                nk = k + x
                nv = cur.get(nk, 0) + v
                if nv:
                    cur[nk] = nv
                else:
                    cur.pop(nk, None)
    with _H_LOCK:
        _H_CACHE[letters] = rows
    return rows


def _eliminate_batch(num: MultiLaurent, factors: list[GeomFactor], batch: list[VarId]) -> MultiLaurent:
    letters: dict[VarId, list[int]] = {v: [] for v in batch}
    for f in factors:
        letters[f.num_var].append(f.letter)
    slots = [slot_of(v) for v in batch]
    units = [1 << (BITS * s) for s in slots]
    grouped: dict[tuple, dict[int, object]] = {}
    has = [bool(letters[v]) for v in batch]
    for k, c in num.terms.items():
        es = []
        shift = 0
        for s, u, h in zip(slots, units, has):
            e = digit(k, s)
            if e > 0 or (e < 0 and not h):
                break
            es.append(-e)
            shift += e * u
        else:
            g = grouped.setdefault(tuple(es), {})
            rk = k - shift
            g[rk] = g.get(rk, 0) + c
    if not grouped:
        return MultiLaurent.zero()
    dmax = [max(es[i] for es in grouped) for i in range(len(batch))]
    tables = [_complete_table(tuple(sorted(letters[v])), dmax[i]) if has[i] else [{0: 1}]
              for i, v in enumerate(batch)]
    total: dict[int, object] = {}
    for es, rest in grouped.items():
        part = rest
        for i, d in enumerate(es):
            if d:
                h = tables[i][d]
                if not h:
                    part = {}
                    break
                part = _mul_dicts(part, h)
        for k, v in part.items():
            nv = total.get(k, 0) + v
            if nv:
                total[k] = nv
            else:
                total.pop(k, None)
        check_budget(len(total))
    return MultiLaurent(total, num.den)


def _mul_dicts(a: dict, b: dict) -> dict:
    out: dict = {}
    get = out.get
    for kb, vb in b.items():
        for ka, va in a.items():
            k = ka + kb
            out[k] = get(k, 0) + va * vb
    check_budget(len(out))
    return out


def eliminate(e: SeriesExpr, vars: Iterable[VarId], method: str = "factored", extra_cap: int = 0) -> SeriesExpr:
    """Constant term in vars; factors not involving vars are carried along."""
    vars = list(vars)
    if method == "expand":
        return _eliminate_expand(e, vars, extra_cap)
    if method != "factored":
        raise ValueError(f"unknown method {method!r}")
    num = e.numerator
    remaining = list(e.denom)
    for batch in _batches(e, vars):
        bset = set(batch)
        mine = [f for f in remaining if f.num_var in bset]
        remaining = [f for f in remaining if f.num_var not in bset]
        for f in remaining:
            if f.den_var in bset:
                raise EliminationError(f"factor {f} still pending when eliminating {f.den_var}")
        num = _eliminate_batch(num, mine, batch)
        if not num:
            return SeriesExpr(MultiLaurent.zero(), remaining)
    return SeriesExpr(num, remaining)


def constant_term(e: SeriesExpr, vars: Iterable[VarId], method: str = "factored", extra_cap: int = 0) -> MultiLaurent:
    """CT of e in vars, which must consume every denominator factor."""
    out = eliminate(e, vars, method, extra_cap)
    if out.denom and out.numerator:
        raise EliminationError("denominator factors remain after elimination: "
                               + ", ".join(str(f) for f in out.denom))
    return out.numerator.reduced()


# ---------------------------------------------------------------- expansion route

def truncation_bounds(e: SeriesExpr, vars: Iterable[VarId]) -> dict[GeomFactor, int]:
    """Expansion caps per factor that leave the CT over vars unchanged.

    A unit of expansion of a factor raises its numerator variable v by one and
    lowers its denominator variable by one.  The units attached to v never need
    to exceed B_v = max(0, -min exponent of v); expansions in earlier batches
    lower the minimum exponents seen by later ones, so bounds are computed in
    elimination order.  The cap is shared by all factors of v.
    """
    vars = list(vars)
    order = _batches(e, vars)
    vs = set(vars)
    emin = {v: (e.numerator.degree_range(v)[0] if e.numerator else 0) for v in vs}
    by_num: dict[VarId, list[GeomFactor]] = {}
    for f in e.denom:
        if f.num_var in vs:
            by_num.setdefault(f.num_var, []).append(f)
    caps: dict[GeomFactor, int] = {}
    for batch in order:
        for v in batch:
            fs = by_num.get(v, [])
            bound = max(0, -emin[v]) if fs else 0
            for y in {f.den_var for f in fs}:
                if y in emin:
                    emin[y] -= bound
            for f in fs:
                caps[f] = bound
    return caps


def _eliminate_expand(e: SeriesExpr, vars: list[VarId], extra_cap: int) -> SeriesExpr:
    caps = truncation_bounds(e, vars)
    vs = set(vars)
    num = e.numerator
    remaining = [f for f in e.denom if f.num_var not in vs]
    for batch in _batches(e, vars):
        for v in batch:
            fs = [f for f in e.denom if f.num_var == v]
            if fs:
                s = slot_of(v)
                bound = caps[fs[0]] + extra_cap
                series = MultiLaurent.one()
                for f in fs:
                    mk = f.monomial().key
                    geo = MultiLaurent({j * mk: 1 for j in range(bound + 1)})
                    series = series * geo
                    series = MultiLaurent({k: c for k, c in series.terms.items() if digit(k, s) <= bound})
                num = num * series
            # v's exponent is final now: its factors are expanded and so are all
            # factors that lower it (they belong to earlier batches)
            num = num.coefficient_of({v: 0})
            if not num:
                return SeriesExpr(MultiLaurent.zero(), remaining)
    return SeriesExpr(num, remaining)


# ---------------------------------------------------------------- splitting route

def splitting_coefficient_vars(ys: Sequence[VarId], c: int, i: int, j: int) -> MultiLaurent:
    """The partial-fraction coefficient of 1/(1 - q^j y_i/w) in Vand_c(y)/prod_l (y_l/w)_c.

    i is 1-based, 0 <= j < c.
    """
    n = len(ys)
    if not (1 <= i <= n and 0 <= j < c):
        raise IndexError(f"coefficient index (i={i}, j={j}) out of range for n={n}, c={c}")
    yi = ys[i - 1]
    out = MultiLaurent.q((n - 1) * j * c + (n - i) * c)
    for li, yl in enumerate(ys, start=1):
        r = Monomial.of({yi: 1, yl: -1})
        if li < i:
            out = out * pochhammer(Monomial.q(1 - c) * r, j) * pochhammer(Monomial.q(j + 1) * r, c - j)
        elif li > i:
            out = out * pochhammer(Monomial.q(-c) * r, j + 1) * pochhammer(Monomial.q(j + 1) * r, c - j - 1)
    others = [y for y in ys if y != yi]
    out = out * vandermonde(others, c)
    # 1/((q^-j)_j (q)_{c-j-1})
    return out.divide_den([-s for s in range(1, j + 1)] + list(range(1, c - j)))


def _splitting_shape(e: SeriesExpr) -> tuple[list[VarId], VarId, int]:
    if not e.denom:
        raise ValueError("splitting needs at least one denominator factor")
    ws = {f.den_var for f in e.denom}
    if len(ws) != 1:
        raise ValueError(f"splitting needs a single denominator variable, got {sorted(map(str, ws))}")
    (w,) = ws
    shifts: dict[VarId, list[int]] = {}
    for f in e.denom:
        shifts.setdefault(f.num_var, []).append(f.qshift)
    ys = sorted(shifts)
    c = len(shifts[ys[0]])
    for y in ys:
        if sorted(shifts[y]) != list(range(c)):
            raise ValueError(f"factors of {y} are not (y/w)_c for a common c")
    if len({batch_of(y) for y in ys}) != 1:
        raise ValueError("splitting needs one variable family")
    return ys, w, c


def ct_via_splitting(e: SeriesExpr) -> MultiLaurent:
    """CT over the numerator variables of the factors, computed by partial fractions.

    The numerator must be Vand_c(y) times a Laurent polynomial m; then
    CT_y m*A_ij/(1 - q^j y_i/w) = sum_l (q^j/w)^l [y_i^-l, y_other^0](m A_ij).
    """
    ys, w, c = _splitting_shape(e)
    try:
        m = e.numerator.exact_div(vandermonde(ys, c))
    except InexactDivisionError:
        raise ValueError("numerator is not a multiple of the Vandermonde-type product") from None
    slots = [slot_of(y) for y in ys]
    wunit = unit_key(w)
    total = MultiLaurent.zero()
    for i in range(1, len(ys) + 1):
        si = slots[i - 1]
        ui = 1 << (BITS * si)
        for j in range(c):
            p = m * splitting_coefficient_vars(ys, c, i, j)
            out: dict = {}
            for k, v in p.terms.items():
                e_i = digit(k, si)
                if e_i > 0 or any(digit(k, s) for s in slots if s != si):
                    continue
                ell = -e_i
                nk = k - e_i * ui + ell * (j - wunit)
                out[nk] = out.get(nk, 0) + v
            total = total + MultiLaurent(out, p.den)
    return total.reduced()
