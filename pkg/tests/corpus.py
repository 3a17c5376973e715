"""Shared inputs for the parser tests and the acceptance suite."""

from __future__ import annotations

from qct.qblocks import (
    ChainParams,
    LParams,
    MorrisParams,
    build_L,
    build_morris_lhs,
    splitting_series,
    vanishing_series,
)
from qct.theorems import chain_series, g_insertion


def builder_corpus():
    out = []
    for k in range(1, 4):
        for a in range(3):
            for b in range(3):
                for c in (1, 2):
                    out.append(build_morris_lhs(MorrisParams(k, a, b, c)))
    for k1 in range(0, 3):
        for k2 in range(0, k1 + 1):
            for a, b, c in [(1, 0, 1), (2, 1, 2), (0, 0, 2)]:
                out.append(build_L(LParams(k1, k2, a, b, c)))
    for n in (1, 2, 3):
        for c in (1, 2):
            out.append(splitting_series(n, c))
    out.append(vanishing_series(2, 1, 2, (2, -1)))
    out.append(chain_series(ChainParams((2, 1, 1), 1, (1, 2), 2)))
    out.append(chain_series(ChainParams((2, 1), 1, (1,), 2), [g_insertion((1,), 2, "x")]))
    return out


# (text, line, col, subset of the expected tokens)
SYNTAX_ERRORS = [
    ("poch(z0/z[1,1]", 1, 15, {","}),
    ("", 1, 1, {"integer"}),
    ("x +", 1, 4, {"integer"}),
    ("(x", 1, 3, {")"}),
    ("z[1 2]", 1, 5, {","}),
    ("z[1,2", 1, 6, {"]"}),
    ("CT[] x", 1, 4, {"z0"}),
    ("CT[z0 x", 1, 7, {"]"}),
    ("CT z0", 1, 4, {"["}),
    ("x @ y", 1, 3, set()),
    ("prod(i=1..; x)", 1, 11, {"integer"}),
    ("prod(i=1..2 x)", 1, 13, {";"}),
    ("prod(1=1..2; x)", 1, 6, {"identifier"}),
    ("prod(i 1..2; x)", 1, 8, {"="}),
    ("poch(x 2)", 1, 8, {","}),
    ("poch(x, 2", 1, 10, {")"}),
    ("x^", 1, 3, {"integer"}),
    ("x y", 1, 3, {"end of input"}),
    ("x\n  + * y", 2, 5, {"integer"}),
    ("2 * CT[z0] z0", 1, 5, set()),
]
