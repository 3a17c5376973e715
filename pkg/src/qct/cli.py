"""Command-line front end: run verification grids and evaluate DSL files.

Exit codes for ``verify``: 0 when every point passes (points outside an
identity's hypotheses count as passing, they make no claim), 1 when any
point fails, 2 when the only problems are budget aborts, 64 for usage
errors.  ``ct`` exits 65 on a DSL error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterator

from . import qblocks, theorems
from .dsl import DslError, evaluate, parse
from .multipoly import BudgetExceeded, term_budget
from .report import BUDGET, FAIL, VerifyReport
from .symfun import Partition, convert_to_g_basis, partitions, sf_e, sf_g_lambda, sf_h, sf_p

EXIT_OK, EXIT_FAIL, EXIT_BUDGET, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 64, 65


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- insertion literals

_INSERT_RE = re.compile(r"^(?P<kind>[ghep]):(?P<lam>\d+(?:\.\d+)*)(?:@(?P<X>[^%#]*))?(?:%(?P<Y>[^#]*))?(?:#(?P<level>\d+))?$")


@dataclass(frozen=True)
class InsertLiteral:
    """KIND:LAM[@X][%Y][#LEVEL], e.g. ``g:2.1@x``, ``p:2%y``, ``e:2#2``.

    KIND is g (g_lambda), h, e or p (products over the parts of LAM).
    """

    kind: str
    lam: tuple[int, ...]
    X: str = ""
    Y: str | None = None
    level: int = 1

    @classmethod
    def parse(cls, text: str) -> InsertLiteral:
        m = _INSERT_RE.match(text.strip())
        if not m:
            raise UsageError(f"bad insertion literal {text!r}; expected KIND:LAM[@X][%Y][#LEVEL]")
        lam = tuple(sorted((int(x) for x in m["lam"].split(".")), reverse=True))
        if any(x <= 0 for x in lam):
            raise UsageError(f"partition parts must be positive in {text!r}")
        return cls(m["kind"], lam, m["X"] or "", m["Y"], int(m["level"] or 1))

    def text(self) -> str:
        out = f"{self.kind}:{'.'.join(map(str, self.lam))}"
        if self.X:
            out += f"@{self.X}"
        if self.Y is not None:
            out += f"%{self.Y}"
        if self.level != 1:
            out += f"#{self.level}"
        return out

    def build(self, c: int) -> theorems.Insertion:
        lam = Partition(self.lam)
        X = theorems.alphabet_named(self.X)
        Y = None if self.Y is None else theorems.alphabet_named(self.Y)
        if self.kind == "g":
            f = sf_g_lambda(lam, c)
            budget = lam
        else:
            ctor = {"h": sf_h, "e": sf_e, "p": sf_p}[self.kind]
            f = ctor(lam[0])
            for part in lam[1:]:
                f = f * ctor(part)
            f.name = f"{self.kind}{''.join(map(str, lam))}"
            # smallest length budget certifying f in the g-span
            length = max((mu.length for mu in convert_to_g_basis(f, c)), default=0)
            size = sum(lam)
            budget = Partition((size - length + 1,) + (1,) * (length - 1)) if length else Partition(())
        return theorems.Insertion(f, budget, X, Y, self.level, self.text())


# ---------------------------------------------------------------- identity registry

Runner = Callable[[dict, tuple], Iterator[VerifyReport]]


@dataclass(frozen=True)
class Identity:
    name: str
    params: dict[str, tuple[int, int]]  # default inclusive ranges
    summary: str
    run: Runner
    uses_inserts: bool = False


def _insert_spec(inserts: tuple, c: int) -> tuple:
    return tuple(InsertLiteral.parse(t).build(c) for t in inserts)


def _run_morris(p, _):
    yield qblocks.verify_morris(qblocks.MorrisParams(p["k"], p["a"], p["b"], p["c"]))


def _run_splitting(p, _):
    yield qblocks.verify_splitting(p["n"], p["c"])


def _run_shift(p, _):
    i, j = p["i"], p["j"]
    for t in range(0, j + 1):
        yield qblocks.verify_pochhammer_shift(i, j, t, "a")
    for t in range(-1, j):
        yield qblocks.verify_pochhammer_shift(i, j, t, "b")


def _run_vanishing(p, _):
    k1, k2, c = p["k1"], p["k2"], p["c"]
    if not k1 > k2:
        return
    for t in product(range(p["tlo"], p["thi"] + 1), repeat=k1):
        if qblocks.vanishing_hypothesis(k2, t):
            yield qblocks.verify_vanishing(k1, k2, c, t)


def _run_L(p, _):
    lp = p["k1"], p["k2"], p["a"], p["b"], p["c"]
    if lp[1] > lp[0] or not lp[3] + 1 <= lp[4] <= lp[2] + lp[3] + 1:
        return
    yield qblocks.verify_L_structure(qblocks.LParams(*lp))


def _lambdas(max_size: int):
    for n in range(1, max_size + 1):
        yield from (tuple(lam) for lam in partitions(n))


def _run_lemma_bc(p, _):
    yield theorems.verify_lemma_bc(p["k1"], p["k2"], p["a"], p["c"])


def _lam_list(p, inserts):
    if inserts:
        return [InsertLiteral.parse(t).lam for t in inserts]
    return list(_lambdas(p["size"]))


def _run_prop_h(p, inserts):
    for lam in _lam_list(p, inserts):
        yield theorems.verify_prop_h(p["k1"], p["k2"], p["a"], p["c"], lam)


def _run_thm_g(p, inserts):
    yield theorems.verify_thm2(p["k1"], p["k2"], p["a"], p["c"], _insert_spec(inserts, p["c"]))


def _run_thm_p(p, inserts):
    yield theorems.verify_thm3(p["k1"], p["k2"], p["a"], p["c"], _insert_spec(inserts, p["c"]))


def _run_lemma_bc2(p, _):
    yield theorems.verify_lemma_bc2(p["k1"], p["k2"], p["a"], p["b"], p["c"])


def _run_prop_h_equiv(p, inserts):
    for lam in _lam_list(p, inserts):
        yield theorems.verify_prop_h_equiv(p["k1"], p["k2"], p["a"], p["b"], p["c"], lam)


def _run_prop_g_equiv(p, inserts):
    yield theorems.verify_prop_g_equiv(p["k1"], p["k2"], p["a"], p["b"], p["c"], _insert_spec(inserts, p["c"]))


def _run_thm_g_general(p, inserts):
    yield theorems.verify_thm_g_general(p["k1"], p["k2"], p["a"], p["b"], p["c"], _insert_spec(inserts, p["c"]))


def _chain_params(p) -> qblocks.ChainParams | None:
    n = p["n"]
    k = tuple(p[f"k{s}"] for s in range(1, n + 2))
    b = tuple(p[f"b{s}"] for s in range(1, n + 1))
    if any(x < y for x, y in zip(k, k[1:])):
        return None
    return qblocks.ChainParams(k, p["a"], b, p["c"])


def _run_chain(variant):
    def run(p, inserts):
        cp = _chain_params(p)
        if cp is not None:
            yield theorems.verify_thm_chain(cp, _insert_spec(inserts, p["c"]), variant)
    return run


_SINGLE = {"k1": (1, 3), "k2": (0, 3), "a": (0, 2), "c": (1, 2)}
_SINGLE_B = {**_SINGLE, "b": (0, 2)}

IDENTITIES: dict[str, Identity] = {i.name: i for i in [
    Identity("q-morris", {"k": (1, 3), "a": (0, 2), "b": (0, 2), "c": (1, 2)},
             "CT of the Morris product against its closed-form product", _run_morris),
    Identity("splitting", {"n": (1, 3), "c": (1, 2)},
             "partial-fraction splitting of prod (y_l/w)_c^-1, with a residue check of each coefficient",
             _run_splitting),
    Identity("pochhammer-shift", {"i": (1, 4), "j": (1, 4)},
             "the two shifted Pochhammer rewritings, for every admissible t", _run_shift),
    Identity("vanishing", {"k1": (1, 3), "k2": (0, 2), "c": (1, 2), "tlo": (-2, -2), "thi": (3, 3)},
             "CT of z^-t Vand / L-denominators vanishes when the t-vector hypothesis holds",
             _run_vanishing),
    Identity("L-structure", {"k1": (0, 3), "k2": (0, 3), "a": (0, 2), "b": (0, 1), "c": (1, 2)},
             "z0-degree, constant term, root and factored-form checks on L_{k1,k2}(a,b,c)", _run_L),
    Identity("lemma-bc", _SINGLE, "CT of L_{k1,k2}(a,c-1,c) in closed form", _run_lemma_bc),
    Identity("prop-h", {**_SINGLE, "size": (3, 3)},
             "g_lambda insertion evaluated as h_lambda of a virtual alphabet (all lambda up to size, or --insert)",
             _run_prop_h, True),
    Identity("thm-g", _SINGLE, "g-span insertions f[Z + X], with z0", _run_thm_g, True),
    Identity("thm-p", _SINGLE, "insertions f[Y Z + X] with rational coefficients, with z0", _run_thm_p, True),
    Identity("lemma-bc2", _SINGLE_B, "general-b closed form of the single-level CT", _run_lemma_bc2),
    Identity("prop-h-equiv", {**_SINGLE_B, "size": (3, 3)}, "general-b form of prop-h", _run_prop_h_equiv, True),
    Identity("prop-g-equiv", _SINGLE_B, "general-b g-span insertions at z0 = 1", _run_prop_g_equiv, True),
    Identity("thm-g-general", _SINGLE_B, "general-b g-span insertions, with z0", _run_thm_g_general, True),
    Identity("chain", {"n": (1, 1), "k1": (1, 2), "k2": (0, 2), "k3": (0, 0), "b1": (0, 2), "b2": (0, 2),
                       "a": (0, 2), "c": (1, 2)},
             "n-level chain identity at z0 = 1 (g-span insertions via --insert)", _run_chain("g"), True),
    Identity("chain-p", {"n": (1, 1), "k1": (1, 2), "k2": (0, 2), "k3": (0, 0), "b1": (0, 2), "b2": (0, 2),
                         "a": (0, 2), "c": (1, 2)},
             "n-level chain identity with rational-coefficient insertions f[Y Z + X]", _run_chain("p"), True),
]}


# ---------------------------------------------------------------- grid running

_RANGE_RE = re.compile(r"^(?P<name>[A-Za-z_]\w*)=(?P<lo>-?\d+)(?:\.\.(?P<hi>-?\d+))?$")


def parse_range(text: str) -> tuple[str, tuple[int, int]]:
    m = _RANGE_RE.match(text.strip())
    if not m:
        raise UsageError(f"malformed range {text!r}; expected name=lo..hi or name=value")
    lo = int(m["lo"])
    hi = int(m["hi"]) if m["hi"] is not None else lo
    if hi < lo:
        raise UsageError(f"empty range {text!r}")
    return m["name"], (lo, hi)


def grid(identity: Identity, overrides: dict[str, tuple[int, int]]) -> list[dict[str, int]]:
    unknown = set(overrides) - set(identity.params)
    if unknown:
        raise UsageError(f"{identity.name} has no parameter(s) {', '.join(sorted(unknown))}; "
                         f"known: {', '.join(identity.params)}")
    ranges = {**identity.params, **overrides}
    names = list(ranges)
    return [dict(zip(names, vals)) for vals in product(*(range(lo, hi + 1) for lo, hi in ranges.values()))]


def _point_ok(name: str, p: dict) -> bool:
    if name.startswith("chain"):
        # unused level parameters would only duplicate points
        n = p["n"]
        extra = [f"k{s}" for s in range(n + 2, 4)] + [f"b{s}" for s in range(n + 1, 3)]
        return all(p[x] == IDENTITIES[name].params[x][0] for x in extra if x in p)
    return True


def run_point(name: str, params: dict, inserts: tuple, budget: int | None) -> list[dict]:
    """Evaluate one grid point; returns JSON-ready report dicts (picklable for worker processes)."""
    ident = IDENTITIES[name]
    out = []
    with term_budget(budget):
        it = ident.run(params, inserts)
        while True:
            try:
                rep = next(it)
            except StopIteration:
                break
            except BudgetExceeded as exc:
                out.append({"identity": name, "params": params, "pass": None, "status": BUDGET,
                            "millis": 0.0, "detail": str(exc)})
                break
            d = rep.to_json()
            if inserts and "spec" not in d["params"]:
                d["params"]["insert"] = list(inserts)
            out.append(d)
    return out


def _run_point_star(args):
    return run_point(*args)


def verify(name: str, overrides: dict, inserts: tuple, jobs: int, budget: int | None, out) -> int:
    ident = IDENTITIES[name]
    if inserts and not ident.uses_inserts:
        raise UsageError(f"{name} takes no --insert literals")
    for t in inserts:
        InsertLiteral.parse(t)
    points = [p for p in grid(ident, overrides) if _point_ok(name, p)]
    tasks = [(name, p, tuple(inserts), budget) for p in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_run_point_star, tasks, chunksize=max(1, len(tasks) // (4 * jobs)))
            statuses = _emit(results, out)
    else:
        statuses = _emit(map(_run_point_star, tasks), out)
    if FAIL in statuses:
        return EXIT_FAIL
    if BUDGET in statuses:
        return EXIT_BUDGET
    return EXIT_OK


def _emit(results, out) -> set[str]:
    statuses = set()
    for reports in results:
        for d in reports:
            statuses.add(d["status"])
            out.write(json.dumps(d, sort_keys=False) + "\n")
            out.flush()
    return statuses


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qct", description="Exact q-series constant term engine")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="check an identity over a parameter grid (JSON lines)")
    v.add_argument("identity")
    v.add_argument("--param", action="append", default=[], metavar="NAME=LO..HI")
    v.add_argument("--insert", action="append", default=[], metavar="KIND:LAM[@X][%%Y][#LEVEL]")
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--budget", type=int, default=None, metavar="TERMS")
    v.add_argument("--json", metavar="PATH", help="write the report lines here instead of stdout")

    c = sub.add_parser("ct", help="evaluate a .qct expression file")
    c.add_argument("--file", required=True)
    c.add_argument("--bind", action="append", default=[], metavar="NAME=INT")
    c.add_argument("--method", choices=["factored", "expand"], default="factored")

    sub.add_parser("list", help="list the known identities and their default grids")
    return ap


def _cmd_list(out) -> int:
    for ident in IDENTITIES.values():
        ranges = " ".join(f"{k}={lo}..{hi}" if lo != hi else f"{k}={lo}" for k, (lo, hi) in ident.params.items())
        extra = " [--insert]" if ident.uses_inserts else ""
        out.write(f"{ident.name:16} {ident.summary}\n{'':16} default grid: {ranges}{extra}\n")
    return EXIT_OK


def _cmd_ct(args, out) -> int:
    bindings = {}
    for b in args.bind:
        name, (lo, hi) = parse_range(b)
        if lo != hi:
            raise UsageError(f"--bind takes a single value, got {b!r}")
        bindings[name] = lo
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    try:
        result = evaluate(parse(text), bindings, args.method)
    except DslError as exc:
        sys.stderr.write(f"{args.file}:{exc.line}:{exc.col}: {exc.message}\n")
        return EXIT_DATA
    except ValueError as exc:
        sys.stderr.write(f"{args.file}: {exc}\n")
        return EXIT_DATA
    out.write(result.to_dsl() + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.cmd == "list":
            return _cmd_list(out)
        if args.cmd == "ct":
            return _cmd_ct(args, out)
        if args.identity not in IDENTITIES:
            raise UsageError(f"unknown identity {args.identity!r}; try 'qct list'")
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        overrides = dict(parse_range(p) for p in args.param)
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                return verify(args.identity, overrides, tuple(args.insert), args.jobs, args.budget, fh)
        return verify(args.identity, overrides, tuple(args.insert), args.jobs, args.budget, out)
    except UsageError as exc:
        sys.stderr.write(f"qct: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
