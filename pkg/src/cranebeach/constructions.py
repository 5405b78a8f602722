"""Auxiliary constructions: MSB0 from a fast-growing function, the
independence witness for AND_MSB, counting and summing formulas, and the
BIT' translation.

Values such as ``f(512) = 2^81`` do not fit in any word, so the chain
``F -> Q -> MSB0`` is checked with :func:`evaluate_guarded`, which reads
formulas over the natural numbers and requires every quantifier to carry a
guard atom bounding its witnesses.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .evaluator import EvalEnv, evaluate
from .formula import (And, Exists, FalseConst, Forall, Formula, Implies, LetterAtom, Not, Or,
                      OrderAtom, PredAtom, TrueConst, free_variables, map_atoms, parse_formula)
from .predicates import (Expr, PredicateDef, PredicateError, Registry, builtin, default_registry,
                         derived, floorlog2, function_graph, msb, verify_finite_degree)

__all__ = [
    "F_EXPR", "f_value", "f_predicate", "build_msbz_via_F", "evaluate_guarded", "GuardedEvaluator",
    "GuardError",
    "check_msbz_chain", "ChainReport",
    "and_msb", "and_without_guard", "IndependenceWitness", "independence_witness",
    "check_independence",
    "CountFormula", "count_up_to_const", "sum_from_count", "SumConstruction", "graph_from_count",
    "check_sum", "check_phi_prime", "bit_translate", "check_bit_recovery",
]


# ---------------------------------------------------------------------------
# guarded evaluation over N


class GuardError(ValueError):
    pass


def _conjuncts(f: Formula):
    if isinstance(f, And):
        for c in f.children:
            yield from _conjuncts(c)
    else:
        yield f


def _candidates(atom: Formula, var: str, a: Mapping[str, int], registry: Registry):
    """Values of ``var`` that can satisfy ``atom`` given the bound
    variables, or ``None`` when the atom does not bound ``var``."""
    if isinstance(atom, OrderAtom):
        if atom.left == var and atom.right != var and atom.right in a:
            y = a[atom.right]
            return range(0, y) if atom.op == "<" else range(0, y + 1) if atom.op == "<=" else [y]
        if atom.right == var and atom.left != var and atom.left in a and atom.op == "=":
            return [a[atom.left]]
        return None
    if not isinstance(atom, PredAtom) or var not in atom.args:
        return None
    p = registry.resolve(atom.name)
    slots = [i for i, v in enumerate(atom.args) if v == var]
    others = [(i, a[v]) for i, v in enumerate(atom.args) if v != var and v in a]
    if len(others) != len(atom.args) - len(slots):
        return None
    tag = p.meta.get("tag")
    if tag == "plus" and len(slots) == 1:
        vals = dict(others)
        s = slots[0]
        if s == 2:
            return [vals[0] + vals[1]]
        rest = vals[2] - vals[1 - s]
        return [rest] if rest >= 0 else []
    if not p.finite_degree or not others:
        return None
    out = set()
    for t in p.enumerate(others[0][1]):
        if all(t[i] == val for i, val in others) and len({t[i] for i in slots}) == 1:
            out.add(t[slots[0]])
    return sorted(out)


class GuardedEvaluator:
    """Truth of letter-free formulas over the natural numbers.

    ``exists x`` needs a conjunct of its body, and ``forall x`` a conjunct
    of the left side of its implication, that bounds ``x`` given the
    variables already bound: ``x < y``, ``x <= y``, ``x = y``, a ``PLUS``
    atom with the other two arguments bound, or a finite-degree atom with
    another argument bound. Quantifiers range over the guard's witnesses,
    which is exact because the guard must hold anyway. Results of
    quantified subformulas are memoized across calls.
    """

    def __init__(self, registry: Registry | None = None):
        self.registry = registry or default_registry()
        self._memo: dict = {}
        self._free: dict[int, tuple[str, ...]] = {}
        self._keep: list[Formula] = []

    def __call__(self, f: Formula, a: Mapping[str, int] | None = None) -> bool:
        return self._ev(f, dict(a or {}))

    def _ev(self, g: Formula, a: dict) -> bool:
        if isinstance(g, TrueConst):
            return True
        if isinstance(g, FalseConst):
            return False
        if isinstance(g, LetterAtom):
            raise GuardError("letter atoms have no meaning over N")
        if isinstance(g, OrderAtom):
            x, y = a[g.left], a[g.right]
            return x < y if g.op == "<" else x <= y if g.op == "<=" else x == y
        if isinstance(g, PredAtom):
            return bool(self.registry.resolve(g.name).contains(*[a[v] for v in g.args]))
        if isinstance(g, Not):
            return not self._ev(g.child, a)
        if isinstance(g, And):
            return all(self._ev(c, a) for c in g.children)
        if isinstance(g, Or):
            return any(self._ev(c, a) for c in g.children)
        if isinstance(g, Implies):
            return (not self._ev(g.lhs, a)) or self._ev(g.rhs, a)
        fv = self._free.get(id(g))
        if fv is None:
            fv = self._free[id(g)] = tuple(sorted(free_variables(g)))
            self._keep.append(g)
        key = (id(g),) + tuple(a[v] for v in fv)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if isinstance(g, Exists):
            guards = list(_conjuncts(g.body))
        elif isinstance(g.body, Implies):
            guards = list(_conjuncts(g.body.lhs))
        else:
            guards = []
        best = None
        for atom in guards:
            c = _candidates(atom, g.var, a, self.registry)
            if c is not None and (best is None or len(c) < len(best)):
                best = c
        if best is None:
            raise GuardError(f"quantifier over {g.var} has no guard bounding it")
        want = isinstance(g, Exists)
        result = not want
        inner = dict(a)
        # top-down: witnesses near an upper bound are the common case
        for value in reversed(best):
            inner[g.var] = value
            if self._ev(g.body, inner) == want:
                result = want
                break
        self._memo[key] = result
        return result


def evaluate_guarded(f: Formula, a: Mapping[str, int] | None = None,
                     registry: Registry | None = None) -> bool:
    """One-shot :class:`GuardedEvaluator` call."""
    return GuardedEvaluator(registry)(f, a)


# ---------------------------------------------------------------------------
# F -> Q -> MSB0

# f(n) = 2^(floor(log n)^2) with f(0) = 0
F_EXPR = "min(x, 1) * 2 ** (floorlog2(max(x, 1)) ** 2)"


def f_value(n: int) -> int:
    return 0 if n == 0 else 2 ** (floorlog2(n) ** 2)


def f_predicate(name: str = "F") -> PredicateDef:
    return function_graph(name, F_EXPR)


_Q_TEXT = ("exists m. (m < {n} & !(exists t. (t < {n} & m < t)) & "
           "(exists fa. (F(m, fa) & (exists fb. (F({n}, fb) & !(fa = fb))))))")


def _q_formula(n: str) -> Formula:
    return parse_formula(_Q_TEXT.format(n=n))


def build_msbz_via_F() -> tuple[Formula, Formula]:
    """``Q(n)``: ``f(n-1) != f(n)``, i.e. n is a power of two.
    ``MSB0(n, m)``: ``m + p = n`` for the largest power of two ``p <= n``.
    Both are over ``{<=, PLUS, F}``; Q has free ``n``, MSB0 free ``n, m``."""
    q = _q_formula("n")
    qp = _q_formula("p")
    qq = _q_formula("q")
    largest = And((qp, OrderAtom("<=", "p", "n"),
                   Forall("q", Implies(And((OrderAtom("<=", "q", "n"), qq)), OrderAtom("<=", "q", "p")))))
    msbz = Exists("p", And((PredAtom("PLUS", ("m", "p", "n")), largest)))
    return q, msbz


@dataclass
class ChainReport:
    upto: int
    q_mismatches: list[int]
    msb0_mismatches: list[tuple[int, int]]
    pairs_checked: int

    @property
    def ok(self) -> bool:
        return not self.q_mismatches and not self.msb0_mismatches

    def to_json(self) -> dict:
        return {"name": "msb-via-f", "range": [1, self.upto], "checks_passed": self.ok,
                "q_mismatches": self.q_mismatches[:10],
                "msb0_mismatches": [list(p) for p in self.msb0_mismatches[:10]],
                "pairs_checked": self.pairs_checked}


def check_msbz_chain(upto: int = 512) -> ChainReport:
    """Compare Q with POW2 on ``[1, upto]`` and the MSB0 formula with the
    builtin on every pair ``(n, m)`` of ``[1, upto] x [0, upto]``."""
    reg = default_registry().merged([f_predicate()])
    q, msbz = build_msbz_via_F()
    pow2, msb0 = reg.resolve("POW2"), reg.resolve("MSB0")
    ev = GuardedEvaluator(reg)
    q_bad = [n for n in range(1, upto + 1) if ev(q, {"n": n}) != pow2.contains(n)]
    m_bad = []
    pairs = 0
    for n in range(1, upto + 1):
        for m in range(0, upto + 1):
            pairs += 1
            if ev(msbz, {"n": n, "m": m}) != msb0.contains(n, m):
                m_bad.append((n, m))
    return ChainReport(upto, q_bad, m_bad, pairs)


# ---------------------------------------------------------------------------
# independence


def _and_msb_enum(n: int, guard: bool = True):
    if n == 0:
        return []
    top = msb(n)
    block = range(top, 2 * top)
    out = {(n, y) for y in block if n & y == n}
    out |= {(x, n) for x in block if x & n == x}
    return sorted(out)


def and_msb(name: str = "AND_MSB") -> PredicateDef:
    """``(x, y)`` with the same MSB and ``x & y = x``; finite degree since
    only the dyadic block of a value can relate to it."""
    return derived(name, 2,
                   lambda x, y: x > 0 and y > 0 and floorlog2(x) == floorlog2(y) and x & y == x,
                   _and_msb_enum, window=lambda n, found: 2 * msb(n) if n else 8)


def and_without_guard(name: str = "AND_RAW") -> PredicateDef:
    """Deliberately broken: drops the MSB guard but keeps the block
    enumerator, so the degree scan exposes ``(0, y)`` and cross-block
    tuples."""
    return derived(name, 2, lambda x, y: x & y == x, _and_msb_enum,
                   window=lambda n, found: 2 * n + 8)


@dataclass
class IndependenceWitness:
    n: int
    a: list[int]
    b: dict[frozenset, int] = field(repr=False)
    predicate: PredicateDef = field(repr=False)

    def b_of(self, members) -> int:
        return self.b[frozenset(members)]


def independence_witness(n: int, predicate: PredicateDef | None = None) -> IndependenceWitness:
    if not 1 <= n <= 16:
        raise ValueError("n must be in [1, 16]")
    a = [2 ** n + 2 ** i for i in range(n)]
    b = {}
    for r in range(n + 1):
        for members in itertools.combinations(range(n), r):
            b[frozenset(members)] = 2 ** n + sum(2 ** i for i in members)
    return IndependenceWitness(n, a, b, predicate or and_msb())


def check_independence(n: int, predicate: PredicateDef | None = None) -> bool:
    """``P(a_i, b_M)`` iff ``i in M`` for every ``i`` and every ``M``."""
    if n > 12:
        raise ValueError("n must be at most 12")
    w = independence_witness(n, predicate)
    contains = w.predicate.contains
    for members, bm in w.b.items():
        for i, ai in enumerate(w.a):
            if bool(contains(ai, bm)) != (i in members):
                return False
    return True


# ---------------------------------------------------------------------------
# counting and summing


@dataclass
class CountFormula:
    """``formula`` has free ``c``; over letters ``z``/``o`` it should hold
    iff ``c <= f(|w|)`` and ``c`` is the number of ``o``s."""
    formula: Formula
    f: Callable[[int], int]
    kmax: Optional[int] = None
    var: str = "c"

    def oracle(self, word: str, c: int) -> bool:
        return c <= self.f(len(word)) and c == word.count("o")


def _at_least(j: int, pred: Callable[[str], Formula], names: list[str]) -> Formula:
    """At least ``j`` positions satisfy ``pred``: increasing witnesses."""
    if j == 0:
        return TrueConst()
    vs = names[:j]
    parts = [pred(v) for v in vs] + [OrderAtom("<", x, y) for x, y in zip(vs, vs[1:])]
    body: Formula = And(tuple(parts)) if len(parts) > 1 else parts[0]
    for v in reversed(vs):
        body = Exists(v, body)
    return body


def count_up_to_const(kmax: int) -> CountFormula:
    """FO[<=] formula ``phi(c)``: ``c <= kmax`` and exactly ``c`` letters
    ``o``. ``c = j`` is said as "exactly ``j`` positions below ``c``";
    quantifier depth is ``kmax + 1``."""
    if not 0 <= kmax <= 4:
        raise ValueError("kmax must be in [0, 4]")
    names = [f"p{i}" for i in range(kmax + 2)]

    def exactly(j, pred):
        return And((_at_least(j, pred, names), Not(_at_least(j + 1, pred, names))))

    def is_o(v):
        return LetterAtom("o", v)

    def below_c(v):
        return OrderAtom("<", v, "c")

    disjuncts = tuple(And((exactly(j, below_c), exactly(j, is_o))) for j in range(kmax + 1))
    formula = Or(disjuncts) if len(disjuncts) > 1 else disjuncts[0]
    return CountFormula(formula, lambda n, k=kmax: k, kmax)


def graph_from_count(cf: CountFormula, name: str = "F", env: EvalEnv | None = None) -> PredicateDef:
    """``(c, c')`` holds iff ``c'`` is the largest value ``<= c`` for which
    the count formula accepts ``c'`` on the universe ``[c + 1]`` with ``o``
    exactly below ``c'``. Computed by enumeration."""
    env = env or EvalEnv()
    phi = cf.formula
    cache: dict[int, Optional[int]] = {}

    def graph(c: int) -> Optional[int]:
        if c not in cache:
            best = None
            for cp in range(c + 1):
                word = "o" * cp + "z" * (c + 1 - cp)
                if evaluate(phi, word, {cf.var: cp}, env):
                    best = cp
            cache[c] = best
        return cache[c]

    def contains(c, cp):
        return graph(c) == cp

    p = derived(name, 2, contains, finite_degree=False, kind="derived", source="count")
    p.graph = graph
    return p


@dataclass
class SumConstruction:
    phi_prime: Formula
    F: PredicateDef
    psi: Formula
    f: Callable[[int], int]

    def registry(self) -> Registry:
        return default_registry().merged([self.F])


def sum_from_count(cf: CountFormula) -> SumConstruction:
    """``phi'(a, b, c)``: letters replaced by ``b <= p < a``; ``F`` from
    :func:`graph_from_count`; ``psi(a, b, c) = exists c'. F(c, c') &
    PLUS(b, c', a)``, so that ``psi`` says ``a = b + f(c)``."""
    for v in ("a", "b"):
        if v in free_variables(cf.formula) - {cf.var}:
            raise PredicateError(f"count formula already uses free variable {v}")

    def repl(atom):
        if isinstance(atom, LetterAtom):
            inside = And((OrderAtom("<=", "b", atom.var), OrderAtom("<", atom.var, "a")))
            if atom.letter == "o":
                return inside
            if atom.letter == "z":
                return Not(inside)
            raise PredicateError(f"count formulas use letters o and z, got {atom.letter!r}")
        return atom

    phi_prime = map_atoms(cf.formula, repl)
    F = graph_from_count(cf)
    psi = Exists("cp", And((PredAtom(F.name, ("c", "cp")), PredAtom("PLUS", ("b", "cp", "a")))))
    return SumConstruction(phi_prime, F, psi, lambda c, g=F.graph: g(c))


def check_sum(sc: SumConstruction, max_len: int = 12, oracle: Callable[[int], int] | None = None):
    """``psi(a, b, c)`` against ``a = b + f(c)`` for all ``a, b, c < n <=
    max_len``; also ``phi'`` against ``c = a - b`` within the bound.
    Returns a list of mismatches (empty when everything agrees)."""
    env = EvalEnv(sc.registry())
    oracle = oracle or sc.f
    bad = []
    for n in range(1, max_len + 1):
        word = "z" * n
        for a, b, c in itertools.product(range(n), repeat=3):
            got = evaluate(sc.psi, word, {"a": a, "b": b, "c": c}, env)
            if got != (a == b + oracle(c)):
                bad.append(("psi", n, a, b, c))
    return bad


def check_phi_prime(cf: CountFormula, sc: SumConstruction, max_len: int = 8):
    env = EvalEnv(sc.registry())
    bad = []
    for n in range(1, max_len + 1):
        word = "z" * n
        for a, b, c in itertools.product(range(n), repeat=3):
            want = c <= cf.f(n) and c == max(0, a - b)
            if evaluate(sc.phi_prime, word, {"a": a, "b": b, cf.var: c}, env) != want:
                bad.append((n, a, b, c))
    return bad


# ---------------------------------------------------------------------------
# BIT'


def bit_translate(f: str | Expr, name: str = "BITP", check_upto: int = 1 << 16) -> PredicateDef:
    """``BIT' = {(x, y) : y >= f(x) and bit y - f(x) of x is 1}``.

    Finite degree for nondecreasing unbounded ``f``: ``(n, y)`` needs
    ``y - f(n) < bitlength(n)`` and ``(x, n)`` needs ``f(x) <= n``.
    """
    e = f if isinstance(f, Expr) else Expr(f)
    prev = None
    for x in range(check_upto + 1):
        v = e(x)
        if v is None:
            raise PredicateError(f"f = {e.text!r} undefined at {x}")
        if prev is not None and v < prev:
            raise PredicateError(f"f = {e.text!r} decreases at {x}")
        prev = v
    if e(check_upto) <= e(0):
        raise PredicateError(f"f = {e.text!r} looks bounded on [0, {check_upto}]")

    def contains(x, y):
        fx = e(x)
        return y >= fx and (x >> (y - fx)) & 1 == 1

    def enum(n):
        out = set()
        fn = e(n)
        for i in range(n.bit_length()):
            if (n >> i) & 1:
                out.add((n, fn + i))
        x = 0
        while e(x) <= n:
            if contains(x, n):
                out.add((x, n))
            x += 1
        return sorted(out)

    def window(n, found):
        # (x, n) needs f(x) <= n; (n, y) needs y < f(n) + bitlength(n)
        hi = 0
        while e(hi) <= n:
            hi += 1
        return max(hi, e(n) + n.bit_length(), n) + 1

    return derived(name, 2, contains, enum, window=window, kind="bit_translate", expr=e.text)


def check_bit_recovery(f: str | Expr, upto: int = 64) -> list[tuple[int, int]]:
    """``BIT(x, y)`` iff ``exists d, z. Fgraph(x, d) & PLUS(y, d, z) &
    BIT'(x, z)`` over N, for ``x, y <= upto``. Returns mismatches."""
    e = f if isinstance(f, Expr) else Expr(f)
    reg = default_registry().merged([bit_translate(e), function_graph("FG", e.text)])
    phi = parse_formula("exists d. (FG(x, d) & (exists z. (PLUS(y, d, z) & BITP(x, z))))")
    bit = reg.resolve("BIT")
    ev = GuardedEvaluator(reg)
    return [(x, y) for x in range(upto + 1) for y in range(upto + 1)
            if ev(phi, {"x": x, "y": y}) != bool(bit.contains(x, y))]
