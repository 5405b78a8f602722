"""Compile formulas with arbitrary unvaried predicates into formulas over
order, MSB0, the powers of two and finite-degree predicates.

Positions of a word of length ``l`` (with ``2^n`` the least power of two
``>= l`` and ``m = 2^(n-2)``) are cut into four zones ``[0,m)``,
``[m,2m)``, ``[2m,3m)`` and ``[3m,4m)`` (the last two clipped to ``l``).
Every position is the image of exactly one position of the second zone,
the *work zone*, under one of the translations

    tau_1(x) = x - m,  tau_2(x) = x,  tau_3(x) = x + m,  tau_4(x) = x + 2m.

The compiled formula only quantifies over the work zone, remembers which
translation each variable stands for, and replaces each predicate by a
"wrapped" version that applies the translations itself. Wrapped predicates
reject arguments with different most significant bits, which is what makes
them finite degree.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .evaluator import EvalEnv, default_env, evaluate, words_upto
from .formula import (FALSE, TRUE, And, Exists, FalseConst, Forall, Formula, Implies, LetterAtom,
                      Not, Or, OrderAtom, PredAtom, TrueConst, all_variables, conj,
                      constant_fold, disj, free_variables)
from .predicates import (PredicateDef, PredicateError, Registry, builtin, derived, msb)
from .words import Alphabet

__all__ = [
    "ZoneLayout", "zone_layout", "ZoneFormulas", "build_zone_formulas", "translate",
    "wrap_predicate", "TransformResult", "workzone_transform", "WORK_PREDICATES",
]

POW2 = "POW2"
MSB0 = "MSB0"
WORK_PREDICATES = (builtin(POW2, "pow2"), builtin(MSB0, "msb0"))


@dataclass(frozen=True)
class ZoneLayout:
    universe: int
    n: int
    zones: tuple[range, range, range, range]

    @property
    def quarter(self) -> int:
        return 1 << (self.n - 2)

    @property
    def work_zone(self) -> range:
        return self.zones[1]

    def zone_of(self, p: int) -> int:
        for i, z in enumerate(self.zones, start=1):
            if p in z:
                return i
        raise ValueError(f"{p} is outside [{self.universe}]")


def zone_layout(universe: int) -> ZoneLayout:
    if universe < 4:
        raise ValueError("the zone layout needs a universe of size >= 4")
    n = (universe - 1).bit_length()
    m = 1 << (n - 2)
    zones = tuple(range(min(i * m, universe), min((i + 1) * m, universe)) for i in range(4))
    return ZoneLayout(universe, n, zones)


def translate(zone: int, x: int) -> int:
    """``tau_zone(x)`` for ``x >= 1``; the quarter size is the MSB of ``x``."""
    m = msb(x)
    return x + (-m, 0, m, 2 * m)[zone - 1]


# ---------------------------------------------------------------------------
# gadget formulas


class _Fresh:
    def __init__(self, taken: Iterable[str] = ()):
        self.taken = set(taken)
        self.counter = itertools.count(1)

    def __call__(self, base: str = "t") -> str:
        while True:
            name = f"{base}{next(self.counter)}"
            if name not in self.taken:
                self.taken.add(name)
                return name


def _work(x: str, fresh: _Fresh) -> Formula:
    p, q = fresh("p"), fresh("q")
    return Exists(p, conj([
        PredAtom(POW2, (p,)),
        OrderAtom("<", x, p),
        Forall(q, Implies(conj([PredAtom(POW2, (q,)), OrderAtom("<", x, q)]), OrderAtom("=", q, p))),
    ]))


def _trans(i: int, x: str, y: str, fresh: _Fresh, guard: bool = True) -> Formula:
    if i == 1:
        core = PredAtom(MSB0, (x, y))
    elif i == 2:
        core = OrderAtom("=", x, y)
    elif i == 3:
        z, t = fresh("z"), fresh("t")
        core = Exists(z, conj([
            PredAtom(MSB0, (x, z)),
            OrderAtom("<", x, y),
            PredAtom(MSB0, (y, z)),
            Forall(t, Implies(conj([OrderAtom("<", x, t), PredAtom(MSB0, (t, z))]),
                              OrderAtom("<=", y, t))),
        ]))
    elif i == 4:
        t = fresh("t")
        core = conj([
            PredAtom(MSB0, (y, x)),
            Forall(t, Implies(PredAtom(MSB0, (t, x)), OrderAtom("<=", y, t))),
        ])
    else:
        raise ValueError(f"zone index must be 1..4, got {i}")
    return conj([_work(x, fresh), core]) if guard else core


@dataclass(frozen=True)
class ZoneFormulas:
    work: Formula
    trans: tuple[Formula, Formula, Formula, Formula]

    def trans_of(self, i: int) -> Formula:
        return self.trans[i - 1]


def build_zone_formulas(x: str = "x", y: str = "y") -> ZoneFormulas:
    """``work(x)`` and ``trans^i(x, y)`` over order, MSB0 and POW2."""
    fresh = _Fresh({x, y})
    return ZoneFormulas(_work(x, fresh), tuple(_trans(i, x, y, fresh) for i in range(1, 5)))


# ---------------------------------------------------------------------------
# wrapped predicates


def wrap_predicate(p: PredicateDef, zones: Sequence[int], name: str | None = None) -> PredicateDef:
    """``p`` read on translated arguments, restricted to same-MSB tuples."""
    zones = tuple(int(z) for z in zones)
    if len(zones) != p.arity:
        raise PredicateError(f"{p.name} has arity {p.arity} but {len(zones)} zones were given")
    if any(z not in (1, 2, 3, 4) for z in zones):
        raise PredicateError(f"zones must be in 1..4, got {zones}")
    if p.meta.get("varied"):
        raise PredicateError(f"{p.name} is varied")
    base = p.contains
    shifts = tuple((-1, 0, 1, 2)[z - 1] for z in zones)
    name = name or f"{p.name}_Z{''.join(map(str, zones))}"

    def contains(*xs):
        if xs[0] < 1:
            return False
        m = msb(xs[0])
        for x in xs:
            if not m <= x < 2 * m:
                return False
        return bool(base(*(x + s * m for x, s in zip(xs, shifts))))

    def enum(n):
        if n < 1:
            return []
        m = msb(n)
        block = range(m, 2 * m)
        out = set()
        for slot in range(p.arity):
            for rest in itertools.product(block, repeat=p.arity - 1):
                tup = rest[:slot] + (n,) + rest[slot:]
                if contains(*tup):
                    out.add(tup)
        return sorted(out)

    def window(n, found):
        return 4 * msb(n) if n >= 1 else 8

    return derived(name, p.arity, contains, enum, window, finite_degree=True, kind="wrapped",
                   base=p.name, zones=list(zones))


# ---------------------------------------------------------------------------
# the transformation


@dataclass
class TransformResult:
    formula: Formula
    main: Formula
    smallcase: Formula
    registry: list[PredicateDef] = field(default_factory=list)

    def env(self, base: EvalEnv | None = None) -> EvalEnv:
        base = base or default_env()
        return EvalEnv(base.registry.merged(self.registry), base.alphabet)

    def non_finite_degree(self) -> list[str]:
        return [d.name for d in self.registry if not d.finite_degree and d.name != MSB0]


def _length_is(c: int, word: str | None, fresh: _Fresh) -> Formula:
    """Exactly ``c`` positions, spelling ``word`` when given."""
    if c == 0:
        return Not(Exists(fresh("e"), TRUE))
    xs = [fresh("s") for _ in range(c)]
    t = fresh("u")
    parts: list[Formula] = [OrderAtom("<", a, b) for a, b in zip(xs, xs[1:])]
    if word is not None:
        parts += [LetterAtom(ch, x) for ch, x in zip(word, xs)]
    parts.append(Forall(t, disj([OrderAtom("=", t, x) for x in xs])))
    body: Formula = conj(parts)
    for x in reversed(xs):
        body = Exists(x, body)
    return body


def _at_least_four(fresh: _Fresh) -> Formula:
    xs = [fresh("g") for _ in range(4)]
    body: Formula = conj([OrderAtom("<", a, b) for a, b in zip(xs, xs[1:])])
    for x in reversed(xs):
        body = Exists(x, body)
    return body


def workzone_transform(f: Formula, env: EvalEnv | None = None, alphabet=None) -> TransformResult:
    """Rewrite closed ``f`` into an equivalent formula whose numerical
    predicates are order, MSB0, POW2 and wrapped finite-degree predicates.
    Words shorter than 4 are handled by an explicit disjunct listing the
    members of the language of those lengths (needs the alphabet)."""
    env = env or default_env()
    if free_variables(f):
        raise ValueError(f"workzone_transform needs a closed formula; free: {sorted(free_variables(f))}")
    letters = Alphabet.of(alphabet if alphabet is not None else (env.alphabet or _letters_of(f)))
    fresh = _Fresh(all_variables(f))
    wrapped: dict[str, PredicateDef] = {}

    def rw(g: Formula, ann: dict[str, int]) -> Formula:
        if isinstance(g, (TrueConst, FalseConst)):
            return g
        if isinstance(g, LetterAtom):
            y = fresh("y")
            return Exists(y, conj([_trans(ann[g.var], g.var, y, fresh), LetterAtom(g.letter, y)]))
        if isinstance(g, OrderAtom):
            i, j = ann[g.left], ann[g.right]
            if g.op == "=":
                return g if i == j else FALSE
            if i != j:
                return TRUE if i < j else FALSE
            return g
        if isinstance(g, PredAtom):
            p = env.registry.resolve(g.name)
            if p.arity != len(g.args):
                raise PredicateError(f"{g.name} has arity {p.arity}, used with {len(g.args)} arguments")
            zones = tuple(ann[a] for a in g.args)
            name = f"{p.name.upper()}_Z{''.join(map(str, zones))}"
            if name not in wrapped:
                wrapped[name] = wrap_predicate(p, zones, name=name)
            return PredAtom(name, g.args)
        if isinstance(g, Not):
            return Not(rw(g.child, ann))
        if isinstance(g, And):
            return And(tuple(rw(c, ann) for c in g.children))
        if isinstance(g, Or):
            return Or(tuple(rw(c, ann) for c in g.children))
        if isinstance(g, Implies):
            return Implies(rw(g.lhs, ann), rw(g.rhs, ann))
        if isinstance(g, (Exists, Forall)):
            x = g.var
            branches = []
            for i in (1, 2, 3, 4):
                y = fresh("y")
                exists_image = Exists(y, _trans(i, x, y, fresh, guard=False))
                inner = rw(g.body, {**ann, x: i})
                if isinstance(g, Exists):
                    branches.append(conj([exists_image, inner]))
                else:
                    branches.append(Implies(exists_image, inner))
            if isinstance(g, Exists):
                return Exists(x, conj([_work(x, fresh), disj(branches)]))
            return Forall(x, Implies(_work(x, fresh), conj(branches)))
        raise TypeError(f"unsupported construct: {g!r}")

    main = constant_fold(rw(f, {}))
    small = []
    for c in range(4):
        for w in words_upto(letters, c, c):
            if evaluate(f, w, env=env):
                small.append(_length_is(c, w, fresh))
    smallcase = disj(small)
    formula = constant_fold(disj([conj([_at_least_four(fresh), main]), smallcase]))
    registry = list(WORK_PREDICATES) + [wrapped[k] for k in sorted(wrapped)]
    return TransformResult(formula, main, smallcase, registry)


def _letters_of(f: Formula) -> str:
    from .formula import subformulas
    found = sorted({g.letter for g in subformulas(f) if isinstance(g, LetterAtom)})
    if not found:
        return "a"
    return "".join(found)


def quantifiers_guarded(f: Formula, transformed_vars: Iterable[str]) -> bool:
    """Every quantifier on one of ``transformed_vars`` sits directly on a
    ``work`` guard (syntactic check of the compiled output)."""
    from .formula import subformulas
    targets = set(transformed_vars)
    for g in subformulas(f):
        if isinstance(g, (Exists, Forall)) and g.var in targets:
            body = g.body
            if isinstance(g, Exists):
                ok = isinstance(body, And) and _is_work(body.children[0], g.var)
            else:
                ok = isinstance(body, Implies) and _is_work(body.lhs, g.var)
            if not ok:
                return False
    return True


def _is_work(g: Formula, x: str) -> bool:
    if not isinstance(g, Exists) or not isinstance(g.body, And):
        return False
    first = g.body.children[0]
    return isinstance(first, PredAtom) and first.name == POW2 and any(
        isinstance(c, OrderAtom) and c.op == "<" and c.left == x for c in g.body.children)
