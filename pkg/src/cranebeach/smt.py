"""Decide formulas on long padded words with z3.

Words like ``u . e^N . v`` reach millions of positions for the ``double``
family, far beyond brute force. When every numerical predicate has a
linear encoding (``PredicateDef.smt``) the question is a closed Presburger
sentence: quantifiers become bounded integer quantifiers and a letter atom
becomes a disjunction over the explicit positions of ``u`` and ``v`` plus
the padding interval.
"""
from __future__ import annotations

from typing import Mapping

from .formula import (And, Exists, FalseConst, Forall, Formula, Implies, LetterAtom, Not, Or,
                      OrderAtom, PredAtom, TrueConst)
from .predicates import PredicateError, Registry

__all__ = ["SegmentWord", "SmtUnavailable", "to_z3", "decide", "supports"]


class SmtUnavailable(RuntimeError):
    pass


def _z3():
    try:
        import z3
    except ImportError as exc:  # pragma: no cover
        raise SmtUnavailable("z3-solver is not installed") from exc
    return z3


class SegmentWord:
    """A word described by explicit blocks and constant runs.

    ``explicit`` holds ``(start, text)`` pairs and ``runs`` holds
    ``(start, length, letter)``; positions covered by neither are
    unreadable and read as no letter at all.
    """

    def __init__(self, length: int, explicit=(), runs=()):
        self.length = length
        self.explicit = [(s, t) for s, t in explicit if t]
        self.runs = [(s, n, a) for s, n, a in runs if n > 0]

    @classmethod
    def padded(cls, u: str, e: str, n_pad: int, v: str) -> "SegmentWord":
        return cls(len(u) + n_pad + len(v), [(0, u), (len(u) + n_pad, v)], [(len(u), n_pad, e)])

    @classmethod
    def bob_view(cls, len_u: int, e: str, n_pad: int, v: str) -> "SegmentWord":
        return cls(len_u + n_pad + len(v), [(len_u + n_pad, v)], [(len_u, n_pad, e)])

    def letter_constraint(self, z3, letter: str, x):
        parts = [x == s + i for s, t in self.explicit for i, ch in enumerate(t) if ch == letter]
        parts += [z3.And(x >= s, x < s + n) for s, n, a in self.runs if a == letter]
        return z3.Or(*parts) if parts else z3.BoolVal(False)


def supports(f: Formula, registry: Registry) -> bool:
    from .formula import predicate_names
    try:
        return all(registry.resolve(n).smt is not None for n in predicate_names(f))
    except PredicateError:
        return False


def to_z3(f: Formula, word: SegmentWord, registry: Registry, scope: Mapping[str, object] | None = None):
    """Translate ``f``; free variables come from ``scope`` (z3 terms).
    Quantifiers range over ``[0, |w|)``."""
    z3 = _z3()
    n = word.length

    def tr(g: Formula, env: dict):
        if isinstance(g, TrueConst):
            return z3.BoolVal(True)
        if isinstance(g, FalseConst):
            return z3.BoolVal(False)
        if isinstance(g, LetterAtom):
            return word.letter_constraint(z3, g.letter, env[g.var])
        if isinstance(g, OrderAtom):
            x, y = env[g.left], env[g.right]
            return x < y if g.op == "<" else x <= y if g.op == "<=" else x == y
        if isinstance(g, PredAtom):
            p = registry.resolve(g.name)
            if p.smt is None:
                raise SmtUnavailable(f"{g.name} has no linear encoding")
            if p.arity != len(g.args):
                raise PredicateError(f"{g.name} has arity {p.arity}, used with {len(g.args)} arguments")
            return p.smt(*[env[a] for a in g.args])
        if isinstance(g, Not):
            return z3.Not(tr(g.child, env))
        if isinstance(g, And):
            return z3.And(*[tr(c, env) for c in g.children])
        if isinstance(g, Or):
            return z3.Or(*[tr(c, env) for c in g.children])
        if isinstance(g, Implies):
            return z3.Implies(tr(g.lhs, env), tr(g.rhs, env))
        if isinstance(g, (Exists, Forall)):
            x = z3.FreshInt(g.var)
            body = tr(g.body, {**env, g.var: x})
            bound = z3.And(x >= 0, x < n)
            if isinstance(g, Exists):
                return z3.Exists([x], z3.And(bound, body))
            return z3.ForAll([x], z3.Implies(bound, body))
        raise TypeError(g)

    return tr(f, dict(scope or {}))


def decide(expr, timeout_ms: int = 60_000) -> bool:
    """Truth value of a closed z3 sentence. Presburger quantifier
    elimination first; the default solver is the fallback."""
    z3 = _z3()
    reasons = []
    for make in (lambda: z3.Then("simplify", "qe", "smt").solver(), z3.Solver):
        s = make()
        s.set("timeout", timeout_ms)
        s.add(expr)
        r = s.check()
        if r != z3.unknown:
            return r == z3.sat
        reasons.append(s.reason_unknown())
    raise SmtUnavailable(f"z3 returned unknown: {reasons}")
