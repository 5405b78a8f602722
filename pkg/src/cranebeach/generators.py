"""Seeded random formulas and words for property tests and sweeps."""
from __future__ import annotations

import random
from typing import Sequence

from .formula import (FALSE, TRUE, And, Exists, Forall, Formula, Implies, LetterAtom, Not, Or,
                      OrderAtom, PredAtom)

__all__ = ["FormulaGen", "random_formula", "random_word"]

_VARS = ("x", "y", "z", "w", "t", "s")


class FormulaGen:
    """Draws formulas with a bounded total number of quantifiers.

    ``preds`` is a list of ``(NAME, arity)``. With ``free`` nonempty the
    formula may mention those variables unbound.
    """

    def __init__(self, rng: random.Random, letters: str = "ab", preds: Sequence[tuple[str, int]] = (),
                 order: bool = True, max_quant: int = 3, depth: int = 4, free: Sequence[str] = ()):
        self.rng = rng
        self.letters = letters
        self.preds = list(preds)
        self.order = order
        self.max_quant = max_quant
        self.depth = depth
        self.free = tuple(free)

    def formula(self) -> Formula:
        self._budget = self.max_quant
        return self._gen(self.depth, list(self.free))

    def _gen(self, depth: int, scope: list[str]) -> Formula:
        rng = self.rng
        can_quant = self._budget > 0 and len(scope) < len(_VARS)
        if not scope and can_quant:
            return self._quant(depth, scope)
        if depth <= 0 or rng.random() < 0.25:
            return self._atom(scope)
        roll = rng.random()
        if can_quant and roll < 0.35:
            return self._quant(depth, scope)
        if roll < 0.5:
            return Not(self._gen(depth - 1, scope))
        if roll < 0.7:
            return And(tuple(self._gen(depth - 1, scope) for _ in range(rng.choice((2, 2, 3)))))
        if roll < 0.9:
            return Or(tuple(self._gen(depth - 1, scope) for _ in range(rng.choice((2, 2, 3)))))
        return Implies(self._gen(depth - 1, scope), self._gen(depth - 1, scope))

    def _quant(self, depth: int, scope: list[str]) -> Formula:
        self._budget -= 1
        fresh = [v for v in _VARS if v not in scope]
        var = self.rng.choice(fresh[:2])
        body = self._gen(depth - 1, scope + [var])
        return (Exists if self.rng.random() < 0.5 else Forall)(var, body)

    def _atom(self, scope: list[str]) -> Formula:
        rng = self.rng
        if not scope:
            return TRUE if rng.random() < 0.5 else FALSE
        kinds = ["letter", "letter"]
        if self.order:
            kinds.append("order")
        if self.preds:
            kinds += ["pred", "pred"]
        kind = rng.choice(kinds)
        if kind == "letter":
            return LetterAtom(rng.choice(self.letters), rng.choice(scope))
        if kind == "order":
            return OrderAtom(rng.choice(("<", "<=", "=")), rng.choice(scope), rng.choice(scope))
        name, arity = rng.choice(self.preds)
        return PredAtom(name, tuple(rng.choice(scope) for _ in range(arity)))


def random_formula(seed: int | random.Random, **kw) -> Formula:
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return FormulaGen(rng, **kw).formula()


def random_word(rng: random.Random, letters: str, max_len: int, min_len: int = 0) -> str:
    n = rng.randint(min_len, max_len)
    return "".join(rng.choice(letters) for _ in range(n))
