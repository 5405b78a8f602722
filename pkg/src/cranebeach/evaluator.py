"""Brute-force model checking of first-order formulas on finite words.

This is the ground truth for every other module. Quantifiers range over
``[|w|]``; numerical predicates are read unvaried and clipped to
``[|w|]^k``. Quantified subformulas are memoized on the values of their
free variables, and subformulas without letter atoms are additionally
memoized per universe size, so that word-independent gadgets (like the
work-zone translations) are computed once per length.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Optional

from .formula import (And, Exists, FalseConst, Forall, Formula, Implies, LetterAtom, Not, Or,
                      OrderAtom, PredAtom, TrueConst, free_variables, has_letters)
from .predicates import PredicateError, Registry, default_registry
from .words import Alphabet, PaddedWord, Word

__all__ = [
    "EvalEnv", "EvaluationError", "UnboundVariableError", "BudgetExceeded",
    "CompiledFormula", "compile_formula", "evaluate", "equivalent_up_to",
    "EquivalenceReport", "check_neutral_letter", "words_upto",
]


class EvaluationError(ValueError):
    pass


class UnboundVariableError(EvaluationError):
    pass


class BudgetExceeded(EvaluationError):
    pass


@dataclass(eq=False)
class EvalEnv:
    registry: Registry = field(default_factory=default_registry)
    alphabet: Optional[Alphabet] = None

    def __post_init__(self):
        if self.alphabet is not None:
            self.alphabet = Alphabet.of(self.alphabet)


_DEFAULT_ENV: EvalEnv | None = None


def default_env() -> EvalEnv:
    global _DEFAULT_ENV
    if _DEFAULT_ENV is None:
        _DEFAULT_ENV = EvalEnv()
    return _DEFAULT_ENV


class _Ctx:
    __slots__ = ("letter", "n", "memo")

    def __init__(self, letter, n):
        self.letter = letter
        self.n = n
        self.memo = {}


class CompiledFormula:
    """A formula compiled to nested closures for repeated evaluation."""

    def __init__(self, formula: Formula, env: EvalEnv | None = None):
        self.formula = formula
        self.env = env or default_env()
        self.free = free_variables(formula)
        self._static: dict = {}
        self._nodes = 0
        self._fn = self._compile(formula)

    # -- compilation -----------------------------------------------------

    def _compile(self, f: Formula):
        if isinstance(f, TrueConst):
            return lambda c, a: True
        if isinstance(f, FalseConst):
            return lambda c, a: False
        if isinstance(f, LetterAtom):
            letter, var = f.letter, f.var
            return lambda c, a: c.letter(a[var]) == letter
        if isinstance(f, OrderAtom):
            x, y = f.left, f.right
            if f.op == "<":
                return lambda c, a: a[x] < a[y]
            if f.op == "<=":
                return lambda c, a: a[x] <= a[y]
            return lambda c, a: a[x] == a[y]
        if isinstance(f, PredAtom):
            pred = self.env.registry.resolve(f.name)
            if pred.arity != len(f.args):
                raise PredicateError(f"{f.name} has arity {pred.arity}, used with {len(f.args)} arguments")
            contains = pred.contains
            args = f.args
            if len(args) == 1:
                (x,) = args
                return lambda c, a: a[x] < c.n and bool(contains(a[x]))
            if len(args) == 2:
                x, y = args
                return lambda c, a: a[x] < c.n and a[y] < c.n and bool(contains(a[x], a[y]))

            def atom(c, a):
                vals = [a[v] for v in args]
                return all(v < c.n for v in vals) and bool(contains(*vals))
            return atom
        if isinstance(f, Not):
            inner = self._compile(f.child)
            return lambda c, a: not inner(c, a)
        if isinstance(f, And):
            kids = [self._compile(k) for k in f.children]
            return lambda c, a: all(k(c, a) for k in kids)
        if isinstance(f, Or):
            kids = [self._compile(k) for k in f.children]
            return lambda c, a: any(k(c, a) for k in kids)
        if isinstance(f, Implies):
            lhs, rhs = self._compile(f.lhs), self._compile(f.rhs)
            return lambda c, a: (not lhs(c, a)) or rhs(c, a)
        if isinstance(f, (Exists, Forall)):
            return self._compile_quantifier(f)
        raise TypeError(f"not a formula: {f!r}")

    def _compile_quantifier(self, f):
        body = self._compile(f.body)
        var = f.var
        want = isinstance(f, Exists)
        fv = tuple(sorted(free_variables(f)))
        self._nodes += 1
        node = self._nodes
        static = self._static if not has_letters(f) else None

        def loop(c, a):
            saved = a.get(var, _MISSING)
            result = not want
            for i in range(c.n):
                a[var] = i
                if body(c, a) == want:
                    result = want
                    break
            if saved is _MISSING:
                a.pop(var, None)
            else:
                a[var] = saved
            return result

        if static is not None:
            def quant(c, a):
                key = (node, c.n) + tuple(a[v] for v in fv)
                r = static.get(key)
                if r is None:
                    r = static[key] = loop(c, a)
                return r
        else:
            def quant(c, a):
                key = (node,) + tuple(a[v] for v in fv)
                memo = c.memo
                r = memo.get(key)
                if r is None:
                    r = memo[key] = loop(c, a)
                return r
        return quant

    # -- evaluation ------------------------------------------------------

    def __call__(self, word, assignment: Mapping[str, int] | None = None) -> bool:
        a = dict(assignment or {})
        missing = self.free - a.keys()
        if missing:
            raise UnboundVariableError(f"unbound free variables {sorted(missing)}")
        if isinstance(word, str):
            text = word
            n = len(text)
            letter = text.__getitem__
            if self.env.alphabet is not None:
                for i, ch in enumerate(text):
                    if ch not in self.env.alphabet:
                        raise EvaluationError(f"letter {ch!r} at position {i} not in alphabet {self.env.alphabet}")
        else:
            n = len(word)
            if isinstance(word, Word):
                letter = word.symbols.__getitem__
            else:
                letter = word.letter_at
        for v, p in a.items():
            if not 0 <= p < n:
                raise EvaluationError(f"{v} := {p} is outside the universe [{n}]")
        return bool(self._fn(_Ctx(letter, n), a))


_MISSING = object()


@lru_cache(maxsize=256)
def _compiled(formula: Formula, env: EvalEnv) -> CompiledFormula:
    return CompiledFormula(formula, env)


def compile_formula(formula: Formula, env: EvalEnv | None = None) -> CompiledFormula:
    return _compiled(formula, env or default_env())


def evaluate(f: Formula, w, a: Mapping[str, int] | None = None, env: EvalEnv | None = None) -> bool:
    """``<w, a> |= f``. ``w`` may be a :class:`Word`, a plain string or a
    :class:`PaddedWord`."""
    return compile_formula(f, env)(w, a)


# ---------------------------------------------------------------------------
# exhaustive / sampled comparisons


def words_upto(alphabet: Iterable[str], max_len: int, min_len: int = 0):
    letters = sorted(alphabet)
    for n in range(min_len, max_len + 1):
        for t in itertools.product(letters, repeat=n):
            yield "".join(t)


@dataclass
class EquivalenceReport:
    counterexample: Optional[str]
    max_len: int
    exhaustive_upto: int
    words_checked: int
    samples: int

    @property
    def equivalent(self) -> bool:
        return self.counterexample is None

    def to_json(self) -> dict:
        return {"equivalent": self.equivalent, "counterexample": self.counterexample,
                "max_len": self.max_len, "exhaustive_upto": self.exhaustive_upto,
                "words_checked": self.words_checked, "samples": self.samples}


def equivalent_up_to(f: Formula, g: Formula, alphabet, max_len: int, env: EvalEnv | None = None, *,
                     budget: int = 2 ** 14, samples_per_length: int = 2000, seed: int = 0,
                     min_len: int = 0, exhaustive_upto: int | None = None,
                     sample_lengths: Iterable[int] | None = None,
                     total_samples: int | None = None) -> EquivalenceReport:
    """Compare two closed formulas on all words up to ``max_len``.

    Lengths with ``|A|^len <= budget`` (and ``<= exhaustive_upto`` when
    given) are checked exhaustively; longer ones get ``samples_per_length``
    uniform samples each (or ``total_samples`` spread round-robin). The
    counterexample returned is the shortest, then lexicographically first,
    among the words examined.
    """
    letters = sorted(Alphabet.of(alphabet))
    cf, cg = compile_formula(f, env), compile_formula(g, env)
    rng = random.Random(seed)
    checked = sampled = 0
    last_exhaustive = min_len - 1
    sampled_lengths = []
    for n in range(min_len, max_len + 1):
        exhaustive = len(letters) ** n <= budget and (exhaustive_upto is None or n <= exhaustive_upto)
        if exhaustive:
            for t in itertools.product(letters, repeat=n):
                w = "".join(t)
                checked += 1
                if cf(w) != cg(w):
                    return EquivalenceReport(w, max_len, last_exhaustive, checked, sampled)
            last_exhaustive = n
        else:
            sampled_lengths.append(n)
    if sample_lengths is not None:
        sampled_lengths = [n for n in sample_lengths if n > last_exhaustive]
    if sampled_lengths and samples_per_length <= 0 and not total_samples:
        raise BudgetExceeded(f"|A|^len exceeds the budget {budget} and sampling is disabled")
    plan: list[int] = []
    if total_samples:
        plan = [sampled_lengths[i % len(sampled_lengths)] for i in range(total_samples)] if sampled_lengths else []
    else:
        for n in sampled_lengths:
            plan.extend([n] * samples_per_length)
    found: list[str] = []
    found_len = None
    for n in sorted(plan):
        if found_len is not None and n > found_len:
            break
        w = "".join(rng.choice(letters) for _ in range(n))
        sampled += 1
        checked += 1
        if cf(w) != cg(w):
            found.append(w)
            found_len = n
    cex = min(found) if found else None
    return EquivalenceReport(cex, max_len, last_exhaustive, checked, sampled)


def check_neutral_letter(f: Formula, e: str, max_len: int, env: EvalEnv | None = None,
                         alphabet=None) -> Optional[tuple[str, str]]:
    """Search for ``(w, w')`` where ``w'`` is ``w`` with one ``e`` inserted
    and exactly one of them satisfies ``f``. Every single deletion of ``e``
    from a word of length ``<= max_len + 1`` is such an insertion read
    backwards, so both directions are covered."""
    env = env or default_env()
    letters = Alphabet.of(alphabet if alphabet is not None else (env.alphabet or "ab"))
    if e not in letters:
        raise EvaluationError(f"neutral letter {e!r} not in alphabet {letters}")
    cf = compile_formula(f, env)
    for w in words_upto(letters, max_len):
        base = cf(w)
        seen = set()
        for i in range(len(w) + 1):
            w2 = w[:i] + e + w[i:]
            if w2 in seen:
                continue
            seen.add(w2)
            if cf(w2) != base:
                return (w, w2)
    return None
