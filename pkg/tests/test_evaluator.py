import random

import pytest

from cranebeach.evaluator import (BudgetExceeded, EvalEnv, EvaluationError, UnboundVariableError,
                                  check_neutral_letter, equivalent_up_to, evaluate)
from cranebeach.formula import Exists, Forall, parse_formula, to_prenex
from cranebeach.generators import FormulaGen, random_word
from cranebeach.predicates import PredicateError, default_registry
from cranebeach.words import Alphabet, PaddedWord, Word

from naive import naive_eval

TOY = parse_formula("exists x. forall y. (a(x) & (x < y -> b(y)))")


def test_toy_examples():
    assert evaluate(TOY, "aabb") is True
    assert evaluate(TOY, "acb") is False


def test_empty_universe():
    assert evaluate(parse_formula("exists x. a(x)"), "") is False
    assert evaluate(parse_formula("forall x. a(x)"), "") is True


def test_word_types():
    w = Word.of("aabb", "abc")
    assert evaluate(TOY, w) is True
    assert evaluate(TOY, PaddedWord("aa", "b", 5, "bb")) is True


def test_unbound_variable():
    with pytest.raises(UnboundVariableError):
        evaluate(parse_formula("a(x)"), "ab")


def test_assignment_out_of_range():
    with pytest.raises(EvaluationError):
        evaluate(parse_formula("a(x)"), "ab", {"x": 2})


def test_unknown_predicate_and_arity():
    with pytest.raises(PredicateError):
        evaluate(parse_formula("exists x. NOPE(x)"), "a")
    with pytest.raises(PredicateError):
        evaluate(parse_formula("exists x. SUCC(x)"), "a")


def test_letter_outside_alphabet():
    env = EvalEnv(default_registry(), Alphabet.of("ab"))
    with pytest.raises(EvaluationError):
        evaluate(parse_formula("exists x. a(x)"), "ac", env=env)


def test_universe_clipping():
    # PLUS(1, 1, 2) needs position 2
    f = parse_formula("exists x. exists y. PLUS(x, x, y)")
    g = parse_formula("exists x. exists y. (PLUS(x, x, y) & x < y)")
    assert evaluate(g, "aa") is False
    assert evaluate(g, "aaa") is True
    assert evaluate(f, "a") is True  # 0 + 0 = 0


def test_equivalent_reflexive_and_duality():
    f = parse_formula("exists x. a(x)")
    assert equivalent_up_to(f, f, "ab", 6).equivalent
    assert equivalent_up_to(f, parse_formula("!(forall x. !a(x))"), "ab", 8).equivalent


def test_equivalent_counterexample_is_shortest():
    rep = equivalent_up_to(parse_formula("exists x. a(x)"), parse_formula("true"), "ab", 6)
    assert rep.counterexample == ""


def test_equivalent_counterexample_lexicographic():
    rep = equivalent_up_to(parse_formula("exists x. a(x)"), parse_formula("exists x. true"), "ab", 6)
    assert rep.counterexample == "b"


def test_equivalent_sampling_and_budget():
    f = parse_formula("exists x. a(x)")
    rep = equivalent_up_to(f, f, "ab", 12, budget=2 ** 6, samples_per_length=10)
    assert rep.exhaustive_upto == 6 and rep.samples == 60
    with pytest.raises(BudgetExceeded):
        equivalent_up_to(f, f, "ab", 12, budget=2 ** 6, samples_per_length=0)


def test_neutral_letter_examples():
    assert check_neutral_letter(parse_formula("exists x. a(x)"), "b", 6, alphabet="ab") is None
    ends_a = parse_formula("exists x. (a(x) & !(exists y. x < y))")
    assert check_neutral_letter(ends_a, "b", 6, alphabet="ab") == ("a", "ab")


def test_cross_check_against_naive_evaluator():
    rng = random.Random(3)
    reg = default_registry()
    preds = [("SUCC", 2), ("PLUS", 3), ("BIT", 2), ("POW2", 1), ("MSB0", 2)]
    for _ in range(200):
        f = FormulaGen(rng, letters="abc", preds=preds, max_quant=3, depth=5).formula()
        w = random_word(rng, "abc", 7)
        assert evaluate(f, w) == naive_eval(f, w, {}, reg)


class _Recording:
    """Word wrapper that records every position read."""

    def __init__(self, text):
        self.text = text
        self.max_read = -1

    def __len__(self):
        return len(self.text)

    def letter_at(self, p):
        self.max_read = max(self.max_read, p)
        return self.text[p]


def test_never_reads_beyond_universe():
    rng = random.Random(4)
    for _ in range(100):
        f = FormulaGen(rng, letters="ab", max_quant=3, depth=5).formula()
        w = _Recording(random_word(rng, "ab", 6))
        evaluate(f, w)
        assert w.max_read < len(w.text)


def test_quantifier_splitting_soundness():
    # splitting the leading quantifier over three intervals [0,i), [i,j), [j,n)
    rng = random.Random(8)
    for _ in range(40):
        f = FormulaGen(rng, letters="ab", max_quant=3, depth=4).formula()
        p = to_prenex(f)
        if not p.prefix:
            continue
        q, var = p.prefix[0]
        rest = p.prefix[1:]
        body = p.matrix
        for qq, v in reversed(rest):
            body = (Exists if qq == "exists" else Forall)(v, body)
        w = random_word(rng, "ab", 8, 1)
        n = len(w)
        i, j = sorted(rng.sample(range(n + 1), 2)) if n >= 1 else (0, 0)
        values = []
        for lo, hi in ((0, i), (i, j), (j, n)):
            vals = [evaluate(body, w, {var: x}) for x in range(lo, hi)]
            values.append(any(vals) if q == "exists" else all(vals))
        split = any(values) if q == "exists" else all(values)
        assert split == evaluate(p.to_formula(), w)
