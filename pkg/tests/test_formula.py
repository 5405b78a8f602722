import random

import pytest
from hypothesis import given, settings, strategies as st

from cranebeach.evaluator import evaluate, words_upto
from cranebeach.formula import (FALSE, TRUE, And, Exists, Forall, FormulaSyntaxError, Implies,
                                LetterAtom, Not, Or, OrderAtom, PredAtom, canonical, constant_fold,
                                free_variables, parse_formula, print_formula, to_nnf, to_prenex)
from cranebeach.generators import FormulaGen

TOY = "exists x. forall y. (a(x) & (x < y -> b(y)))"


def test_parse_exists():
    assert parse_formula("exists x. a(x)") == Exists("x", LetterAtom("a", "x"))


def test_parse_toy():
    f = parse_formula(TOY)
    psi = And((LetterAtom("a", "x"), Implies(OrderAtom("<", "x", "y"), LetterAtom("b", "y"))))
    assert f == Exists("x", Forall("y", psi))


def test_parse_missing_comma_reports_position():
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("P(x y)")
    assert (info.value.line, info.value.column) == (1, 5)


@pytest.mark.parametrize("text", ["exists x a(x)", "a(x) &", "ab(x)", "x <", "P()", "exists X. a(X)", "a(x) $ b(x)"])
def test_parse_rejects(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_parse_multiline_error_line():
    with pytest.raises(FormulaSyntaxError) as info:
        parse_formula("exists x.\n  (a(x) & )")
    assert info.value.line == 2


def test_print_constants_and_and():
    assert print_formula(TRUE) == "true"
    assert print_formula(And((LetterAtom("a", "x"), LetterAtom("b", "y")))) == "(a(x) & b(y))"


def test_round_trip_toy():
    f = parse_formula(TOY)
    assert parse_formula(print_formula(f)) == f


def test_predicate_atom_and_order_ops():
    f = parse_formula("forall x. forall y. (PLUS(x, y, x) | x <= y | x = y)")
    assert parse_formula(print_formula(f)) == f
    assert isinstance(f.body.body.children[0], PredAtom)


def test_round_trip_seeded_random():
    rng = random.Random(11)
    for _ in range(1000):
        gen = FormulaGen(rng, letters="abc", preds=[("SUCC", 2), ("PLUS", 3), ("POW2", 1)],
                         max_quant=rng.randint(0, 4), depth=6, free=("x",) if rng.random() < 0.3 else ())
        f = gen.formula()
        assert parse_formula(print_formula(f)) == f


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 9))
def test_round_trip_hypothesis(seed):
    f = FormulaGen(random.Random(seed), letters="ab", preds=[("BIT", 2)], max_quant=3, depth=5).formula()
    assert parse_formula(print_formula(f)) == f


def test_prenex_negated_exists():
    p = to_prenex(parse_formula("!(exists x. a(x))"))
    assert p.prefix == (("forall", "x"),)
    assert p.matrix == Not(LetterAtom("a", "x"))


def test_prenex_toy_already_prenex():
    p = to_prenex(parse_formula(TOY))
    assert p.prefix == (("exists", "x"), ("forall", "y"))
    assert print_formula(p.matrix) == "(a(x) & (x < y -> b(y)))"


def test_prenex_renames_apart():
    p = to_prenex(parse_formula("(exists x. a(x)) & (exists x. b(x))"))
    names = [v for _, v in p.prefix]
    assert len(names) == 2 and len(set(names)) == 2


def test_prenex_rejects_open():
    with pytest.raises(ValueError):
        to_prenex(parse_formula("a(x)"))


def test_prenex_empty_word_fix():
    # (exists x. a(x)) | (forall y. b(y)) is true on the empty word
    f = parse_formula("(exists x. a(x)) | (forall y. b(y))")
    p = to_prenex(f)
    assert evaluate(p.to_formula(), "") == evaluate(f, "") is True


def _semantics_agree(f, g, max_len=6, letters="ab"):
    return all(evaluate(f, w) == evaluate(g, w) for w in words_upto(letters, max_len))


def test_prenex_preserves_semantics_random():
    rng = random.Random(5)
    for _ in range(60):
        f = FormulaGen(rng, letters="ab", max_quant=3, depth=5).formula()
        p = to_prenex(f)
        assert not free_variables(p.to_formula())
        assert _semantics_agree(f, p.to_formula()), print_formula(f)


def test_constant_fold_examples():
    a, b = LetterAtom("a", "x"), LetterAtom("b", "y")
    assert constant_fold(And((TRUE, a))) == a
    assert constant_fold(Or((TRUE, b))) == TRUE
    assert constant_fold(Implies(FALSE, FALSE)) == TRUE


def _has_inner_constant(f):
    from cranebeach.formula import children
    for c in children(f):
        if c in (TRUE, FALSE) and not isinstance(f, (Exists, Forall)):
            return True
        if _has_inner_constant(c):
            return True
    return False


def test_constant_fold_idempotent_and_sound():
    rng = random.Random(9)
    for _ in range(60):
        gen = FormulaGen(rng, letters="ab", max_quant=2, depth=5)
        f = gen.formula()
        g = constant_fold(f)
        assert constant_fold(g) == g
        assert g in (TRUE, FALSE) or not _has_inner_constant(g)
        assert _semantics_agree(f, g)


def test_canonical_orders_and_dedups():
    a, b = LetterAtom("a", "x"), LetterAtom("b", "x")
    assert canonical(Or((b, a, b))) == canonical(Or((a, b)))


def test_nnf_sound():
    rng = random.Random(2)
    for _ in range(40):
        f = FormulaGen(rng, letters="ab", max_quant=2, depth=5).formula()
        assert _semantics_agree(f, to_nnf(f), max_len=5)


def test_free_variables_examples():
    assert free_variables(parse_formula(TOY)) == frozenset()
    assert free_variables(parse_formula("a(x)")) == {"x"}
    assert free_variables(Exists("x", OrderAtom("<", "x", "y"))) == {"y"}
