import itertools

import pytest

from cranebeach.constructions import (GuardError, GuardedEvaluator, and_msb, and_without_guard,
                                      bit_translate, build_msbz_via_F, check_bit_recovery,
                                      check_independence, check_phi_prime, check_sum,
                                      count_up_to_const, evaluate_guarded, f_predicate, f_value,
                                      graph_from_count, independence_witness, sum_from_count)
from cranebeach.evaluator import EvalEnv, evaluate
from cranebeach.formula import parse_formula
from cranebeach.predicates import (FiniteDegreeMismatch, NotFiniteDegreeError, PredicateError,
                                   default_registry, pred_contains, tuples_containing, verify_finite_degree)

REG = default_registry()


def _f(n):
    # independent of the Expr-based implementation
    return 0 if n == 0 else 2 ** ((n.bit_length() - 1) ** 2)


def test_f_values():
    assert [f_value(n) for n in range(10)] == [_f(n) for n in range(10)]
    assert f_value(7) == 16 and f_value(8) == 512 and f_value(2) == f_value(3) == 2


def test_q_examples():
    q, msbz = build_msbz_via_F()
    ev = GuardedEvaluator(REG.merged([f_predicate()]))
    assert ev(q, {"n": 8})
    assert not ev(q, {"n": 3})
    assert ev(q, {"n": 1})
    # msbz(n, m): m is n with its most significant bit cleared
    assert ev(msbz, {"n": 6, "m": 2})
    assert not ev(msbz, {"n": 6, "m": 3})


def test_q_and_msb0_small_range():
    q, msbz = build_msbz_via_F()
    ev = GuardedEvaluator(REG.merged([f_predicate()]))
    for n in range(1, 65):
        assert ev(q, {"n": n}) == (n & (n - 1) == 0)
        for m in range(0, 65):
            assert ev(msbz, {"n": n, "m": m}) == (m == n - 2 ** (n.bit_length() - 1))


def test_guarded_evaluator_matches_finite_evaluator():
    # on formulas whose quantifiers are bounded by a free variable, the N-semantics
    # and the finite semantics on a long enough word agree
    f = parse_formula("exists y. (y < x & (exists z. (y < z & z < x & SUCC(y, z))))")
    for x in range(6):
        assert evaluate_guarded(f, {"x": x}) == evaluate(f, "a" * 10, {"x": x})


def test_guarded_evaluator_rejects_unguarded():
    with pytest.raises(GuardError):
        evaluate_guarded(parse_formula("exists y. a(y)"), {})


def test_independence_witness_examples():
    w = independence_witness(3)
    assert w.b_of({0, 2}) == 13
    p = w.predicate
    assert p.contains(9, 13)
    assert not p.contains(10, 13)
    assert independence_witness(1).b_of(set()) == 2
    assert not p.contains(3, 2)


@pytest.mark.parametrize("n", range(1, 11))
def test_check_independence(n):
    assert check_independence(n)


def test_independence_brute_force_small():
    # direct bitwise oracle: AND_MSB(a, b) iff same MSB and a & b == a
    w = independence_witness(4)
    for members in itertools.chain.from_iterable(itertools.combinations(range(4), r) for r in range(5)):
        b = w.b_of(members)
        for i, a in enumerate(w.a):
            assert w.predicate.contains(a, b) == (i in members) == (a & b == a)


def test_and_msb_finite_degree():
    rep = verify_finite_degree(and_msb(), 1024)
    assert rep.max_degree == 1024


def test_corrupted_predicate():
    assert check_independence(4, and_without_guard())
    with pytest.raises((FiniteDegreeMismatch, NotFiniteDegreeError)):
        verify_finite_degree(and_without_guard(), 16)


@pytest.mark.parametrize("word,c,expected", [("ozo", 2, True), ("ooozz", 3, False), ("zzz", 0, True)])
def test_count_examples(word, c, expected):
    cf = count_up_to_const(2)
    assert evaluate(cf.formula, word, {"c": c}) is expected
    assert cf.oracle(word, c) is expected


def test_count_exhaustive():
    cf = count_up_to_const(2)
    for n in range(1, 7):
        for t in itertools.product("oz", repeat=n):
            w = "".join(t)
            for c in range(n):
                assert evaluate(cf.formula, w, {"c": c}) == (c <= 2 and c == w.count("o"))


def test_graph_from_count():
    F = graph_from_count(count_up_to_const(2))
    assert F.graph(5) == 2
    assert F.contains(0, 0)
    assert F.graph(1) == 1
    assert [F.graph(c) for c in range(8)] == [min(c, 2) for c in range(8)]
    assert not F.finite_degree


def test_sum_examples():
    sc = sum_from_count(count_up_to_const(2))
    env = EvalEnv(sc.registry())
    w = "z" * 8
    assert evaluate(sc.psi, w, {"a": 5, "b": 3, "c": 7}, env)
    assert not evaluate(sc.psi, w, {"a": 5, "b": 3, "c": 1}, env)
    assert evaluate(sc.psi, w, {"a": 3, "b": 3, "c": 0}, env)


def test_sum_and_phi_prime_small():
    cf = count_up_to_const(2)
    sc = sum_from_count(cf)
    assert check_sum(sc, 8, oracle=lambda c: min(c, 2)) == []
    assert check_phi_prime(cf, sc, 6) == []


def test_bit_translate_examples():
    p = bit_translate("x", check_upto=1024)
    assert pred_contains(p, (5, 5))
    assert not pred_contains(p, (5, 6))
    assert pred_contains(p, (5, 7))
    rep = verify_finite_degree(p, 64)
    assert len(tuples_containing(p, 64)) <= rep.max_degree


def test_bit_translate_rejects_bad_f():
    with pytest.raises(PredicateError):
        bit_translate("x // 2 - x", check_upto=64)
    with pytest.raises(PredicateError):
        bit_translate("0 * x", check_upto=64)


def test_bit_translate_enumeration_sound():
    p = bit_translate("2 * x", check_upto=1024)
    for n in range(100):
        for t in tuples_containing(p, n):
            assert n in t and pred_contains(p, t)


def test_bit_recovery():
    assert check_bit_recovery("x", 32) == []
    assert check_bit_recovery("x // 2 + 1", 32) == []
