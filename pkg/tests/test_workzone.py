import pytest

from cranebeach.evaluator import equivalent_up_to, evaluate
from cranebeach.formula import TRUE, parse_formula
from cranebeach.predicates import PredicateError, default_registry, verify_finite_degree
from cranebeach.workzone import (build_zone_formulas, quantifiers_guarded, translate, wrap_predicate,
                                 workzone_transform, zone_layout)

REG = default_registry()
ZF = build_zone_formulas()


def _ranges(layout):
    return [(z.start, z.stop) for z in layout.zones]


def test_layout_examples():
    assert _ranges(zone_layout(30)) == [(0, 8), (8, 16), (16, 24), (24, 30)]
    assert _ranges(zone_layout(16)) == [(0, 4), (4, 8), (8, 12), (12, 16)]
    assert _ranges(zone_layout(17)) == [(0, 8), (8, 16), (16, 17), (17, 17)]


def test_layout_rejects_small():
    with pytest.raises(ValueError):
        zone_layout(3)


@pytest.mark.parametrize("length", range(4, 65))
def test_zone_partition(length):
    lay = zone_layout(length)
    seen = [p for z in lay.zones for p in z]
    assert seen == list(range(length))
    assert len(lay.zones[0]) == len(lay.zones[1]) == lay.quarter
    # zone 2 = positions with exactly one power of two strictly between them and the length
    for x in range(length):
        pows = [q for q in range(x + 1, length) if q & (q - 1) == 0]
        assert (x in lay.work_zone) == (len(pows) == 1)


def test_trans_examples_at_30():
    w = "a" * 30
    assert evaluate(ZF.trans_of(3), w, {"x": 13, "y": 21})
    assert evaluate(ZF.trans_of(1), w, {"x": 13, "y": 5})
    assert evaluate(ZF.trans_of(2), w, {"x": 13, "y": 13})
    assert evaluate(ZF.trans_of(4), w, {"x": 13, "y": 29})
    assert not evaluate(ZF.trans_of(3), w, {"x": 13, "y": 20})


def test_translation_correctness_brute_force():
    for length in range(4, 65):
        lay = zone_layout(length)
        w = "a" * length
        for x in range(length):
            assert evaluate(ZF.work, w, {"x": x}) == (x in lay.work_zone)
        for x in lay.work_zone:
            for i in range(1, 5):
                target = translate(i, x)
                got = [y for y in range(length) if evaluate(ZF.trans_of(i), w, {"x": x, "y": y})]
                assert got == ([target] if target < length else []), (length, x, i)


def test_wrap_examples():
    p = wrap_predicate(REG["BIT"], (2, 1))
    assert p.contains(5, 6)
    assert not p.contains(5, 9)
    same = wrap_predicate(REG["BIT"], (2, 2))
    for x in range(1, 64):
        for y in range(1, 64):
            same_msb = x.bit_length() == y.bit_length()
            assert same.contains(x, y) == (same_msb and REG["BIT"].contains(x, y))


def test_wrap_arity_mismatch():
    with pytest.raises(PredicateError):
        wrap_predicate(REG["BIT"], (1, 2, 3))


@pytest.mark.parametrize("zones", [(1, 2), (2, 3), (4, 1), (3, 3)])
def test_wrapped_predicates_finite_degree(zones):
    verify_finite_degree(wrap_predicate(REG["BIT"], zones), 256)
    verify_finite_degree(wrap_predicate(REG["DOUBLE"], zones), 256)


def test_wrapped_ternary():
    verify_finite_degree(wrap_predicate(REG["PLUS"], (1, 2, 4)), 64)


def test_transform_true():
    r = workzone_transform(TRUE, alphabet="ab")
    assert r.main == TRUE
    assert all(evaluate(r.formula, w, env=r.env()) for w in ["", "a", "abab", "bbbbbb"])


def test_transform_output_predicates_and_guards():
    f = parse_formula("exists x. exists y. (SUCC(x, y) & a(x) & b(y))")
    r = workzone_transform(f, alphabet="ab")
    assert r.non_finite_degree() == []
    for d in r.registry:
        if d.finite_degree:
            verify_finite_degree(d, 64)
    assert quantifiers_guarded(r.main, ["x", "y"])


def test_transform_quick_equivalence():
    f = parse_formula("forall x. (a(x) -> exists y. (x < y & b(y)))")
    r = workzone_transform(f, alphabet="ab")
    rep = equivalent_up_to(f, r.formula, "ab", 8, r.env())
    assert rep.counterexample is None


def test_transform_rejects_open():
    with pytest.raises(ValueError):
        workzone_transform(parse_formula("a(x)"))
