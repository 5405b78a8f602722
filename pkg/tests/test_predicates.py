import dataclasses
import json
import threading

import pytest
from hypothesis import given, strategies as st

from cranebeach.evaluator import EvalEnv, evaluate
from cranebeach.formula import parse_formula
from cranebeach.predicates import (Expr, FiniteDegreeMismatch, LinkContext, NotFiniteDegreeError,
                                   PredicateError, builtin, default_registry, derived,
                                   function_graph, iterate_link, link_bounds, load_registry,
                                   pred_contains, registry_to_json, sample_family, table,
                                   tuples_containing, verify_finite_degree)

REG = default_registry()
SUCC = sample_family("succ")
DOUBLE = sample_family("double")
FAMILIES = {"succ": SUCC, "double": DOUBLE}


def test_pred_contains_examples():
    assert pred_contains(REG["MSB0"], (6, 2))
    assert pred_contains(REG["MSB0"], (8, 0))
    assert not pred_contains(REG["PLUS"], (2, 3, 5), universe=4)
    assert pred_contains(REG["PLUS"], (2, 3, 5))


def test_pred_contains_errors():
    with pytest.raises(PredicateError):
        pred_contains(REG["PLUS"], (1, 2))
    with pytest.raises(PredicateError):
        pred_contains(REG["LEQ"], (-1, 2))


def test_tuples_containing_examples():
    assert tuples_containing(SUCC[0], 5) == [(4, 5), (5, 6)]
    assert tuples_containing(REG["POW2"], 8) == [(8,)]
    assert tuples_containing(REG["POW2"], 6) == []
    assert tuples_containing(DOUBLE[0], 6) == [(3, 6), (6, 12)]


def test_tuples_containing_rejects_infinite_degree():
    with pytest.raises(NotFiniteDegreeError):
        tuples_containing(REG["MSB0"], 4)


def _brute_degree(p, n, window):
    out = set()
    for y in range(window + 1):
        if p.contains(n, y):
            out.add((n, y))
        if p.contains(y, n):
            out.add((y, n))
    return out


@pytest.mark.parametrize("name", ["succ", "double"])
def test_enumeration_membership_coherence(name):
    p = FAMILIES[name][0]
    for n in range(257):
        assert set(tuples_containing(p, n)) == _brute_degree(p, n, 2 * n + 4)


def test_coherence_pow2_and_eq():
    for n in range(257):
        assert set(tuples_containing(REG["POW2"], n)) == ({(n,)} if n and n & (n - 1) == 0 else set())
        assert tuples_containing(REG["EQ"], n) == [(n, n)]


def test_explicit_table():
    t = table("T", tuples=[(1, 2, 3), (3, 3, 0)])
    assert tuples_containing(t, 3) == [(1, 2, 3), (3, 3, 0)]
    assert t.contains(1, 2, 3) and not t.contains(3, 2, 1)
    verify_finite_degree(t, 10)


def test_link_bounds_examples():
    assert link_bounds(LinkContext(SUCC), 5) == (3, 7)
    assert link_bounds(LinkContext(DOUBLE), 6) == (2, 13)
    assert link_bounds(LinkContext([REG["POW2"]]), 5) == (4, 6)


def test_iterate_link_examples():
    ctx = LinkContext(SUCC)
    assert iterate_link(ctx, "R", 2, 3) == 7
    assert iterate_link(ctx, "R", 0, 11) == 11
    assert iterate_link(LinkContext(DOUBLE), "L", 0, 11) == 11
    assert iterate_link(ctx, "L", 1, iterate_link(ctx, "R", 2, 3)) == 5 >= ctx.R(3)


def test_iterate_link_underflow():
    with pytest.raises(PredicateError):
        iterate_link(LinkContext(SUCC), "L", 3, 2)


def _brute_neighbors(family, p, window):
    """Values q joined to p by some spanning tuple, by scanning all tuples
    with coordinates up to ``window``."""
    out = {p}
    for d in family:
        for m in range(window + 1):
            for t in d.enumerate(m):
                lo, hi = min(t), max(t)
                if lo <= p <= hi:
                    out.update(range(lo, hi + 1))
    return out


@pytest.mark.parametrize("name", ["succ", "double"])
def test_link_bounds_match_brute_force(name):
    fam = FAMILIES[name]
    ctx = LinkContext(fam)
    for p in range(0, 80):
        nb = _brute_neighbors(fam, p, 2 * p + 4)
        assert ctx.bounds(p) == (min(nb) - 1, max(nb) + 1)


@pytest.mark.parametrize("name", ["succ", "double"])
def test_fact_minl(name):
    ctx = LinkContext(FAMILIES[name])
    prev = None
    for p in range(1, 201):
        left, right = ctx.bounds(p)
        assert left < p < right
        if prev is not None:
            assert prev[0] <= left and prev[1] <= right
        prev = (left, right)


@pytest.mark.parametrize("name", ["succ", "double"])
def test_fact_move(name):
    ctx = LinkContext(FAMILIES[name])
    for p in range(0, 121):
        for n in range(1, 7):
            for m in range(0, n):
                assert ctx.iterate("L", m, ctx.iterate("R", n, p)) >= ctx.R(p)
                try:
                    down = ctx.iterate("L", n, p)
                except PredicateError:
                    continue
                assert ctx.iterate("R", m, down) <= ctx.L(p)


@pytest.mark.parametrize("name", ["succ", "double"])
def test_link_edges_symmetric(name):
    ctx = LinkContext(FAMILIES[name])
    for p in range(60):
        for q in ctx.neighbors(p):
            assert p in ctx.neighbors(q)


def test_link_context_rejects_infinite_degree():
    with pytest.raises(NotFiniteDegreeError):
        LinkContext([REG["BIT"]])


def test_link_context_concurrent_queries():
    ctx = LinkContext(DOUBLE)
    results = {}

    def work(start):
        results[start] = [ctx.bounds(p) for p in range(start, 400, 7)]

    threads = [threading.Thread(target=work, args=(s,)) for s in range(7)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    fresh = LinkContext(DOUBLE)
    for start, got in results.items():
        assert got == [fresh.bounds(p) for p in range(start, 400, 7)]


def test_verify_finite_degree_examples():
    assert verify_finite_degree(SUCC[0], 100).max_degree == 2
    assert verify_finite_degree(REG["POW2"], 100).max_degree == 1
    with pytest.raises(NotFiniteDegreeError):
        verify_finite_degree(REG["MSB0"], 10)


def test_verify_finite_degree_catches_bad_enumerator():
    bad = derived("BAD", 2, lambda x, y: y == x + 1, lambda n: [(n, n + 1)])
    with pytest.raises(FiniteDegreeMismatch):
        verify_finite_degree(bad, 5)


def test_expr_language():
    e = Expr("2 ** (floorlog2(x) ** 2)")
    assert e(8) == 512 and e(0) is None
    assert Expr("x // 2 + max(x, 3)")(4) == 6
    assert Expr("2*x + 1").linear() == (2, 1)
    assert Expr("x*x").linear() is None
    assert list(Expr("x // 2").preimage(3)) == [6, 7]
    for bad in ("y + 1", "__import__('os')", "x.real", "x if x else 1"):
        with pytest.raises(PredicateError):
            Expr(bad)


@given(st.integers(min_value=0, max_value=5000))
def test_function_graph_preimage_property(n):
    p = function_graph("H", "x // 3")
    assert set(tuples_containing(p, n)) == {(n, n // 3)} | {(x, n) for x in range(3 * n, 3 * n + 3)}


def test_registry_json_round_trip(tmp_path):
    doc = {"predicates": [
        {"name": "succ", "kind": "table", "arity": 2, "finite_degree": True, "tuples_rule": "x,x+1"},
        {"name": "double", "kind": "function_graph", "expr": "2*x", "finite_degree": True},
        {"name": "MSB0", "kind": "builtin", "tag": "msb0"},
    ]}
    path = tmp_path / "reg.json"
    path.write_text(json.dumps(doc))
    reg = load_registry(path)
    assert reg.resolve("SUCC").contains(4, 5)
    env = EvalEnv(reg)
    assert evaluate(parse_formula("exists x. exists y. (SUCC(x, y) & a(x) & b(y))"), "ab", env=env)
    again = load_registry(registry_to_json([reg["succ"], reg["double"]]))
    assert again.resolve("double").contains(3, 6)


def test_registry_rejects_bad_entries():
    with pytest.raises(PredicateError):
        load_registry({"predicates": [{"name": "X", "kind": "builtin", "tag": "nope"}]})
    with pytest.raises(PredicateError):
        load_registry({"predicates": [{"name": "X", "kind": "builtin", "tag": "msb0", "finite_degree": True}]})
    with pytest.raises(PredicateError):
        load_registry({"predicates": [{"name": "X", "kind": "table", "tuples": [[1], [1, 2]]}]})


@pytest.mark.parametrize("name", ["succ", "double"])
def test_closed_form_reach_matches_scan(name):
    fam = FAMILIES[name]
    assert all(d.reach is not None for d in fam)
    closed = LinkContext(fam)
    scanned = LinkContext([dataclasses.replace(d, reach=None) for d in fam])
    assert not scanned._closed
    for p in range(600):
        assert closed.bounds(p) == scanned.bounds(p)


def test_closed_form_handles_huge_values():
    ctx = LinkContext(DOUBLE)
    p = 10 ** 12
    left, right = ctx.bounds(p)
    assert (left, right) == (p // 2 - 1, 2 * p + 1)


def test_no_closed_form_for_nonlinear():
    assert function_graph("H", "x // 3").reach is None
    assert table("T", rule="x, x * x").reach is None
