"""A second evaluator written without closures or memoization, used only to
cross-check the library's model checker."""
from cranebeach.formula import (And, Exists, FalseConst, Forall, Implies, LetterAtom, Not, Or,
                                OrderAtom, PredAtom, TrueConst)


def naive_eval(f, word, a, registry):
    n = len(word)
    if isinstance(f, TrueConst):
        return True
    if isinstance(f, FalseConst):
        return False
    if isinstance(f, LetterAtom):
        return word[a[f.var]] == f.letter
    if isinstance(f, OrderAtom):
        x, y = a[f.left], a[f.right]
        return {"<": x < y, "<=": x <= y, "=": x == y}[f.op]
    if isinstance(f, PredAtom):
        vals = [a[v] for v in f.args]
        if max(vals) >= n:
            return False
        return bool(registry.resolve(f.name).contains(*vals))
    if isinstance(f, Not):
        return not naive_eval(f.child, word, a, registry)
    if isinstance(f, And):
        return all(naive_eval(c, word, a, registry) for c in f.children)
    if isinstance(f, Or):
        return any(naive_eval(c, word, a, registry) for c in f.children)
    if isinstance(f, Implies):
        return not naive_eval(f.lhs, word, a, registry) or naive_eval(f.rhs, word, a, registry)
    values = [naive_eval(f.body, word, {**a, f.var: i}, registry) for i in range(n)]
    return any(values) if isinstance(f, Exists) else all(values)
