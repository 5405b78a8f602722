"""Unvaried numerical predicates, the finite-degree interface and the link graph.

Every predicate is identified with a set ``E`` of integer tuples; on a
universe of size ``n`` it is read as ``E & [n]^k``. Finite-degree predicates
additionally enumerate, for each value, the finite list of tuples in which
it occurs (:func:`tuples_containing`).
"""
from __future__ import annotations

import ast
import bisect
import itertools
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

__all__ = [
    "Expr", "PredicateDef", "PredicateError", "NotFiniteDegreeError",
    "FiniteDegreeMismatch", "Registry", "LinkContext", "FiniteDegreeReport",
    "builtin", "table", "function_graph", "derived", "pred_contains",
    "tuples_containing", "link_bounds", "iterate_link", "verify_finite_degree",
    "default_registry", "load_registry", "registry_to_json", "sample_family",
    "BUILTIN_TAGS", "floorlog2", "msb",
]


class PredicateError(ValueError):
    pass


class NotFiniteDegreeError(PredicateError):
    pass


class FiniteDegreeMismatch(AssertionError):
    pass


def floorlog2(x: int) -> int:
    if x <= 0:
        raise ValueError("floorlog2 is undefined on values <= 0")
    return x.bit_length() - 1


def msb(x: int) -> int:
    """``2^floor(log x)``; undefined on 0."""
    return 1 << floorlog2(x)


# ---------------------------------------------------------------------------
# unary integer expressions

_ALLOWED_FUNCS = {"floorlog2": floorlog2, "min": min, "max": max}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.FloorDiv: lambda a, b: a // b,
    ast.Pow: lambda a, b: a ** b,
}


class Expr:
    """A unary integer expression in ``x``: ``+ - * // **``, integer
    constants, ``floorlog2``, ``min`` and ``max``.

    Calling the expression returns ``None`` where it is undefined
    (``floorlog2(0)``, negative results, division by zero).
    """

    def __init__(self, text: str):
        self.text = text.strip()
        try:
            tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise PredicateError(f"bad expression {text!r}: {exc.msg}") from None
        self._fn = self._compile(tree.body)
        self.is_identity = isinstance(tree.body, ast.Name)
        self._tree = tree.body

    def _compile(self, node) -> Callable[[int], int]:
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            value = node.value
            return lambda x: value
        if isinstance(node, ast.Name):
            if node.id != "x":
                raise PredicateError(f"expression {self.text!r} may only use the variable x")
            return lambda x: x
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            inner = self._compile(node.operand)
            return lambda x: -inner(x)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            lhs, rhs = self._compile(node.left), self._compile(node.right)
            return lambda x: op(lhs(x), rhs(x))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _ALLOWED_FUNCS and not node.keywords):
            fn = _ALLOWED_FUNCS[node.func.id]
            args = [self._compile(a) for a in node.args]
            return lambda x: fn(*(a(x) for a in args))
        raise PredicateError(f"unsupported construct in expression {self.text!r}")

    def __call__(self, x: int) -> int | None:
        try:
            value = self._fn(x)
        except (ValueError, ZeroDivisionError, OverflowError):
            return None
        return value if value >= 0 else None

    def linear(self) -> tuple[int, int] | None:
        """``(a, b)`` with ``e(x) = a*x + b`` when the expression is affine."""
        def walk(node):
            if isinstance(node, ast.Constant):
                return (0, node.value)
            if isinstance(node, ast.Name):
                return (1, 0)
            if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
                r = walk(node.operand)
                return None if r is None else (-r[0], -r[1])
            if isinstance(node, ast.BinOp):
                lhs, rhs = walk(node.left), walk(node.right)
                if lhs is None or rhs is None:
                    return None
                if isinstance(node.op, ast.Add):
                    return (lhs[0] + rhs[0], lhs[1] + rhs[1])
                if isinstance(node.op, ast.Sub):
                    return (lhs[0] - rhs[0], lhs[1] - rhs[1])
                if isinstance(node.op, ast.Mult):
                    if lhs[0] == 0:
                        return (lhs[1] * rhs[0], lhs[1] * rhs[1])
                    if rhs[0] == 0:
                        return (rhs[1] * lhs[0], rhs[1] * lhs[1])
            return None
        return walk(self._tree)

    def preimage(self, n: int, cap: int = 1 << 62) -> range:
        """All ``x`` with ``e(x) == n``, assuming ``e`` nondecreasing and
        unbounded on its domain (found by bisection)."""
        start = 0
        while self(start) is None:
            start += 1
            if start > 64:
                raise PredicateError(f"expression {self.text!r} undefined on 0..64")
        if self(start) > n:
            return range(start, start)
        hi = max(start + 1, 1)
        while self(hi) is not None and self(hi) <= n:
            hi *= 2
            if hi > cap:
                raise PredicateError(f"expression {self.text!r} looks bounded")
        lo = _first_at_least(self, n, start, hi)
        end = _first_at_least(self, n + 1, lo, hi)
        return range(lo, end)

    def __repr__(self) -> str:
        return f"Expr({self.text!r})"


def _first_at_least(e: Expr, target: int, lo: int, hi: int) -> int:
    # smallest x in [lo, hi] with e(x) >= target; e(hi) >= target
    while lo < hi:
        mid = (lo + hi) // 2
        v = e(mid)
        if v is not None and v >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


# ---------------------------------------------------------------------------
# predicate definitions

BUILTIN_TAGS = ("leq", "lt", "eq", "plus", "times", "msb0", "bit", "pow2")


def _msb0(m: int, n: int) -> bool:
    return m >= 1 and n == m - msb(m)


def _pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


_BUILTINS: dict[str, tuple[int, Callable[..., bool], bool]] = {
    "leq": (2, lambda x, y: x <= y, False),
    "lt": (2, lambda x, y: x < y, False),
    "eq": (2, lambda x, y: x == y, True),
    "plus": (3, lambda x, y, z: x + y == z, False),
    "times": (3, lambda x, y, z: x * y == z, False),
    "msb0": (2, _msb0, False),
    "bit": (2, lambda x, y: (x >> y) & 1 == 1, False),
    "pow2": (1, _pow2, True),
}


@dataclass(eq=False)
class PredicateDef:
    """An unvaried numerical predicate.

    ``kind`` is one of ``builtin``, ``table``, ``function_graph`` or
    ``derived`` (constructed in Python, e.g. the wrapped predicates of the
    work-zone compiler). ``enumerate`` must be set for finite-degree ones.
    """
    name: str
    arity: int
    kind: str
    finite_degree: bool
    contains: Callable[..., bool]
    enumerate: Callable[[int], list[tuple[int, ...]]] | None = None
    window: Callable[[int, list[tuple[int, ...]]], int] | None = None
    smt: Callable | None = None
    meta: dict = field(default_factory=dict)
    # closed form of the largest coordinate of a tuple whose smallest
    # coordinate is m (nondecreasing in m); lets the link graph skip scanning
    reach: Callable[[int], int] | None = None

    def __post_init__(self):
        if self.arity < 1:
            raise PredicateError(f"predicate {self.name} must have positive arity")
        if self.finite_degree and self.enumerate is None:
            raise PredicateError(f"finite-degree predicate {self.name} needs an enumerator")

    def __call__(self, *args: int) -> bool:
        return bool(self.contains(*args))

    def to_json(self) -> dict:
        out = {"name": self.name, "kind": self.kind, "arity": self.arity,
               "finite_degree": self.finite_degree}
        out.update(self.meta)
        return out

    def __repr__(self) -> str:
        return f"PredicateDef({self.name!r}, arity={self.arity}, kind={self.kind!r}, finite_degree={self.finite_degree})"


def builtin(name: str, tag: str) -> PredicateDef:
    if tag not in _BUILTINS:
        raise PredicateError(f"unknown builtin tag {tag!r}; expected one of {BUILTIN_TAGS}")
    arity, fn, fd = _BUILTINS[tag]
    enum = None
    smt = None
    if tag == "pow2":
        enum = lambda n: [(n,)] if _pow2(n) else []
    elif tag == "eq":
        enum = lambda n: [(n, n)]
    if tag in ("leq", "lt", "eq", "plus"):
        smt = {
            "leq": lambda x, y: x <= y,
            "lt": lambda x, y: x < y,
            "eq": lambda x, y: x == y,
            "plus": lambda x, y, z: x + y == z,
        }[tag]
    return PredicateDef(name, arity, "builtin", fd, fn, enum, smt=smt, meta={"tag": tag})


def table(name: str, tuples: Iterable[Sequence[int]] | None = None, rule: str | Sequence[str] | None = None,
          finite_degree: bool = True) -> PredicateDef:
    """Explicit tuple list, or a rule ``"e1(x), e2(x), ..."`` generating
    ``{(e1(x), e2(x), ...) : x >= 0}`` with nondecreasing unbounded
    coordinates."""
    if (tuples is None) == (rule is None):
        raise PredicateError("table needs exactly one of tuples or rule")
    if tuples is not None:
        tset = {tuple(int(v) for v in t) for t in tuples}
        arities = {len(t) for t in tset}
        if len(arities) != 1:
            raise PredicateError(f"table {name} has tuples of mixed arity {sorted(arities)}")
        arity = arities.pop()
        if any(v < 0 for t in tset for v in t):
            raise PredicateError(f"table {name} has negative entries")
        index: dict[int, list[tuple[int, ...]]] = {}
        for t in sorted(tset):
            for v in set(t):
                index.setdefault(v, []).append(t)
        top = max((max(t) for t in tset), default=0)
        return PredicateDef(
            name, arity, "table", finite_degree,
            lambda *args: args in tset,
            lambda n: list(index.get(n, [])),
            window=lambda n, found: max(top, n) + 1,
            meta={"tuples": [list(t) for t in sorted(tset)]},
        )
    texts = [t.strip() for t in (rule.split(",") if isinstance(rule, str) else rule)]
    coords = [Expr(t) for t in texts]
    arity = len(coords)

    def generate(x):
        vals = tuple(c(x) for c in coords)
        return None if any(v is None for v in vals) else vals

    def candidates(n):
        xs: set[int] = set()
        for c in coords:
            xs.update(c.preimage(n))
        return sorted(xs)

    def enum(n):
        out = []
        for x in candidates(n):
            t = generate(x)
            if t is not None and n in t and t not in out:
                out.append(t)
        return sorted(out)

    def contains(*args):
        xs = set(coords[0].preimage(args[0]))
        return any(generate(x) == args for x in xs)

    smt = None
    lin = [c.linear() for c in coords]
    if all(l is not None for l in lin) and lin[0][0] == 1:
        # the generator is recovered from the first coordinate
        def smt(*args, _lin=lin):
            import z3
            t = args[0] - _lin[0][1]
            return z3.And(t >= 0, *[arg == a * t + b for (a, b), arg in zip(_lin[1:], args[1:])])
    reach = None
    if all(l is not None for l in lin) and lin[0] == (1, 0) and all(a >= 1 and b >= 0 for a, b in lin):
        # every coordinate is >= x, so x is the smallest one
        def reach(m, _lin=lin):
            return max(a * m + b for a, b in _lin)
    return PredicateDef(name, arity, "table", finite_degree, contains, enum, smt=smt,
                        meta={"tuples_rule": ",".join(texts)}, reach=reach)


def function_graph(name: str, expr: str | Expr, finite_degree: bool = True) -> PredicateDef:
    """The graph ``{(x, e(x))}`` of a nondecreasing unbounded expression."""
    e = expr if isinstance(expr, Expr) else Expr(expr)

    def contains(x, y):
        return e(x) == y

    def enum(n):
        out = set()
        fx = e(n)
        if fx is not None:
            out.add((n, fx))
        for x in e.preimage(n):
            out.add((x, n))
        return sorted(out)

    smt = None
    lin = e.linear()
    if lin is not None:
        a, b = lin
        smt = lambda x, y: y == a * x + b
    reach = None
    if lin is not None and lin[0] >= 1 and lin[1] >= 0:
        reach = lambda m, _a=lin[0], _b=lin[1]: _a * m + _b
    return PredicateDef(name, 2, "function_graph", finite_degree, contains, enum, smt=smt,
                        meta={"expr": e.text}, reach=reach)


def derived(name: str, arity: int, contains, enumerate=None, window=None, finite_degree: bool = True,
            kind: str = "derived", **meta) -> PredicateDef:
    return PredicateDef(name, arity, kind, finite_degree, contains, enumerate, window, meta=dict(meta))


# ---------------------------------------------------------------------------
# operations


def _check_tuple(p: PredicateDef, tup: Sequence[int]):
    if len(tup) != p.arity:
        raise PredicateError(f"{p.name} has arity {p.arity}, got {len(tup)} arguments")
    if any(v < 0 for v in tup):
        raise PredicateError(f"{p.name}: negative entry in {tuple(tup)}")


def pred_contains(p: PredicateDef, tup: Sequence[int], universe: int | None = None) -> bool:
    """Membership of ``tup``; with ``universe`` the predicate is clipped to
    ``[universe]^k``."""
    _check_tuple(p, tup)
    if universe is not None and any(v >= universe for v in tup):
        return False
    return bool(p.contains(*tup))


def tuples_containing(p: PredicateDef, n: int) -> list[tuple[int, ...]]:
    if not p.finite_degree:
        raise NotFiniteDegreeError(f"{p.name} is not flagged finite degree")
    if n < 0:
        raise PredicateError("values are nonnegative")
    return p.enumerate(n)


@dataclass
class FiniteDegreeReport:
    name: str
    upto: int
    checked: int
    max_degree: int
    argmax: int
    degrees: list[int] = field(repr=False, default_factory=list)

    def to_json(self) -> dict:
        return {"name": self.name, "upto": self.upto, "checked": self.checked,
                "max_degree": self.max_degree, "argmax": self.argmax}


def default_window(n: int, found: list[tuple[int, ...]]) -> int:
    """Brute-force window: twice the largest value seen, plus slack."""
    top = max([n] + [v for t in found for v in t])
    return 2 * top + 8


def brute_tuples_containing(p: PredicateDef, n: int, window: int) -> set[tuple[int, ...]]:
    """Every tuple of ``[0, window]^k`` containing ``n`` that satisfies ``p``."""
    out = set()
    k = p.arity
    rng = range(window + 1)
    for slot in range(k):
        for rest in itertools.product(rng, repeat=k - 1):
            tup = rest[:slot] + (n,) + rest[slot:]
            if p.contains(*tup):
                out.add(tup)
    return out


def verify_finite_degree(p: PredicateDef, upto: int, start: int = 0) -> FiniteDegreeReport:
    """Cross-check the enumerator against brute-force membership scans."""
    if not p.finite_degree:
        raise NotFiniteDegreeError(f"{p.name} is not flagged finite degree")
    degrees = []
    best, arg = -1, start
    win = p.window or default_window
    for n in range(start, upto + 1):
        found = p.enumerate(n)
        fset = set(found)
        if len(fset) != len(found):
            raise FiniteDegreeMismatch(f"{p.name}: duplicate tuples enumerated for {n}")
        w = win(n, found)
        if any(v > w for t in found for v in t):
            raise FiniteDegreeMismatch(f"{p.name}: tuple outside window {w} enumerated for {n}")
        brute = brute_tuples_containing(p, n, w)
        if fset != brute:
            extra = sorted(brute - fset)[:5]
            bogus = sorted(fset - brute)[:5]
            raise FiniteDegreeMismatch(
                f"{p.name} at {n}: enumeration misses {extra} and wrongly lists {bogus}")
        degrees.append(len(found))
        if len(found) > best:
            best, arg = len(found), n
    return FiniteDegreeReport(p.name, upto, upto - start + 1, best, arg, degrees)


# ---------------------------------------------------------------------------
# registry


class Registry(Mapping[str, PredicateDef]):
    """Name -> predicate. Lookups fall back to case-insensitive matching so
    that lowercase registry names can be used from upper-case formula
    syntax."""

    def __init__(self, defs: Iterable[PredicateDef] = ()):
        self._defs: dict[str, PredicateDef] = {}
        for d in defs:
            self.add(d)

    def add(self, d: PredicateDef) -> None:
        self._defs[d.name] = d

    def resolve(self, name: str) -> PredicateDef:
        if name in self._defs:
            return self._defs[name]
        folded = [d for k, d in self._defs.items() if k.casefold() == name.casefold()]
        if len(folded) == 1:
            return folded[0]
        if folded:
            raise PredicateError(f"ambiguous predicate name {name!r}")
        raise PredicateError(f"unknown predicate {name!r}")

    def __getitem__(self, name: str) -> PredicateDef:
        try:
            return self.resolve(name)
        except PredicateError:
            raise KeyError(name) from None

    def __contains__(self, name: object) -> bool:
        try:
            self.resolve(name)  # type: ignore[arg-type]
            return True
        except PredicateError:
            return False

    def __iter__(self):
        return iter(self._defs)

    def __len__(self) -> int:
        return len(self._defs)

    def merged(self, other: Iterable[PredicateDef]) -> "Registry":
        out = Registry(self._defs.values())
        for d in other:
            out.add(d)
        return out


def sample_family(name: str) -> list[PredicateDef]:
    """The finite-degree families used in tests and demos."""
    name = name.lower()
    if name in ("", "none", "empty"):
        return []
    if name == "succ":
        return [table("SUCC", rule="x,x+1")]
    if name == "double":
        return [function_graph("DOUBLE", "2*x")]
    if name == "pow2":
        return [builtin("POW2", "pow2")]
    raise PredicateError(f"unknown sample family {name!r}")


def default_registry() -> Registry:
    defs = [builtin(tag.upper(), tag) for tag in BUILTIN_TAGS]
    defs += sample_family("succ") + sample_family("double")
    return Registry(defs)


def predicate_from_json(entry: dict, known: Registry | None = None) -> PredicateDef:
    name = entry["name"]
    kind = entry.get("kind")
    fd = entry.get("finite_degree")
    if kind == "builtin":
        d = builtin(name, entry["tag"])
        if fd is not None and fd != d.finite_degree:
            raise PredicateError(f"{name}: builtin {entry['tag']} has finite_degree={d.finite_degree}")
        return d
    if kind == "table":
        if "tuples" in entry:
            d = table(name, tuples=entry["tuples"], finite_degree=bool(fd if fd is not None else True))
        else:
            d = table(name, rule=entry["tuples_rule"], finite_degree=bool(fd if fd is not None else True))
        if "arity" in entry and entry["arity"] != d.arity:
            raise PredicateError(f"{name}: declared arity {entry['arity']} but tuples have arity {d.arity}")
        return d
    if kind == "function_graph":
        return function_graph(name, entry["expr"], finite_degree=bool(fd if fd is not None else True))
    if kind == "wrapped":
        from .workzone import wrap_predicate
        if known is None or entry["base"] not in known:
            raise PredicateError(f"{name}: base predicate {entry.get('base')!r} is unknown")
        return wrap_predicate(known.resolve(entry["base"]), entry["zones"], name=name)
    raise PredicateError(f"{name}: unsupported predicate kind {kind!r}")


def load_registry(source: str | Path | dict, base: Registry | None = None) -> Registry:
    """Read a registry JSON document (path, text or parsed dict) on top of
    ``base`` (the default registry when omitted)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        doc = json.loads(text)
    reg = Registry((base if base is not None else default_registry()).values())
    for entry in doc.get("predicates", []):
        reg.add(predicate_from_json(entry, reg))
    return reg


def registry_to_json(defs: Iterable[PredicateDef]) -> dict:
    return {"predicates": [d.to_json() for d in defs]}


# ---------------------------------------------------------------------------
# link graph


class LinkContext:
    """Link graph of a finite-degree family.

    Two values are adjacent when some tuple of the family spans both, so
    the neighbourhood of ``p`` is the interval ``[L(p)+1, R(p)-1]``. Spans
    are discovered by scanning values upward; ``reach[a]`` is the largest
    coordinate of a tuple whose smallest coordinate is ``a``.
    """

    def __init__(self, family: Iterable[PredicateDef]):
        self.family = tuple(family)
        for d in self.family:
            if not d.finite_degree:
                raise NotFiniteDegreeError(f"{d.name} is not flagged finite degree")
        self._reach: list[int] = []
        self._prefix_max: list[int] = []
        self._lock = threading.Lock()
        self._closed = all(d.reach is not None for d in self.family)

    def _reach_closed(self, m: int) -> int:
        return max([m] + [d.reach(m) for d in self.family])

    def _extend(self, upto: int) -> None:
        with self._lock:
            m = len(self._reach)
            while m <= upto:
                r = m
                for d in self.family:
                    for t in d.enumerate(m):
                        if min(t) == m:
                            r = max(r, max(t))
                self._reach.append(r)
                prev = self._prefix_max[-1] if self._prefix_max else -1
                self._prefix_max.append(max(prev, r))
                m += 1

    def bounds(self, p: int) -> tuple[int, int]:
        if p < 0:
            raise PredicateError("link bounds are defined on nonnegative values")
        if self._closed:
            hi = self._reach_closed(p)
            lo, top = 0, p
            while lo < top:
                mid = (lo + top) // 2
                if self._reach_closed(mid) >= p:
                    top = mid
                else:
                    lo = mid + 1
            return lo - 1, hi + 1
        self._extend(p)
        hi = max(p, self._prefix_max[p])
        lo = bisect.bisect_left(self._prefix_max, p, 0, p + 1)
        return lo - 1, hi + 1

    def neighbors(self, p: int) -> range:
        lo, hi = self.bounds(p)
        return range(lo + 1, hi)

    def L(self, p: int) -> int:
        return self.bounds(p)[0]

    def R(self, p: int) -> int:
        return self.bounds(p)[1]

    def iterate(self, direction: str, n: int, p: int) -> int:
        if n < 0 or p < 0:
            raise PredicateError("iteration count and start must be nonnegative")
        step = {"L": self.L, "R": self.R}[direction]
        for _ in range(n):
            p = step(p)
            if p < 0:
                raise PredicateError("L-iteration underflows below 0")
        return p


def link_bounds(ctx: LinkContext, p: int) -> tuple[int, int]:
    return ctx.bounds(p)


def iterate_link(ctx: LinkContext, direction: str, n: int, p: int) -> int:
    return ctx.iterate(direction, n, p)
