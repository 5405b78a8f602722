"""Two-party evaluation of FO[<=, fin] formulas on ``u . e^N . v``.

Alice holds ``u``, Bob holds ``v``; both know the formula, the family of
finite-degree predicates, the neutral letter and ``|u.v|``. Every
quantifier of the prenex formula is split three ways, according to whether
its variable is *Alicic* (at most ``l``), *Neutral* (strictly between) or
*Bobic* (at least ``r``), where ``(l, r)`` are the bounds of the type
history of the enclosing quantifiers. Alice expands her quantifiers,
evaluates what she can at the leaves (mixed numerical atoms are false,
mixed order atoms are decided by the types) and sends the simplified tree.
Bob expands the rest and evaluates.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

from .evaluator import BudgetExceeded, CompiledFormula, EvalEnv, compile_formula, default_env, evaluate
from .formula import (FALSE, TRUE, FalseConst, Formula, FormulaSyntaxError, LetterAtom, OrderAtom,
                      PredAtom, PrenexFormula, TrueConst, atom_vars, atoms, canonical, constant_fold, map_atoms,
                      parse_formula, predicate_names, print_formula, to_prenex)
from .predicates import LinkContext, PredicateDef, Registry, tuples_containing
from .words import PaddedWord

__all__ = [
    "ProtocolParams", "AssumptionViolation", "protocol_params", "zone_bounds", "link_context",
    "AnnQuant", "AnnSplit", "AnnLeaf", "annotate_prenex",
    "MAnd", "MOr", "MQuant", "MLeaf", "MConst", "MessageTree", "serialize_message",
    "parse_message", "MessageFormatError", "alice_round", "bob_round", "Transcript", "run_protocol",
    "nerode_classes", "message_bound", "MessageBound", "sample_typed_positions",
    "expand_message", "bit_trace", "evaluate_padded", "expansion_cost",
]

TYPES = "ANB"


class AssumptionViolation(AssertionError):
    def __init__(self, history: str, bounds: tuple[int, int], len_u: int, n_pad: int):
        super().__init__(
            f"bounds({history!r}) = {bounds} violates |u| < l < r < |u| + N "
            f"with |u| = {len_u}, N = {n_pad}")
        self.history = history
        self.bounds = bounds


# ---------------------------------------------------------------------------
# parameters


_CONTEXTS: dict[tuple, LinkContext] = {}


def link_context(family: Iterable[PredicateDef] | LinkContext) -> LinkContext:
    """Shared link context per family (the memo is transparent)."""
    if isinstance(family, LinkContext):
        return family
    family = tuple(family)
    key = tuple(id(d) for d in family)
    ctx = _CONTEXTS.get(key)
    if ctx is None:
        ctx = _CONTEXTS[key] = LinkContext(family)
        ctx._keepalive = family
    return ctx


@dataclass
class ProtocolParams:
    k: int
    n_total: int
    l0: int
    r0: int
    N: int
    len_u: int
    len_v: int
    e: str
    ctx: LinkContext = field(repr=False, compare=False)
    _bounds: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def total_len(self) -> int:
        return self.len_u + self.N + self.len_v

    def bounds(self, history: str) -> tuple[int, int]:
        b = self._bounds.get(history)
        if b is None:
            if not history:
                b = (self.l0, self.r0)
            else:
                l, r = self.bounds(history[:-1])
                n = 1 << (self.k - len(history))
                t = history[-1]
                if t == "A":
                    b = (self.ctx.iterate("R", n, l), r)
                elif t == "N":
                    b = (self.ctx.iterate("L", n, l), self.ctx.iterate("R", n, r))
                elif t == "B":
                    b = (l, self.ctx.iterate("L", n, r))
                else:
                    raise ValueError(f"bad type {t!r} in history {history!r}")
            self._bounds[history] = b
        return b

    def type_range(self, history: str, t: str) -> range:
        l, r = self.bounds(history)
        if t == "A":
            return range(0, l + 1)
        if t == "N":
            return range(l + 1, r)
        return range(r, self.total_len)

    def to_json(self) -> dict:
        return {"k": self.k, "n_total": self.n_total, "l0": self.l0, "r0": self.r0,
                "N": self.N, "len_u": self.len_u, "len_v": self.len_v, "e": self.e,
                "total_len": self.total_len}


def _histories(k: int):
    for i in range(k + 1):
        for h in itertools.product(TYPES, repeat=i):
            yield "".join(h)


def protocol_params(phi: PrenexFormula | int, len_u: int, len_v: int,
                    family: Iterable[PredicateDef] | LinkContext, e: str,
                    validate: bool = True) -> ProtocolParams:
    """``l0 = R^(n+1)(|u|)``, ``r0 = R^(n+1)(R^n(l0))``, ``N = R^(n+1)(r0)``
    with ``n = 2^k - 1``; the Assumption is then checked on every history."""
    k = phi if isinstance(phi, int) else phi.k
    if k > 8:
        raise ValueError("at most 8 quantifiers are supported")
    ctx = link_context(family)
    n = (1 << k) - 1
    l0 = ctx.iterate("R", n + 1, len_u)
    l_max = ctx.iterate("R", n, l0)
    r0 = ctx.iterate("R", n + 1, l_max)
    N = ctx.iterate("R", n + 1, r0)
    params = ProtocolParams(k, n, l0, r0, N, len_u, len_v, e, ctx)
    if validate:
        for h in _histories(k):
            l, r = params.bounds(h)
            if not (len_u < l < r < len_u + N):
                raise AssumptionViolation(h, (l, r), len_u, N)
    return params


def zone_bounds(history: str, params: ProtocolParams) -> tuple[int, int]:
    if len(history) > params.k:
        raise ValueError(f"history {history!r} longer than k = {params.k}")
    return params.bounds(history)


# ---------------------------------------------------------------------------
# annotated formula


@dataclass(frozen=True)
class AnnLeaf:
    matrix: Formula
    history: str


@dataclass(frozen=True)
class AnnQuant:
    q: str
    t: str
    var: str
    history: str
    child: "AnnNode"


@dataclass(frozen=True)
class AnnSplit:
    """``(Q x)[rho]`` split into ``Q^A``, ``Q^N`` and ``Q^B``, combined by
    ``&`` for ``forall`` and ``|`` for ``exists``."""
    q: str
    var: str
    history: str
    parts: tuple[AnnQuant, AnnQuant, AnnQuant]


AnnNode = AnnLeaf | AnnSplit


def annotate_prenex(phi: PrenexFormula) -> AnnNode:
    def build(i: int, history: str) -> AnnNode:
        if i == phi.k:
            return AnnLeaf(phi.matrix, history)
        q, var = phi.prefix[i]
        parts = tuple(AnnQuant(q, t, var, history, build(i + 1, history + t)) for t in TYPES)
        return AnnSplit(q, var, history, parts)
    return build(0, "")


def count_leaves(node: AnnNode) -> int:
    if isinstance(node, AnnLeaf):
        return 1
    return sum(count_leaves(p.child) for p in node.parts)


# ---------------------------------------------------------------------------
# message trees


@dataclass(frozen=True)
class MConst:
    value: bool


@dataclass(frozen=True)
class MLeaf:
    formula: Formula


@dataclass(frozen=True)
class MQuant:
    q: str
    t: str
    var: str
    history: str
    child: "MessageTree"


@dataclass(frozen=True)
class MAnd:
    children: tuple["MessageTree", ...]


@dataclass(frozen=True)
class MOr:
    children: tuple["MessageTree", ...]


MessageTree = MConst | MLeaf | MQuant | MAnd | MOr
M_TRUE, M_FALSE = MConst(True), MConst(False)


@lru_cache(maxsize=200_000)
def serialize_message(node: MessageTree) -> str:
    """Canonical text form: ``T``, ``F``, ``{formula}``,
    ``forall^N[hist]x(child)``, ``&[c1;c2]``, ``|[c1;c2]``."""
    if isinstance(node, MConst):
        return "T" if node.value else "F"
    if isinstance(node, MLeaf):
        return "{" + print_formula(node.formula) + "}"
    if isinstance(node, MQuant):
        return f"{node.q}^{node.t}[{node.history}]{node.var}(" + serialize_message(node.child) + ")"
    op = "&" if isinstance(node, MAnd) else "|"
    return op + "[" + ";".join(serialize_message(c) for c in node.children) + "]"


class MessageFormatError(ValueError):
    pass


def parse_message(text: str | bytes) -> MessageTree:
    """Inverse of :func:`serialize_message`."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    pos = 0

    def fail(what: str):
        raise MessageFormatError(f"malformed message at offset {pos}: {what}")

    def peek() -> str:
        if pos >= len(text):
            fail("unexpected end")
        return text[pos]

    def expect(ch: str):
        nonlocal pos
        if peek() != ch:
            fail(f"expected {ch!r}")
        pos += 1

    def find(ch: str) -> int:
        end = text.find(ch, pos)
        if end < 0:
            fail(f"missing {ch!r}")
        return end

    def node():
        nonlocal pos
        ch = peek()
        if ch in "TF":
            pos += 1
            return MConst(ch == "T")
        if ch == "{":
            end = find("}")
            try:
                f = parse_formula(text[pos + 1:end])
            except FormulaSyntaxError as exc:
                fail(f"bad leaf formula ({exc})")
            pos = end + 1
            return MLeaf(f)
        if ch in "&|":
            pos += 1
            expect("[")
            kids = []
            if peek() != "]":
                kids.append(node())
                while peek() == ";":
                    pos += 1
                    kids.append(node())
            expect("]")
            return (MAnd if ch == "&" else MOr)(tuple(kids))
        for q in ("forall", "exists"):
            if text.startswith(q + "^", pos):
                pos += len(q) + 1
                t = peek()
                if t not in TYPES:
                    fail(f"unknown type {t!r}")
                pos += 1
                expect("[")
                end = find("]")
                history = text[pos:end]
                if any(c not in TYPES for c in history):
                    fail(f"bad history {history!r}")
                pos = end + 1
                open_ = find("(")
                var = text[pos:open_]
                if not var.isidentifier():
                    fail(f"bad variable {var!r}")
                pos = open_ + 1
                child = node()
                expect(")")
                return MQuant(q, t, var, history, child)
        fail("unknown node")

    tree = node()
    if pos != len(text):
        fail("trailing data")
    return tree


def _combine(op: str, kids: Iterable[MessageTree]) -> MessageTree:
    """Flatten, fold constants and keep one child per canonical form."""
    cls = MAnd if op == "&" else MOr
    unit, absorb = (True, False) if op == "&" else (False, True)
    seen: dict[str, MessageTree] = {}
    stack = list(kids)
    while stack:
        c = stack.pop()
        if isinstance(c, cls):
            stack.extend(c.children)
            continue
        if isinstance(c, MConst):
            if c.value == absorb:
                return MConst(absorb)
            continue
        seen.setdefault(serialize_message(c), c)
    if not seen:
        return MConst(unit)
    if len(seen) == 1:
        return next(iter(seen.values()))
    return cls(tuple(seen[key] for key in sorted(seen)))


def _quant(q: str, t: str, var: str, history: str, child: MessageTree, nonempty: bool) -> MessageTree:
    if isinstance(child, MConst):
        if not nonempty:
            return MConst(q == "forall")
        return child
    return MQuant(q, t, var, history, child)


# ---------------------------------------------------------------------------
# Alice


class _LeafFolder:
    """Partial evaluation of the matrix for one type assignment, cached on
    the vector of atom values."""

    def __init__(self, matrix: Formula, registry: Registry):
        self.matrix = matrix
        self.atoms = atoms(matrix)
        self.registry = registry
        self._cache: dict[tuple, MessageTree] = {}

    def leaf(self, types: dict[str, str], values: dict[str, int], letter_at, total: int) -> MessageTree:
        vec = tuple(self._atom_value(a, types, values, letter_at, total) for a in self.atoms)
        out = self._cache.get(vec)
        if out is None:
            table = dict(zip(self.atoms, vec))

            def repl(atom):
                v = table[atom]
                return atom if v is None else (TRUE if v else FALSE)
            f = canonical(constant_fold(map_atoms(self.matrix, repl)))
            if isinstance(f, TrueConst):
                out = M_TRUE
            elif isinstance(f, FalseConst):
                out = M_FALSE
            else:
                out = MLeaf(f)
            self._cache[vec] = out
        return out

    def _atom_value(self, atom, types, values, letter_at, total) -> Optional[bool]:
        if isinstance(atom, LetterAtom):
            if types[atom.var] != "A":
                return None
            return letter_at(values[atom.var]) == atom.letter
        if isinstance(atom, OrderAtom):
            tx, ty = types[atom.left], types[atom.right]
            if tx == "A" and ty == "A":
                x, y = values[atom.left], values[atom.right]
                return x < y if atom.op == "<" else x <= y if atom.op == "<=" else x == y
            if tx == "A" or ty == "A":
                if atom.op == "=":
                    return False
                return tx == "A"
            return None
        if isinstance(atom, PredAtom):
            ts = [types[a] for a in atom.args]
            if all(t == "A" for t in ts):
                vals = [values[a] for a in atom.args]
                if any(v >= total for v in vals):
                    return False
                return bool(self.registry.resolve(atom.name).contains(*vals))
            if any(t == "A" for t in ts):
                return False
            return None
        raise TypeError(atom)


def _local_atoms(matrix_atoms, order: list[str]) -> dict[str, list]:
    """Variables whose atoms mention only themselves and earlier (outer)
    variables, mapped to those atoms."""
    out = {}
    for i, x in enumerate(order):
        outer = set(order[:i])
        mine = [a for a in matrix_atoms if x in atom_vars(a)]
        if all(set(atom_vars(a)) - {x} <= outer for a in mine):
            out[x] = mine
    return out


def alice_round(u: str, len_uv: int, params: ProtocolParams, annotated: AnnNode,
                env: EvalEnv | None = None, max_leaves: int | None = None,
                compress: bool = True) -> MessageTree:
    """Expand the Alicic quantifiers over ``[0, l]``, partially evaluate the
    leaves and simplify. Only ``u``, ``|u.v|`` and public data are used.

    With ``compress`` a variable whose atoms only involve outer variables
    is expanded once per run of positions on which those atoms are
    constant (same message, fewer leaves). With ``max_leaves`` set, give up
    (:class:`BudgetExceeded`) after that many leaf foldings."""
    env = env or default_env()
    leaves = 0
    if len(u) != params.len_u:
        raise ValueError(f"|u| = {len(u)} but params were computed for {params.len_u}")
    total = len_uv + params.N
    lu, e = len(u), params.e

    def letter_at(p: int) -> str:
        if p < lu:
            return u[p]
        if p < lu + params.N:
            return e
        raise AssertionError(f"Alicic position {p} beyond the padding")

    order: list[str] = []
    node = annotated
    while isinstance(node, AnnSplit):
        order.append(node.var)
        node = node.parts[0].child
    folder = _LeafFolder(node.matrix, env.registry)
    local = _local_atoms(folder.atoms, order)
    pure_breaks: dict[int, list[int]] = {}

    def breakpoints(split: AnnSplit, rng: range, types: dict[str, str],
                    values: dict[str, int]) -> list[int] | None:
        """Positions where the values of the atoms on ``split.var`` can
        change along ``rng``; the subtree below depends on the position
        only through those values when the variable is local."""
        x = split.var
        mine = local.get(x)
        if mine is None or not compress:
            return None
        pts = {rng.start}
        pure = pure_breaks.get(id(split))
        if pure is None:
            pure = []
            prev = None
            only_x = [a for a in mine if set(atom_vars(a)) == {x}]
            for p in rng:
                vec = tuple(folder._atom_value(a, {x: "A"}, {x: p}, letter_at, total) for a in only_x)
                if vec != prev:
                    pure.append(p)
                    prev = vec
            pure_breaks[id(split)] = pure
        pts.update(pure)
        for a in mine:
            others = [w for w in atom_vars(a) if w != x and types[w] == "A"]
            if not others:
                continue
            if isinstance(a, OrderAtom):
                for w in others:
                    pts.update((values[w], values[w] + 1))
            else:
                pred = env.registry.resolve(a.name)
                if not pred.finite_degree:
                    return None
                for w in others:
                    for t in tuples_containing(pred, values[w]):
                        for c in t:
                            pts.update((c, c + 1))
        return sorted(q for q in pts if rng.start <= q < rng.stop)

    def walk(node: AnnNode, types: dict[str, str], values: dict[str, int]) -> MessageTree:
        nonlocal leaves
        if isinstance(node, AnnLeaf):
            leaves += 1
            if max_leaves is not None and leaves > max_leaves:
                raise BudgetExceeded(f"Alice's expansion needs more than {max_leaves} leaves")
            return folder.leaf(types, values, letter_at, total)
        op = "&" if node.q == "forall" else "|"
        absorb = MConst(op == "|")
        parts = []
        for part in node.parts:
            sub_types = {**types, node.var: part.t}
            if part.t == "A":
                rng = params.type_range(node.history, "A")
                points = breakpoints(node, rng, sub_types, values)
                kids = []
                for p in (rng if points is None else points):
                    child = walk(part.child, sub_types, {**values, node.var: p})
                    if child == absorb:
                        kids = [child]
                        break
                    kids.append(child)
                parts.append(_combine(op, kids))
            else:
                child = walk(part.child, sub_types, values)
                nonempty = len(params.type_range(node.history, part.t)) > 0
                parts.append(_quant(node.q, part.t, node.var, node.history, child, nonempty))
            if parts[-1] == absorb:
                return absorb
        return _combine(op, parts)

    return walk(annotated, {}, {})


# ---------------------------------------------------------------------------
# Bob


class BobView:
    """What Bob knows of ``u . e^N . v``: everything right of ``u``."""

    def __init__(self, len_u: int, n_pad: int, v: str, e: str):
        self.len_u, self.n_pad, self.v, self.e = len_u, n_pad, v, e

    def __len__(self) -> int:
        return self.len_u + self.n_pad + len(self.v)

    def letter_at(self, p: int) -> str:
        if p < self.len_u:
            raise AssertionError(f"Bob cannot read position {p} of u")
        if p < self.len_u + self.n_pad:
            return self.e
        return self.v[p - self.len_u - self.n_pad]


def bob_round(v: str, len_uv: int, message: MessageTree, phi: PrenexFormula,
              family: Iterable[PredicateDef] | LinkContext, e: str,
              env: EvalEnv | None = None, backend: str = "auto") -> bool:
    """Recompute the parameters from public data, expand the Neutral and
    Bobic quantifiers and evaluate."""
    env = env or default_env()
    len_u = len_uv - len(v)
    params = protocol_params(phi, len_u, len(v), family, e, validate=False)
    return expand_message(message, params, v, env, backend)


def expansion_cost(message: MessageTree, params: ProtocolParams) -> int:
    """Leaf evaluations a full expansion may need."""
    if isinstance(message, (MConst, MLeaf)):
        return 1
    if isinstance(message, (MAnd, MOr)):
        return sum(expansion_cost(c, params) for c in message.children)
    return max(1, len(params.type_range(message.history, message.t))) * expansion_cost(message.child, params)


BRUTE_LIMIT = 2_000_000


def evaluate_message(message: MessageTree, params: ProtocolParams, view, env: EvalEnv) -> bool:
    compiled: dict[Formula, CompiledFormula] = {}
    total = params.total_len

    def leaf(f: Formula, asg: dict[str, int]) -> bool:
        cf = compiled.get(f)
        if cf is None:
            cf = compiled[f] = compile_formula(f, env)
        return cf._fn(_LeafCtx(view, total), asg)

    def walk(node: MessageTree, asg: dict[str, int]) -> bool:
        if isinstance(node, MConst):
            return node.value
        if isinstance(node, MLeaf):
            return leaf(node.formula, asg)
        if isinstance(node, MAnd):
            return all(walk(c, asg) for c in node.children)
        if isinstance(node, MOr):
            return any(walk(c, asg) for c in node.children)
        rng = params.type_range(node.history, node.t)
        want = node.q == "exists"
        for p in rng:
            asg[node.var] = p
            if walk(node.child, asg) == want:
                del asg[node.var]
                return want
        asg.pop(node.var, None)
        return not want

    return walk(message, {})


class _LeafCtx:
    __slots__ = ("letter", "n", "memo")

    def __init__(self, view, total):
        self.letter = view.letter_at
        self.n = total
        self.memo = {}


def expand_message(message: MessageTree, params: ProtocolParams, v: str, env: EvalEnv | None = None,
                   backend: str = "auto") -> bool:
    """Bob's expansion of a message tree against ``v``. Large ranges go to
    z3 (``backend="auto"``) when every predicate has a linear encoding."""
    env = env or default_env()
    if backend == "auto":
        backend = "brute" if expansion_cost(message, params) <= BRUTE_LIMIT else "smt"
    if backend == "brute":
        return evaluate_message(message, params, BobView(params.len_u, params.N, v, params.e), env)
    if backend != "smt":
        raise ValueError(f"unknown backend {backend!r}")
    return _message_smt(message, params, v, env)


def _message_smt(message: MessageTree, params: ProtocolParams, v: str, env: EvalEnv) -> bool:
    from . import smt
    z3 = smt._z3()
    word = smt.SegmentWord.bob_view(params.len_u, params.e, params.N, v)

    def tr(node, scope):
        if isinstance(node, MConst):
            return z3.BoolVal(node.value)
        if isinstance(node, MLeaf):
            return smt.to_z3(node.formula, word, env.registry, scope)
        if isinstance(node, (MAnd, MOr)):
            kids = [tr(c, scope) for c in node.children]
            return z3.And(*kids) if isinstance(node, MAnd) else z3.Or(*kids)
        rng = params.type_range(node.history, node.t)
        x = z3.FreshInt(node.var)
        bound = z3.And(x >= rng.start, x < rng.stop)
        body = tr(node.child, {**scope, node.var: x})
        if node.q == "exists":
            return z3.Exists([x], z3.And(bound, body))
        return z3.ForAll([x], z3.Implies(bound, body))

    return smt.decide(tr(message, {}))


def evaluate_padded(phi: Formula, u: str, e: str, n_pad: int, v: str, env: EvalEnv | None = None,
                    backend: str = "auto") -> bool:
    """Membership of ``u . e^N . v``; brute force when ``T^k`` is small,
    otherwise z3."""
    from .formula import quantifier_count
    env = env or default_env()
    total = len(u) + n_pad + len(v)
    if backend == "auto":
        backend = "brute" if max(total, 1) ** quantifier_count(phi) <= BRUTE_LIMIT else "smt"
    if backend == "brute":
        return evaluate(phi, PaddedWord(u, e, n_pad, v), env=env)
    if backend != "smt":
        raise ValueError(f"unknown backend {backend!r}")
    from . import smt
    return smt.decide(smt.to_z3(phi, smt.SegmentWord.padded(u, e, n_pad, v), env.registry))


# ---------------------------------------------------------------------------
# driver


@dataclass
class Transcript:
    params: ProtocolParams
    message: MessageTree
    message_text: str
    message_bytes: int
    result: bool
    oracle_result: Optional[bool] = None
    rounds: Optional[list[tuple[int, int]]] = None

    def to_json(self) -> dict:
        out = {"params": self.params.to_json(), "message": self.message_text,
               "message_bytes": self.message_bytes, "result": self.result,
               "oracle_result": self.oracle_result}
        if self.rounds is not None:
            out["rounds"] = [list(r) for r in self.rounds]
        return out


def bit_trace(message: bytes, result: bool) -> list[tuple[int, int]]:
    """Pad the one-shot exchange into alternating single bits: Alice sends
    the message bit by bit, Bob answers 0 until the last round."""
    bits = [(byte >> (7 - i)) & 1 for byte in message for i in range(8)]
    rounds = [(b, 0) for b in bits] or [(0, 0)]
    rounds[-1] = (rounds[-1][0], int(result))
    return rounds


def run_protocol(phi: Formula | PrenexFormula, u: str, v: str, family: Sequence[PredicateDef],
                 e: str, with_oracle: bool = False, env: EvalEnv | None = None,
                 trace: bool = False, backend: str = "auto",
                 max_leaves: int | None = None) -> Transcript:
    family = list(family)
    if env is None:
        env = EvalEnv(default_env().registry.merged(family))
    prenex = phi if isinstance(phi, PrenexFormula) else to_prenex(phi)
    allowed = {d.name.upper() for d in family}
    outside = sorted(n for n in predicate_names(prenex.matrix) if n.upper() not in allowed)
    if outside:
        raise ValueError(f"predicates {outside} are not in the finite-degree family {sorted(allowed)}")
    params = protocol_params(prenex, len(u), len(v), family, e)
    annotated = annotate_prenex(prenex)
    message = alice_round(u, len(u) + len(v), params, annotated, env, max_leaves)
    text = serialize_message(message)
    data = text.encode("utf-8")
    result = bob_round(v, len(u) + len(v), parse_message(data), prenex, family, e, env, backend)
    oracle = None
    if with_oracle:
        oracle = evaluate_padded(phi if not isinstance(phi, PrenexFormula) else phi.to_formula(),
                                 u, e, params.N, v, env, backend)
        if oracle != result:
            raise AssertionError(f"protocol answered {result} but u.e^N.v gives {oracle}")
    rounds = bit_trace(data, result) if trace else None
    return Transcript(params, message, text, len(data), result, oracle, rounds)


# ---------------------------------------------------------------------------
# message size bound


@dataclass
class MessageBound:
    leaf_variants: int
    leaf_bytes: int
    log2_bytes: float
    exact: Optional[int]

    def __ge__(self, size: int) -> bool:
        if self.exact is not None:
            return self.exact >= size
        return True

    def to_json(self) -> dict:
        return {"leaf_variants": self.leaf_variants, "leaf_bytes": self.leaf_bytes,
                "log2_bytes": self.log2_bytes, "exact": self.exact}


def message_bound(phi: PrenexFormula) -> MessageBound:
    """Input-independent bound S(phi) on the serialized message size.

    Leaves are the matrix with each atom kept or replaced by a constant,
    then folded: all ``3^atoms`` variants are enumerated. Going up one
    quantifier, a node combines a set of distinct trees from the level
    below (Alice's expansion) with one Neutral and one Bobic quantifier
    node, so ``size_i <= overhead + C_(i+1) * (size_(i+1) + 1) +
    2 * (quant + size_(i+1) + 1)`` and the number of distinct trees obeys
    ``C_i <= 2^C_(i+1) * (C_(i+1) + 2)^2 + 2``.
    """
    import math
    matrix_atoms = atoms(phi.matrix)
    variants: set[str] = set()
    for vec in itertools.product((None, True, False), repeat=len(matrix_atoms)):
        table = dict(zip(matrix_atoms, vec))
        f = canonical(constant_fold(map_atoms(phi.matrix, lambda a: a if table[a] is None else (TRUE if table[a] else FALSE))))
        variants.add(serialize_message(MLeaf(f)) if not isinstance(f, (TrueConst, FalseConst))
                     else ("T" if isinstance(f, TrueConst) else "F"))
    leaf_bytes = max(len(s.encode()) for s in variants)
    count = len(variants)
    size = leaf_bytes
    log_count = math.log2(count)
    log_size = math.log2(size)
    exact_ok = True
    varlen = max((len(v) for v in phi.variables), default=1)
    for i in reversed(range(phi.k)):
        quant_overhead = len("forall^N[]()") + i + varlen
        if exact_ok and count < (1 << 20):
            size = 3 + count * (size + 1) + 2 * (quant_overhead + size + 1)
            count = 2 ** count * (count + 2) ** 2 + 2
            log_size = math.log2(size)
            log_count = math.log2(count)
        else:
            exact_ok = False
            log_size = log_count + log_size + 1
            log_count = 2 ** min(log_count, 1000.0) + 2 * log_count + 1
    return MessageBound(len(variants), leaf_bytes, log_size, size if exact_ok else None)


# ---------------------------------------------------------------------------
# Fact-level checks


def sample_typed_positions(params: ProtocolParams, rng: random.Random) -> list[tuple[int, str]]:
    """Draw positions ``p_1..p_k`` with types chosen along the history,
    each inside the range its type allows under the current bounds."""
    out = []
    history = ""
    for _ in range(params.k):
        choices = [t for t in TYPES if len(params.type_range(history, t))]
        t = rng.choice(choices)
        rng_t = params.type_range(history, t)
        out.append((rng.randrange(rng_t.start, rng_t.stop), t))
        history += t
    return out


# ---------------------------------------------------------------------------
# Nerode classes


def nerode_classes(membership: Callable[[str], bool], p: int, max_prefix_len: int, alphabet,
                   budget: int = 20_000_000) -> int:
    """Number of classes of ``u ~_p v`` (same answers on all suffixes of
    length exactly ``p``) among prefixes of length ``<= max_prefix_len``."""
    letters = sorted(alphabet)
    n_prefixes = sum(len(letters) ** i for i in range(max_prefix_len + 1))
    n_suffixes = len(letters) ** p
    if n_prefixes * n_suffixes > budget:
        raise ValueError(f"{n_prefixes} prefixes x {n_suffixes} suffixes exceeds the budget {budget}")
    suffixes = ["".join(t) for t in itertools.product(letters, repeat=p)]
    signatures = set()
    for n in range(max_prefix_len + 1):
        for t in itertools.product(letters, repeat=n):
            u = "".join(t)
            signatures.add(tuple(membership(u + w) for w in suffixes))
    return len(signatures)
