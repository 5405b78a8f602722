"""First-order formulas over words: AST, concrete syntax and normalizations.

The concrete syntax is::

    formula := ("exists" | "forall") IDENT "." formula | impl
    impl    := disj [ "->" formula ]
    disj    := conj { "|" conj }
    conj    := neg  { "&" neg }
    neg     := "!" neg | "(" formula ")" | atom | "true" | "false"
    atom    := LETTER "(" IDENT ")"
             | UPPER_IDENT "(" IDENT {"," IDENT} ")"
             | IDENT ("<" | "<=" | "=") IDENT

``And``/``Or`` nodes are n-ary and kept flat by the smart constructors
:func:`conj` and :func:`disj`; the parser keeps exactly the nesting written in
the text so that printing and re-parsing is the identity.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

__all__ = [
    "TrueConst", "FalseConst", "LetterAtom", "OrderAtom", "PredAtom", "Not",
    "And", "Or", "Implies", "Exists", "Forall", "Formula", "PrenexFormula",
    "FormulaSyntaxError", "parse_formula", "print_formula", "free_variables",
    "constant_fold", "canonical", "to_nnf", "to_prenex", "conj", "disj",
    "neg", "quantifier_count", "atoms", "substitute", "has_letters",
    "predicate_names", "TRUE", "FALSE",
]


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class TrueConst:
    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class FalseConst:
    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class LetterAtom:
    letter: str
    var: str

    def __str__(self) -> str:
        return print_formula(self)


ORDER_OPS = ("<", "<=", "=")


@dataclass(frozen=True)
class OrderAtom:
    op: str
    left: str
    right: str

    def __post_init__(self):
        if self.op not in ORDER_OPS:
            raise ValueError(f"unknown order operator {self.op!r}")

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class PredAtom:
    name: str
    args: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("numerical predicate atom needs at least one argument")

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class Not:
    child: "Formula"

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"

    def __str__(self) -> str:
        return print_formula(self)


Formula = Union[TrueConst, FalseConst, LetterAtom, OrderAtom, PredAtom, Not,
                And, Or, Implies, Exists, Forall]
Quantifier = (Exists, Forall)
Atom = (LetterAtom, OrderAtom, PredAtom)

TRUE = TrueConst()
FALSE = FalseConst()


@dataclass(frozen=True)
class PrenexFormula:
    """``prefix`` lists ``("forall" | "exists", var)`` outermost first."""
    prefix: tuple[tuple[str, str], ...]
    matrix: Formula

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(tuple(p) for p in self.prefix))
        names = [v for _, v in self.prefix]
        if len(set(names)) != len(names):
            raise ValueError("prefix variables must be distinct")
        if quantifier_count(self.matrix):
            raise ValueError("prenex matrix must be quantifier-free")

    @property
    def k(self) -> int:
        return len(self.prefix)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.prefix)

    def to_formula(self) -> Formula:
        f = self.matrix
        for q, v in reversed(self.prefix):
            f = Exists(v, f) if q == "exists" else Forall(v, f)
        return f

    def __str__(self) -> str:
        return print_formula(self.to_formula())


# ---------------------------------------------------------------------------
# smart constructors


def conj(children: Iterable[Formula]) -> Formula:
    """Flattened conjunction; ``conj([]) == TRUE``."""
    flat: list[Formula] = []
    for c in children:
        if isinstance(c, And):
            flat.extend(c.children)
        else:
            flat.append(c)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(children: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for c in children:
        if isinstance(c, Or):
            flat.extend(c.children)
        else:
            flat.append(c)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f.child
    return Not(f)


# ---------------------------------------------------------------------------
# lexer / parser

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<le><=)
  | (?P<sym>[()!&|<=.,])
  | (?P<upper>[A-Z][A-Za-z0-9_]*)
  | (?P<ident>[a-z][a-z0-9_]*)
""", re.VERBOSE)

KEYWORDS = frozenset({"exists", "forall", "true", "false"})


@dataclass(frozen=True)
class _Token:
    kind: str  # 'sym', 'upper', 'ident', 'kw', 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unknown token {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind == "ws":
            for i, ch in enumerate(value):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            if kind in ("arrow", "le"):
                kind = "sym"
            elif kind == "ident" and value in KEYWORDS:
                kind = "kw"
            tokens.append(_Token(kind, value, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> _Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise FormulaSyntaxError(f"{message}, found {found}", tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("sym", "kw") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.error(f"expected {text!r}")

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.error("expected a variable")
        name = self.tok.text
        self.i += 1
        return name

    def parse(self) -> Formula:
        f = self.formula()
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")
        return f

    def formula(self) -> Formula:
        if self.tok.kind == "kw" and self.tok.text in ("exists", "forall"):
            q = self.tok.text
            self.i += 1
            var = self.ident()
            self.expect(".")
            body = self.formula()
            return Exists(var, body) if q == "exists" else Forall(var, body)
        lhs = self.disjunction()
        if self.accept("->"):
            return Implies(lhs, self.formula())
        return lhs

    def disjunction(self) -> Formula:
        items = [self.conjunction()]
        while self.accept("|"):
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self) -> Formula:
        items = [self.negation()]
        while self.accept("&"):
            items.append(self.negation())
        return items[0] if len(items) == 1 else And(tuple(items))

    def negation(self) -> Formula:
        if self.accept("!"):
            return Not(self.negation())
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        return self.atom()

    def atom(self) -> Formula:
        tok = self.tok
        if tok.kind == "upper":
            self.i += 1
            self.expect("(")
            args = [self.ident()]
            while self.accept(","):
                args.append(self.ident())
            self.expect(")")
            return PredAtom(tok.text, tuple(args))
        if tok.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "sym" and nxt.text == "(":
                if len(tok.text) != 1:
                    self.error("letter predicates are a single lowercase character", tok)
                self.i += 2
                var = self.ident()
                self.expect(")")
                return LetterAtom(tok.text, var)
            self.i += 1
            if self.tok.kind == "sym" and self.tok.text in ORDER_OPS:
                op = self.tok.text
                self.i += 1
                return OrderAtom(op, tok.text, self.ident())
            self.error("expected '<', '<=' or '='")
        self.error("expected a formula")


def parse_formula(text: str) -> Formula:
    """Parse ``text``; raises :class:`FormulaSyntaxError` with a position."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printer


def print_formula(f: Formula) -> str:
    """Canonical text. Binary connectives are always parenthesized, and a
    quantifier is parenthesized unless it is the whole formula or a
    quantifier body."""
    return _print(f, top=True)


def _print(f: Formula, top: bool = False) -> str:
    if isinstance(f, TrueConst):
        return "true"
    if isinstance(f, FalseConst):
        return "false"
    if isinstance(f, LetterAtom):
        return f"{f.letter}({f.var})"
    if isinstance(f, OrderAtom):
        return f"{f.left} {f.op} {f.right}"
    if isinstance(f, PredAtom):
        return f"{f.name}({', '.join(f.args)})"
    if isinstance(f, Not):
        return "!" + _print(f.child)
    if isinstance(f, And):
        if len(f.children) < 2:
            raise ValueError("cannot print a conjunction with fewer than two children")
        return "(" + " & ".join(_print(c) for c in f.children) + ")"
    if isinstance(f, Or):
        if len(f.children) < 2:
            raise ValueError("cannot print a disjunction with fewer than two children")
        return "(" + " | ".join(_print(c) for c in f.children) + ")"
    if isinstance(f, Implies):
        return f"({_print(f.lhs)} -> {_print(f.rhs)})"
    if isinstance(f, (Exists, Forall)):
        q = "exists" if isinstance(f, Exists) else "forall"
        text = f"{q} {f.var}. {_print(f.body, top=True)}"
        return text if top else f"({text})"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# traversals


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (And, Or)):
        return f.children
    if isinstance(f, Not):
        return (f.child,)
    if isinstance(f, Implies):
        return (f.lhs, f.rhs)
    if isinstance(f, (Exists, Forall)):
        return (f.body,)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(children(g))


def atom_vars(f: Formula) -> tuple[str, ...]:
    if isinstance(f, LetterAtom):
        return (f.var,)
    if isinstance(f, OrderAtom):
        return (f.left, f.right)
    if isinstance(f, PredAtom):
        return f.args
    return ()


def free_variables(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(atom_vars(f))
    if isinstance(f, (Exists, Forall)):
        return free_variables(f.body) - {f.var}
    out: set[str] = set()
    for c in children(f):
        out |= free_variables(c)
    return frozenset(out)


def all_variables(f: Formula) -> frozenset[str]:
    out: set[str] = set()
    for g in subformulas(f):
        out.update(atom_vars(g))
        if isinstance(g, (Exists, Forall)):
            out.add(g.var)
    return frozenset(out)


def quantifier_count(f: Formula) -> int:
    return sum(isinstance(g, (Exists, Forall)) for g in subformulas(f))


def atoms(f: Formula) -> list[Formula]:
    """Distinct atoms in order of first occurrence (left to right)."""
    seen: dict[Formula, None] = {}

    def walk(g):
        if isinstance(g, Atom):
            seen.setdefault(g, None)
        for c in children(g):
            walk(c)

    walk(f)
    return list(seen)


def has_letters(f: Formula) -> bool:
    return any(isinstance(g, LetterAtom) for g in subformulas(f))


def predicate_names(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, PredAtom))


def map_atoms(f: Formula, fn) -> Formula:
    """Rebuild ``f`` with every atom replaced by ``fn(atom)``."""
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, (TrueConst, FalseConst)):
        return f
    if isinstance(f, Not):
        return Not(map_atoms(f.child, fn))
    if isinstance(f, And):
        return And(tuple(map_atoms(c, fn) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(map_atoms(c, fn) for c in f.children))
    if isinstance(f, Implies):
        return Implies(map_atoms(f.lhs, fn), map_atoms(f.rhs, fn))
    if isinstance(f, Exists):
        return Exists(f.var, map_atoms(f.body, fn))
    if isinstance(f, Forall):
        return Forall(f.var, map_atoms(f.body, fn))
    raise TypeError(f"not a formula: {f!r}")


def substitute(f: Formula, mapping: dict[str, str]) -> Formula:
    """Rename free variables. Capture is the caller's problem: targets must
    not be bound inside ``f``."""
    if isinstance(f, LetterAtom):
        return LetterAtom(f.letter, mapping.get(f.var, f.var))
    if isinstance(f, OrderAtom):
        return OrderAtom(f.op, mapping.get(f.left, f.left), mapping.get(f.right, f.right))
    if isinstance(f, PredAtom):
        return PredAtom(f.name, tuple(mapping.get(a, a) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        return type(f)(f.var, substitute(f.body, inner))
    if isinstance(f, (TrueConst, FalseConst)):
        return f
    if isinstance(f, Not):
        return Not(substitute(f.child, mapping))
    if isinstance(f, Implies):
        return Implies(substitute(f.lhs, mapping), substitute(f.rhs, mapping))
    return type(f)(tuple(substitute(c, mapping) for c in f.children))


# ---------------------------------------------------------------------------
# constant folding and canonical form


def constant_fold(f: Formula) -> Formula:
    """Remove ``true``/``false`` below connectives.

    ``exists x. true`` and ``forall x. false`` are kept: they depend on
    whether the universe is empty.
    """
    if isinstance(f, (TrueConst, FalseConst, LetterAtom, OrderAtom, PredAtom)):
        return f
    if isinstance(f, Not):
        c = constant_fold(f.child)
        if isinstance(c, TrueConst):
            return FALSE
        if isinstance(c, FalseConst):
            return TRUE
        return Not(c)
    if isinstance(f, And):
        out = []
        for c in map(constant_fold, f.children):
            if isinstance(c, FalseConst):
                return FALSE
            if not isinstance(c, TrueConst):
                out.append(c)
        return conj(out)
    if isinstance(f, Or):
        out = []
        for c in map(constant_fold, f.children):
            if isinstance(c, TrueConst):
                return TRUE
            if not isinstance(c, FalseConst):
                out.append(c)
        return disj(out)
    if isinstance(f, Implies):
        lhs, rhs = constant_fold(f.lhs), constant_fold(f.rhs)
        if isinstance(lhs, FalseConst) or isinstance(rhs, TrueConst):
            return TRUE
        if isinstance(lhs, TrueConst):
            return rhs
        if isinstance(rhs, FalseConst):
            return constant_fold(Not(lhs))
        return Implies(lhs, rhs)
    if isinstance(f, Exists):
        body = constant_fold(f.body)
        return FALSE if isinstance(body, FalseConst) else Exists(f.var, body)
    if isinstance(f, Forall):
        body = constant_fold(f.body)
        return TRUE if isinstance(body, TrueConst) else Forall(f.var, body)
    raise TypeError(f"not a formula: {f!r}")


def canonical(f: Formula) -> Formula:
    """Sort and deduplicate ``And``/``Or`` children by printed form, flattening
    nested connectives of the same kind. Semantics-preserving."""
    if isinstance(f, (And, Or)):
        kids: dict[str, Formula] = {}
        for c in f.children:
            c = canonical(c)
            parts = c.children if type(c) is type(f) else (c,)
            for p in parts:
                kids.setdefault(print_formula(p), p)
        ordered = [kids[key] for key in sorted(kids)]
        return conj(ordered) if isinstance(f, And) else disj(ordered)
    if isinstance(f, Not):
        return Not(canonical(f.child))
    if isinstance(f, Implies):
        return Implies(canonical(f.lhs), canonical(f.rhs))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.var, canonical(f.body))
    return f


# ---------------------------------------------------------------------------
# NNF and prenex form


def to_nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form: ``Implies`` desugared, negations on atoms only."""
    if isinstance(f, TrueConst):
        return FALSE if negate else TRUE
    if isinstance(f, FalseConst):
        return TRUE if negate else FALSE
    if isinstance(f, Atom):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return to_nnf(f.child, not negate)
    if isinstance(f, Implies):
        return to_nnf(Or((Not(f.lhs), f.rhs)), negate)
    if isinstance(f, (And, Or)):
        kids = [to_nnf(c, negate) for c in f.children]
        flip = isinstance(f, And) == negate
        return disj(kids) if flip else conj(kids)
    if isinstance(f, (Exists, Forall)):
        q = type(f)
        if negate:
            q = Forall if q is Exists else Exists
        return q(f.var, to_nnf(f.body, negate))
    raise TypeError(f"not a formula: {f!r}")


def _fresh_names(taken: set[str]) -> Iterator[str]:
    for i in itertools.count():
        for base in ("x", "y", "z", "w"):
            name = f"{base}{i}" if i else base
            if name not in taken:
                taken.add(name)
                yield name


def _rename_apart(f: Formula, env: dict[str, str], fresh: Iterator[str], used: set[str]) -> Formula:
    if isinstance(f, Atom):
        return substitute(f, env)
    if isinstance(f, (TrueConst, FalseConst)):
        return f
    if isinstance(f, Not):
        return Not(_rename_apart(f.child, env, fresh, used))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_rename_apart(c, env, fresh, used) for c in f.children))
    if isinstance(f, (Exists, Forall)):
        name = f.var if f.var not in used else next(fresh)
        used.add(name)
        return type(f)(name, _rename_apart(f.body, {**env, f.var: name}, fresh, used))
    raise TypeError(f"unexpected node in NNF: {f!r}")


def _pull(f: Formula) -> tuple[list[tuple[str, str]], Formula]:
    if isinstance(f, (Exists, Forall)):
        prefix, matrix = _pull(f.body)
        q = "exists" if isinstance(f, Exists) else "forall"
        return [(q, f.var)] + prefix, matrix
    if isinstance(f, (And, Or)):
        prefix: list[tuple[str, str]] = []
        mats = []
        for c in f.children:
            p, m = _pull(c)
            prefix.extend(p)
            mats.append(m)
        return prefix, (conj(mats) if isinstance(f, And) else disj(mats))
    return [], f


def _value_on_empty_word(f: Formula) -> bool:
    if isinstance(f, TrueConst):
        return True
    if isinstance(f, FalseConst):
        return False
    if isinstance(f, Exists):
        return False
    if isinstance(f, Forall):
        return True
    if isinstance(f, Not):
        return not _value_on_empty_word(f.child)
    if isinstance(f, And):
        return all(_value_on_empty_word(c) for c in f.children)
    if isinstance(f, Or):
        return any(_value_on_empty_word(c) for c in f.children)
    if isinstance(f, Implies):
        return (not _value_on_empty_word(f.lhs)) or _value_on_empty_word(f.rhs)
    raise ValueError("atom outside the scope of any quantifier")


def to_prenex(f: Formula) -> PrenexFormula:
    """Prenex normal form of a closed formula, with variables renamed apart.

    Pulling quantifiers across ``&``/``|`` is only sound on nonempty
    universes. When the first quantifier of the pulled prefix gives the
    wrong value on the empty word, a vacuous quantifier on a fresh variable
    is prepended to fix it.
    """
    fv = free_variables(f)
    if fv:
        raise ValueError(f"to_prenex needs a closed formula; free: {sorted(fv)}")
    # already prenex with distinct variables: keep the matrix as written
    prefix = []
    g = f
    while isinstance(g, (Exists, Forall)):
        prefix.append(("exists" if isinstance(g, Exists) else "forall", g.var))
        g = g.body
    names = [v for _, v in prefix]
    if quantifier_count(g) == 0 and len(set(names)) == len(names):
        return PrenexFormula(tuple(prefix), g)
    nnf = to_nnf(f)
    used: set[str] = set()
    fresh = _fresh_names(set(all_variables(f)))
    renamed = _rename_apart(nnf, {}, fresh, used)
    prefix, matrix = _pull(renamed)
    if prefix:
        want = _value_on_empty_word(f)
        got = prefix[0][0] == "forall"
        if want != got:
            prefix.insert(0, ("forall" if want else "exists", next(fresh)))
    return PrenexFormula(tuple(prefix), matrix)
