"""Scalar fields on H^n: a small expression language and a test corpus.

Grammar (ASCII operators)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?
    atom  := number | ident | call | "(" expr ")"
    call  := ("exp" | "log" | "sqrt") "(" expr ")" | ("znorm2" | "gnorm4") "(" ")"

``^`` is right-associative and binds tighter than unary minus, so ``-x1^2``
is ``-(x1^2)``. Exponents must be constant: numbers and the bound names
``Q``, ``QM2`` (``Q - 2``) and ``n``. Bare ``znorm2``/``gnorm4`` without
parentheses are accepted as well.
"""
from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence, Union

import numpy as np

from . import jets
from .core_group import Point, gauge_norm, homogeneous_dimension
from .jets import Jet2, JetDomainError

Scalar = Union[float, np.ndarray, Jet2]


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class FieldDomainError(JetDomainError):
    """A jet domain error annotated with the offending sub-expression."""

    def __init__(self, op: str, value: float, position: int, subexpr: str):
        ValueError.__init__(self, f"{op} undefined at value {value!r} in {subexpr!r}"
                                  f" (byte {position})")
        self.op = op
        self.value = value
        self.position = position
        self.subexpr = subexpr


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    pos: int = dc_field(default=-1, compare=False)


@dataclass(frozen=True)
class Ident:
    name: str
    pos: int = dc_field(default=-1, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: int = dc_field(default=-1, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = dc_field(default=-1, compare=False)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"
    pos: int = dc_field(default=-1, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    pos: int = dc_field(default=-1, compare=False)


Expr = Union[Num, Ident, Neg, BinOp, Pow, Call]

UNARY_CALLS = ("exp", "log", "sqrt")
BUILTINS = ("znorm2", "gnorm4")
CONSTANTS = ("Q", "QM2", "n")


def print_expr(e: Expr) -> str:
    """Fully parenthesized text; ``parse_field(print_expr(e)) == e``."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Neg):
        return f"(-{print_expr(e.operand)})"
    if isinstance(e, BinOp):
        return f"({print_expr(e.left)} {e.op} {print_expr(e.right)})"
    if isinstance(e, Pow):
        return f"({print_expr(e.base)}^{print_expr(e.exponent)})"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(print_expr(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


# -- parser ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    raw = text.encode("utf-8")
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            offset = len(text[:i].encode("utf-8"))
            raise ParseError(f"unexpected character {text[i]!r}", offset)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), len(text[:i].encode("utf-8"))))
        i = m.end()
    toks.append(("end", "", len(raw)))
    return toks


class _Parser:
    def __init__(self, text: str, n: int):
        self.toks = _tokenize(text)
        self.i = 0
        self.n = n

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            left = BinOp(op, left, self.term(), pos)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            left = BinOp(op, left, self.unary(), pos)
        return left

    def unary(self) -> Expr:
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary(), pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = self.unary()
            _check_constant(exponent, exp_pos)
            return Pow(base, exponent, pos)
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text), pos)
        if kind == "name":
            if text in UNARY_CALLS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, (arg,), pos)
            if text in BUILTINS:
                if self.peek()[1] == "(":
                    self.take()
                    self.expect(")")
                return Call(text, (), pos)
            if text in CONSTANTS or _coordinate_index(text, self.n) is not None:
                return Ident(text, pos)
            raise UnknownIdentifierError(text, pos)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", pos)


def _coordinate_index(name: str, n: int) -> int | None:
    """Flat coordinate slot of ``x1..xn, y1..yn, t`` or ``None``."""
    if name == "t":
        return 2 * n
    m = re.fullmatch(r"([xy])([1-9]\d*)", name)
    if m is None:
        return None
    k = int(m.group(2))
    if k > n:
        return None
    return k - 1 if m.group(1) == "x" else n + k - 1


def _check_constant(e: Expr, pos: int) -> None:
    if isinstance(e, Ident) and e.name not in CONSTANTS:
        raise ParseError(f"exponent must be constant, found {e.name!r}", e.pos)
    if isinstance(e, Call):
        if e.name in BUILTINS:
            raise ParseError(f"exponent must be constant, found {e.name}()", e.pos)
        for a in e.args:
            _check_constant(a, pos)
    elif isinstance(e, Neg):
        _check_constant(e.operand, pos)
    elif isinstance(e, BinOp):
        _check_constant(e.left, pos)
        _check_constant(e.right, pos)
    elif isinstance(e, Pow):
        _check_constant(e.base, pos)
        _check_constant(e.exponent, pos)


def parse_field(text: str, n: int = 1) -> Expr:
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return _Parser(text, n).parse()


# -- evaluation --------------------------------------------------------------

def power(base: Scalar, r: float) -> Scalar:
    """``base ** r`` with the jet positivity rules applied to arrays too."""
    if isinstance(base, Jet2):
        return base ** r
    r = float(r)
    arr = np.asarray(base, dtype=float)
    if r.is_integer():
        if r < 0 and np.any(arr == 0):
            raise JetDomainError(f"pow({int(r)})", 0.0)
        out = arr ** int(r) if r >= 0 else 1.0 / arr ** int(-r)
    else:
        if np.any(arr <= 0):
            raise JetDomainError(f"pow({r})", float(np.min(arr)))
        out = arr ** r
    return out if isinstance(base, np.ndarray) else float(out)


def znorm2(coords: Sequence[Scalar]) -> Scalar:
    n = (len(coords) - 1) // 2
    total = coords[0] * coords[0]
    for c in coords[1:2 * n]:
        total = total + c * c
    return total


def gnorm4(coords: Sequence[Scalar]) -> Scalar:
    z2 = znorm2(coords)
    t = coords[-1]
    return z2 * z2 + t * t


def _constants(n: int) -> dict[str, float]:
    Q = homogeneous_dimension(n)
    return {"Q": float(Q), "QM2": float(Q - 2), "n": float(n)}


def evaluate(e: Expr, coords: Sequence[Scalar], n: int) -> Scalar:
    """Evaluate on a flat coordinate list of floats, arrays or jets."""
    consts = _constants(n)

    def ev(node):
        try:
            return _ev(node)
        except FieldDomainError:
            raise
        except JetDomainError as err:
            raise FieldDomainError(err.op, err.value, node.pos, print_expr(node)) from None

    def _ev(node):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Ident):
            if node.name in consts:
                return consts[node.name]
            return coords[_coordinate_index(node.name, n)]
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if isinstance(b, (float, int)) and b == 0:
                raise JetDomainError("division", 0.0)
            if isinstance(b, np.ndarray) and np.any(b == 0):
                raise JetDomainError("division", 0.0)
            return a / b
        if isinstance(node, Pow):
            return power(ev(node.base), float(evaluate(node.exponent, coords, n)))
        if isinstance(node, Call):
            if node.name == "znorm2":
                return znorm2(coords)
            if node.name == "gnorm4":
                return gnorm4(coords)
            arg = ev(node.args[0])
            return getattr(jets, node.name)(arg)
        raise TypeError(f"not an expression node: {node!r}")

    return ev(e)


# -- fields ------------------------------------------------------------------

@dataclass(frozen=True)
class FieldDomain:
    """Test box ``[-zr, zr]^{2n} x [-tr, tr]`` with an optional hole ``gauge < min_gauge``."""
    z_half: float = 1.5
    t_half: float = 2.0
    min_gauge: float = 0.0

    def contains(self, p: Point) -> bool:
        return (bool(np.all(np.abs(p.z) <= self.z_half)) and abs(p.t) <= self.t_half
                and gauge_norm(p) >= self.min_gauge)

    def sample(self, n: int, count: int, rng: np.random.Generator) -> list[Point]:
        out: list[Point] = []
        while len(out) < count:
            z = rng.uniform(-self.z_half, self.z_half, 2 * n)
            p = Point(z[:n], z[n:], rng.uniform(-self.t_half, self.t_half))
            if gauge_norm(p) >= self.min_gauge:
                out.append(p)
        return out


DEFAULT_DOMAIN = FieldDomain()


class Field:
    """A scalar field: a callable on the flat coordinate list ``[x.., y.., t]``.

    The same callable serves plain floats, numpy arrays (vectorized sampling)
    and :class:`Jet2` seeds (exact 2-jets).
    """

    def __init__(self, fn: Callable[[Sequence[Scalar]], Scalar], n: int, name: str = "field",
                 expr: Expr | None = None, domain: FieldDomain = DEFAULT_DOMAIN):
        self.fn = fn
        self.n = n
        self.name = name
        self.expr = expr
        self.domain = domain

    @classmethod
    def from_expr(cls, e: Expr | str, n: int, name: str | None = None,
                  domain: FieldDomain = DEFAULT_DOMAIN) -> "Field":
        if isinstance(e, str):
            e = parse_field(e, n)
        return cls(lambda c: evaluate(e, c, n), n, name or print_expr(e), e, domain)

    @classmethod
    def constant(cls, c: float, n: int) -> "Field":
        return cls.from_expr(Num(float(c)) if c >= 0 else Neg(Num(-float(c))), n, repr(float(c)))

    def __call__(self, coords: Sequence[Scalar]) -> Scalar:
        return self.fn(coords)

    def value(self, p: Point) -> float:
        return float(self.fn(list(p.as_array())))

    def values(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized values at rows of an ``(m, 2n+1)`` array."""
        pts = np.asarray(pts, dtype=float)
        out = self.fn([pts[:, k] for k in range(pts.shape[1])])
        return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()

    def jet(self, p: Point) -> Jet2:
        self._check_dim(p)
        out = self.fn(jets.seed(p))
        if not isinstance(out, Jet2):
            return Jet2.constant(float(out), 2 * p.n + 1)
        return out

    def horizontal(self, p: Point) -> jets.HorizontalJet:
        return jets.horizontal_from_euclidean(self.jet(p), p)

    def map(self, g: Callable[[Scalar], Scalar], name: str) -> "Field":
        """Pointwise post-composition ``g(u)``."""
        fn = self.fn
        return Field(lambda c: g(fn(c)), self.n, name, None, self.domain)

    def _check_dim(self, p: Point) -> None:
        if p.n != self.n:
            raise ValueError(f"field {self.name!r} is defined for n={self.n}, point has n={p.n}")

    def __repr__(self):
        return f"Field({self.name!r}, n={self.n})"


def eval_field(e: Expr | Field, p: Point) -> Jet2:
    if isinstance(e, Field):
        return e.jet(p)
    out = evaluate(e, jets.seed(p), p.n)
    return out if isinstance(out, Jet2) else Jet2.constant(float(out), 2 * p.n + 1)


# -- corpus ------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusEntry:
    name: str
    family: str
    text: str
    domain: FieldDomain
    field: Field = dc_field(compare=False, repr=False)


class FieldCorpus(tuple):
    """Ordered, immutable collection of :class:`CorpusEntry`."""

    def by_family(self, family: str) -> list[CorpusEntry]:
        return [e for e in self if e.family == family]

    def by_name(self, name: str) -> CorpusEntry:
        for e in self:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def fields(self) -> list[Field]:
        return [e.field for e in self]


PROBE_PER_AXIS = 17
PROBE_MAX_POINTS = 200_000
# exp(poly) stays inside [1e-3, 1e3] when |poly| <= ln(1e3) ~ 6.9
EXP_POLY_BOUND = 6.5


def probe_lattice(n: int, domain: FieldDomain = DEFAULT_DOMAIN) -> np.ndarray:
    """Regular probe lattice over the test box, coarsened for large ``n``."""
    dim = 2 * n + 1
    k = PROBE_PER_AXIS
    while k ** dim > PROBE_MAX_POINTS and k > 3:
        k -= 2
    axes = [np.linspace(-domain.z_half, domain.z_half, k)] * (2 * n)
    axes.append(np.linspace(-domain.t_half, domain.t_half, k))
    grid = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grid], axis=1)
    if domain.min_gauge > 0:
        z2 = np.sum(pts[:, :2 * n] ** 2, axis=1)
        keep = (z2 * z2 + pts[:, -1] ** 2) ** 0.25 >= domain.min_gauge
        pts = pts[keep]
    return pts


def _coord_names(n: int) -> list[str]:
    return [f"x{k}" for k in range(1, n + 1)] + [f"y{k}" for k in range(1, n + 1)] + ["t"]


def _fmt(c: float) -> str:
    return f"{c:.6f}"


def _quadratic_text(c0: float, lin: np.ndarray, quad: np.ndarray, names: list[str]) -> str:
    """Text for ``c0 + lin.w + sum_{i<=j} quad[i,j] w_i w_j`` with 6-digit coefficients."""
    parts = [_fmt(c0)]

    def add(c, mono):
        sign = "-" if c < 0 else "+"
        parts.append(f" {sign} {_fmt(abs(c))}*{mono}")

    for i, nm in enumerate(names):
        add(lin[i], nm)
    for i in range(len(names)):
        for j in range(i, len(names)):
            add(quad[i, j], f"{names[i]}*{names[j]}")
    return "".join(parts)


def _round6(a):
    return np.round(np.asarray(a, dtype=float), 6)


@functools.lru_cache(maxsize=16)
def builtin_corpus(n: int = 1, seed: int = 0) -> FieldCorpus:
    """Deterministic positive test fields for dimension ``n``.

    Families: (a) constants, (b) exponentials of random quadratics, (c) the
    bump ``exp(delta |z|^2)``, (d) ``((1+|z|^2)^2 + t^2)^(-(Q-2)/4)``, (e) the
    gauge power ``|xi|^-(Q-2)`` off a small ball, (f) shifted quadratics.
    """
    rng = np.random.default_rng(seed)
    names = _coord_names(n)
    dim = 2 * n + 1
    lattice = probe_lattice(n)
    entries: list[CorpusEntry] = []

    def add(name, family, text, domain=DEFAULT_DOMAIN):
        f = Field.from_expr(text, n, name, domain)
        entries.append(CorpusEntry(name, family, text, domain, f))

    add("const_1", "a", "1")
    add("const_2.5", "a", "2.5")

    for k in range(3):
        lin = rng.uniform(-1, 1, dim)
        quad = np.triu(rng.uniform(-1, 1, (dim, dim)))
        c0 = rng.uniform(-1, 1)
        w = lattice
        vals = c0 + w @ lin + np.sum((w @ quad) * w, axis=1)
        scale = min(1.0, EXP_POLY_BOUND / float(np.max(np.abs(vals))))
        text = f"exp({_quadratic_text(*(_round6(a * scale) for a in (c0, lin, quad)), names)})"
        add(f"exp_quadratic_{k}", "b", text)

    add("bump_0.1", "c", "exp(0.1*znorm2())")
    add("jerison_lee", "d", "((1 + znorm2())^2 + t^2)^(-QM2/4)")
    add("gauge_power", "e", "gnorm4()^(-QM2/4)", FieldDomain(min_gauge=0.1))

    made = 0
    while made < 2:
        lin = _round6(rng.uniform(-1.5, 1.5, dim) / dim)
        quad = _round6(np.triu(rng.uniform(-1.2, 1.2, (dim, dim))) / dim)
        c0 = float(_round6(rng.uniform(0.5, 3.0)))
        vals = c0 + lattice @ lin + np.sum((lattice @ quad) * lattice, axis=1)
        if float(np.min(vals)) <= 0.1:
            continue  # rejected: not safely positive on the probe lattice
        add(f"shifted_quadratic_{made}", "f", _quadratic_text(c0, lin, quad, names))
        made += 1

    return FieldCorpus(entries)
