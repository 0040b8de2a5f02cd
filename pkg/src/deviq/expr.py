"""Immutable symbolic expressions with exact rational arithmetic.

Expressions are trees of `Rat`, `Sym`, `Add`, `Mul`, `Pow` and `Fun` nodes.
`normalize` rewrites any well-formed tree into a fully expanded sum of
monomials (function applications and non-expandable powers are opaque
atoms), which makes zero-testing of polynomial expressions decidable.
Constants are `fractions.Fraction`, so repeated differentiation never
accumulates floating-point drift.

All values here are immutable and hashable; every operation is a pure
function, so expressions can be shared freely across threads.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import DomainError, UnboundSymbolError

__all__ = [
    "Symbol",
    "SymbolKind",
    "Expr",
    "Rat",
    "Sym",
    "Add",
    "Mul",
    "Pow",
    "Fun",
    "FUNCTIONS",
    "as_expr",
    "number",
    "sin",
    "cos",
    "tan",
    "exp",
    "ln",
    "sqrt",
    "normalize",
    "diff",
    "substitute",
    "evaluate",
    "equivalent",
    "EquivalenceResult",
    "free_symbols",
    "to_text",
]


class SymbolKind(enum.Enum):
    BASE = "base-coordinate"
    FIBRE = "fibre-coordinate"
    JET = "jet-coordinate"
    VERTICAL = "vertical-coordinate"
    MOMENTUM = "momentum"
    VERTICAL_MOMENTUM = "vertical-momentum"
    PARAMETER = "parameter"


#: kinds that behave as dependent variables under total derivatives
DEPENDENT_KINDS = frozenset(
    {
        SymbolKind.FIBRE,
        SymbolKind.JET,
        SymbolKind.VERTICAL,
        SymbolKind.MOMENTUM,
        SymbolKind.VERTICAL_MOMENTUM,
    }
)

#: kinds introduced by the vertical extension
VERTICAL_KINDS = frozenset({SymbolKind.VERTICAL, SymbolKind.VERTICAL_MOMENTUM})


@dataclass(frozen=True)
class Symbol:
    """A named coordinate or parameter.  Name and kind never change."""

    name: str
    kind: SymbolKind

    def __repr__(self):
        return f"Symbol({self.name!r}, {self.kind.name})"

    def __str__(self):
        return self.name


class Expr:
    """Base class for expression nodes; provides operator sugar."""

    __slots__ = ()

    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Rat(Fraction(-1)), as_expr(other)))))

    def __rsub__(self, other):
        return Add((as_expr(other), Mul((Rat(Fraction(-1)), self))))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Mul((self, Pow(as_expr(other), Fraction(-1))))

    def __rtruediv__(self, other):
        return Mul((as_expr(other), Pow(self, Fraction(-1))))

    def __pow__(self, exponent):
        return Pow(self, _as_fraction(exponent))

    def __neg__(self):
        return Mul((Rat(Fraction(-1)), self))

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Rat(Expr):
    """Exact rational constant."""

    value: Fraction

    def __repr__(self):
        return f"Rat({self.value})"


@dataclass(frozen=True, repr=False)
class Sym(Expr):
    """Reference to a Symbol."""

    symbol: Symbol

    def __repr__(self):
        return f"Sym({self.symbol.name})"


@dataclass(frozen=True, repr=False)
class Add(Expr):
    terms: tuple

    def __repr__(self):
        return "Add(" + ", ".join(map(repr, self.terms)) + ")"


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    factors: tuple

    def __repr__(self):
        return "Mul(" + ", ".join(map(repr, self.factors)) + ")"


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    """Power with a literal integer or rational exponent."""

    base: Expr
    exponent: Fraction

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt")


@dataclass(frozen=True, repr=False)
class Fun(Expr):
    """Builtin function application; `name` is one of FUNCTIONS."""

    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown builtin function '{self.name}'")

    def __repr__(self):
        return f"Fun({self.name}, {self.arg!r})"


ZERO = Rat(Fraction(0))
ONE = Rat(Fraction(1))


def _as_fraction(x) -> Fraction:
    if isinstance(x, Rat):
        return x.value
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"exponent must be an integer or rational, got {x!r}")


def as_expr(x) -> Expr:
    """Coerce numbers and Symbols to Expr.  Floats convert exactly."""
    if isinstance(x, Expr):
        return x
    if isinstance(x, Symbol):
        return Sym(x)
    if isinstance(x, (int, Fraction, float)):
        return Rat(Fraction(x))
    raise TypeError(f"cannot convert {x!r} to an expression")


def number(x) -> Rat:
    return Rat(Fraction(x))


def sin(x):
    return Fun("sin", as_expr(x))


def cos(x):
    return Fun("cos", as_expr(x))


def tan(x):
    return Fun("tan", as_expr(x))


def exp(x):
    return Fun("exp", as_expr(x))


def ln(x):
    return Fun("ln", as_expr(x))


def sqrt(x):
    return Fun("sqrt", as_expr(x))


# --------------------------------------------------------------------------
# structural total order, used to sort factors and terms deterministically

def _key(e: Expr):
    if isinstance(e, Rat):
        return (0, e.value.numerator, e.value.denominator)
    if isinstance(e, Sym):
        return (1, e.symbol.name)
    if isinstance(e, Fun):
        return (2, e.name, _key(e.arg))
    if isinstance(e, Pow):
        return (3, _key(e.base), (e.exponent.numerator, e.exponent.denominator))
    if isinstance(e, Mul):
        return (4, tuple(_key(f) for f in e.factors))
    if isinstance(e, Add):
        return (5, tuple(_key(t) for t in e.terms))
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# normalization
#
# Internal form: a polynomial maps monomials to Fraction coefficients.
# A monomial is a sorted tuple of (atom, exponent) pairs, where atoms are
# canonical non-product expressions (symbols, function applications, or
# powers kept opaque because expanding them would be unsound).

_Poly = dict


def _mono_mul(a, b):
    exps = {}
    order = []
    for atom, e in a + b:
        k = _key(atom)
        if k in exps:
            exps[k] = (exps[k][0], exps[k][1] + e)
        else:
            exps[k] = (atom, e)
            order.append(k)
    items = [(atom, e) for atom, e in (exps[k] for k in order) if e != 0]
    items.sort(key=lambda p: _key(p[0]))
    return tuple(items)


def _poly_add(p: _Poly, q: _Poly) -> _Poly:
    out = dict(p)
    for mono, c in q.items():
        s = out.get(mono, Fraction(0)) + c
        if s:
            out[mono] = s
        elif mono in out:
            del out[mono]
    return out


def _poly_mul(p: _Poly, q: _Poly) -> _Poly:
    out: _Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            mono = _mono_mul(m1, m2)
            c = c1 * c2
            s = out.get(mono, Fraction(0)) + c
            if s:
                out[mono] = s
            elif mono in out:
                del out[mono]
    return out


def _poly_int_pow(p: _Poly, n: int) -> _Poly:
    result = {(): Fraction(1)}
    square = p
    while n:
        if n & 1:
            result = _poly_mul(result, square)
        n >>= 1
        if n:
            square = _poly_mul(square, square)
    return result


def _atom_poly(atom: Expr, exponent=Fraction(1)) -> _Poly:
    return {((atom, exponent),): Fraction(1)}


def _rational_root(c: Fraction, q: Fraction):
    """Exact value of c**q for rational c, or None when it is irrational."""
    if c < 0:
        return None
    if c == 0:
        return Fraction(0) if q > 0 else None
    den = q.denominator

    def root(n):
        r = round(n ** (1.0 / den))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**den == n:
                return cand
        return None

    rn = root(c.numerator)
    rd = root(c.denominator)
    if rn is None or rd is None:
        return None
    return Fraction(rn, rd) ** q.numerator


_EXACT_FUN_VALUES = {
    ("sin", Fraction(0)): Fraction(0),
    ("cos", Fraction(0)): Fraction(1),
    ("tan", Fraction(0)): Fraction(0),
    ("exp", Fraction(0)): Fraction(1),
    ("ln", Fraction(1)): Fraction(0),
}


def _poly(e: Expr) -> _Poly:
    if isinstance(e, Rat):
        return {(): e.value} if e.value else {}
    if isinstance(e, Sym):
        return _atom_poly(e)
    if isinstance(e, Add):
        out: _Poly = {}
        for t in e.terms:
            out = _poly_add(out, _poly(t))
        return out
    if isinstance(e, Mul):
        out = {(): Fraction(1)}
        for f in e.factors:
            out = _poly_mul(out, _poly(f))
        return out
    if isinstance(e, Fun):
        arg = _from_poly(_poly(e.arg))
        if isinstance(arg, Rat):
            exact = _EXACT_FUN_VALUES.get((e.name, arg.value))
            if exact is not None:
                return {(): exact} if exact else {}
            if e.name == "sqrt":
                r = _rational_root(arg.value, Fraction(1, 2))
                if r is not None:
                    return {(): r} if r else {}
        return _atom_poly(Fun(e.name, arg))
    if isinstance(e, Pow):
        q = e.exponent
        base = _poly(e.base)
        if q == 0:
            # 0**0 follows the polynomial convention and folds to 1
            return {(): Fraction(1)}
        if not base:
            if q < 0:
                raise DomainError(e, "zero raised to a negative power")
            return {}
        if len(base) == 1:
            ((mono, coeff),) = base.items()
            if q.denominator == 1:
                n = int(q)
                out_mono = tuple(
                    (atom, ex * n) for atom, ex in mono if ex * n != 0
                )
                return {out_mono: coeff**n}
            if not mono:
                r = _rational_root(coeff, q)
                if r is not None:
                    return {(): r} if r else {}
                return _atom_poly(Pow(Rat(coeff), q))
            if coeff == 1 and len(mono) == 1 and mono[0][1] == 1:
                return _atom_poly(mono[0][0], q)
            return _atom_poly(Pow(_from_poly(base), q))
        if q.denominator == 1 and q > 0:
            return _poly_int_pow(base, int(q))
        return _atom_poly(Pow(_from_poly(base), q))
    raise TypeError(f"not an expression node: {e!r}")


def _from_poly(p: _Poly) -> Expr:
    terms = []
    for mono in sorted(p, key=lambda m: tuple((_key(a), (x.numerator, x.denominator)) for a, x in m)):
        coeff = p[mono]
        factors = [atom if ex == 1 else Pow(atom, ex) for atom, ex in mono]
        if not factors:
            terms.append(Rat(coeff))
        elif coeff == 1 and len(factors) == 1:
            terms.append(factors[0])
        elif coeff == 1:
            terms.append(Mul(tuple(factors)))
        else:
            terms.append(Mul((Rat(coeff), *factors)))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def normalize(e: Expr) -> Expr:
    """Rewrite `e` into the canonical expanded normal form.

    Idempotent; preserves the value of `e` at every evaluation point.
    Sums are flattened and sorted, like terms merged, numeric constants
    folded, and products distributed over sums.  Function applications
    and powers that cannot be expanded soundly stay opaque atoms.
    """
    return _from_poly(_poly(as_expr(e)))


# --------------------------------------------------------------------------
# differentiation

def diff(e: Expr, s: Symbol, spec=None) -> Expr:
    """Partial derivative of `e` with respect to `s`.

    Every other symbol is treated as independent.  When `spec` is given,
    `s` must belong to it.
    """
    if spec is not None:
        spec.symbol(s.name if isinstance(s, Symbol) else s)
    if isinstance(s, Sym):
        s = s.symbol
    return normalize(_diff(as_expr(e), s))


def _diff(e: Expr, s: Symbol) -> Expr:
    if isinstance(e, Rat):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.symbol == s else ZERO
    if isinstance(e, Add):
        return Add(tuple(_diff(t, s) for t in e.terms))
    if isinstance(e, Mul):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            parts.append(Mul((*fs[:i], _diff(f, s), *fs[i + 1 :])))
        return Add(tuple(parts))
    if isinstance(e, Pow):
        # d(b^q) = q * b^(q-1) * db  (q is a literal rational)
        return Mul((Rat(e.exponent), Pow(e.base, e.exponent - 1), _diff(e.base, s)))
    if isinstance(e, Fun):
        inner = _diff(e.arg, s)
        u = e.arg
        if e.name == "sin":
            outer = Fun("cos", u)
        elif e.name == "cos":
            outer = Mul((Rat(Fraction(-1)), Fun("sin", u)))
        elif e.name == "tan":
            outer = Add((ONE, Pow(Fun("tan", u), Fraction(2))))
        elif e.name == "exp":
            outer = Fun("exp", u)
        elif e.name == "ln":
            outer = Pow(u, Fraction(-1))
        elif e.name == "sqrt":
            outer = Mul((Rat(Fraction(1, 2)), Pow(Fun("sqrt", u), Fraction(-1))))
        else:  # pragma: no cover - Fun constructor rejects unknown names
            raise ValueError(e.name)
        return Mul((outer, inner))
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# substitution and evaluation

def substitute(e: Expr, bindings: Mapping[Symbol, object]) -> Expr:
    """Simultaneous substitution of symbols by expressions; result normalized.

    All replacements refer to the original expression: swapping two
    symbols through `bindings` exchanges them rather than chaining.
    """
    table = {}
    for k, v in bindings.items():
        if isinstance(k, Sym):
            k = k.symbol
        table[k] = as_expr(v)
    return normalize(_substitute(as_expr(e), table))


def _substitute(e: Expr, table) -> Expr:
    if isinstance(e, Rat):
        return e
    if isinstance(e, Sym):
        return table.get(e.symbol, e)
    if isinstance(e, Add):
        return Add(tuple(_substitute(t, table) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(_substitute(f, table) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(_substitute(e.base, table), e.exponent)
    if isinstance(e, Fun):
        return Fun(e.name, _substitute(e.arg, table))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, point: Mapping[Symbol, float]) -> float:
    """IEEE double evaluation of `e` with every symbol bound by `point`.

    Raises UnboundSymbolError for missing symbols and DomainError (carrying
    the offending subexpression) for log of non-positive values, division
    by zero, fractional powers of negatives, and overflow.
    """
    table = {}
    for k, v in point.items():
        if isinstance(k, Sym):
            k = k.symbol
        table[k.name if isinstance(k, Symbol) else k] = float(v)
    return _eval(as_expr(e), table)


def _eval(e: Expr, point) -> float:
    if isinstance(e, Rat):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return point[e.symbol.name]
        except KeyError:
            raise UnboundSymbolError(e.symbol.name) from None
    if isinstance(e, Add):
        return math.fsum(_eval(t, point) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, point)
        return out
    if isinstance(e, Pow):
        b = _eval(e.base, point)
        q = e.exponent
        try:
            if q.denominator == 1:
                return _check_finite(e, b ** int(q))
            return _check_finite(e, math.pow(b, float(q)))
        except ZeroDivisionError:
            raise DomainError(e, "division by zero") from None
        except ValueError:
            raise DomainError(e, "fractional power of a negative value") from None
        except OverflowError:
            raise DomainError(e, "overflow") from None
    if isinstance(e, Fun):
        x = _eval(e.arg, point)
        try:
            if e.name == "sin":
                return math.sin(x)
            if e.name == "cos":
                return math.cos(x)
            if e.name == "tan":
                return math.tan(x)
            if e.name == "exp":
                return _check_finite(e, math.exp(x))
            if e.name == "ln":
                if x <= 0.0:
                    raise DomainError(e, "logarithm of a non-positive value")
                return math.log(x)
            if e.name == "sqrt":
                if x < 0.0:
                    raise DomainError(e, "square root of a negative value")
                return math.sqrt(x)
        except OverflowError:
            raise DomainError(e, "overflow") from None
    raise TypeError(f"not an expression node: {e!r}")


def _check_finite(e, v):
    if isinstance(v, complex) or not math.isfinite(v):
        raise DomainError(e, "non-finite result")
    return v


def free_symbols(e: Expr) -> frozenset:
    out = set()
    _collect_symbols(as_expr(e), out)
    return frozenset(out)


def _collect_symbols(e, out):
    if isinstance(e, Sym):
        out.add(e.symbol)
    elif isinstance(e, Add):
        for t in e.terms:
            _collect_symbols(t, out)
    elif isinstance(e, Mul):
        for f in e.factors:
            _collect_symbols(f, out)
    elif isinstance(e, Pow):
        _collect_symbols(e.base, out)
    elif isinstance(e, Fun):
        _collect_symbols(e.arg, out)


# --------------------------------------------------------------------------
# equivalence testing

#: exceptions the fallback sampler treats as "skip this point"
EvalErrorTypes = (DomainError, UnboundSymbolError)

#: number of sample points used by the randomized fallback
FALLBACK_POINTS = 32
#: sample magnitudes live in [0.1, 2] with either sign
_SAMPLE_LOW, _SAMPLE_HIGH = 0.1, 2.0
#: relative tolerance of the fallback acceptance rule
FALLBACK_TOL = 1e-9
#: fewer valid sample points than this make the fallback inconclusive
_MIN_VALID_POINTS = 8


@dataclass(frozen=True)
class EquivalenceResult:
    """Outcome of `equivalent`: 'equal', 'different' or 'undetermined'.

    Truthy exactly when the verdict is 'equal', so the result can be used
    directly in assertions while 'undetermined' stays distinguishable and
    is never silently treated as success.
    """

    verdict: str
    reason: str
    witness: tuple = None

    def __bool__(self):
        return self.verdict == "equal"

    def __str__(self):
        if self.witness:
            pt = ", ".join(f"{s.name}={v:.6g}" for s, v in self.witness)
            return f"{self.verdict} ({self.reason}; witness {pt})"
        return f"{self.verdict} ({self.reason})"


def _sample(rng) -> float:
    # uniform over [-2, -0.1] U [0.1, 2]
    width = _SAMPLE_HIGH - _SAMPLE_LOW
    u = rng.uniform(0.0, 2.0 * width)
    if u < width:
        return -_SAMPLE_HIGH + u
    return _SAMPLE_LOW + (u - width)


def equivalent(a: Expr, b: Expr, seed: int = 0) -> EquivalenceResult:
    """Decide whether `a` and `b` denote the same function.

    First tries the decidable route: `normalize(a - b)` collapsing to the
    zero constant.  Transcendental identities escape the normal form, so a
    randomized fallback evaluates both sides at FALLBACK_POINTS points per
    symbol drawn from [-2,-0.1] U [0.1,2] with the given seed and accepts
    when every difference is below FALLBACK_TOL relative to the operand
    magnitudes.  A point that separates the two sides is returned as a
    witness; too many evaluation failures yield 'undetermined'.
    """
    a = as_expr(a)
    b = as_expr(b)
    d = normalize(a - b)
    if d == ZERO:
        return EquivalenceResult("equal", "normal forms coincide")
    syms = sorted(free_symbols(d) | free_symbols(a) | free_symbols(b), key=lambda s: s.name)
    rng = random.Random(seed)
    valid = 0
    for _ in range(FALLBACK_POINTS):
        point = {s: _sample(rng) for s in syms}
        try:
            va = evaluate(a, point)
            vb = evaluate(b, point)
            vd = evaluate(d, point)
        except EvalErrorTypes:
            continue
        valid += 1
        tol = FALLBACK_TOL * (1.0 + max(abs(va), abs(vb)))
        if abs(vd) >= tol:
            witness = tuple(sorted(point.items(), key=lambda kv: kv[0].name))
            return EquivalenceResult(
                "different", f"values differ by {abs(vd):.3g}", witness
            )
        if not syms:
            break
    if valid >= _MIN_VALID_POINTS or (valid and not syms):
        return EquivalenceResult(
            "equal", f"agrees at {valid} sample points within {FALLBACK_TOL:g}"
        )
    return EquivalenceResult(
        "undetermined", f"only {valid} of {FALLBACK_POINTS} sample points evaluable"
    )


# --------------------------------------------------------------------------
# plain-text rendering (round-trips through the model-file parser)

def to_text(e: Expr) -> str:
    e = as_expr(e)
    if isinstance(e, Add):
        parts = [_term_text(e.terms[0])]
        for t in e.terms[1:]:
            s = _term_text(t)
            if s.startswith("-"):
                parts.append(" - " + s[1:])
            else:
                parts.append(" + " + s)
        return "".join(parts)
    return _term_text(e)


def _term_text(e: Expr) -> str:
    """Render one product, splitting negative powers into a denominator."""
    coeff = Fraction(1)
    numer, denom = [], []
    factors = e.factors if isinstance(e, Mul) else (e,)
    for f in factors:
        if isinstance(f, Rat):
            coeff *= f.value
        elif isinstance(f, Pow) and f.exponent < 0:
            denom.append(_pow_text(Pow(f.base, -f.exponent)))
        else:
            numer.append(_pow_text(f))
    sign = "-" if coeff < 0 else ""
    coeff = abs(coeff)
    if coeff.numerator != 1 or not numer:
        numer.insert(0, str(coeff.numerator))
    if coeff.denominator != 1:
        denom.insert(0, str(coeff.denominator))
    top = "*".join(numer)
    if not denom:
        return sign + top
    bottom = "*".join(denom)
    if len(denom) > 1:
        bottom = "(" + bottom + ")"
    return f"{sign}{top}/{bottom}"


def _pow_text(e: Expr) -> str:
    if isinstance(e, Pow):
        base = _atom_text(e.base)
        q = e.exponent
        if q == 1:
            return base
        if q.denominator == 1 and q >= 0:
            return f"{base}^{q.numerator}"
        if q.denominator == 1:
            return f"{base}^({q.numerator})"
        return f"{base}^({q.numerator}/{q.denominator})"
    return _atom_text(e)


def _atom_text(e: Expr) -> str:
    if isinstance(e, Rat):
        if e.value.denominator == 1 and e.value >= 0:
            return str(e.value.numerator)
        if e.value.denominator == 1:
            return f"({e.value.numerator})"
        return f"({e.value.numerator}/{e.value.denominator})"
    if isinstance(e, Sym):
        return e.symbol.name
    if isinstance(e, Fun):
        return f"{e.name}({to_text(e.arg)})"
    return "(" + to_text(e) + ")"
