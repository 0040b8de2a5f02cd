"""Differential operators, deviation systems, and the Euler-Lagrange map.

The deviation of an operator E is the doubled system {E = 0, d_V E = 0}
on the vertical extension of its bundle: the second block is the exact
linearization of the first, and a solution is a pair (s, psi) of a base
solution and a Jacobi field along it.

`check_el_vertical_commute` mechanizes the commutation theorem: the
Euler-Lagrange operator of the vertically extended density equals the
vertical extension of the Euler-Lagrange operator.  Failures are data
(a report), not exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bundle import (
    BundleSpec,
    iterated_total_derivative,
    max_jet_order,
    multiindices,
    vertical_derivative,
)
from .errors import SpecError, UnknownSymbolError, VerticalExtensionError
from .expr import (
    VERTICAL_KINDS,
    Add,
    EquivalenceResult,
    Expr,
    Mul,
    Pow,
    Rat,
    Sym,
    SymbolKind,
    as_expr,
    diff,
    equivalent,
    free_symbols,
    normalize,
)

__all__ = [
    "DifferentialOperator",
    "EquationSystem",
    "Lagrangian",
    "vertical_extension_density",
    "euler_lagrange",
    "deviation_system",
    "PairCheck",
    "CommutationReport",
    "check_el_vertical_commute",
]

_ZERO = Rat(Fraction(0))


def check_symbols(e: Expr, spec: BundleSpec):
    """Every symbol in e must be resolvable within spec (order included)."""
    for s in free_symbols(e):
        if s.kind is SymbolKind.BASE:
            spec.base_position(s)
        elif s.kind is SymbolKind.PARAMETER:
            if s not in spec.params:
                raise UnknownSymbolError(s.name)
        else:
            c = spec.classify(s.name)
            if c is None:
                raise UnknownSymbolError(s.name)
            if c.index.order > spec.order:
                raise SpecError(
                    f"'{s.name}' has jet order {c.index.order}, above the spec order {spec.order}"
                )


def _has_vertical(e: Expr) -> bool:
    return any(s.kind in VERTICAL_KINDS for s in free_symbols(e))


def _vertical_degree_of_monomial(e: Expr):
    """Total vertical degree of one normalized term; None when a vertical
    symbol sits inside a function or a non-integer power (non-polynomial)."""
    deg = 0
    factors = e.factors if isinstance(e, Mul) else (e,)
    for f in factors:
        base, q = (f.base, f.exponent) if isinstance(f, Pow) else (f, Fraction(1))
        if isinstance(base, Sym) and base.symbol.kind in VERTICAL_KINDS:
            if q.denominator != 1 or q < 0:
                return None
            deg += int(q)
        elif _has_vertical(base):
            return None
    return deg


def is_vertical_linear(e: Expr) -> bool:
    """True when every term of normalize(e) has vertical degree exactly 1
    (the zero expression passes)."""
    e = normalize(as_expr(e))
    if e == _ZERO:
        return True
    terms = e.terms if isinstance(e, Add) else (e,)
    return all(_vertical_degree_of_monomial(t) == 1 for t in terms)


@dataclass(frozen=True)
class DifferentialOperator:
    """An ordered tuple of components E^A over a bundle, each read as a
    coordinate function on the jet space of the declared order."""

    components: tuple
    order: int
    spec: BundleSpec
    vertical: bool = False

    def __post_init__(self):
        comps = tuple(normalize(as_expr(c)) for c in self.components)
        object.__setattr__(self, "components", comps)
        for c in comps:
            check_symbols(c, self.spec)
            if max_jet_order(c, self.spec) > self.order:
                raise SpecError(
                    f"component '{c}' exceeds the declared operator order {self.order}"
                )
            if not self.vertical and _has_vertical(c):
                raise SpecError(
                    "operator contains vertical symbols but is not flagged vertical"
                )

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class EquationSystem:
    """Equations read as `expr = 0`.  A `deviation-pair` system stacks the
    original block and its vertical linearization, in that order."""

    equations: tuple
    spec: BundleSpec
    structure: str = "plain"

    def __post_init__(self):
        eqs = tuple(normalize(as_expr(e)) for e in self.equations)
        object.__setattr__(self, "equations", eqs)
        if self.structure not in ("plain", "deviation-pair"):
            raise SpecError(f"unknown system structure '{self.structure}'")
        for e in eqs:
            check_symbols(e, self.spec)
        if self.structure == "deviation-pair":
            if len(eqs) % 2:
                raise SpecError("deviation-pair system must have even length")
            m = len(eqs) // 2
            for a in range(m):
                if not is_vertical_linear(eqs[m + a]):
                    raise SpecError(
                        f"equation {m + a} of a deviation pair is not linear in the vertical symbols"
                    )

    def __len__(self):
        return len(self.equations)

    def to_operator(self) -> DifferentialOperator:
        order = max((max_jet_order(e, self.spec) for e in self.equations), default=0)
        vertical = self.spec.vertical or any(_has_vertical(e) for e in self.equations)
        return DifferentialOperator(self.equations, order, self.spec, vertical)


@dataclass(frozen=True)
class Lagrangian:
    """A first-order-in-spirit density of declared jet order k."""

    density: Expr
    order: int
    spec: BundleSpec

    def __post_init__(self):
        d = normalize(as_expr(self.density))
        object.__setattr__(self, "density", d)
        check_symbols(d, self.spec)
        if max_jet_order(d, self.spec) > self.order:
            raise SpecError(
                f"density has jet order {max_jet_order(d, self.spec)}, above the declared order {self.order}"
            )

    @staticmethod
    def make(density, spec: BundleSpec) -> "Lagrangian":
        """Infer the order from the density itself."""
        density = normalize(as_expr(density))
        return Lagrangian(density, max_jet_order(density, spec), spec)


def vertical_extension_density(L: Lagrangian) -> Lagrangian:
    """The Lagrangian with density d_V of the original, on the doubled spec.
    Jet order is preserved; extending twice is rejected."""
    if L.spec.vertical or _has_vertical(L.density):
        raise VerticalExtensionError("Lagrangian is already a vertical extension")
    vspec = L.spec.vertical_extension()
    return Lagrangian(vertical_derivative(L.density, vspec), L.order, vspec)


def euler_lagrange(L: Lagrangian) -> DifferentialOperator:
    """The Euler-Lagrange operator: for each variational field y^i the
    component

        dL/dy^i + sum over multi-indices 0 < |Lam| <= k of
                  (-1)^|Lam| d_Lam (dL/dy^i_Lam),

    one component per field of the spec (vertical fields included on a
    vertical extension).  The operator order is 2k.
    """
    k = L.order
    spec = L.spec if L.spec.order >= 2 * k else L.spec.with_order(2 * k)
    comps = []
    for f in spec.variational_fields:
        c = spec.classify(f.name)
        parts = [diff(L.density, f)]
        for idx in multiindices(spec.n, k, 1):
            partial = diff(L.density, spec.jet(c.field, idx, vertical=c.vertical))
            if partial == _ZERO:
                continue
            sign = Rat(Fraction(-1) ** idx.order)
            parts.append(Mul((sign, iterated_total_derivative(partial, idx, spec))))
        comps.append(normalize(Add(tuple(parts))))
    return DifferentialOperator(tuple(comps), 2 * k, spec, vertical=spec.vertical)


def deviation_system(op) -> EquationSystem:
    """The deviation of E: the system {E = 0, d_V E = 0} on the vertical
    extension.  The first block is the input verbatim; the second is its
    linearization along the fibre."""
    if isinstance(op, EquationSystem):
        op = op.to_operator()
    if op.vertical:
        raise VerticalExtensionError("operator is already a vertical extension")
    vspec = op.spec.vertical_extension()
    vblock = tuple(vertical_derivative(c, vspec) for c in op.components)
    return EquationSystem(op.components + vblock, vspec, "deviation-pair")


@dataclass(frozen=True)
class PairCheck:
    label: str
    left: Expr
    right: Expr
    result: EquivalenceResult


@dataclass(frozen=True)
class CommutationReport:
    """Outcome of a commutation theorem check, one entry per matched pair.
    Undetermined equivalences count as failures, never as passes."""

    title: str
    entries: tuple

    @property
    def passed(self) -> bool:
        return all(entry.result for entry in self.entries)

    def __str__(self):
        head = f"{self.title}: {'PASS' if self.passed else 'FAIL'} ({len(self.entries)} pairs)"
        lines = [head]
        for entry in self.entries:
            mark = "pass" if entry.result else entry.result.verdict
            lines.append(f"  [{mark}] {entry.label}")
            if not entry.result:
                lines.append(f"         left  = {entry.left}")
                lines.append(f"         right = {entry.right}")
                lines.append(f"         {entry.result}")
        return "\n".join(lines)


def check_el_vertical_commute(L: Lagrangian, seed: int = 0) -> CommutationReport:
    """Verify that the Euler-Lagrange operator of the vertical extension
    is the vertical extension of the Euler-Lagrange operator.

    With A = EL(VL) on the doubled fibre (y^i then v^i) and
    B = deviation(EL(L)) = (delta_i L, d_V delta_i L):

      - the v^i-variation A[m+i] must equal the original component B[i];
      - the y^i-variation A[i] must equal the linearized component B[m+i].
    """
    A = euler_lagrange(vertical_extension_density(L))
    B = deviation_system(euler_lagrange(L))
    m = len(L.spec.fibre)
    entries = []
    for i in range(m):
        yname = L.spec.fibre[i].name
        entries.append(
            PairCheck(
                f"v_{yname}-variation of VL vs component {i + 1} of the original operator",
                A.components[m + i],
                B.equations[i],
                equivalent(A.components[m + i], B.equations[i], seed=seed),
            )
        )
        entries.append(
            PairCheck(
                f"{yname}-variation of VL vs vertical derivative of component {i + 1}",
                A.components[i],
                B.equations[m + i],
                equivalent(A.components[i], B.equations[m + i], seed=seed),
            )
        )
    return CommutationReport("δ(VL) = V(δL)", tuple(entries))
