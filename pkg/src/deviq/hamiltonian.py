"""Covariant Hamilton equations and their vertical extension.

A Hamiltonian density lives on the momentum phase space: coordinates
(x^lam, y^i, p^lam_i) with one momentum per fibre x base pair.  The
Hamilton equations are

    y^i_lam = dH/dp^lam_i          (velocity block)
    sum_lam d_lam p^lam_i = -dH/dy^i   (momentum block, summed divergence)

The vertical Hamiltonian VH has density d_V H on the doubled space; the
momentum conjugate to y^i becomes the vertical momentum vp, and the
momentum conjugate to v^i is the original p.  With that pairing the
Hamilton equations of VH are exactly the deviation of the original
Hamilton equations, which `check_hamilton_deviation_commute` verifies
pair by pair.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bundle import BundleSpec, MultiIndex, max_jet_order, vertical_derivative
from .errors import SpecError, VerticalExtensionError
from .expr import VERTICAL_KINDS, Add, Expr, Sym, as_expr, diff, equivalent, free_symbols, normalize
from .variational import (
    CommutationReport,
    EquationSystem,
    PairCheck,
    check_symbols,
    deviation_system,
)

__all__ = [
    "HamiltonianSystem",
    "hamilton_equations",
    "vertical_hamiltonian",
    "check_hamilton_deviation_commute",
]


@dataclass(frozen=True)
class HamiltonianSystem:
    """A Hamiltonian density over (x^lam, y^i, p^lam_i) and parameters."""

    density: Expr
    spec: BundleSpec

    def __post_init__(self):
        if not self.spec.momenta:
            raise SpecError("Hamiltonian spec must carry momentum coordinates")
        d = normalize(as_expr(self.density))
        object.__setattr__(self, "density", d)
        check_symbols(d, self.spec)
        if max_jet_order(d, self.spec) > 0:
            raise SpecError("Hamiltonian density must not contain jet symbols")
        if not self.spec.vertical and any(
            s.kind in VERTICAL_KINDS for s in free_symbols(d)
        ):
            raise SpecError("Hamiltonian density contains vertical symbols")

    @staticmethod
    def make(density, spec: BundleSpec) -> "HamiltonianSystem":
        """Accepts a spec without momenta and switches them on."""
        if not spec.momenta:
            spec = spec.with_momenta()
        return HamiltonianSystem(density, spec)


def hamilton_equations(H: HamiltonianSystem) -> EquationSystem:
    """The covariant Hamilton equations as a plain system:

    velocity block, field-major over (field, base direction):
        y^i_lam - dH/dp^lam_i
    momentum block, one per field:
        sum_lam d_lam p^lam_i + dH/dy^i

    The divergence introduces first-order momentum jets.  On a vertical
    spec the fields run over (y^i, v^i) with the swapped conjugates.
    """
    spec = H.spec if H.spec.order >= 1 else H.spec.with_order(1)
    eqs = []
    for f in spec.variational_fields:
        c = spec.classify(f.name)
        for lam in range(spec.n):
            p = spec.conjugate_momentum(f, lam)
            vel = Sym(spec.jet(c.field, MultiIndex((lam,)), vertical=c.vertical))
            eqs.append(normalize(vel - diff(H.density, p)))
    for f in spec.variational_fields:
        parts = [
            Sym(spec.jet_shift(spec.conjugate_momentum(f, lam), lam))
            for lam in range(spec.n)
        ]
        parts.append(diff(H.density, f))
        eqs.append(normalize(Add(tuple(parts))))
    return EquationSystem(tuple(eqs), spec, "plain")


def vertical_hamiltonian(H: HamiltonianSystem) -> HamiltonianSystem:
    """The Hamiltonian with density d_V H on the doubled phase space."""
    if H.spec.vertical:
        raise VerticalExtensionError("Hamiltonian is already a vertical extension")
    vspec = H.spec.vertical_extension()
    return HamiltonianSystem(vertical_derivative(H.density, vspec), vspec)


def check_hamilton_deviation_commute(H: HamiltonianSystem, seed: int = 0) -> CommutationReport:
    """Verify that the Hamilton equations of VH are the deviation of the
    Hamilton equations of H.

    Layouts (m fields, n base directions, N = m*n + m equations in the
    original system):

        A = hamilton_equations(VH):
            A[i*n+lam]        velocity of y^i     A[2mn + i]      momentum of y^i
            A[(m+i)*n+lam]    velocity of v^i     A[2mn + m + i]  momentum of v^i
        B = deviation_system(hamilton_equations(H)):
            B[0 .. N-1] original block, B[N .. 2N-1] vertical block.

    Pairing: the v-velocity and y-momentum rows of A match the vertical
    block of B; the y-velocity rows match verbatim; the v-momentum rows
    reproduce the original momentum equations.
    """
    A = hamilton_equations(vertical_hamiltonian(H))
    B = deviation_system(hamilton_equations(H))
    m = len(H.spec.fibre)
    n = H.spec.n
    N = m * n + m
    entries = []

    def pair(label, a, b):
        entries.append(PairCheck(label, a, b, equivalent(a, b, seed=seed)))

    for i in range(m):
        yname = H.spec.fibre[i].name
        for lam in range(n):
            bname = H.spec.base[lam].name
            pair(
                f"velocity of {yname} along {bname} (verbatim)",
                A.equations[i * n + lam],
                B.equations[i * n + lam],
            )
            pair(
                f"velocity of v_{yname} along {bname} vs linearized velocity equation",
                A.equations[(m + i) * n + lam],
                B.equations[N + i * n + lam],
            )
        pair(
            f"momentum equation of {yname} vs linearized momentum equation",
            A.equations[2 * m * n + i],
            B.equations[N + m * n + i],
        )
        pair(
            f"momentum equation of v_{yname} vs original momentum equation",
            A.equations[2 * m * n + m + i],
            B.equations[m * n + i],
        )
    return CommutationReport("Hamilton(VH) = V(Hamilton)", tuple(entries))
