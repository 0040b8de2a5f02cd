"""First-order compilation and fixed-step integration of deviation systems.

Restricted to a 1-dimensional base (mechanics).  `compile_system` turns
an equation system into explicit normal form dZ/dt = F(t, Z) by solving
each equation for its highest derivative with a single division; the
state vector stacks the derivative chains of the base fields first and
their vertical mirrors second, so a deviation pair integrates as one
joint flow whose vertical half is the Jacobi field.

Two independent numeric oracles back the symbolic construction:

  * finite_difference_jacobi integrates the original system from nudged
    initial data and returns the divided difference (s_eps - s)/eps,
    which must converge linearly in eps to the Jacobi field;
  * perturbation_residual evaluates the original equations on s + eps*psi
    and must observe the O(eps^2) law that linearization promises.

Integration is classical RK4 with a fixed step: bit-exact deterministic
for fixed inputs, no adaptivity anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .bundle import BundleSpec, MultiIndex
from .errors import (
    CompileError,
    IntegrationError,
    SingularEquationError,
    SpecError,
    UnboundSymbolError,
)
from .expr import (
    DEPENDENT_KINDS,
    VERTICAL_KINDS,
    Add,
    Expr,
    Fun,
    Mul,
    Pow,
    Rat,
    Sym,
    Symbol,
    diff,
    free_symbols,
    normalize,
    substitute,
)
from .variational import EquationSystem

__all__ = [
    "FirstOrderSystem",
    "Trajectory",
    "JacobiProblem",
    "compile_system",
    "integrate",
    "solve_jacobi",
    "finite_difference_jacobi",
    "perturbation_residual",
    "ResidualTable",
    "DEFAULT_EPS_LADDER",
]

DEFAULT_DT = 1e-3
DEFAULT_EPS_LADDER = (1e-2, 5e-3, 2.5e-3)

_ZERO = Rat(Fraction(0))
MAX_COMPILE_ORDER = 4


# --------------------------------------------------------------------------
# code generation (scalar backend for the integrator)

_SCALAR_ENV = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "pow": math.pow,
    "__builtins__": {},
}

_FUN_NAMES = {"ln": "log"}


def _emit(e: Expr, names: Mapping[str, str]) -> str:
    if isinstance(e, Rat):
        v = e.value
        if v.denominator == 1:
            return f"({v.numerator})"
        return f"({v.numerator}/{v.denominator})"
    if isinstance(e, Sym):
        try:
            return names[e.symbol.name]
        except KeyError:
            raise CompileError(
                f"'{e.symbol.name}' is not a state variable, the base coordinate, or a bound parameter"
            ) from None
    if isinstance(e, Add):
        return "(" + "+".join(_emit(t, names) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + "*".join(_emit(f, names) for f in e.factors) + ")"
    if isinstance(e, Pow):
        if e.exponent.denominator == 1:
            return f"({_emit(e.base, names)})**({int(e.exponent)})"
        return f"pow({_emit(e.base, names)}, {float(e.exponent)!r})"
    if isinstance(e, Fun):
        return f"{_FUN_NAMES.get(e.name, e.name)}({_emit(e.arg, names)})"
    raise TypeError(f"not an expression node: {e!r}")


def _scalar_rhs(exprs: Sequence[Expr], base: Symbol, states: Sequence[Symbol]):
    names = {base.name: "t"}
    for i, s in enumerate(states):
        names[s.name] = f"z[{i}]"
    body = ", ".join(_emit(e, names) for e in exprs)
    source = f"lambda t, z: ({body},)"
    return eval(source, dict(_SCALAR_ENV))


# vectorized tree evaluation, used for residuals over whole grids

_NP_FUNS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
}


def numpy_eval(e: Expr, env: Mapping[str, object]):
    """Evaluate an expression with names bound to scalars or ndarrays."""
    if isinstance(e, Rat):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return env[e.symbol.name]
        except KeyError:
            raise UnboundSymbolError(e.symbol.name) from None
    if isinstance(e, Add):
        out = numpy_eval(e.terms[0], env)
        for t in e.terms[1:]:
            out = out + numpy_eval(t, env)
        return out
    if isinstance(e, Mul):
        out = numpy_eval(e.factors[0], env)
        for f in e.factors[1:]:
            out = out * numpy_eval(f, env)
        return out
    if isinstance(e, Pow):
        b = numpy_eval(e.base, env)
        q = e.exponent
        if q.denominator == 1:
            return np.power(b, int(q))
        return np.power(b, float(q))
    if isinstance(e, Fun):
        return _NP_FUNS[e.name](numpy_eval(e.arg, env))
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# compiled systems and trajectories

@dataclass(frozen=True)
class FirstOrderSystem:
    """Explicit first-order ODE dZ/dt = F(t, Z) with named states.

    `vertical_mask[i]` marks states belonging to the Jacobi (vertical)
    half of a deviation pair; the mirror layout guarantees that state i
    of the base half and vertical state i correspond."""

    base: Symbol
    states: tuple
    rhs: tuple
    vertical_mask: tuple

    def __post_init__(self):
        if len(self.rhs) != len(self.states) or len(self.vertical_mask) != len(self.states):
            raise CompileError("state, rhs and mask lengths disagree")
        allowed = {s.name for s in self.states} | {self.base.name}
        for e in self.rhs:
            for s in free_symbols(e):
                if s.name not in allowed:
                    raise CompileError(
                        f"right-hand side references '{s.name}' which is not a state variable"
                    )

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def state_names(self) -> tuple:
        return tuple(s.name for s in self.states)

    @cached_property
    def _callable(self):
        return _scalar_rhs(self.rhs, self.base, self.states)

    def __call__(self, t: float, z) -> tuple:
        return self._callable(t, z)

    def base_part(self) -> "FirstOrderSystem":
        """The subsystem of non-vertical states (the original dynamics)."""
        idx = [i for i, v in enumerate(self.vertical_mask) if not v]
        return FirstOrderSystem(
            self.base,
            tuple(self.states[i] for i in idx),
            tuple(self.rhs[i] for i in idx),
            (False,) * len(idx),
        )


@dataclass(frozen=True)
class Trajectory:
    """Immutable grid solution: times strictly increasing, one state row
    per grid point, 17-significant-digit CSV export."""

    times: np.ndarray
    states: np.ndarray
    names: tuple
    metadata: dict

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        if s.ndim != 2 or len(t) != s.shape[0]:
            raise SpecError("trajectory needs one state row per time")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise SpecError("trajectory times must be strictly increasing")
        if s.shape[1] != len(self.names):
            raise SpecError("one name per state column required")
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "names", tuple(self.names))

    def __len__(self):
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    def to_csv(self) -> str:
        lines = ["t," + ",".join(self.names)]
        for t, row in zip(self.times, self.states):
            lines.append(",".join(f"{v:.17g}" for v in (t, *row)))
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def _param_bindings(spec: BundleSpec) -> dict:
    if spec.unbound_params:
        missing = ", ".join(p.name for p in spec.unbound_params)
        raise CompileError(f"unbound parameters: {missing}; bind numeric values first")
    return {spec.symbol(k): Rat(v) for k, v in spec.param_values}


def compile_system(system: EquationSystem) -> FirstOrderSystem:
    """Reduce a system over a 1-dimensional base to explicit normal form.

    Each equation must be affine in its single unsolved top derivative;
    equations are processed in order with earlier solutions substituted,
    so one division per equation suffices.  A field whose derivative
    never appears, or whose leading coefficient vanished identically, is
    a singular equation.
    """
    spec = system.spec
    if spec.n != 1:
        raise CompileError("compilation requires a 1-dimensional base")
    binding = _param_bindings(spec)
    eqs = [substitute(e, binding) for e in system.equations]

    # discover the field families present and their top derivative order
    families = {}  # order-0 coord -> top jet order
    for e in eqs:
        for s in free_symbols(e):
            if s.kind not in DEPENDENT_KINDS:
                continue
            c = spec.classify(s.name)
            stem = replace(c, index=MultiIndex())
            families[stem] = max(families.get(stem, 0), c.index.order)

    def family_key(stem):
        return (stem.vertical, stem.family != "fibre", stem.field, stem.mom_base or 0)

    ordered = sorted(families, key=family_key)
    for stem in ordered:
        name = spec._coord_name(stem)
        top = families[stem]
        if top == 0:
            raise SingularEquationError(
                f"no derivative of '{name}' occurs: the system does not determine its evolution"
            )
        if top > MAX_COMPILE_ORDER:
            raise CompileError(
                f"'{name}' has derivative order {top}, above the supported maximum {MAX_COMPILE_ORDER}"
            )
    if len(eqs) != len(ordered):
        raise CompileError(
            f"{len(eqs)} equations for {len(ordered)} evolving fields; "
            "compilation needs exactly one equation per field"
        )

    tops = {
        spec._coord_name(replace(stem, index=MultiIndex((0,) * families[stem]))): stem
        for stem in ordered
    }
    solved = {}
    for e in eqs:
        e = substitute(e, {spec.symbol(n): x for n, x in solved.items()})
        present = sorted(
            s.name for s in free_symbols(e) if s.name in tops and s.name not in solved
        )
        if not present:
            raise CompileError(
                f"equation '{e}' contains no unsolved top derivative"
            )
        if len(present) > 1:
            raise CompileError(
                f"equation '{e}' couples several top derivatives ({', '.join(present)}); "
                "not in solvable normal form"
            )
        w = spec.symbol(present[0])
        c = diff(e, w)
        if w in free_symbols(c):
            raise CompileError(
                f"equation '{e}' is not affine in '{w.name}'; not in solvable normal form"
            )
        if c == _ZERO:
            raise SingularEquationError(
                f"zero leading coefficient for '{w.name}' in equation '{e}'"
            )
        rest = substitute(e, {w: _ZERO})
        solved[w.name] = normalize(Mul((Rat(Fraction(-1)), rest, Pow(c, Fraction(-1)))))

    # earlier solutions may still reference later tops; close transitively
    for _ in range(len(solved)):
        changed = False
        for name, x in list(solved.items()):
            if any(s.name in tops for s in free_symbols(x)):
                solved[name] = substitute(
                    x, {spec.symbol(n): v for n, v in solved.items() if n != name}
                )
                changed = True
        if not changed:
            break
    for name, x in solved.items():
        for s in free_symbols(x):
            if s.name in tops:
                raise CompileError(
                    f"top derivatives are mutually coupled through '{name}'"
                )

    states, rhs, mask = [], [], []
    for stem in ordered:
        top = families[stem]
        chain = [
            spec._coord_symbol(replace(stem, index=MultiIndex((0,) * j)))
            for j in range(top)
        ]
        top_name = spec._coord_name(replace(stem, index=MultiIndex((0,) * top)))
        for j, s in enumerate(chain):
            states.append(s)
            mask.append(s.kind in VERTICAL_KINDS)
            if j + 1 < top:
                rhs.append(Sym(chain[j + 1]))
            else:
                rhs.append(solved[top_name])
    return FirstOrderSystem(spec.base[0], tuple(states), tuple(rhs), tuple(mask))


# --------------------------------------------------------------------------
# integration

def integrate(f: FirstOrderSystem, z0, t0: float, t1: float, dt: float) -> Trajectory:
    """Classical fixed-step RK4 from t0 to t1.

    The grid is t0 + i*dt with one shorter final step when dt does not
    divide the span exactly.  Any non-finite state or failed right-hand
    side aborts with the last valid time in the error.
    """
    if dt <= 0:
        raise SpecError(f"step size must be positive, got {dt}")
    if t1 <= t0:
        raise SpecError(f"integration span is empty: t1={t1} <= t0={t0}")
    z = tuple(float(v) for v in z0)
    if len(z) != f.dimension:
        raise SpecError(f"initial state has length {len(z)}, system dimension is {f.dimension}")
    rhs = f._callable

    n_full = int((t1 - t0) / dt + 1e-9)
    while t0 + n_full * dt > t1 + 1e-9 * dt:
        n_full -= 1
    remainder = t1 - (t0 + n_full * dt)
    steps = n_full + (1 if remainder > 1e-9 * dt else 0)

    times = [t0]
    rows = [z]
    t = t0
    for i in range(steps):
        h = dt if i < n_full else remainder
        t_next = t0 + (i + 1) * dt if i < n_full else t1
        try:
            k1 = rhs(t, z)
            z2 = tuple(zi + 0.5 * h * k for zi, k in zip(z, k1))
            k2 = rhs(t + 0.5 * h, z2)
            z3 = tuple(zi + 0.5 * h * k for zi, k in zip(z, k2))
            k3 = rhs(t + 0.5 * h, z3)
            z4 = tuple(zi + h * k for zi, k in zip(z, k3))
            k4 = rhs(t_next, z4)
            z = tuple(
                zi + h * (a + 2.0 * b + 2.0 * c + d) / 6.0
                for zi, a, b, c, d in zip(z, k1, k2, k3, k4)
            )
        except (OverflowError, ValueError, ZeroDivisionError) as ex:
            raise IntegrationError(
                f"right-hand side failed between t={t:.6g} and t={t_next:.6g}: {ex}", t
            ) from None
        if not all(math.isfinite(v) for v in z):
            raise IntegrationError(
                f"state became non-finite at t={t_next:.6g}", t
            )
        t = t_next
        times.append(t)
        rows.append(z)
    return Trajectory(
        np.array(times),
        np.array(rows),
        f.state_names,
        {"dt": dt, "method": "rk4"},
    )


# --------------------------------------------------------------------------
# Jacobi problems

@dataclass(frozen=True)
class JacobiProblem:
    """A deviation pair plus initial data for the base solution and the
    Jacobi field, and the integration window."""

    system: EquationSystem
    base_init: dict
    jacobi_init: dict
    t0: float
    t1: float
    dt: float = DEFAULT_DT
    compiled: FirstOrderSystem = field(init=False, compare=False, repr=False, default=None)

    def __post_init__(self):
        if self.system.structure != "deviation-pair":
            raise SpecError("JacobiProblem requires a deviation-pair system")
        if self.dt <= 0:
            raise SpecError(f"step size must be positive, got {self.dt}")
        if self.t1 <= self.t0:
            raise SpecError(f"empty window: t1={self.t1} <= t0={self.t0}")
        fos = compile_system(self.system)
        base = {_init_name(k): float(v) for k, v in self.base_init.items()}
        jac = {_init_name(k): float(v) for k, v in self.jacobi_init.items()}
        want_base = {s.name for s, v in zip(fos.states, fos.vertical_mask) if not v}
        want_jac = {s.name for s, v in zip(fos.states, fos.vertical_mask) if v}
        if set(base) != want_base:
            raise SpecError(
                f"base initial data must cover exactly {sorted(want_base)}, got {sorted(base)}"
            )
        if set(jac) != want_jac:
            raise SpecError(
                f"jacobi initial data must cover exactly {sorted(want_jac)}, got {sorted(jac)}"
            )
        object.__setattr__(self, "base_init", base)
        object.__setattr__(self, "jacobi_init", jac)
        object.__setattr__(self, "compiled", fos)

    def initial_state(self) -> tuple:
        data = {**self.base_init, **self.jacobi_init}
        return tuple(data[s.name] for s in self.compiled.states)


def _init_name(k) -> str:
    if isinstance(k, Sym):
        return k.symbol.name
    if isinstance(k, Symbol):
        return k.name
    return str(k)


def solve_jacobi(prob: JacobiProblem):
    """Integrate the joint deviation flow; returns (base, jacobi) halves."""
    fos = prob.compiled
    traj = integrate(fos, prob.initial_state(), prob.t0, prob.t1, prob.dt)
    base_idx = [i for i, v in enumerate(fos.vertical_mask) if not v]
    vert_idx = [i for i, v in enumerate(fos.vertical_mask) if v]
    meta = dict(traj.metadata)
    base = Trajectory(
        traj.times,
        traj.states[:, base_idx].copy(),
        tuple(fos.state_names[i] for i in base_idx),
        {**meta, "component": "base"},
    )
    jac = Trajectory(
        traj.times,
        traj.states[:, vert_idx].copy(),
        tuple(fos.state_names[i] for i in vert_idx),
        {**meta, "component": "jacobi"},
    )
    return base, jac


def finite_difference_jacobi(prob: JacobiProblem, eps: float) -> Trajectory:
    """Independent linearization oracle: integrate the original system
    from z0 and from z0 + eps * (jacobi data embedded on the base states)
    and return the divided difference on the shared grid.

    Converges to the Jacobi field linearly in eps; exactly (up to the
    integrator) for linear systems.
    """
    if eps <= 0:
        raise SpecError(f"finite-difference step must be positive, got {eps}")
    fos = prob.compiled
    spec = prob.system.spec
    base_sys = fos.base_part()
    z0 = tuple(prob.base_init[s.name] for s in base_sys.states)
    delta = tuple(
        prob.jacobi_init[spec.vertical_partner(s).name] for s in base_sys.states
    )
    plain = integrate(base_sys, z0, prob.t0, prob.t1, prob.dt)
    nudged = integrate(
        base_sys,
        tuple(a + eps * b for a, b in zip(z0, delta)),
        prob.t0,
        prob.t1,
        prob.dt,
    )
    diff_states = (nudged.states - plain.states) / eps
    names = tuple(spec.vertical_partner(s).name for s in base_sys.states)
    return Trajectory(
        plain.times,
        diff_states,
        names,
        {"dt": prob.dt, "method": "rk4", "eps": eps, "oracle": "finite-difference"},
    )


# --------------------------------------------------------------------------
# perturbation residual

@dataclass(frozen=True)
class ResidualTable:
    """max-over-grid residuals of the original equations on s + eps*psi,
    with the least-squares exponent of the residual-vs-eps law attached."""

    entries: tuple  # ((eps, residual), ...)
    exponent: Optional[float]
    metadata: dict

    def to_csv(self) -> str:
        lines = ["eps,residual"]
        for eps, r in self.entries:
            lines.append(f"{eps:.17g},{r:.17g}")
        return "\n".join(lines) + "\n"

    def __str__(self):
        body = "\n".join(f"  eps={eps:<12g} residual={r:.6e}" for eps, r in self.entries)
        tail = f"  fitted exponent: {self.exponent:.4f}" if self.exponent is not None else \
            "  fitted exponent: n/a"
        return "residual of the original equations on s + eps*psi (max over grid):\n" + body + "\n" + tail


def perturbation_residual(prob: JacobiProblem, eps_list: Iterable[float] = DEFAULT_EPS_LADDER) -> ResidualTable:
    """Evaluate the original equations on the perturbed solution s + eps*psi.

    Derivatives up to order r-1 come from the integrated states; the top
    derivative of the unperturbed part is read off the compiled equation
    itself (exact on the discrete solution), and the top derivative of
    psi is a central finite difference, so the finite-difference noise
    enters only at O(eps * dt^2).  Endpoints are excluded from the max.
    The fitted exponent is the log-log least-squares slope over the
    positive-residual entries.
    """
    eps_list = tuple(float(e) for e in eps_list)
    for e in eps_list:
        if e < 0:
            raise SpecError(f"perturbation size must be non-negative, got {e}")
    base, jac = solve_jacobi(prob)
    fos = prob.compiled
    spec = prob.system.spec
    m = len(prob.system.equations) // 2
    binding = _param_bindings(spec)
    originals = [substitute(e, binding) for e in prob.system.equations[:m]]

    times = base.times
    env_base = {fos.base.name: times}
    for name in base.names:
        env_base[name] = base.column(name)

    # top derivatives per base family: from the equation for s, by central
    # differences of the last chain state for psi
    top_s = {}
    top_psi = {}
    base_states = [s for s, v in zip(fos.states, fos.vertical_mask) if not v]
    state_names = set(fos.state_names)
    with np.errstate(all="ignore"):
        for i, s in enumerate(fos.states):
            if fos.vertical_mask[i]:
                continue
            c = spec.classify(s.name)
            top_name = spec._coord_name(replace(c, index=c.index.plus(0)))
            if top_name in state_names:
                continue  # chain link, not the top of its family
            r = fos.rhs[i]
            top_s[top_name] = numpy_eval(r, env_base) + np.zeros_like(times)
            partner = spec.vertical_partner(s).name
            vtop_name = spec._coord_name(
                replace(spec.classify(partner), index=c.index.plus(0))
            )
            top_psi[vtop_name] = np.gradient(jac.column(partner), times)

        entries = []
        for eps in eps_list:
            env = {fos.base.name: times}
            for s in base_states:
                partner = spec.vertical_partner(s).name
                env[s.name] = base.column(s.name) + eps * jac.column(partner)
            for top_name, arr in top_s.items():
                vname = _vertical_top_name(spec, top_name)
                env[top_name] = arr + eps * top_psi[vname]
            worst = 0.0
            for eq in originals:
                vals = numpy_eval(eq, env) + np.zeros_like(times)
                interior = np.abs(vals[1:-1])
                if interior.size == 0:
                    raise SpecError("grid too short for an interior residual")
                peak = float(np.max(interior))
                if not math.isfinite(peak):
                    raise IntegrationError(
                        f"residual evaluation produced non-finite values at eps={eps}",
                        float(times[-1]),
                    )
                worst = max(worst, peak)
            entries.append((eps, worst))

    pts = [(e, r) for e, r in entries if e > 0 and r > 0]
    exponent = None
    if len(pts) >= 2:
        xs = np.log([p[0] for p in pts])
        ys = np.log([p[1] for p in pts])
        exponent = float(np.polyfit(xs, ys, 1)[0])
    return ResidualTable(
        tuple(entries),
        exponent,
        {
            "norm": "max-over-grid-interior",
            "dt": prob.dt,
            "top-derivative": "equation on the base part, central differences on the Jacobi part",
        },
    )


def _vertical_top_name(spec: BundleSpec, top_name: str) -> str:
    c = spec.classify(top_name)
    return spec._coord_name(replace(c, vertical=True))
