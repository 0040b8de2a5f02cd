"""Compilation to first-order form, RK4, Jacobi fields, residual sweeps."""

import math

import numpy as np
import pytest

from deviq import (
    CompileError,
    EquationSystem,
    IntegrationError,
    JacobiProblem,
    SingularEquationError,
    SpecError,
    compile_system,
    deviation_system,
    euler_lagrange,
    finite_difference_jacobi,
    hamilton_equations,
    integrate,
    parse_model,
    perturbation_residual,
    solve_jacobi,
)
from conftest import ODE_CORPUS, corpus_model


def jacobi_problem(name, dt=1e-3):
    init, jac, t1 = ODE_CORPUS[name]
    system = deviation_system(derive_operator(name))
    return JacobiProblem(system, init, jac, 0.0, t1, dt)


def derive_operator(name):
    m = corpus_model(name)
    if m.kind == "lagrangian":
        return euler_lagrange(m.lagrangian())
    if m.kind == "hamiltonian":
        return hamilton_equations(m.hamiltonian())
    return m.operator()


def test_compile_state_layout_sphere():
    m = corpus_model("sphere")
    ds = deviation_system(euler_lagrange(m.lagrangian()))
    fos = compile_system(ds)
    assert fos.state_names == (
        "theta", "theta_t", "phi", "phi_t",
        "v_theta", "v_theta_t", "v_phi", "v_phi_t",
    )
    assert fos.vertical_mask == (False,) * 4 + (True,) * 4


def test_compile_hamiltonian_layout():
    fos = compile_system(deviation_system(derive_operator("hkepler")))
    assert fos.state_names == ("r", "pt_r", "v_r", "vpt_r")


def test_compile_rejects_singular_top():
    m = parse_model("base t\nfibre y\nequation y_tt*0 + y\n")
    with pytest.raises((SingularEquationError, CompileError)):
        compile_system(deviation_system(m.operator()))


def test_compile_rejects_vanishing_coefficient():
    # the y_tt coefficient is the symbol y itself: structurally nonzero,
    # so compilation succeeds and the blow-up happens at run time instead
    m = parse_model("base t\nfibre y\nequation y*y_tt - 1\n")
    fos = compile_system(deviation_system(m.operator()))
    with pytest.raises(IntegrationError):
        integrate(fos, (0.0, 1.0, 0.0, 0.0), 0.0, 1.0, 1e-3)


def test_compile_rejects_unbound_params():
    m = parse_model("base t\nfibre y\nparam k\nequation y_t - k*y\n")
    with pytest.raises(CompileError):
        compile_system(deviation_system(m.operator()))


def test_compile_rejects_multidimensional_base():
    m = corpus_model("laplace")
    with pytest.raises(CompileError):
        compile_system(deviation_system(euler_lagrange(m.lagrangian())))


def test_compile_rejects_coupled_tops():
    m = parse_model("base t\nfibre y u\nequation y_t + u_t\nequation y_t - u_t + y\n")
    with pytest.raises(CompileError):
        compile_system(deviation_system(m.operator()))


def test_integrate_exponential_accuracy():
    m = parse_model("base t\nfibre y\nequation y_t - y\n")
    fos = compile_system(deviation_system(m.operator()))
    traj = integrate(fos, (1.0, 1.0), 0.0, 1.0, 1e-3)
    assert abs(traj.states[-1, 0] - math.e) < 1e-10


def test_rk4_halving_factor():
    m = corpus_model("oscillator")
    fos = compile_system(deviation_system(euler_lagrange(m.lagrangian())))
    z0 = (1.0, 0.0, 0.0, 1.0)

    def endpoint_error(dt):
        traj = integrate(fos, z0, 0.0, 2.0, dt)
        return abs(traj.states[-1, 0] - math.cos(2.0))

    factor = endpoint_error(0.02) / endpoint_error(0.01)
    assert 12.0 <= factor <= 20.0


def test_integrate_partial_final_step():
    m = parse_model("base t\nfibre y\nequation y_t - y\n")
    fos = compile_system(deviation_system(m.operator()))
    traj = integrate(fos, (1.0, 0.0), 0.0, 1.0005, 1e-3)
    assert traj.times[-1] == pytest.approx(1.0005, abs=0)
    assert abs(traj.states[-1, 0] - math.exp(1.0005)) < 1e-10


def test_integrate_rejects_bad_windows():
    m = parse_model("base t\nfibre y\nequation y_t - y\n")
    fos = compile_system(deviation_system(m.operator()))
    with pytest.raises(SpecError):
        integrate(fos, (1.0, 0.0), 0.0, 1.0, 0.0)
    with pytest.raises(SpecError):
        integrate(fos, (1.0, 0.0), 1.0, 1.0, 1e-3)
    with pytest.raises(SpecError):
        integrate(fos, (1.0,), 0.0, 1.0, 1e-3)


def test_integrate_reports_blowup_time():
    m = corpus_model("riccati")
    fos = compile_system(deviation_system(m.operator()))
    with pytest.raises(IntegrationError) as err:
        integrate(fos, (1.0, 0.0), 0.0, 2.0, 1e-3)
    assert err.value.last_time is not None
    assert 0.9 < err.value.last_time <= 1.1


def test_trajectory_csv_and_immutability():
    prob = jacobi_problem("oscillator")
    base, jac = solve_jacobi(prob)
    text = jac.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "t,v_y,v_y_t"
    # 17 significant digits round-trip
    row = lines[-1].split(",")
    assert float(row[1]) == jac.states[-1, 0]
    with pytest.raises(ValueError):
        jac.states[0, 0] = 99.0


def test_jacobi_oscillator_closed_form():
    prob = jacobi_problem("oscillator")
    base, jac = solve_jacobi(prob)
    expect = np.sin(jac.times)
    assert float(np.max(np.abs(jac.column("v_y") - expect))) < 1e-8


def test_jacobi_riccati_closed_form():
    prob = jacobi_problem("riccati")
    base, jac = solve_jacobi(prob)
    expect = (1.0 + jac.times) ** -2
    assert float(np.max(np.abs(jac.column("v_y") - expect))) < 1e-10
    assert float(np.max(np.abs(base.column("y") + 1.0 / (1.0 + base.times)))) < 1e-10


def test_finite_difference_matches_linear_model_exactly():
    prob = jacobi_problem("oscillator")
    _, jac = solve_jacobi(prob)
    fd = finite_difference_jacobi(prob, 1e-3)
    assert float(np.max(np.abs(fd.states - jac.states))) < 1e-9


def test_finite_difference_first_order_in_eps():
    prob = jacobi_problem("pendulum")
    _, jac = solve_jacobi(prob)
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        fd = finite_difference_jacobi(prob, eps)
        errs.append(float(np.max(np.abs(fd.states - jac.states))))
    order1 = math.log10(errs[0] / errs[1])
    order2 = math.log10(errs[1] / errs[2])
    assert 0.8 <= order1 <= 1.2
    assert 0.8 <= order2 <= 1.2


def test_residual_quadratic_in_eps_pendulum():
    prob = jacobi_problem("pendulum")
    table = perturbation_residual(prob)
    assert 1.9 <= table.exponent <= 2.1
    values = [r for _, r in table.entries]
    # halving epsilon quarters the residual
    assert 0.23 <= values[1] / values[0] <= 0.27
    assert 0.23 <= values[2] / values[1] <= 0.27
    assert table.metadata["norm"] == "max-over-grid-interior"


def test_residual_floor_for_linear_model():
    prob = jacobi_problem("oscillator")
    table = perturbation_residual(prob)
    assert max(r for _, r in table.entries) < 1e-8


def test_residual_csv():
    prob = jacobi_problem("riccati")
    table = perturbation_residual(prob, (1e-2, 1e-3))
    lines = table.to_csv().strip().splitlines()
    assert lines[0] == "eps,residual"
    assert len(lines) == 3


def test_jacobi_problem_validates_initial_data():
    init, jac, t1 = ODE_CORPUS["oscillator"]
    system = deviation_system(derive_operator("oscillator"))
    with pytest.raises(SpecError):
        JacobiProblem(system, {"y": 1.0}, jac, 0.0, t1)
    with pytest.raises(SpecError):
        JacobiProblem(system, init, {"v_y": 0.0, "bogus": 1.0}, 0.0, t1)
    with pytest.raises(SpecError):
        JacobiProblem(system, init, jac, 2.0, 1.0)


def test_jacobi_problem_requires_deviation_pair():
    m = corpus_model("riccati")
    plain = EquationSystem(m.operator().components, m.spec, "plain")
    with pytest.raises(SpecError):
        JacobiProblem(plain, {"y": -1.0}, {}, 0.0, 1.0)
