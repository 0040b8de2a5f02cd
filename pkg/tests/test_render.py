"""Rendering: DSL text round trips, LaTeX conventions, JSON schema."""

import json

from deviq import (
    Sym,
    deviation_equations,
    euler_lagrange,
    hamilton_equations,
    normalize,
    parse_model,
    render,
    to_latex,
    to_text,
)
from conftest import (
    EQUATION_MODELS,
    HAMILTONIAN_MODELS,
    LAGRANGIAN_MODELS,
    corpus_model,
)


def test_latex_vertical_dot_convention():
    m = parse_model("base t\nfibre y\nlagrangian y_t^2\n")
    spec = m.spec.vertical_extension()
    e = normalize(Sym(spec.symbol("v_y_tt")) + Sym(spec.symbol("v_y")))
    assert to_latex(e, spec) == r"\dot{y} + \ddot{\dot{y}}"


def test_latex_subscripts_on_higher_base():
    m = corpus_model("laplace")
    ds = deviation_equations(m)
    out = render(ds, "latex")
    assert "u_{x x}" in out or "u_{t t}" in out
    assert r"\dot{u}_{" in out


def test_latex_momenta():
    m = corpus_model("hosc")
    sys = hamilton_equations(m.hamiltonian())
    out = render(sys, "latex")
    assert "p^{t}_{y}" in out
    assert "p^{t}_{y,t}" in out


def test_latex_greek_names():
    m = corpus_model("sphere")
    op = euler_lagrange(m.lagrangian())
    out = render(op, "latex")
    assert r"\theta" in out and r"\phi" in out
    assert r"\ddot{\theta}" in out


def test_json_simple_product():
    m = parse_model("base t\nfibre y\nequation 2*y\n")
    assert json.loads(render(m.payload[0], "json")) == ["*", 2, "y"]


def test_json_envelope_schema():
    m = corpus_model("riccati")
    payload = json.loads(render(deviation_equations(m), "json"))
    assert set(payload) == {"equations", "spec", "structure"}
    assert payload["structure"] == "deviation-pair"
    assert payload["spec"]["base"] == ["t"]
    assert payload["spec"]["fibre"] == ["y"]
    assert payload["spec"]["vertical"] is True
    assert len(payload["equations"]) == 2
    # prefix form: operator head then arguments
    head = payload["equations"][0]
    assert isinstance(head, list) and head[0] in ("+", "*", "^")


def test_json_rationals():
    m = parse_model("base t\nfibre y\nequation y/3\n")
    tree = json.loads(render(m.payload[0], "json"))
    assert tree == ["*", ["/", 1, 3], "y"]


def test_text_system_layout():
    m = corpus_model("oscillator")
    out = render(deviation_equations(m), "text")
    lines = out.strip().splitlines()
    assert len(lines) == 2
    assert all(line.endswith(" = 0") for line in lines)


def test_corpus_text_round_trip():
    """parse(render(m, text)) reproduces every corpus model exactly."""
    for name in LAGRANGIAN_MODELS + HAMILTONIAN_MODELS + EQUATION_MODELS:
        m = corpus_model(name)
        again = parse_model(render(m, "text"))
        assert again.kind == m.kind, name
        assert again.spec == m.spec, name
        assert again.payload == m.payload, name


def test_expression_text_round_trip_through_parser():
    for name in LAGRANGIAN_MODELS + HAMILTONIAN_MODELS + EQUATION_MODELS:
        m = corpus_model(name)
        for e in m.payload:
            body = "\n".join(
                ["base " + " ".join(m.spec.base_names),
                 "fibre " + " ".join(m.spec.fibre_names)]
                + [f"param {p.name}" for p in m.spec.params]
                + [f"{m.kind} {to_text(e)}"]
            )
            again = parse_model(body)
            assert again.payload[0] == e, name
