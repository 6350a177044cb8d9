import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fasim.errors import DivideByZero, DomainError, ParseError, UnboundVariable
from fasim.expr import (
    Binary,
    Const,
    Unary,
    Var,
    check_expr,
    compile_expr,
    compile_vector,
    differentiate,
    evaluate,
    free_variables,
    is_constant,
    lie_derivative,
    parse_expr,
    substitute,
)


@pytest.mark.parametrize(
    "text, env, expected",
    [
        ("12*x^2 - 54*x + 65", {"x": 2.25}, 4.25),
        ("12*x**2 - 54*x + 65", {"x": 0.0}, 65.0),
        ("0.075*(150 - temp)", {"temp": 30.0}, 9.0),
        ("-4", {}, -4.0),
        ("cos(pi)", {}, -1.0),
        ("2^3^2", {}, 512.0),
        ("asin(1) * 2", {}, math.pi),
        ("log(exp(2))", {}, 2.0),
        ("abs(-3) + +1", {}, 4.0),
    ],
)
def test_parse_and_evaluate(text, env, expected):
    assert evaluate(parse_expr(text), env) == pytest.approx(expected, abs=1e-12)


def test_caret_binds_tighter_than_minus():
    e = parse_expr("x^2 - 1")
    assert isinstance(e, Binary) and e.op == "sub"


@pytest.mark.parametrize("text", ["", "   ", "x +", "f(x)", "x^0.5", "x^-1", "sin(x, y)", "'a'", "x < 1", "sin"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_expr(text)


def test_parse_error_has_column():
    with pytest.raises(ParseError) as info:
        parse_expr("1 + foo(2)")
    assert info.value.column == 5


def test_unbound_variable():
    with pytest.raises(UnboundVariable) as info:
        evaluate(parse_expr("x + y"), {"x": 1.0})
    assert info.value.name == "y"


def test_divide_by_zero_is_reported():
    with pytest.raises(DivideByZero):
        evaluate(parse_expr("1/x"), {"x": 0.0})


@pytest.mark.parametrize("text", ["arcsin(1.1)", "arccos(-2)", "ln(0)", "ln(-1)", "exp(1000)"])
def test_domain_errors(text):
    with pytest.raises(DomainError):
        evaluate(parse_expr(text), {})


def test_inverse_trig_clamps_within_tolerance():
    assert evaluate(parse_expr("arcsin(x)"), {"x": 1 + 5e-13}) == math.pi / 2
    assert evaluate(parse_expr("arccos(x)"), {"x": -1 - 5e-13}) == math.pi


def test_free_variables_and_constants():
    e = parse_expr("5*sin(a) + y/x")
    assert free_variables(e) == {"a", "x", "y"}
    assert is_constant(e) is None
    assert is_constant(parse_expr("2*pi")) == 2 * math.pi
    assert free_variables(parse_expr("3")) == frozenset()


def test_substitute():
    e = substitute(parse_expr("y + 1"), {"y": Unary("cos", Var("x"))})
    assert evaluate(e, {"x": 0.0}) == 2.0
    assert free_variables(e) == {"x"}


def test_check_expr_reports_problems():
    e = Binary("pow", Var("x"), Var("n"))
    codes = {code for code, _ in check_expr(e, ["x"])}
    assert codes == {"UnboundVariable", "InvalidExponent"}
    assert check_expr(parse_expr("x^2"), ["x"]) == []


def test_str_round_trips():
    e = parse_expr("-(x) + 2*cos(y)^2 / 3")
    again = parse_expr(str(e))
    env = {"x": 0.3, "y": 1.1}
    assert evaluate(again, env) == evaluate(e, env)


def test_unknown_operator_rejected():
    with pytest.raises(ValueError):
        Unary("tan", Var("x"))
    with pytest.raises(ValueError):
        Binary("mod", Var("x"), Const(2.0))


# -- compilation matches interpretation bit for bit ---------------------------

_leaf = st.one_of(
    st.floats(-10, 10, allow_nan=False).map(Const),
    st.sampled_from(["x", "y"]).map(Var),
)


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["neg", "sin", "cos", "abs"]), children),
        st.builds(Binary, st.sampled_from(["add", "sub", "mul"]), children, children),
        st.builds(lambda a, n: Binary("pow", a, Const(float(n))), children, st.integers(0, 3)),
    )


expressions = st.recursive(_leaf, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(expressions, st.floats(-5, 5), st.floats(-5, 5))
def test_compiled_is_bit_identical(e, x, y):
    try:
        expected = evaluate(e, {"x": x, "y": y})
    except (DomainError, OverflowError):
        return
    got = compile_expr(e, ["x", "y"])(x, y)
    assert got == expected or (math.isnan(got) and math.isnan(expected))


def test_compile_vector_order_and_arity():
    f = compile_vector([parse_expr("x + y"), parse_expr("x * y")], ["x", "y"])
    assert f(2.0, 3.0) == (5.0, 6.0)
    assert compile_vector([], ["x"])(1.0) == ()
    with pytest.raises(UnboundVariable):
        compile_vector([Var("z")], ["x"])


def test_compiled_raises_same_errors():
    f = compile_expr(parse_expr("1/x"), ["x"])
    with pytest.raises(DivideByZero):
        f(0.0)


# -- differentiation -----------------------------------------------------------

smooth = st.recursive(
    _leaf,
    lambda c: st.one_of(
        st.builds(Unary, st.sampled_from(["neg", "sin", "cos", "exp"]), c),
        st.builds(Binary, st.sampled_from(["add", "sub", "mul"]), c, c),
        st.builds(lambda a, n: Binary("pow", a, Const(float(n))), c, st.integers(0, 3)),
    ),
    max_leaves=6,
)


@settings(max_examples=150, deadline=None)
@given(smooth, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_derivative_matches_central_difference(e, x, y):
    h = 1e-6
    try:
        d = evaluate(differentiate(e, "x"), {"x": x, "y": y})
        fd = (evaluate(e, {"x": x + h, "y": y}) - evaluate(e, {"x": x - h, "y": y})) / (2 * h)
    except DomainError:
        return
    if not (math.isfinite(d) and math.isfinite(fd)) or abs(d) > 1e6:
        return
    assert d == pytest.approx(fd, rel=1e-4, abs=1e-4)


@pytest.mark.parametrize(
    "text, x, expected",
    [
        ("arcsin(x)", 0.5, 1 / math.sqrt(0.75)),
        ("arccos(x)", 0.5, -1 / math.sqrt(0.75)),
        ("ln(x)", 2.0, 0.5),
        ("1/x", 2.0, -0.25),
        ("abs(x)", -3.0, -1.0),
        ("x^1", 7.0, 1.0),
        ("x^0", 7.0, 0.0),
    ],
)
def test_derivative_special_cases(text, x, expected):
    assert evaluate(differentiate(parse_expr(text), "x"), {"x": x}) == pytest.approx(expected)


def test_lie_derivative_of_wall_residual():
    flows = {"x": parse_expr("5*sin(a)"), "y": parse_expr("5*cos(a)"), "a": Const(0.9)}
    g = parse_expr("y - (12*x^2 - 54*x + 65)")
    dg = lie_derivative(g, flows)
    env = {"x": 1.0, "y": 2.0, "a": 0.4}
    expected = 5 * math.cos(0.4) - (24 * 1.0 - 54) * 5 * math.sin(0.4)
    assert evaluate(dg, env) == pytest.approx(expected)
