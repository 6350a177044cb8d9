"""Arithmetic expressions over named continuous variables.

Expressions are small immutable trees used for flows, update functions,
guards and resets. They are parsed from conventional infix text, evaluated
by direct tree interpretation, and can be compiled into plain Python
callables for the inner loops of the integrators.

>>> e = parse_expr("12*x^2 - 54*x + 65")
>>> evaluate(e, {"x": 3.0})
11.0
>>> sorted(free_variables(parse_expr("5*sin(a)")))
['a']
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .errors import DivideByZero, DomainError, ParseError, UnboundVariable

#: Inverse-trig arguments within this distance of [-1, 1] are clamped.
CLAMP_TOL = 1e-12

UNARY_OPS = ("neg", "sin", "cos", "arcsin", "arccos", "abs", "exp", "ln")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")

_FUNC_ALIASES = {
    "sin": "sin",
    "cos": "cos",
    "arcsin": "arcsin",
    "asin": "arcsin",
    "arccos": "arccos",
    "acos": "arccos",
    "abs": "abs",
    "exp": "exp",
    "ln": "ln",
    "log": "ln",
}
_NAMED_CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expression"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operator {self.op!r}")

    def __str__(self):
        if self.op == "neg":
            return f"-({self.arg})"
        return f"{self.op}({self.arg})"


_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")

    def __str__(self):
        return f"({self.left} {_SYMBOLS[self.op]} {self.right})"


Expression = Union[Const, Var, Unary, Binary]
Environment = Mapping[str, float]


# -- parsing -----------------------------------------------------------------

_AST_BINOPS = {
    ast.Add: "add",
    ast.Sub: "sub",
    ast.Mult: "mul",
    ast.Div: "div",
    ast.Pow: "pow",
}


def parse_expr(text: str) -> Expression:
    """Parse infix text such as ``0.075*(150 - temp)`` into an Expression.

    Supported: numbers, identifiers, ``pi``, ``+ - * / ^ **``, parentheses
    and the functions sin, cos, arcsin/asin, arccos/acos, abs, exp, ln/log.
    Exponents must be non-negative integer constants.
    """
    if not text or not text.strip():
        raise ParseError("empty expression")
    # '^' binds looser than '+' in Python, so rewrite it to '**' first
    source = text.strip().replace("^", "**")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}", None, exc.offset) from None
    return _convert(tree.body, text)


def _convert(node, text):
    col = getattr(node, "col_offset", None)
    col = col + 1 if col is not None else None
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ParseError(f"unsupported literal {node.value!r} in {text!r}", None, col)
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        if node.id in _NAMED_CONSTANTS:
            return Const(_NAMED_CONSTANTS[node.id])
        if node.id in _FUNC_ALIASES:
            raise ParseError(f"function {node.id!r} used without arguments", None, col)
        return Var(node.id)
    if isinstance(node, ast.UnaryOp):
        arg = _convert(node.operand, text)
        if isinstance(node.op, ast.USub):
            return Unary("neg", arg)
        if isinstance(node.op, ast.UAdd):
            return arg
    if isinstance(node, ast.BinOp) and type(node.op) in _AST_BINOPS:
        op = _AST_BINOPS[type(node.op)]
        left = _convert(node.left, text)
        right = _convert(node.right, text)
        if op == "pow":
            _check_exponent(right, text, col)
        return Binary(op, left, right)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = _FUNC_ALIASES.get(node.func.id)
        if name is None:
            raise ParseError(f"unknown function {node.func.id!r}", None, col)
        if len(node.args) != 1 or node.keywords:
            raise ParseError(f"{node.func.id} takes exactly one argument", None, col)
        return Unary(name, _convert(node.args[0], text))
    raise ParseError(f"unsupported syntax in {text!r}", None, col)


def _check_exponent(expr, text="", col=None):
    value = is_constant(expr)
    if value is None or value < 0 or value != int(value):
        raise ParseError(
            f"exponent must be a non-negative integer constant in {text!r}", None, col
        )


# -- evaluation --------------------------------------------------------------


def _clamp_unit(value, op):
    if value > 1.0:
        if value - 1.0 <= CLAMP_TOL:
            return 1.0
        raise DomainError(f"{op} argument {value!r} outside [-1, 1]")
    if value < -1.0:
        if -1.0 - value <= CLAMP_TOL:
            return -1.0
        raise DomainError(f"{op} argument {value!r} outside [-1, 1]")
    return value


def _asin(v):
    return math.asin(_clamp_unit(v, "arcsin"))


def _acos(v):
    return math.acos(_clamp_unit(v, "arccos"))


def _ln(v):
    if not v > 0.0:
        raise DomainError(f"ln argument {v!r} is not positive")
    return math.log(v)


def _exp(v):
    try:
        return math.exp(v)
    except OverflowError:
        raise DomainError(f"exp({v!r}) overflows") from None


def _sin(v):
    try:
        return math.sin(v)
    except ValueError:
        raise DomainError(f"sin({v!r}) undefined") from None


def _cos(v):
    try:
        return math.cos(v)
    except ValueError:
        raise DomainError(f"cos({v!r}) undefined") from None


def _div(a, b):
    if b == 0.0:
        raise DivideByZero(f"division of {a!r} by zero")
    return a / b


def _pow(a, n):
    if n < 0 or n != int(n):
        raise DomainError(f"exponent {n!r} is not a non-negative integer")
    try:
        return a ** int(n)
    except OverflowError:
        raise DomainError(f"{a!r}^{n!r} overflows") from None


_UNARY_FUNCS = {
    "neg": lambda v: -v,
    "sin": _sin,
    "cos": _cos,
    "arcsin": _asin,
    "arccos": _acos,
    "abs": abs,
    "exp": _exp,
    "ln": _ln,
}


def evaluate(expr: Expression, env: Environment) -> float:
    """Evaluate ``expr`` against ``env`` with IEEE double semantics.

    Raises UnboundVariable, DivideByZero or DomainError instead of
    returning NaN.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        try:
            return float(env[expr.name])
        except KeyError:
            raise UnboundVariable(expr.name) from None
    if isinstance(expr, Unary):
        return _UNARY_FUNCS[expr.op](evaluate(expr.arg, env))
    left = evaluate(expr.left, env)
    right = evaluate(expr.right, env)
    op = expr.op
    if op == "add":
        return left + right
    if op == "sub":
        return left - right
    if op == "mul":
        return left * right
    if op == "div":
        return _div(left, right)
    return _pow(left, right)


def free_variables(expr: Expression) -> frozenset:
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Var):
        return frozenset((expr.name,))
    if isinstance(expr, Unary):
        return free_variables(expr.arg)
    return free_variables(expr.left) | free_variables(expr.right)


def is_constant(expr: Expression) -> Optional[float]:
    """Return the value of ``expr`` if it has no free variables, else None."""
    if free_variables(expr):
        return None
    return evaluate(expr, {})


def substitute(expr: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variable references by the expressions in ``mapping``."""
    if isinstance(expr, Var):
        return mapping.get(expr.name, expr)
    if isinstance(expr, Unary):
        return Unary(expr.op, substitute(expr.arg, mapping))
    if isinstance(expr, Binary):
        return Binary(expr.op, substitute(expr.left, mapping), substitute(expr.right, mapping))
    return expr


def check_expr(expr: Expression, names: Iterable[str]) -> list:
    """Return a list of problems found when validating ``expr``.

    Each problem is a ``(code, subject)`` pair; an empty list means the
    expression only references ``names`` and uses legal exponents.
    """
    problems = [("UnboundVariable", n) for n in sorted(free_variables(expr) - set(names))]
    for node in _walk(expr):
        if isinstance(node, Binary) and node.op == "pow":
            value = is_constant(node.right)
            if value is None or value < 0 or value != int(value):
                problems.append(("InvalidExponent", str(node)))
    return problems


def _walk(expr):
    yield expr
    if isinstance(expr, Unary):
        yield from _walk(expr.arg)
    elif isinstance(expr, Binary):
        yield from _walk(expr.left)
        yield from _walk(expr.right)


# -- compilation -------------------------------------------------------------

_HELPERS = {
    "_sin": _sin,
    "_cos": _cos,
    "_asin": _asin,
    "_acos": _acos,
    "_abs": abs,
    "_exp": _exp,
    "_ln": _ln,
    "_div": _div,
    "_pow": _pow,
}
_UNARY_SRC = {
    "sin": "_sin",
    "cos": "_cos",
    "arcsin": "_asin",
    "arccos": "_acos",
    "abs": "_abs",
    "exp": "_exp",
    "ln": "_ln",
}


def _source(expr, slots):
    if isinstance(expr, Const):
        return repr(expr.value)
    if isinstance(expr, Var):
        if expr.name not in slots:
            raise UnboundVariable(expr.name)
        return slots[expr.name]
    if isinstance(expr, Unary):
        inner = _source(expr.arg, slots)
        if expr.op == "neg":
            return f"(-{inner})"
        return f"{_UNARY_SRC[expr.op]}({inner})"
    left = _source(expr.left, slots)
    right = _source(expr.right, slots)
    if expr.op == "div":
        return f"_div({left}, {right})"
    if expr.op == "pow":
        return f"_pow({left}, {right})"
    return f"({left} {_SYMBOLS[expr.op]} {right})"


def compile_vector(
    exprs: Sequence[Expression], names: Sequence[str]
) -> Callable[..., tuple]:
    """Compile ``exprs`` into ``f(*values) -> tuple`` over positional ``names``.

    The generated code performs the same floating-point operations in the
    same order as :func:`evaluate`, so results are bit-identical.
    """
    slots = {name: f"_a{i}" for i, name in enumerate(names)}
    body = ", ".join(_source(e, slots) for e in exprs)
    args = ", ".join(slots[n] for n in names)
    src = f"def _f({args}):\n    return ({body}{',' if len(exprs) == 1 else ''})\n"
    namespace = dict(_HELPERS)
    exec(compile(src, "<fasim-expr>", "exec"), namespace)
    return namespace["_f"]


def compile_expr(expr: Expression, names: Sequence[str]) -> Callable[..., float]:
    vec = compile_vector([expr], names)
    return lambda *values: vec(*values)[0]


# -- differentiation ---------------------------------------------------------


def _add(a, b):
    ca, cb = is_constant(a), is_constant(b)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    if ca is not None and cb is not None:
        return Const(ca + cb)
    return Binary("add", a, b)


def _mul(a, b):
    ca, cb = is_constant(a), is_constant(b)
    if ca == 0.0 or cb == 0.0:
        return Const(0.0)
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    if ca is not None and cb is not None:
        return Const(ca * cb)
    return Binary("mul", a, b)


def _neg(a):
    c = is_constant(a)
    return Const(-c) if c is not None else Unary("neg", a)


def differentiate(expr: Expression, var: str) -> Expression:
    """Symbolic partial derivative of ``expr`` with respect to ``var``.

    >>> str(differentiate(parse_expr("12*x^2 - 54*x + 65"), "x"))
    '((12.0 * (2.0 * x)) - 54.0)'
    """
    if isinstance(expr, Const):
        return Const(0.0)
    if isinstance(expr, Var):
        return Const(1.0 if expr.name == var else 0.0)
    if isinstance(expr, Unary):
        u = expr.arg
        du = differentiate(u, var)
        if is_constant(du) == 0.0:
            return Const(0.0)
        op = expr.op
        if op == "neg":
            outer = Const(-1.0)
        elif op == "sin":
            outer = Unary("cos", u)
        elif op == "cos":
            outer = Unary("neg", Unary("sin", u))
        elif op == "exp":
            outer = expr
        elif op == "ln":
            outer = Binary("div", Const(1.0), u)
        elif op == "abs":
            outer = Binary("div", u, expr)
        else:
            # d/du arcsin(u) = 1/sqrt(1-u^2) = 1/cos(arcsin(u)); arccos is its negative
            root = Unary("cos", Unary("arcsin", u))
            outer = Binary("div", Const(1.0 if op == "arcsin" else -1.0), root)
        return _mul(outer, du)
    a, b = expr.left, expr.right
    da, db = differentiate(a, var), differentiate(b, var)
    if expr.op == "add":
        return _add(da, db)
    if expr.op == "sub":
        if is_constant(db) == 0.0:
            return da
        return Binary("sub", da, db) if is_constant(da) != 0.0 else _neg(db)
    if expr.op == "mul":
        return _add(_mul(da, b), _mul(a, db))
    if expr.op == "div":
        num = Binary("sub", _mul(da, b), _mul(a, db))
        return Binary("div", num, Binary("mul", b, b))
    n = is_constant(b)
    if n == 0.0:
        return Const(0.0)
    if n == 1.0:
        return da
    reduced = a if n == 2.0 else Binary("pow", a, Const(n - 1.0))
    return _mul(_mul(Const(n), reduced), da)


def lie_derivative(expr: Expression, flows: Mapping[str, Expression]) -> Expression:
    """Time derivative of ``expr`` along the vector field ``flows``."""
    out = Const(0.0)
    for name in sorted(free_variables(expr)):
        if name in flows:
            out = _add(out, _mul(differentiate(expr, name), flows[name]))
    return out
