"""Plain-text model files.

A model file is line oriented. ``#`` starts a comment. Top-level lines are
``key: value``; ``location`` and ``edge`` headers open indented blocks::

    name: water-heating
    variables: timer, temp
    output: temp
    defaults: tmax = 20
    initial S0: timer = 0, temp = 30

    location ON:
        flow timer = 1
        flow temp = 0.075*(150 - temp)
        invariant temp <= 100        # optional

    edge S0 -> ON:
        guard timer >= 5
        reset timer = 0              # optional, identity by default

Guards and invariants are conjunctions joined by ``and`` of comparisons
using ``<=``, ``>=`` or ``==``. A variable given neither a flow nor an
update in some location has flow 0 there.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError
from .expr import Const, evaluate, free_variables, parse_expr
from .model import (
    Diagnostic,
    Edge,
    HybridAutomaton,
    Location,
    Predicate,
    comparison,
    validate,
)

_RELATION = re.compile(r"<=|>=|==|!=|<|>")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")
_EDGE = re.compile(r"edge\s+([A-Za-z_][\w]*)\s*->\s*([A-Za-z_][\w]*)\s*:\s*$")
_LOCATION = re.compile(r"location\s+([A-Za-z_][\w]*)\s*:\s*$")


@dataclass
class ModelFile:
    ha: HybridAutomaton
    defaults: dict = field(default_factory=dict)
    outputs: tuple = ()
    name: str = "model"


def _expr(text, lineno, col):
    try:
        return parse_expr(text)
    except ParseError as exc:
        raise ParseError(str(exc), lineno, col) from None


def _assignment(text, lineno, col):
    if "=" not in text or text.count("=") != text.count("==") * 2 + 1:
        raise ParseError(f"expected 'name = expression', got {text!r}", lineno, col)
    name, _, rhs = text.partition("=")
    name = name.strip()
    if not _IDENT.match(name):
        raise ParseError(f"invalid variable name {name!r}", lineno, col)
    return name, _expr(rhs, lineno, col + text.index("=") + 1)


def _predicate(text, lineno, col, bad):
    comps = []
    for part in re.split(r"\band\b", text):
        part = part.strip()
        rels = _RELATION.findall(part)
        if len(rels) != 1:
            raise ParseError(f"expected exactly one comparison in {part!r}", lineno, col)
        rel = rels[0]
        lhs, rhs = part.split(rel)
        if rel not in ("<=", ">=", "=="):
            bad.append(
                Diagnostic("InvalidRelation", rel, f"line {lineno}: only <=, >= and == are allowed")
            )
            rel = "<="
        comps.append(comparison(_expr(lhs, lineno, col), rel, _expr(rhs, lineno, col)))
    return Predicate(tuple(comps))


def _split_list(text):
    return [p.strip() for p in text.split(",") if p.strip()]


def parse_model_text(text: str) -> ModelFile:
    """Parse a model document; raises ParseError or ValidationError."""
    if not text or not text.strip():
        raise ParseError("empty model file")
    name = "model"
    variables = None
    outputs = ()
    defaults = {}
    init = []
    locations = {}
    edges = []
    bad = []
    block = None  # ("location", id, dict) or ("edge", src, dst, dict)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line[0] in " \t"
        stripped = line.strip()
        col = len(line) - len(line.lstrip()) + 1
        if indented:
            if block is None:
                raise ParseError("indented statement outside a block", lineno, col)
            keyword, _, rest = stripped.partition(" ")
            rest_col = col + len(keyword) + 1
            body = block[-1]
            if block[0] == "location" and keyword in ("flow", "update"):
                var, expr = _assignment(rest, lineno, rest_col)
                if var in body["flows"] or var in body["updates"]:
                    raise ParseError(f"variable {var!r} defined twice", lineno, col)
                body["flows" if keyword == "flow" else "updates"][var] = expr
            elif block[0] == "location" and keyword == "invariant":
                body["invariant"] = _predicate(rest, lineno, rest_col, bad)
            elif block[0] == "edge" and keyword == "guard":
                body["guard"] = _predicate(rest, lineno, rest_col, bad)
            elif block[0] == "edge" and keyword == "reset":
                var, expr = _assignment(rest, lineno, rest_col)
                body["reset"][var] = expr
            else:
                raise ParseError(f"unexpected {keyword!r} in {block[0]} block", lineno, col)
            continue

        block = None
        m = _LOCATION.match(stripped)
        if m:
            lid = m.group(1)
            if lid in locations:
                raise ParseError(f"duplicate location {lid!r}", lineno, col)
            body = {"flows": {}, "updates": {}, "invariant": None, "line": lineno}
            locations[lid] = body
            block = ("location", lid, body)
            continue
        m = _EDGE.match(stripped)
        if m:
            body = {"guard": None, "reset": {}, "line": lineno}
            edges.append((m.group(1), m.group(2), body))
            block = ("edge", m.group(1), m.group(2), body)
            continue
        key, sep, value = stripped.partition(":")
        if not sep:
            raise ParseError(f"expected 'key: value', got {stripped!r}", lineno, col)
        key = key.strip()
        value = value.strip()
        if key == "name":
            name = value
        elif key == "variables":
            variables = _split_list(value)
            for v in variables:
                if not _IDENT.match(v):
                    raise ParseError(f"invalid variable name {v!r}", lineno, col)
        elif key == "output" or key == "outputs":
            outputs = tuple(_split_list(value))
            for o in outputs:
                _expr(o, lineno, col)
        elif key == "defaults":
            for item in _split_list(value):
                k, e = _assignment(item, lineno, col)
                defaults[k] = _constant(e, lineno, col)
        elif key.startswith("initial"):
            lid = key[len("initial"):].strip()
            if not lid:
                raise ParseError("initial needs a location: 'initial L: x = 1'", lineno, col)
            values = {}
            for item in _split_list(value):
                k, e = _assignment(item, lineno, col)
                values[k] = _constant(e, lineno, col)
            init.append((lid, values))
        else:
            raise ParseError(f"unknown key {key!r}", lineno, col)

    if variables is None:
        raise ParseError("missing 'variables:' line")
    locs = []
    for lid, body in locations.items():
        flows = dict(body["flows"])
        for v in variables:
            if v not in flows and v not in body["updates"]:
                flows[v] = Const(0.0)
        locs.append(Location(lid, flows, dict(body["updates"]), body["invariant"]))
    edge_objs = []
    for src, dst, body in edges:
        if body["guard"] is None:
            raise ParseError(f"edge {src} -> {dst} has no guard", body["line"])
        edge_objs.append(Edge(src, dst, body["guard"], dict(body["reset"])))
    ha = HybridAutomaton(tuple(variables), tuple(locs), tuple(edge_objs), tuple(init), name)
    diags = bad + validate(ha)
    if diags:
        raise ValidationError(diags)
    return ModelFile(ha, defaults, outputs, name)


def _constant(expr, lineno, col):
    if free_variables(expr):
        raise ParseError(f"expected a constant, got {expr}", lineno, col)
    return evaluate(expr, {})


def parse_model(text: str) -> HybridAutomaton:
    return parse_model_text(text).ha


def load_model(source) -> ModelFile:
    """Load a model from a path or from the name of a built-in benchmark."""
    from .benchmarks import BENCHMARKS

    if str(source) in BENCHMARKS:
        return parse_model_text(BENCHMARKS[str(source)])
    return parse_model_text(Path(source).read_text())
