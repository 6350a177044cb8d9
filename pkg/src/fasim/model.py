"""Hybrid automata: locations with flows, guarded edges with resets.

Only switching automata are supported: a location is left exactly when
one of its outgoing guards becomes true. Each variable of a location is
either integrated (a *flow*, ``dx/dt = f(x)``) or recomputed from the
integrated variables after every step (an *update*, ``y = h(x)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .expr import (
    Binary,
    Const,
    Expression,
    Var,
    check_expr,
    compile_vector,
    evaluate,
    free_variables,
    substitute,
)

RELATIONS = ("<=", ">=", "==")

#: Default tolerance for equality guards.
EQ_TOL = 1e-6


@dataclass(frozen=True)
class Comparison:
    lhs: Expression
    relation: str
    rhs: float

    def residual(self, env) -> float:
        return evaluate(self.lhs, env) - self.rhs

    def __str__(self):
        return f"{self.lhs} {self.relation} {self.rhs!r}"


def holds(relation: str, residual: float, eq_tol: float = EQ_TOL) -> bool:
    """Decide a comparison from its residual ``lhs - rhs``."""
    if relation == "<=":
        return residual <= 0.0
    if relation == ">=":
        return residual >= 0.0
    return abs(residual) <= eq_tol


@dataclass(frozen=True)
class Predicate:
    """Conjunction of comparisons."""

    comparisons: tuple

    def __str__(self):
        return " and ".join(str(c) for c in self.comparisons)


@dataclass(frozen=True)
class Location:
    id: str
    flows: Mapping[str, Expression] = field(default_factory=dict)
    updates: Mapping[str, Expression] = field(default_factory=dict)
    invariant: Optional[Predicate] = None


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    guard: Predicate
    reset: Mapping[str, Expression] = field(default_factory=dict)

    @property
    def name(self):
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class HybridAutomaton:
    """The tuple (L, X, Init, f, h, Inv, E, G, R).

    ``init`` is a sequence of ``(location id, values)`` pairs; a well-formed
    automaton has exactly one. Update variables may be omitted from the
    initial values since they are recomputed on entry.
    """

    variables: tuple
    locations: tuple
    edges: tuple
    init: tuple
    name: str = "model"

    def location(self, loc_id: str) -> Location:
        for loc in self.locations:
            if loc.id == loc_id:
                return loc
        raise KeyError(loc_id)

    def outgoing(self, loc_id: str) -> list:
        """``(edge index, edge)`` pairs leaving ``loc_id`` in declaration order."""
        return [(i, e) for i, e in enumerate(self.edges) if e.source == loc_id]

    @property
    def initial_location(self) -> str:
        return self.init[0][0]

    def initial_env(self) -> dict:
        loc_id, values = self.init[0]
        env = {name: float(values.get(name, 0.0)) for name in self.variables}
        return complete_env(self.location(loc_id), env)


def complete_env(location: Location, env: Mapping[str, float]) -> dict:
    """Return a copy of ``env`` with the location's update variables recomputed."""
    out = dict(env)
    for name, expr in location.updates.items():
        out[name] = evaluate(expr, out)
    return out


def evaluate_guard(p: Predicate, env: Mapping[str, float], eq_tol: float = EQ_TOL) -> bool:
    return all(holds(c.relation, c.residual(env), eq_tol) for c in p.comparisons)


def apply_reset(edge: Edge, env: Mapping[str, float]) -> dict:
    """Simultaneous assignment: every reset reads the pre-switch values."""
    new = dict(env)
    for name, expr in edge.reset.items():
        new[name] = evaluate(expr, env)
    return new


def comparison(lhs: Expression, relation: str, rhs: Expression) -> Comparison:
    """Build a Comparison, moving a non-constant right-hand side to the left."""
    if relation not in RELATIONS:
        raise ValueError(f"unsupported relation {relation!r}")
    if isinstance(rhs, Const) or not free_variables(rhs):
        return Comparison(lhs, relation, evaluate(rhs, {}))
    return Comparison(Binary("sub", lhs, rhs), relation, 0.0)


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subject: str = ""
    message: str = ""

    def __str__(self):
        text = self.code
        if self.subject:
            text += f"({self.subject})"
        if self.message:
            text += f": {self.message}"
        return text


def validate(ha: HybridAutomaton) -> list:
    """Check structural well-formedness; return diagnostics (empty when valid)."""
    diags = []
    names = set(ha.variables)
    if len(names) != len(ha.variables):
        diags.append(Diagnostic("DuplicateVariable", message="variable declared twice"))

    loc_ids = [loc.id for loc in ha.locations]
    for lid in sorted({i for i in loc_ids if loc_ids.count(i) > 1}):
        diags.append(Diagnostic("DuplicateLocation", lid))
    known = set(loc_ids)

    if len(ha.init) == 0:
        diags.append(Diagnostic("NoInitialLocation"))
    elif len({lid for lid, _ in ha.init}) > 1 or len(ha.init) > 1:
        diags.append(Diagnostic("MultipleInitialLocations", ", ".join(l for l, _ in ha.init)))

    def check(expr, where):
        for code, subject in check_expr(expr, names):
            diags.append(Diagnostic(code, subject, where))

    for loc in ha.locations:
        flows, updates = set(loc.flows), set(loc.updates)
        if flows & updates or (flows | updates) != names:
            diags.append(
                Diagnostic(
                    "VariablePartition",
                    loc.id,
                    "flows and updates must partition the variables",
                )
            )
        for name in sorted((flows | updates) - names):
            diags.append(Diagnostic("UnboundVariable", name, f"location {loc.id}"))
        for name, expr in loc.flows.items():
            check(expr, f"flow {name} in {loc.id}")
        for name, expr in loc.updates.items():
            check(expr, f"update {name} in {loc.id}")
            bad = free_variables(expr) & updates
            if bad:
                diags.append(
                    Diagnostic("UpdateDependency", name, f"depends on updates {sorted(bad)}")
                )
        if loc.invariant is not None:
            diags.extend(_check_predicate(loc.invariant, f"invariant of {loc.id}", check))

    for edge in ha.edges:
        for end in (edge.source, edge.target):
            if end not in known:
                diags.append(Diagnostic("UnknownLocation", end, f"edge {edge.name}"))
        diags.extend(_check_predicate(edge.guard, f"guard of {edge.name}", check))
        for name, expr in edge.reset.items():
            if name not in names:
                diags.append(Diagnostic("UnboundVariable", name, f"reset of {edge.name}"))
            check(expr, f"reset of {edge.name}")

    for lid, values in ha.init:
        if lid not in known:
            diags.append(Diagnostic("UnknownLocation", lid, "initial location"))
            continue
        for name in sorted(set(values) - names):
            diags.append(Diagnostic("UnboundVariable", name, "initial values"))
        for name in ha.location(lid).flows:
            if name not in values:
                diags.append(Diagnostic("UnboundInitialValue", name))

    if not diags:
        diags.extend(_check_switching(ha))
    return diags


def _check_predicate(p, where, check):
    out = []
    if not p.comparisons:
        out.append(Diagnostic("InvalidPredicate", where, "no comparisons"))
    for c in p.comparisons:
        if c.relation not in RELATIONS:
            out.append(Diagnostic("InvalidRelation", c.relation, where))
        if not math.isfinite(c.rhs):
            out.append(Diagnostic("InvalidPredicate", where, "non-finite bound"))
        check(c.lhs, where)
    return out


def _check_switching(ha):
    """Point checks that guards and explicit invariants do not overlap.

    Checked at the initial environment and just inside each single-variable
    guard boundary. Full semantic disjointness is not decided here.
    """
    diags = []
    try:
        env0 = ha.initial_env()
    except Exception as exc:  # expression errors at the initial point
        return [Diagnostic("InitialEvaluation", message=str(exc))]
    for loc in ha.locations:
        if loc.invariant is None:
            continue
        for idx, edge in ha.outgoing(loc.id):
            points = [env0] + _boundary_points(loc, edge, env0)
            for env in points:
                try:
                    overlap = evaluate_guard(edge.guard, env) and evaluate_guard(
                        loc.invariant, env, 0.0
                    )
                except Exception:
                    continue
                if overlap:
                    diags.append(
                        Diagnostic(
                            "GuardInvariantOverlap",
                            edge.name,
                            f"guard and invariant of {loc.id} both hold",
                        )
                    )
                    break
    return diags


def _boundary_points(loc, edge, env0):
    points = []
    for c in edge.guard.comparisons:
        lhs = substitute(c.lhs, loc.updates)
        if not isinstance(lhs, Var):
            continue
        step = 1e-6 * max(1.0, abs(c.rhs))
        inside = {"<=": c.rhs - step, ">=": c.rhs + step, "==": c.rhs}[c.relation]
        env = dict(env0)
        env[lhs.name] = inside
        points.append(complete_env(loc, env))
    return points


class CompiledLocation:
    """Fast positional evaluators for one location's flows, updates and guards.

    Values are passed in ``ha.variables`` order.
    """

    def __init__(self, ha: HybridAutomaton, loc: Location):
        names = list(ha.variables)
        self.names = names
        self.flow_vars = [n for n in names if n in loc.flows]
        self.update_vars = [n for n in names if n in loc.updates]
        self.flow_index = [names.index(n) for n in self.flow_vars]
        self.update_index = [names.index(n) for n in self.update_vars]
        self.flows = compile_vector([loc.flows[n] for n in self.flow_vars], names)
        self.updates = compile_vector([loc.updates[n] for n in self.update_vars], names)
        self.constant_flows = all(not free_variables(loc.flows[n]) for n in self.flow_vars)
        self.guards = []
        for idx, edge in ha.outgoing(loc.id):
            fn = compile_vector([c.lhs for c in edge.guard.comparisons], names)
            rels = [c.relation for c in edge.guard.comparisons]
            rhs = [c.rhs for c in edge.guard.comparisons]
            self.guards.append((idx, edge, fn, rels, rhs))

    def complete(self, values: list) -> list:
        """Recompute update variables in place and return ``values``."""
        if self.update_index:
            for i, v in zip(self.update_index, self.updates(*values)):
                values[i] = v
        return values

    def residuals(self, guard, values) -> list:
        _, _, fn, _, rhs = guard
        return [lhs - r for lhs, r in zip(fn(*values), rhs)]

    def guard_holds(self, guard, values, eq_tol=EQ_TOL) -> bool:
        rels = guard[3]
        return all(holds(rel, res, eq_tol) for rel, res in zip(rels, self.residuals(guard, values)))
