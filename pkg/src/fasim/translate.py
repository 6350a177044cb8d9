"""Translation of a hybrid automaton into its frequency-domain form.

Every flow variable ``x`` of a location is represented by a unit vector at
angle ``theta`` with

    x = anchor + max_range * sin(theta)

where ``anchor`` is the value of ``x`` when the representation was set up
(normally location entry) and ``max_range`` scales the excursion so that
all guard boundaries on ``x`` map into ``[-1, 1]``. A guard boundary ``b``
becomes the normalized target ``(b - anchor) / max_range`` and the two
angles whose sine equals it.

The translation here is static: it fixes which comparisons can be
inverted onto a single variable and precomputes tables for the initial
location (and best-effort estimates for the others). The simulator calls
:meth:`LocationPlan.frame` again on every entry because resets make entry
values run dependent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import FASimError, NotStaticallyInvertible
from .expr import (
    Unary,
    Var,
    compile_vector,
    evaluate,
    free_variables,
    is_constant,
    lie_derivative,
    substitute,
)
from .model import (
    CompiledLocation,
    Comparison,
    HybridAutomaton,
    apply_reset,
    complete_env,
)

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Map an angle into ``[0, 2*pi)``."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


def candidate_angles(normalized_target: float) -> tuple:
    """Angles in ``[0, 2*pi)`` whose sine equals ``normalized_target``.

    Two solutions in general, one at the extremes +1 and -1.

    >>> candidate_angles(1.0) == (math.pi / 2,)
    True
    """
    nt = max(-1.0, min(1.0, normalized_target))
    a = wrap_angle(math.asin(nt))
    b = wrap_angle(math.pi - math.asin(nt))
    if abs(a - b) <= 1e-15 or abs(abs(a - b) - TWO_PI) <= 1e-15:
        return (a,)
    return (a, b)


def select_delta(theta: float, candidates, direction: int) -> Optional[float]:
    """Signed rotation from ``theta`` to the nearest candidate in ``direction``.

    Zero rotations are excluded, so a vector sitting on a candidate heads
    for the next one. Returns None when ``direction`` is 0 or there are no
    candidates.
    """
    if direction == 0 or not candidates:
        return None
    best = None
    for c in candidates:
        d = wrap_angle(c - theta) if direction > 0 else -wrap_angle(theta - c)
        if d == 0.0:
            d = direction * TWO_PI
        if best is None or abs(d) < abs(best):
            best = d
    return best


# -- guard inversion -----------------------------------------------------------


@dataclass(frozen=True)
class Inversion:
    """A comparison rewritten as ``wrapper(variable) <relation> rhs``."""

    variable: str
    wrapper: str  # "id", "cos" or "sin"
    relation: str
    rhs: float


def invert_comparison(c: Comparison, updates: Mapping, flow_vars) -> Inversion:
    """Rewrite ``c`` in terms of a single flow variable, or raise.

    Update variables are first replaced by their defining expressions, so
    ``y <= -0.99`` with ``y = cos(x)`` inverts onto ``x``.
    """
    lhs = substitute(c.lhs, updates)
    if isinstance(lhs, Var) and lhs.name in flow_vars:
        return Inversion(lhs.name, "id", c.relation, c.rhs)
    if (
        isinstance(lhs, Unary)
        and lhs.op in ("cos", "sin")
        and isinstance(lhs.arg, Var)
        and lhs.arg.name in flow_vars
        and abs(c.rhs) <= 1.0
    ):
        return Inversion(lhs.arg.name, lhs.op, c.relation, c.rhs)
    raise NotStaticallyInvertible(f"cannot invert {c} onto a single variable")


def _next_periodic(bases, entry: float, direction: int) -> float:
    """Nearest ``base + 2*pi*k`` strictly beyond ``entry`` in ``direction``."""
    best = None
    for base in bases:
        if direction >= 0:
            up = base + TWO_PI * math.ceil((entry - base) / TWO_PI)
            if up <= entry:
                up += TWO_PI
            options = [up]
        else:
            options = []
        if direction <= 0:
            down = base + TWO_PI * math.floor((entry - base) / TWO_PI)
            if down >= entry:
                down -= TWO_PI
            options.append(down)
        for v in options:
            if best is None or abs(v - entry) < abs(best - entry):
                best = v
    return best


def boundary_value(inv: Inversion, entry: float, direction: int) -> float:
    """Value of the inverted variable on the comparison boundary.

    Periodic wrappers have infinitely many solutions; the first one reached
    from ``entry`` moving in ``direction`` is returned (nearest in either
    direction when the variable is not moving).
    """
    if inv.wrapper == "id":
        return inv.rhs
    if inv.wrapper == "cos":
        a = math.acos(inv.rhs)
        return _next_periodic((a, -a), entry, direction)
    a = math.asin(inv.rhs)
    return _next_periodic((a, math.pi - a), entry, direction)


def guard_boundary_value(
    c: Comparison, updates: Mapping = None, entry: float = 0.0, direction: int = 1,
    flow_vars=None,
) -> float:
    """Boundary value of the variable governing comparison ``c``.

    Raises NotStaticallyInvertible when ``c`` does not reduce to one
    variable under an identity, cos or sin wrapper.
    """
    updates = updates or {}
    if flow_vars is None:
        flow_vars = free_variables(substitute(c.lhs, updates))
    inv = invert_comparison(c, updates, flow_vars)
    return boundary_value(inv, entry, direction)


# -- normalization -------------------------------------------------------------


def max_range(entry: float, boundaries) -> float:
    """Scale that maps every boundary into ``[-1, 1]`` around ``entry``."""
    bs = list(boundaries)
    if not bs:
        m = max(abs(entry), 1.0)
    else:
        m = max([abs(entry)] + [max(abs(b), abs(b - entry)) for b in bs])
    if not m > 0.0 or not math.isfinite(m):
        m = 1.0
    return m


@dataclass(frozen=True)
class NormalizationParams:
    location: str
    variable: str
    entry_value: float
    max_range: float
    static: bool = True

    def denormalize(self, theta: float) -> float:
        return self.entry_value + self.max_range * math.sin(theta)


@dataclass(frozen=True)
class GuardTarget:
    edge: int
    comparison: int
    variable: str
    relation: str
    target_value: float
    normalized_target: float
    candidate_angles: tuple


def compute_normalization(
    ha: HybridAutomaton, loc_id: str, var: str, entry_env: Mapping[str, float]
) -> NormalizationParams:
    plan = LocationPlan(ha, loc_id)
    frame = plan.frame(var, entry_env)
    return NormalizationParams(loc_id, var, frame.anchor, frame.max_range)


# -- per-location plans --------------------------------------------------------


@dataclass
class VariableFrame:
    """Angular representation of one variable, valid until re-anchored."""

    anchor: float
    max_range: float
    theta: float
    direction: int
    # (edge index, comparison index, target value, normalized target, candidates)
    targets: list = field(default_factory=list)

    @property
    def norm(self) -> float:
        return math.sin(self.theta)

    def value(self) -> float:
        return self.anchor + self.max_range * math.sin(self.theta)


class LocationPlan:
    """Static guard analysis for one location.

    Splits the outgoing edges into *targeted* edges, whose comparisons all
    invert onto single flow variables, and *residual* edges that must be
    located by tracking the sign of ``lhs - rhs``.
    """

    def __init__(self, ha: HybridAutomaton, loc_id: str):
        loc = ha.location(loc_id)
        self.location = loc
        self.compiled = CompiledLocation(ha, loc)
        self.flow_vars = list(self.compiled.flow_vars)
        self.constant_rate = {}
        for v in self.flow_vars:
            self.constant_rate[v] = is_constant(loc.flows[v])
        self.inversions = {}  # (edge, comparison) -> Inversion
        self.residual_edges = []
        self.targeted_edges = []
        for idx, edge in ha.outgoing(loc_id):
            invs = {}
            try:
                for j, c in enumerate(edge.guard.comparisons):
                    invs[(idx, j)] = invert_comparison(c, loc.updates, self.flow_vars)
            except NotStaticallyInvertible:
                self.residual_edges.append(idx)
                continue
            self.targeted_edges.append(idx)
            self.inversions.update(invs)
        # residual guards: compiled lhs and its time derivative along the flows
        self.residual_rates = []
        names = list(ha.variables)
        flows = {v: loc.flows[v] for v in self.flow_vars}
        for idx in self.residual_edges:
            comps = ha.edges[idx].guard.comparisons
            lhs = [substitute(c.lhs, loc.updates) for c in comps]
            dots = [lie_derivative(e, flows) for e in lhs]
            self.residual_rates.append(
                (
                    idx,
                    [c.relation for c in comps],
                    [c.rhs for c in comps],
                    compile_vector(lhs, names),
                    compile_vector(dots, names),
                )
            )
        self.by_variable = {v: [] for v in self.flow_vars}
        for key, inv in self.inversions.items():
            self.by_variable[inv.variable].append((key, inv))
        self.periodic = {
            v: any(inv.wrapper != "id" for _, inv in self.by_variable[v])
            for v in self.flow_vars
        }

    def rate(self, var: str, env: Mapping[str, float]) -> float:
        c = self.constant_rate[var]
        if c is not None:
            return c
        return evaluate(self.location.flows[var], env)

    def frame(self, var: str, env: Mapping[str, float], direction: Optional[int] = None):
        """Set up a fresh frame for ``var`` anchored at its current value."""
        entry = float(env[var])
        if direction is None:
            r = self.rate(var, env)
            direction = (r > 0) - (r < 0)
        raw = []
        for (edge, j), inv in self.by_variable[var]:
            raw.append((edge, j, boundary_value(inv, entry, direction)))
        m = max_range(entry, [b for _, _, b in raw])
        targets = []
        for edge, j, b in raw:
            nt = max(-1.0, min(1.0, (b - entry) / m))
            targets.append((edge, j, b, nt, candidate_angles(nt)))
        return VariableFrame(entry, m, 0.0, direction, targets)


@dataclass
class FrequencyAutomaton:
    """A hybrid automaton together with its angular representation tables.

    ``normalization`` and ``targets`` describe the initial location exactly
    and the other locations at statically estimated entry points (see
    ``NormalizationParams.static``).
    """

    ha: HybridAutomaton
    plans: dict
    normalization: list
    targets: list
    residual_edges: list

    @property
    def locations(self):
        return [loc.id for loc in self.ha.locations]

    @property
    def edges(self):
        return list(self.ha.edges)

    def plan(self, loc_id: str) -> LocationPlan:
        return self.plans[loc_id]


def _estimate_entries(ha: HybridAutomaton, plans) -> dict:
    """Breadth-first guess of each location's entry environment.

    An edge's target inherits the source entry with every single-variable
    guard boundary substituted, then the reset applied. Edges with
    residual guards only propagate the source entry and mark it inexact.
    """
    start = ha.initial_location
    entries = {start: (ha.initial_env(), True)}
    queue = [start]
    while queue:
        src = queue.pop(0)
        env, exact = entries[src]
        plan = plans[src]
        for idx, edge in ha.outgoing(src):
            if edge.target in entries:
                continue
            pre = dict(env)
            ok = exact and idx not in plan.residual_edges
            if idx not in plan.residual_edges:
                for j, _ in enumerate(edge.guard.comparisons):
                    inv = plan.inversions[(idx, j)]
                    r = plan.rate(inv.variable, env)
                    d = (r > 0) - (r < 0)
                    pre[inv.variable] = boundary_value(inv, env[inv.variable], d)
            try:
                pre = complete_env(plan.location, pre)
                post = complete_env(ha.location(edge.target), apply_reset(edge, pre))
            except FASimError:
                post, ok = dict(env), False
            entries[edge.target] = (post, ok)
            queue.append(edge.target)
    for loc in ha.locations:
        entries.setdefault(loc.id, (ha.initial_env(), False))
    return entries


def convert_to_fa(ha: HybridAutomaton) -> FrequencyAutomaton:
    plans = {loc.id: LocationPlan(ha, loc.id) for loc in ha.locations}
    entries = _estimate_entries(ha, plans)
    normalization, targets, residual = [], [], []
    for loc in ha.locations:
        plan = plans[loc.id]
        env, exact = entries[loc.id]
        for v in plan.flow_vars:
            try:
                fr = plan.frame(v, env)
            except FASimError:
                continue
            normalization.append(NormalizationParams(loc.id, v, fr.anchor, fr.max_range, exact))
            for edge, j, b, nt, cands in fr.targets:
                inv = plan.inversions[(edge, j)]
                targets.append(GuardTarget(edge, j, v, inv.relation, b, nt, cands))
        residual.extend(plan.residual_edges)
    targets.sort(key=lambda t: (t.edge, t.comparison))
    return FrequencyAutomaton(ha, plans, normalization, targets, sorted(residual))


def dump_tables(fa: FrequencyAutomaton) -> str:
    """Human-readable normalization and guard-angle tables."""
    lines = ["normalization", f"{'location':<12}{'variable':<12}{'entry':>22}{'max_range':>22}  static"]
    for n in fa.normalization:
        lines.append(
            f"{n.location:<12}{n.variable:<12}{n.entry_value:>22.15g}{n.max_range:>22.15g}  {'yes' if n.static else 'no'}"
        )
    lines.append("")
    lines.append("guard targets")
    lines.append(f"{'edge':<14}{'variable':<10}{'rel':<5}{'target':>20}{'normalized':>20}  angles")
    for t in fa.targets:
        name = fa.ha.edges[t.edge].name
        angles = ", ".join(f"{a:.15g}" for a in t.candidate_angles)
        lines.append(
            f"{name:<14}{t.variable:<10}{t.relation:<5}{t.target_value:>20.15g}{t.normalized_target:>20.15g}  {angles}"
        )
    if fa.residual_edges:
        lines.append("")
        lines.append("residual-tracked edges: " + ", ".join(fa.ha.edges[i].name for i in fa.residual_edges))
    return "\n".join(lines)
