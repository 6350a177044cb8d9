"""Angular-stepping simulation of frequency automata.

The main loop alternates between discrete switches and intra-location
steps. A switch fires whenever an outgoing guard holds; it applies the
reset and re-anchors every flow variable on the unit circle (``theta = 0``)
without advancing the clock. Otherwise each moving flow variable proposes
a time step from the angle it may rotate through:

* the rotation to the nearest guard-target angle ahead of it, if that
  target is reached before the next pole of the circle,
* else the user cap ``max_angle``.

The shortest proposal becomes the step. Within a location the rates are
integrated in normalized units with a two-stage scheme whose error
estimate is the gap between one full Euler step and two half steps; the
step is halved until that gap is within ``error_bound``. A variable whose
proposal was a guard target lands on the target angle exactly.
"""
from __future__ import annotations

import math
import random
import time as _time
from dataclasses import dataclass
from typing import Optional, Union

from .errors import InvariantViolated, StepUnderflow
from .model import EQ_TOL, HybridAutomaton, apply_reset, complete_env, holds
from .trace import RunReport, SimState, SwitchEvent, Trace
from .translate import (
    TWO_PI,
    FrequencyAutomaton,
    convert_to_fa,
    select_delta,
    wrap_angle,
)

HALF_PI = 0.5 * math.pi
#: Angular tolerance for deciding that a vector sits on a guard target.
ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class SimConfig:
    t_max: float
    max_angle: float = math.pi / 10
    error_bound: float = 1e-6
    eq_tol: float = EQ_TOL
    rng_seed: int = 0
    max_steps: int = 10**7
    min_dt: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.max_angle < math.pi:
            raise ValueError("max_angle must lie in (0, pi)")
        if not self.error_bound > 0.0:
            raise ValueError("error_bound must be positive")
        if not self.t_max > 0.0:
            raise ValueError("t_max must be positive")
        if not self.min_dt > 0.0:
            raise ValueError("min_dt must be positive")


def _sign(x):
    return (x > 0.0) - (x < 0.0)


def _pole_distance(theta: float, direction: int) -> float:
    """Rotation from ``theta`` to the next pole (pi/2 or 3pi/2) in ``direction``."""
    if direction > 0:
        return min(wrap_angle(HALF_PI - theta), wrap_angle(3 * HALF_PI - theta))
    return min(wrap_angle(theta - HALF_PI), wrap_angle(theta - 3 * HALF_PI))


def _branch_angle(theta0: float, s: float) -> float:
    """Angle with sine ``s`` on the same half circle as ``theta0``."""
    a = math.asin(max(-1.0, min(1.0, s)))
    if math.cos(theta0) >= 0.0:
        return wrap_angle(a)
    return wrap_angle(math.pi - a)


class _Proposal:
    __slots__ = ("dt", "landing", "goal", "angle", "ahead")

    def __init__(self, dt, landing=False, goal=0.0, angle=0.0, ahead=None):
        self.dt = dt
        self.landing = landing
        self.goal = goal  # normalized value at the end of the rotation
        self.angle = angle  # target angle when landing
        self.ahead = ahead  # (normalized target, angle) of the next target, if any


class FASimulation:
    """One run of a frequency automaton; owns all mutable state."""

    def __init__(self, fa: FrequencyAutomaton, cfg: SimConfig):
        self.fa = fa
        self.ha = fa.ha
        self.cfg = cfg
        self.rng = random.Random(cfg.rng_seed)
        self.names = list(self.ha.variables)
        self.trace = Trace(self.names, frames=True)
        self.clock = 0.0
        self.intra_steps = 0
        self.switch_count = 0
        self.pending = set()
        self.diagnostics = []
        self.reanchor_limit = min(cfg.max_angle, math.pi / 4)
        self._enter(self.ha.initial_location, self.ha.initial_env())

    # -- state helpers ---------------------------------------------------------

    def _enter(self, loc_id, env):
        self.location = loc_id
        self.plan = self.fa.plan(loc_id)
        self.compiled = self.plan.compiled
        self.values = self.compiled.complete([float(env[n]) for n in self.names])
        self.entry_env = dict(zip(self.names, self.values))
        self.frames = {v: self.plan.frame(v, self.entry_env) for v in self.plan.flow_vars}
        self.constant = all(self.plan.constant_rate[v] is not None for v in self.plan.flow_vars)

    def env(self) -> dict:
        return dict(zip(self.names, self.values))

    def state(self) -> SimState:
        return SimState(
            clock=self.clock,
            location=self.location,
            env=self.env(),
            normalized={v: fr.norm for v, fr in self.frames.items()},
            angles={v: fr.theta for v, fr in self.frames.items()},
            entry_env=dict(self.entry_env),
        )

    def _record(self, kind):
        self.trace.append(self.clock, self.location, kind, list(self.values), self.frames)

    def _rates(self, values) -> list:
        """Normalized rates ``f(x) / max_range`` in flow-variable order."""
        raw = self.compiled.flows(*values)
        return [r / self.frames[v].max_range for r, v in zip(raw, self.plan.flow_vars)]

    def _values_at(self, norms) -> list:
        vals = list(self.values)
        for i, v, s in zip(self.compiled.flow_index, self.plan.flow_vars, norms):
            fr = self.frames[v]
            vals[i] = fr.anchor + fr.max_range * s
        return self.compiled.complete(vals)

    # -- guards ------------------------------------------------------------------

    def _on_target(self, edge, j) -> bool:
        inv = self.plan.inversions.get((edge, j))
        if inv is None:
            return False
        fr = self.frames[inv.variable]
        for e, jj, _, _, cands in fr.targets:
            if e == edge and jj == j:
                for c in cands:
                    d = abs(fr.theta - c)
                    if min(d, TWO_PI - d) <= ANGLE_TOL:
                        return True
        return False

    def _edge_enabled(self, guard) -> bool:
        idx, _, _, rels, _ = guard
        if idx in self.pending:
            return True
        res = self.compiled.residuals(guard, self.values)
        for j, (rel, r) in enumerate(zip(rels, res)):
            if not (holds(rel, r, self.cfg.eq_tol) or self._on_target(idx, j)):
                return False
        return True

    def guard_enabled(self) -> Optional[int]:
        """Index of the edge to take now, or None.

        Among several enabled edges one is drawn with the run's seeded RNG.
        """
        enabled = [g[0] for g in self.compiled.guards if self._edge_enabled(g)]
        if not enabled:
            return None
        if len(enabled) == 1:
            return enabled[0]
        return self.rng.choice(enabled)

    def switch(self, idx: int):
        edge = self.ha.edges[idx]
        pre = self.env()
        post = complete_env(self.ha.location(edge.target), apply_reset(edge, pre))
        self.trace.switches.append(SwitchEvent(self.clock, idx, edge.source, edge.target, pre, post))
        self.pending.clear()
        self._enter(edge.target, post)
        self.switch_count += 1
        self._record("switch")

    # -- step size ---------------------------------------------------------------

    def _reanchor_if_needed(self, rates):
        """Move frames away from poles and refresh direction-dependent targets."""
        changed = False
        env = None
        for v, r in zip(self.plan.flow_vars, rates):
            if r == 0.0:
                continue
            fr = self.frames[v]
            need = self.plan.periodic[v] and _sign(r) != fr.direction
            d = _sign(r) * (1 if math.cos(fr.theta) >= 0.0 else -1)
            if not need:
                dist = _pole_distance(fr.theta, d)
                if abs(math.cos(fr.theta)) < 1e-12:
                    need = True
                elif dist <= self.reanchor_limit and self._target_ahead(fr, d, dist) is None:
                    need = True
            if need:
                env = env or self.env()
                self.frames[v] = self.plan.frame(v, env, direction=_sign(r))
                changed = True
        return changed

    def _target_ahead(self, fr, d, dist):
        """Nearest target rotation in direction ``d`` not beyond the next pole."""
        best = None
        for _, _, _, nt, cands in fr.targets:
            delta = select_delta(fr.theta, cands, d)
            if delta is None or abs(delta) > dist + 1e-15:
                continue
            if best is None or abs(delta) < abs(best[0]):
                best = (delta, nt)
        return best

    def compute_delta(self, v: str, rate: float) -> _Proposal:
        """Time step proposed by flow variable ``v`` moving at normalized ``rate``."""
        if rate == 0.0:
            return _Proposal(math.inf)
        fr = self.frames[v]
        d = _sign(rate) * (1 if math.cos(fr.theta) >= 0.0 else -1)
        dist = _pole_distance(fr.theta, d)
        s = math.sin(fr.theta)
        cap = self.cfg.max_angle
        best = self._target_ahead(fr, d, dist)
        ahead = None
        if best is not None:
            delta, nt = best
            angle = wrap_angle(fr.theta + delta)
            ahead = (nt, angle)
            if abs(delta) <= cap:
                return _Proposal((nt - s) / rate, True, nt, angle, ahead)
            goal = math.sin(fr.theta + d * cap)
        else:
            goal = math.sin(fr.theta + d * min(cap, dist - 0.5 * self.reanchor_limit))
        return _Proposal((goal - s) / rate, False, goal, 0.0, ahead)

    # -- integration -------------------------------------------------------------

    def _advance(self, norms, rates, h):
        """Two-stage step of size ``h``; returns (norms, rates at midpoint, error)."""
        if self.constant:
            return [s + h * r for s, r in zip(norms, rates)], rates, 0.0
        half = [s + 0.5 * h * r for s, r in zip(norms, rates)]
        mid = self._rates(self._values_at(half))
        new = [s + h * r for s, r in zip(norms, mid)]
        err = 0.0
        for r0, rm in zip(rates, mid):
            e = 0.5 * h * abs(rm - r0)
            if e > err:
                err = e
        return new, mid, err

    def _landing_step(self, norms, rates, i, goal, h):
        """Solve for the step that puts variable ``i`` exactly on ``goal``."""
        if self.constant:
            return h
        s0 = norms[i]
        for _ in range(60):
            _, mid, _ = self._advance(norms, rates, h)
            if mid[i] == 0.0 or _sign(mid[i]) != _sign(rates[i]):
                return None
            h_new = (goal - s0) / mid[i]
            if not h_new > 0.0:
                return None
            if abs(h_new - h) <= 1e-15 * h:
                return h_new
            h = h_new
        return h

    def execute_intra(self, remaining: float):
        cfg = self.cfg
        rates = self._rates(self.values)
        if self._reanchor_if_needed(rates):
            rates = self._rates(self.values)
        flow_vars = self.plan.flow_vars
        proposals = [self.compute_delta(v, r) for v, r in zip(flow_vars, rates)]
        h = min(remaining, self._residual_cap())
        landing = None
        for i, p in enumerate(proposals):
            if p.dt < h:
                h, landing = p.dt, (i if p.landing else None)
        if h < cfg.min_dt:
            raise StepUnderflow(f"step {h!r} below min_dt at t={self.clock!r}", self.state())

        norms = [self.frames[v].norm for v in flow_vars]
        for _ in range(200):
            if landing is not None:
                solved = self._landing_step(norms, rates, landing, proposals[landing].goal, h)
                if solved is None:
                    landing, h = None, 0.5 * h
                    continue
                h = solved
            new, _, err = self._advance(norms, rates, h)
            if err > cfg.error_bound or any(abs(s) > 1.0 for s in new):
                h *= 0.5
                landing = None
                if h < cfg.min_dt:
                    raise StepUnderflow(
                        f"error control drove the step below min_dt at t={self.clock!r}",
                        self.state(),
                    )
                continue
            over = self._overshoot(norms, new, rates, proposals, landing)
            if over is not None:
                landing = over
                continue
            break
        else:
            raise StepUnderflow(f"no acceptable step at t={self.clock!r}", self.state())

        h, new, landing = self._locate_residual_crossing(norms, rates, h, new, landing)
        self._commit(new, landing, proposals)
        if h >= remaining:
            self.clock = self.cfg.t_max
        else:
            self.clock += h
        self.intra_steps += 1
        self._check_invariant()

    def _overshoot(self, norms, new, rates, proposals, landing):
        """Index of a variable that ran past its target, if any."""
        worst = None
        for i, p in enumerate(proposals):
            if p.ahead is None or i == landing:
                continue
            d = _sign(rates[i])
            nt = p.ahead[0]
            if (new[i] - nt) * d > 0.0:
                # fraction of the way to the target covered; smallest lands first
                frac = (nt - norms[i]) / (new[i] - norms[i])
                if worst is None or frac < worst[0]:
                    worst = (frac, i)
        if worst is None:
            return None
        i = worst[1]
        p = proposals[i]
        p.landing, p.goal, p.angle = True, p.ahead[0], p.ahead[1]
        return i

    def _commit(self, new, landing, proposals):
        for i, v in enumerate(self.plan.flow_vars):
            fr = self.frames[v]
            if i == landing:
                fr.theta = proposals[i].angle
            else:
                fr.theta = _branch_angle(fr.theta, new[i])
        vals = list(self.values)
        for i, v in zip(self.compiled.flow_index, self.plan.flow_vars):
            vals[i] = self.frames[v].value()
        self.values = self.compiled.complete(vals)

    # -- residual-tracked guards -------------------------------------------------

    def _crossed(self, guard, start_res, values) -> bool:
        rels = guard[3]
        res = self.compiled.residuals(guard, values)
        for rel, r0, r in zip(rels, start_res, res):
            if holds(rel, r, self.cfg.eq_tol):
                continue
            if rel == "==" and _sign(r) != _sign(r0):
                continue
            return False
        return True

    def _locate_residual_crossing(self, norms, rates, h, new, landing):
        """Shrink the step onto the first residual-tracked guard crossing."""
        guards = [g for g in self.compiled.guards if g[0] in self.plan.residual_edges]
        if not guards:
            return h, new, landing
        start = {g[0]: self.compiled.residuals(g, self.values) for g in guards}
        end_vals = self._values_at(new)
        hit = [g for g in guards if self._crossed(g, start[g[0]], end_vals)]
        if not hit:
            return h, new, landing

        def crossed_at(hh):
            pos, _, _ = self._advance(norms, rates, hh)
            vals = self._values_at(pos)
            return pos, [g for g in guards if self._crossed(g, start[g[0]], vals)], vals

        lo, hi = 0.0, h
        hi_new, hi_hit, hi_vals = new, hit, end_vals
        while hi - lo > self.cfg.min_dt:
            if self._converged(hi_hit, start, hi_vals):
                break
            mid = 0.5 * (lo + hi)
            pos, got, vals = crossed_at(mid)
            if got:
                hi, hi_new, hi_hit, hi_vals = mid, pos, got, vals
            else:
                lo = mid
        self.pending = {g[0] for g in hi_hit}
        return hi, hi_new, (landing if hi == h else None)

    def _converged(self, hit, start, values) -> bool:
        eps = self.cfg.error_bound
        for g in hit:
            res = self.compiled.residuals(g, values)
            for rel, r0, r in zip(g[3], start[g[0]], res):
                if not holds(rel, r0, self.cfg.eq_tol) and abs(r) > eps:
                    return False
        return True

    def _residual_cap(self) -> float:
        """Longest step before a residual guard could first become true.

        Each unsatisfied comparison ``g = lhs - rhs`` approaching its boundary
        at rate ``dg/dt`` is allowed ``|g| / |dg/dt|``, the time to the
        boundary under linear extrapolation. A concave approach, the only
        kind that can touch the boundary and leave again within one step,
        reaches the boundary no earlier than this, so short grazing
        crossings are not stepped over.
        """
        cap = math.inf
        vals = self.values
        for _, rels, rhs, lhs_fn, dot_fn in self.plan.residual_rates:
            edge_cap = 0.0
            for rel, l, r, d in zip(rels, lhs_fn(*vals), rhs, dot_fn(*vals)):
                g = l - r
                if holds(rel, g, self.cfg.eq_tol):
                    continue
                if rel == ">=":
                    c = -g / d if d > 0.0 else math.inf
                elif rel == "<=":
                    c = g / -d if d < 0.0 else math.inf
                else:
                    c = abs(g / d) if g * d < 0.0 else math.inf
                edge_cap = max(edge_cap, c)
            cap = min(cap, edge_cap)
        return max(cap, 1e3 * self.cfg.min_dt)

    def _check_invariant(self):
        inv = self.plan.location.invariant
        if inv is None:
            return
        env = self.env()
        tol = self.cfg.eq_tol
        for c in inv.comparisons:
            r = c.residual(env)
            ok = {"<=": r <= tol, ">=": r >= -tol, "==": abs(r) <= tol}[c.relation]
            if not ok:
                raise InvariantViolated(self.location, self.state())

    # -- main loop ---------------------------------------------------------------

    def run(self):
        cfg = self.cfg
        self._record("init")
        iterations = 0
        while self.clock <= cfg.t_max:
            iterations += 1
            if iterations > cfg.max_steps:
                self.diagnostics.append(f"stopped after max_steps={cfg.max_steps}")
                break
            idx = self.guard_enabled()
            if idx is not None:
                self.switch(idx)
                continue
            remaining = cfg.t_max - self.clock
            if remaining <= cfg.min_dt:
                break
            self.pending.clear()
            self.execute_intra(remaining)
            self._record("intra")
        return self.trace


def simulate(model: Union[FrequencyAutomaton, HybridAutomaton], cfg: SimConfig):
    """Run the frequency engine; returns ``(Trace, RunReport)``.

    ``model`` may be a hybrid automaton, in which case it is translated
    first (translation time is not included in ``wall_time``).
    """
    fa = model if isinstance(model, FrequencyAutomaton) else convert_to_fa(model)
    sim = FASimulation(fa, cfg)
    t0 = _time.perf_counter()
    trace = sim.run()
    wall = _time.perf_counter() - t0
    report = RunReport(sim.intra_steps, sim.switch_count, wall, sim.state(), sim.diagnostics, "fa")
    return trace, report
