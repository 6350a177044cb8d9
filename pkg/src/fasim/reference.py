"""Fixed-step RK4 time-domain integrator used as the accuracy reference.

Guards are checked after every step. With ``crossing_refinement =
"bisection"`` a step that makes a guard true is shrunk by bisection until
the crossing is bracketed within ``bisection_tol``; with ``"none"`` the
guard is only tested on the grid, which reproduces the classic failure to
notice short or tangential crossings and equality guards.
"""
from __future__ import annotations

import math
import random
import time as _time
from dataclasses import dataclass

from .errors import InvariantViolated
from .model import EQ_TOL, CompiledLocation, HybridAutomaton, apply_reset, complete_env, holds
from .trace import RunReport, SimState, SwitchEvent, Trace


@dataclass(frozen=True)
class RefConfig:
    dt: float
    t_max: float
    eq_tol: float = EQ_TOL
    crossing_refinement: str = "bisection"
    bisection_tol: float = 1e-9
    rng_seed: int = 0
    max_steps: int = 10**8

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.t_max > 0.0:
            raise ValueError("t_max must be positive")
        if self.crossing_refinement not in ("none", "bisection"):
            raise ValueError("crossing_refinement must be 'none' or 'bisection'")


def rk4_step(loc: CompiledLocation, values: list, h: float) -> list:
    """One classical Runge-Kutta step of the location's flows.

    ``values`` must already have consistent update variables; they are
    recomputed at each stage from the stage's flow values.
    """
    idx = loc.flow_index
    if not idx:
        return list(values)

    def stage(base, k, c):
        v = list(base)
        for i, kk in zip(idx, k):
            v[i] = base[i] + c * kk
        return loc.complete(v)

    k1 = loc.flows(*values)
    if loc.constant_flows:
        out = list(values)
        for n, i in enumerate(idx):
            out[i] = values[i] + h * k1[n]
        return loc.complete(out)
    k2 = loc.flows(*stage(values, k1, 0.5 * h))
    k3 = loc.flows(*stage(values, k2, 0.5 * h))
    k4 = loc.flows(*stage(values, k3, h))
    out = list(values)
    for n, i in enumerate(idx):
        out[i] = values[i] + h / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n])
    return loc.complete(out)


class ReferenceSimulation:
    def __init__(self, ha: HybridAutomaton, cfg: RefConfig):
        self.ha = ha
        self.cfg = cfg
        self.names = list(ha.variables)
        self.compiled = {loc.id: CompiledLocation(ha, loc) for loc in ha.locations}
        self.rng = random.Random(cfg.rng_seed)
        self.trace = Trace(self.names)
        self.clock = 0.0
        self.steps = 0
        self.switch_count = 0
        self.pending = set()
        self.diagnostics = []
        self._enter(ha.initial_location, ha.initial_env())

    def _enter(self, loc_id, env):
        self.location = loc_id
        self.loc = self.compiled[loc_id]
        self.values = self.loc.complete([float(env[n]) for n in self.names])

    def env(self):
        return dict(zip(self.names, self.values))

    def state(self):
        return SimState(self.clock, self.location, self.env())

    def _record(self, kind):
        self.trace.append(self.clock, self.location, kind, list(self.values))

    def guard_enabled(self):
        tol = self.cfg.eq_tol
        enabled = [
            g[0] for g in self.loc.guards if g[0] in self.pending or self.loc.guard_holds(g, self.values, tol)
        ]
        if not enabled:
            return None
        return enabled[0] if len(enabled) == 1 else self.rng.choice(enabled)

    def switch(self, idx):
        edge = self.ha.edges[idx]
        pre = self.env()
        post = complete_env(self.ha.location(edge.target), apply_reset(edge, pre))
        self.trace.switches.append(SwitchEvent(self.clock, idx, edge.source, edge.target, pre, post))
        self.pending.clear()
        self._enter(edge.target, post)
        self.switch_count += 1
        self._record("switch")

    def _crossed(self, guard, start_res, values):
        res = self.loc.residuals(guard, values)
        for rel, r0, r in zip(guard[3], start_res, res):
            if holds(rel, r, self.cfg.eq_tol):
                continue
            if rel == "==" and (r > 0.0) != (r0 > 0.0):
                continue
            return False
        return True

    def step(self, h):
        start = self.values
        new = rk4_step(self.loc, start, h)
        if self.cfg.crossing_refinement == "none" or not self.loc.guards:
            return h, new
        start_res = {g[0]: self.loc.residuals(g, start) for g in self.loc.guards}
        hit = [g for g in self.loc.guards if self._crossed(g, start_res[g[0]], new)]
        if not hit:
            return h, new
        lo, hi = 0.0, h
        while hi - lo > self.cfg.bisection_tol:
            mid = 0.5 * (lo + hi)
            trial = rk4_step(self.loc, start, mid)
            got = [g for g in self.loc.guards if self._crossed(g, start_res[g[0]], trial)]
            if got:
                hi, new, hit = mid, trial, got
            else:
                lo = mid
        self.pending = {g[0] for g in hit}
        return hi, new

    def run(self):
        cfg = self.cfg
        self._record("init")
        n = 0
        while self.clock <= cfg.t_max:
            n += 1
            if n > cfg.max_steps:
                self.diagnostics.append(f"stopped after max_steps={cfg.max_steps}")
                break
            idx = self.guard_enabled()
            if idx is not None:
                self.switch(idx)
                continue
            remaining = cfg.t_max - self.clock
            if remaining <= 1e-12 * max(1.0, cfg.t_max):
                break
            self.pending.clear()
            h = min(cfg.dt, remaining)
            taken, self.values = self.step(h)
            self.clock += taken
            if taken == h and cfg.t_max - self.clock <= 1e-12 * max(1.0, cfg.t_max):
                self.clock = cfg.t_max
            self.steps += 1
            self._check_invariant()
            self._record("intra")
        return self.trace

    def _check_invariant(self):
        inv = self.ha.location(self.location).invariant
        if inv is None:
            return
        env = self.env()
        tol = self.cfg.eq_tol
        for c in inv.comparisons:
            r = c.residual(env)
            ok = {"<=": r <= tol, ">=": r >= -tol, "==": abs(r) <= tol}[c.relation]
            if not ok:
                raise InvariantViolated(self.location, self.state())


def simulate_reference(ha: HybridAutomaton, cfg: RefConfig):
    """Integrate ``ha`` with RK4; returns ``(Trace, RunReport)``."""
    sim = ReferenceSimulation(ha, cfg)
    t0 = _time.perf_counter()
    trace = sim.run()
    wall = _time.perf_counter() - t0
    engine = "ref" if cfg.crossing_refinement == "bisection" else "naive"
    return trace, RunReport(sim.steps, sim.switch_count, wall, sim.state(), sim.diagnostics, engine)


def simulate_naive(ha: HybridAutomaton, dt: float, t_max: float, **kwargs):
    """RK4 with guards tested only at grid points."""
    return simulate_reference(ha, RefConfig(dt, t_max, crossing_refinement="none", **kwargs))
