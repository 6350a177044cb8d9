import math

import pytest

from fasim import RefConfig, parse_model, simulate_naive, simulate_reference
from fasim.errors import InvariantViolated

# closed form of the heating phase: 150 - 120 exp(-0.075 (t - 5)) for t >= 5
WATER_TEMP_10 = 150 - 120 * math.exp(-0.075 * 5)


def test_config_validation():
    with pytest.raises(ValueError):
        RefConfig(dt=0.0, t_max=1.0)
    with pytest.raises(ValueError):
        RefConfig(dt=0.1, t_max=-1.0)
    with pytest.raises(ValueError):
        RefConfig(dt=0.1, t_max=1.0, crossing_refinement="secant")


def _value_at(trace, t, var):
    for i, ti in enumerate(trace.times):
        if abs(ti - t) < 1e-9 and trace.kinds[i] == "intra":
            return trace.columns[var][i]
    raise AssertionError(f"no sample at t={t}")


def test_water_temperature_at_ten(models):
    assert WATER_TEMP_10 == pytest.approx(67.52528654508333, abs=1e-12)
    trace, _ = simulate_reference(models["water"].ha, RefConfig(dt=1e-3, t_max=12))
    assert _value_at(trace, 10.0, "temp") == pytest.approx(WATER_TEMP_10, abs=1e-9)


def test_bisection_locates_crossings(models, reference_runs):
    trace, _ = reference_runs["steering"]
    first = trace.switches[0]
    assert first.time == pytest.approx((math.acos(-0.99) - math.pi / 2) / 0.1, abs=1e-8)
    water, _ = reference_runs["water"]
    off = [s for s in water.switches if s.target == "OFF"][0]
    # the equality guard counts as true within eq_tol = 1e-6, i.e. about 1e-6 / 3.75 s early
    assert off.time == pytest.approx(5 + math.log(2.4) / 0.075, abs=1e-6)


def test_naive_steering_dt_one_gets_stuck(models):
    # brute force over the grid, independent of the engine
    t_l1 = next(k for k in range(60) if math.cos(math.pi / 2 + 0.1 * k) <= -0.99)
    x_entry = math.pi / 2 + 0.1 * t_l1
    returns = [k for k in range(1, 60 - t_l1) if math.cos(x_entry - 4 * k) >= 0.99]
    assert t_l1 == 15 and [k for k in returns if t_l1 + k <= 50] == []
    trace, rep = simulate_naive(models["steering"].ha, 1.0, 50)
    assert [(s.source, s.time) for s in trace.switches] == [("L1", 15.0)]
    assert rep.engine == "naive"


def test_naive_misses_equality_guard(models):
    for dt in (0.1, 0.01):
        trace, _ = simulate_naive(models["water"].ha, dt, 20)
        assert [s.target for s in trace.switches] == ["ON"]


def test_rk4_is_exact_for_constant_flows():
    ha = parse_model("variables: x\ninitial A: x = 1\nlocation A:\n    flow x = 0.5\n")
    trace, rep = simulate_reference(ha, RefConfig(dt=0.3, t_max=3))
    assert trace.final().values["x"] == pytest.approx(2.5, abs=1e-12)
    assert trace.final().time == 3.0
    assert rep.intra_steps == 10


def test_reference_invariant_violation():
    ha = parse_model("variables: x\ninitial A: x = 0\nlocation A:\n    flow x = 1\n    invariant x <= 1\n")
    with pytest.raises(InvariantViolated):
        simulate_reference(ha, RefConfig(dt=0.1, t_max=5))


def test_max_steps_stops_with_diagnostic():
    ha = parse_model("variables: x\ninitial A: x = 0\nlocation A:\n    flow x = 1\n")
    trace, rep = simulate_reference(ha, RefConfig(dt=0.1, t_max=5, max_steps=5))
    assert rep.diagnostics and "max_steps" in rep.diagnostics[0]
    assert trace.final().time < 5
