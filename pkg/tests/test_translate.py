import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fasim.errors import NotStaticallyInvertible
from fasim.expr import parse_expr
from fasim.model import Comparison, comparison
from fasim.translate import (
    TWO_PI,
    candidate_angles,
    compute_normalization,
    convert_to_fa,
    dump_tables,
    guard_boundary_value,
    max_range,
    select_delta,
    wrap_angle,
)

# oracle values computed with math.acos / math.asin
ARCCOS_M099 = 3.000053180265366
STEER_NT = 0.4764105059444467
STEER_ANGLES = (0.49656759994655486, 2.6450250536432383)


def _cmp(text, rel, rhs):
    return comparison(parse_expr(text), rel, parse_expr(rhs))


def test_oracle_constants():
    assert math.acos(-0.99) == pytest.approx(ARCCOS_M099, abs=1e-15)
    assert math.cos(ARCCOS_M099) == pytest.approx(-0.99, abs=1e-9)
    assert (ARCCOS_M099 - math.pi / 2) / ARCCOS_M099 == pytest.approx(STEER_NT, abs=1e-15)


def test_boundary_of_cos_guard_in_flow_direction():
    c = _cmp("cos(x)", "<=", "-0.99")
    assert guard_boundary_value(c, {}, math.pi / 2, +1) == pytest.approx(ARCCOS_M099, abs=1e-12)
    # moving down from pi/2 the first solution is -arccos(-0.99)
    assert guard_boundary_value(c, {}, math.pi / 2, -1) == pytest.approx(-ARCCOS_M099, abs=1e-12)
    # through an update variable
    y = _cmp("y", "<=", "-0.99")
    assert guard_boundary_value(y, {"y": parse_expr("cos(x)")}, math.pi / 2, +1) == pytest.approx(ARCCOS_M099)
    # both roots in [0, 2pi) lie behind 4.0, so the next one is a period later
    assert guard_boundary_value(c, {}, 4.0, +1) == pytest.approx(TWO_PI + ARCCOS_M099)
    assert guard_boundary_value(c, {}, 3.1, +1) == pytest.approx(TWO_PI - ARCCOS_M099)


def test_boundary_of_sin_guard():
    c = _cmp("sin(x)", ">=", "0.5")
    assert guard_boundary_value(c, {}, 0.0, +1) == pytest.approx(math.pi / 6)
    assert guard_boundary_value(c, {}, 0.0, -1) == pytest.approx(-7 * math.pi / 6)


def test_boundary_of_plain_guards():
    assert guard_boundary_value(_cmp("temp", "==", "100"), {}, 30.0, 1) == 100
    assert guard_boundary_value(_cmp("timer", ">=", "5"), {}, 0.0, 1) == 5


@pytest.mark.parametrize(
    "lhs, rhs",
    [("y", "12*x^2 - 54*x + 65"), ("x*x", "2"), ("cos(x)", "2"), ("x + y", "1")],
)
def test_non_invertible_guards(lhs, rhs):
    with pytest.raises(NotStaticallyInvertible):
        guard_boundary_value(_cmp(lhs, ">=", rhs), {}, 0.0, 1)


def test_normalization_examples(models):
    steering = models["steering"].ha
    p = compute_normalization(steering, "L1", "x", steering.initial_env())
    assert p.entry_value == pytest.approx(math.pi / 2)
    assert p.max_range == pytest.approx(ARCCOS_M099, abs=1e-12)
    water = models["water"].ha
    on = compute_normalization(water, "ON", "temp", {"timer": 5.0, "temp": 30.0})
    assert (on.entry_value, on.max_range) == (30.0, 100.0)
    off = compute_normalization(water, "OFF", "timer", {"timer": 0.0, "temp": 100.0})
    assert off.max_range == 1.0


def test_max_range_contains_every_boundary():
    assert max_range(-3.0, [3.0]) == 6.0
    assert max_range(0.0, []) == 1.0
    assert max_range(0.0, [0.0]) == 1.0
    assert max_range(2.5, []) == 2.5


def test_steering_tables(models):
    fa = convert_to_fa(models["steering"].ha)
    t = [g for g in fa.targets if fa.ha.edges[g.edge].source == "L1"][0]
    assert t.normalized_target == pytest.approx(STEER_NT, abs=1e-12)
    for got, want in zip(t.candidate_angles, STEER_ANGLES):
        assert got == pytest.approx(want, abs=1e-12)
    assert len(fa.locations) == 2 and len(fa.edges) == 2


def test_water_and_robot_tables(models):
    water = convert_to_fa(models["water"].ha)
    timer = [g for g in water.targets if g.variable == "timer"][0]
    assert timer.normalized_target == 1.0
    assert timer.candidate_angles == (math.pi / 2,)
    robot = convert_to_fa(models["robot"].ha)
    assert robot.residual_edges == [0]
    assert robot.targets == []
    text = dump_tables(robot)
    assert "residual-tracked edges: MOVE->STOP" in text


def test_static_entry_estimates(models):
    fa = convert_to_fa(models["steering"].ha)
    l2 = [n for n in fa.normalization if n.location == "L2"][0]
    assert l2.entry_value == pytest.approx(ARCCOS_M099)
    assert l2.static
    robot = convert_to_fa(models["robot"].ha)
    assert not [n for n in robot.normalization if n.location == "STOP"][0].static


@given(st.floats(-1, 1))
def test_candidate_angles_have_the_right_sine(nt):
    cands = candidate_angles(nt)
    assert 1 <= len(cands) <= 2
    for c in cands:
        assert 0.0 <= c < TWO_PI
        assert abs(math.sin(c) - nt) <= 1e-12


@settings(max_examples=300)
@given(
    st.floats(-50, 50, allow_nan=False),
    st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=3),
)
def test_round_trip_identity(entry, boundaries):
    m = max_range(entry, boundaries)
    for b in boundaries:
        nt = (b - entry) / m
        assert -1.0 <= nt <= 1.0
        for c in candidate_angles(nt):
            assert abs(entry + m * math.sin(c) - b) <= 1e-9 * max(1.0, abs(b))


def test_select_delta_prefers_nearest_in_direction():
    cands = STEER_ANGLES
    assert select_delta(0.0, cands, +1) == pytest.approx(STEER_ANGLES[0])
    assert select_delta(0.0, cands, -1) == pytest.approx(STEER_ANGLES[1] - TWO_PI)
    # sitting on a candidate: zero rotation is excluded
    assert select_delta(STEER_ANGLES[0], cands, +1) == pytest.approx(STEER_ANGLES[1] - STEER_ANGLES[0])
    assert select_delta(STEER_ANGLES[0], (STEER_ANGLES[0],), +1) == pytest.approx(TWO_PI)
    assert select_delta(0.0, cands, 0) is None


@given(st.floats(-100, 100))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert 0.0 <= w < TWO_PI
    assert math.sin(w) == pytest.approx(math.sin(theta), abs=1e-9)
