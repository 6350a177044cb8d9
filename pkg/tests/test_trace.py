import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fasim import Trace

finite = st.floats(allow_nan=False, allow_infinity=False)
rows = st.lists(
    st.tuples(finite, st.sampled_from(["A", "L2"]), st.sampled_from(["init", "intra", "switch"]), finite, finite),
    max_size=30,
)


@given(rows)
def test_csv_round_trip_is_bit_exact(data):
    t = Trace(["x", "y"])
    for time, loc, kind, x, y in data:
        t.append(time, loc, kind, [x, y])
    buf = io.StringIO()
    t.to_csv(buf)
    buf.seek(0)
    back = Trace.from_csv(buf)
    assert back.variables == ("x", "y")
    assert list(back.times) == list(t.times)
    assert back.locations == t.locations and back.kinds == t.kinds
    for v in ("x", "y"):
        assert [math.copysign(1, a) * abs(a) for a in back.columns[v]] == list(t.columns[v])


def test_csv_header_and_file_round_trip(tmp_path, fa_runs):
    _, trace, _ = fa_runs["steering"]
    path = tmp_path / "steer.csv"
    trace.to_csv(path)
    assert path.read_text().splitlines()[0] == "time,location,step_kind,x,y"
    back = Trace.from_csv(path)
    assert list(back.columns["x"]) == list(trace.columns["x"])
    assert back.switches == []


def test_bad_header_rejected():
    with pytest.raises(ValueError):
        Trace.from_csv(io.StringIO("t,loc,kind,x\n0,A,init,1\n"))


def test_frames_are_nan_for_update_variables(fa_runs):
    _, trace, _ = fa_runs["steering"]
    assert all(math.isnan(a) for a in trace.frames["anchor"]["y"])
    assert not any(math.isnan(a) for a in trace.frames["anchor"]["x"])


def test_accessors():
    t = Trace(["x"])
    assert t.final() is None and t.end_time == 0.0 and t.first_switch() is None
    t.append(0.0, "A", "init", [1.0])
    t.append(0.5, "A", "intra", [2.0])
    assert len(t) == 2 and t.end_time == 0.5
    assert t.final().values == {"x": 2.0}
    assert [s.step_kind for s in t] == ["init", "intra"]
    assert t.column("x").tolist() == [1.0, 2.0]
