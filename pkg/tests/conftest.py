import math

import pytest

from fasim import RefConfig, SimConfig, convert_to_fa, load_model, simulate, simulate_reference

#: One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def models():
    return {name: load_model(name) for name in ("steering", "robot", "water")}


@pytest.fixture(scope="session")
def fa_runs(models):
    """FA runs at the default settings (pi/10, 1e-6) over each model's horizon."""
    out = {}
    for name, mf in models.items():
        fa = convert_to_fa(mf.ha)
        trace, report = simulate(fa, SimConfig(t_max=mf.defaults["tmax"], max_angle=math.pi / 10, error_bound=1e-6))
        out[name] = (fa, trace, report)
    return out


@pytest.fixture(scope="session")
def reference_runs(models):
    """High-resolution RK4 runs (dt = 1e-4, bisection refinement)."""
    return {
        name: simulate_reference(mf.ha, RefConfig(dt=1e-4, t_max=mf.defaults["tmax"]))
        for name, mf in models.items()
    }
