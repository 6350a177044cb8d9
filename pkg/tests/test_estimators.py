import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import ParameterGrid

from fasim import FASimulator, ReferenceSimulator, load_model


def test_params_round_trip():
    est = FASimulator(max_angle=math.pi / 50, error_bound=1e-4)
    params = est.get_params()
    assert params["max_angle"] == math.pi / 50 and params["error_bound"] == 1e-4
    c = clone(est)
    assert c is not est and c.get_params() == params
    est.set_params(error_bound=1e-2)
    assert est.error_bound == 1e-2
    assert ReferenceSimulator().get_params()["dt"] == 1e-4


def test_parameter_grid_sweep():
    base = FASimulator()
    steps = {}
    for params in ParameterGrid({"max_angle": [math.pi / 10, math.pi / 50]}):
        est = clone(base).set_params(**params).fit("water")
        steps[params["max_angle"]] = est.report_.intra_steps
    assert steps[math.pi / 50] > steps[math.pi / 10]


def test_predict_before_fit():
    with pytest.raises(NotFittedError):
        FASimulator().predict([0.0, 1.0])


def test_fit_predict_score():
    est = FASimulator().fit("water")
    assert est.outputs_ == ("temp",)
    t = np.linspace(0, 20, 201)
    y = est.predict(t)
    assert y.shape == (201, 1)
    assert y[0, 0] == 30.0
    exact = np.where(t < 5, 30.0, 150 - 120 * np.exp(-0.075 * (t - 5)))
    exact = np.minimum(exact, 100.0)
    assert est.score(t, exact) > 0.9999
    with pytest.raises(ValueError):
        est.predict([0.0, float("nan")])


def test_inputs_accepted(models):
    mf = models["steering"]
    by_file = FASimulator().fit(mf)
    by_ha = FASimulator(t_max=50).fit(mf.ha)
    assert by_ha.outputs_ == ("x", "y")
    assert list(by_file.trace_.times) == list(by_ha.trace_.times)
    with pytest.raises(ValueError):
        FASimulator().fit(mf.ha)


def test_outputs_override_and_reference():
    est = ReferenceSimulator(dt=1e-3, outputs=("2*temp",)).fit(load_model("water"))
    assert est.outputs_ == ("2*temp",)
    assert est.predict([0.0])[0, 0] == 60.0
    assert est.report_.engine == "ref"
