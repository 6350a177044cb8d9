"""scikit-learn style wrappers around the two simulation engines.

``fit`` runs a simulation of the given model, ``predict`` samples the
designated outputs at arbitrary times and ``score`` correlates them with
reference values. Hyper-parameters are constructor arguments, so the
usual ``get_params``/``set_params``/``clone`` and ``ParameterGrid`` tools
work for sweeping configurations.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .metrics import pearson, resample
from .model import EQ_TOL, HybridAutomaton
from .modelfile import ModelFile, load_model
from .reference import RefConfig, simulate_reference
from .simulate import SimConfig, simulate
from .translate import convert_to_fa


def _as_model_file(model) -> ModelFile:
    if isinstance(model, ModelFile):
        return model
    if isinstance(model, HybridAutomaton):
        return ModelFile(model, {}, (), model.name)
    return load_model(model)


class _SimulatorMixin:
    def _resolve(self, model):
        mf = _as_model_file(model)
        t_max = self.t_max if self.t_max is not None else mf.defaults.get("tmax")
        if t_max is None:
            raise ValueError("t_max not given and the model has no 'tmax' default")
        self.model_ = mf
        self.outputs_ = tuple(self.outputs) if self.outputs else (mf.outputs or tuple(mf.ha.variables))
        return mf, float(t_max)

    def predict(self, times):
        """Outputs at ``times``, shape ``(n_times, n_outputs)``."""
        check_is_fitted(self, "trace_")
        t = check_array(np.asarray(times, dtype=float).reshape(-1, 1), ensure_all_finite=True)[:, 0]
        return np.column_stack([resample(self.trace_, t, o) for o in self.outputs_])

    def score(self, times, y):
        """Mean Pearson correlation between predicted and given outputs."""
        pred = self.predict(times)
        y = np.asarray(y, dtype=float).reshape(pred.shape)
        vals = [pearson(pred[:, j], y[:, j]) for j in range(pred.shape[1])]
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else math.nan


class FASimulator(_SimulatorMixin, BaseEstimator):
    """Angular-stepping simulator.

    Parameters
    ----------
    max_angle : float
        Largest rotation of any variable's vector in one step (radians).
    error_bound : float
        Local error bound, in normalized units, for step halving.
    t_max : float or None
        Horizon; None uses the model file's ``tmax`` default.
    outputs : tuple of str or None
        Output expressions; None uses the model file's designated outputs.
    """

    def __init__(
        self,
        max_angle=math.pi / 10,
        error_bound=1e-6,
        t_max=None,
        eq_tol=EQ_TOL,
        rng_seed=0,
        min_dt=1e-12,
        max_steps=10**7,
        outputs=None,
    ):
        self.max_angle = max_angle
        self.error_bound = error_bound
        self.t_max = t_max
        self.eq_tol = eq_tol
        self.rng_seed = rng_seed
        self.min_dt = min_dt
        self.max_steps = max_steps
        self.outputs = outputs

    def fit(self, X, y=None):
        """Simulate model ``X`` (automaton, model file, path or built-in name)."""
        mf, t_max = self._resolve(X)
        cfg = SimConfig(
            t_max=t_max,
            max_angle=self.max_angle,
            error_bound=self.error_bound,
            eq_tol=self.eq_tol,
            rng_seed=self.rng_seed,
            max_steps=self.max_steps,
            min_dt=self.min_dt,
        )
        self.fa_ = convert_to_fa(mf.ha)
        self.trace_, self.report_ = simulate(self.fa_, cfg)
        return self


class ReferenceSimulator(_SimulatorMixin, BaseEstimator):
    """Fixed-step RK4 simulator with optional guard-crossing bisection."""

    def __init__(
        self,
        dt=1e-4,
        t_max=None,
        eq_tol=EQ_TOL,
        crossing_refinement="bisection",
        bisection_tol=1e-9,
        rng_seed=0,
        outputs=None,
    ):
        self.dt = dt
        self.t_max = t_max
        self.eq_tol = eq_tol
        self.crossing_refinement = crossing_refinement
        self.bisection_tol = bisection_tol
        self.rng_seed = rng_seed
        self.outputs = outputs

    def fit(self, X, y=None):
        mf, t_max = self._resolve(X)
        cfg = RefConfig(
            dt=self.dt,
            t_max=t_max,
            eq_tol=self.eq_tol,
            crossing_refinement=self.crossing_refinement,
            bisection_tol=self.bisection_tol,
            rng_seed=self.rng_seed,
        )
        self.trace_, self.report_ = simulate_reference(mf.ha, cfg)
        return self
