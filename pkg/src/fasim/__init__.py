"""Hybrid automaton simulation by angular stepping on the unit circle."""
from .errors import (
    FASimError,
    InvariantViolated,
    NotStaticallyInvertible,
    ParseError,
    StepUnderflow,
    ValidationError,
)
from .estimators import FASimulator, ReferenceSimulator
from .expr import evaluate, free_variables, is_constant, parse_expr
from .metrics import ComparisonResult, compare, correlate, pearson, resample
from .model import (
    Comparison,
    Edge,
    HybridAutomaton,
    Location,
    Predicate,
    apply_reset,
    evaluate_guard,
    validate,
)
from .modelfile import load_model, parse_model, parse_model_text
from .reference import RefConfig, simulate_naive, simulate_reference
from .simulate import SimConfig, simulate
from .trace import RunReport, SimState, Trace
from .translate import FrequencyAutomaton, convert_to_fa

__version__ = "0.1.0"
