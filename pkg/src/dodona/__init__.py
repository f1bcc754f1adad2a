"""Dodona: oracle-guided decision programming.

Programs in a small Scheme dialect denote binary deterministic MDPs via a
`choose` primitive; the interpreter reifies every decision point as a
resumable choicepoint with an embeddable continuation.
"""

from .errors import (
    BudgetExceededError,
    DodonaError,
    DodonaRuntimeError,
    GraphTooLargeError,
    LexError,
    OracleFailure,
    ParseError,
)
from .graph import ChoiceGraph, build_choicepoint_graph
from .interp import (
    Choicepoint,
    Segment,
    StepBudget,
    Terminal,
    resume,
    run_deterministic,
    step,
)
from .reader import expand_sugar, parse, print_expr, read_source, tokenize
from .search import (
    BudgetExceeded,
    Failure,
    SearchStats,
    Success,
    best_first,
    enumerate_outcomes,
    mcts,
    rollout,
)
from .values import Env, make_global_env, print_value, values_equal

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
