"""Synthetic task suite: eight families of predict-the-application and
planted-path tasks, with exhaustively generated, replay-checked labels."""

from importlib import resources

from ..interp import StepBudget, load_forms
from ..reader import read_source
from ..values import Env, make_global_env

DD_FILES = ["stdlib.dd", "prelude.dd", "rewriting.dd", "lambda.dd"]


def load_dd_source(name: str) -> str:
    return (resources.files(__package__) / "dd" / name).read_text()


def base_env(budget: StepBudget | None = None) -> Env:
    """A fresh global environment with the suite library loaded."""
    env = make_global_env()
    for name in DD_FILES:
        load_forms(read_source(load_dd_source(name)), env, budget)
    return env


from .families import FAMILIES, TaskSpec, all_tasks  # noqa: E402
from .generate import (  # noqa: E402
    Datapoint,
    GenerationError,
    SuiteResult,
    gen_suite,
    load_datapoints,
    split_tasks,
    verify_suite,
    write_suite,
)

__all__ = [
    "DD_FILES",
    "FAMILIES",
    "TaskSpec",
    "all_tasks",
    "base_env",
    "load_dd_source",
    "Datapoint",
    "GenerationError",
    "SuiteResult",
    "gen_suite",
    "load_datapoints",
    "split_tasks",
    "verify_suite",
    "write_suite",
]
