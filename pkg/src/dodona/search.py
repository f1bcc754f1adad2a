"""Meta-evaluators: rollout, exhaustive enumeration, best-first search,
and MCTS, all driving the step/resume interface.

Drivers treat a choicepoint with no choices as a dead branch (Failure),
never as an error. All probability vectors are clamped to >= 1e-9 before
taking logs so zero-probability children remain expandable as a last
resort.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

from .errors import BudgetExceededError, DodonaRuntimeError
from .interp import Choicepoint, StepBudget, Terminal, resume, step
from .reader import Expr
from .values import Env

PROB_FLOOR = 1e-9


@dataclass
class Success:
    value: object
    trace: list[int]


@dataclass
class Failure:
    pass


@dataclass
class BudgetExceeded:
    pass


# Outcome = Success | Failure | BudgetExceeded


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    choicepoints_seen: int = 0
    wall_time: float = 0.0


def _check_policy(policy, n_choices: int):
    if len(policy) != n_choices:
        raise DodonaRuntimeError(
            f"policy length {len(policy)} != number of choices {n_choices}"
        )
    if any(p < 0 for p in policy) or abs(sum(policy) - 1.0) > 1e-6:
        raise DodonaRuntimeError(f"malformed policy vector {policy}")


def rollout(program: Expr, env: Env, decide, budget: StepBudget | None = None):
    """Execute one path, asking `decide(choicepoint)` for each decision."""
    if budget is None:
        budget = StepBudget()
    trace: list[int] = []
    try:
        r = step(program, env, 0, None, budget)
        while isinstance(r, Choicepoint):
            if not r.choices:
                return Failure()
            idx = decide(r)
            if not (0 <= idx < len(r.choices)):
                raise DodonaRuntimeError(f"decide returned invalid index {idx}")
            trace.append(idx)
            r = resume(r, idx, budget)
    except BudgetExceededError:
        return BudgetExceeded()
    return Success(r.value, trace)


@dataclass
class EnumerationResult:
    outcomes: list[Success]
    truncated: bool = False  # step budget ran out before exhausting the MDP


def enumerate_outcomes(
    program: Expr,
    env: Env,
    max_results: int,
    budget: StepBudget | None = None,
) -> EnumerationResult:
    """Depth-first, choice-index-ascending enumeration of Success leaves,
    stopping after `max_results`."""
    assert max_results >= 1
    if budget is None:
        budget = StepBudget()
    out: list[Success] = []

    def walk(r, trace):
        if isinstance(r, Terminal):
            out.append(Success(r.value, list(trace)))
            return len(out) >= max_results
        for idx in range(len(r.choices)):
            trace.append(idx)
            done = walk(resume(r, idx, budget), trace)
            trace.pop()
            if done:
                return True
        return False

    try:
        walk(step(program, env, 0, None, budget), [])
    except BudgetExceededError:
        return EnumerationResult(out, truncated=True)
    return EnumerationResult(out, truncated=False)


def best_first(
    program: Expr,
    env: Env,
    score,
    node_budget: int = 10_000,
    budget: StepBudget | None = None,
):
    """Best-first search; the frontier is keyed by path log-probability
    under `score(choicepoint) -> probability vector`, ties FIFO.

    Returns (outcome, stats)."""
    if budget is None:
        budget = StepBudget()
    stats = SearchStats()
    t0 = time.monotonic()
    counter = 0
    try:
        r = step(program, env, 0, None, budget)
        if isinstance(r, Terminal):
            stats.wall_time = time.monotonic() - t0
            return Success(r.value, []), stats
        frontier = []  # (-logprob, counter, cp, trace)
        stats.choicepoints_seen += 1
        heapq.heappush(frontier, (0.0, counter, r, []))
        while frontier:
            if stats.nodes_expanded >= node_budget:
                stats.wall_time = time.monotonic() - t0
                return BudgetExceeded(), stats
            neg_lp, _, cp, trace = heapq.heappop(frontier)
            if not cp.choices:
                continue
            stats.nodes_expanded += 1
            policy = score(cp)
            _check_policy(policy, len(cp.choices))
            for idx, p in enumerate(policy):
                child = resume(cp, idx, budget)
                child_nlp = neg_lp - math.log(max(p, PROB_FLOOR))
                if isinstance(child, Terminal):
                    stats.wall_time = time.monotonic() - t0
                    return Success(child.value, trace + [idx]), stats
                stats.choicepoints_seen += 1
                if child.choices:
                    counter += 1
                    heapq.heappush(
                        frontier, (child_nlp, counter, child, trace + [idx])
                    )
        stats.wall_time = time.monotonic() - t0
        return Failure(), stats
    except BudgetExceededError:
        stats.wall_time = time.monotonic() - t0
        return BudgetExceeded(), stats


class _MctsNode:
    __slots__ = (
        "cp",
        "terminal_value",
        "children",
        "priors",
        "visits",
        "value_sum",
        "expanded",
        "solved_failed",
        "parent_value",
    )

    def __init__(self, cp=None, terminal_value=None):
        self.cp = cp
        self.terminal_value = terminal_value  # None unless Terminal leaf
        self.children: dict[int, _MctsNode] = {}
        self.priors: list[float] = []
        self.visits = 0
        self.value_sum = 0.0
        self.expanded = False
        self.solved_failed = False
        self.parent_value = 0.5

    @property
    def q(self) -> float:
        return self.value_sum / self.visits if self.visits else self.parent_value


def mcts(
    program: Expr,
    env: Env,
    oracle,
    simulations: int = 1000,
    c_puct: float = 1.0,
    budget: StepBudget | None = None,
):
    """PUCT tree search. `oracle(choicepoint) -> (policy, value in [0,1])`.
    Terminal success backs up 1, failure backs up 0; failed subtrees are
    marked solved and never re-selected. Returns (outcome, stats)."""
    if budget is None:
        budget = StepBudget()
    stats = SearchStats()
    t0 = time.monotonic()
    try:
        r = step(program, env, 0, None, budget)
        if isinstance(r, Terminal):
            stats.wall_time = time.monotonic() - t0
            return Success(r.value, []), stats
        stats.choicepoints_seen += 1
        root = _MctsNode(cp=r)
        if not r.choices:
            stats.wall_time = time.monotonic() - t0
            return Failure(), stats

        for _ in range(simulations):
            if root.solved_failed:
                break
            node = root
            path: list[tuple[_MctsNode, int]] = []
            trace: list[int] = []
            # selection / expansion
            while True:
                if node.terminal_value is not None:
                    reward = node.terminal_value
                    break
                if node.cp is not None and not node.cp.choices:
                    node.solved_failed = True
                    reward = 0.0
                    break
                if not node.expanded:
                    policy, value = oracle(node.cp)
                    _check_policy(policy, len(node.cp.choices))
                    if not 0.0 <= value <= 1.0:
                        raise DodonaRuntimeError(f"oracle value {value} outside [0,1]")
                    node.priors = [max(p, PROB_FLOOR) for p in policy]
                    node.expanded = True
                    stats.nodes_expanded += 1
                    reward = value
                    break
                sqrt_n = math.sqrt(node.visits + 1)
                best_idx, best_score = None, -math.inf
                for idx, prior in enumerate(node.priors):
                    child = node.children.get(idx)
                    if child is not None and child.solved_failed:
                        continue
                    if child is None:
                        q = node.q
                        n_child = 0
                    else:
                        q = child.q
                        n_child = child.visits
                    s = q + c_puct * prior * sqrt_n / (1 + n_child)
                    if s > best_score:
                        best_idx, best_score = idx, s
                if best_idx is None:
                    # every child is a solved failure
                    node.solved_failed = True
                    reward = 0.0
                    break
                child = node.children.get(best_idx)
                if child is None:
                    result = resume(node.cp, best_idx, budget)
                    if isinstance(result, Terminal):
                        child = _MctsNode(terminal_value=1.0)
                        child.terminal_value = 1.0
                        node.children[best_idx] = child
                        path.append((node, best_idx))
                        trace.append(best_idx)
                        stats.wall_time = time.monotonic() - t0
                        # binary reward: first success is as good as any
                        return Success(result.value, trace), stats
                    stats.choicepoints_seen += 1
                    child = _MctsNode(cp=result)
                    child.parent_value = node.q
                    node.children[best_idx] = child
                path.append((node, best_idx))
                trace.append(best_idx)
                node = child
            # backup
            node.visits += 1
            node.value_sum += reward
            for parent, _idx in reversed(path):
                parent.visits += 1
                parent.value_sum += reward
        stats.wall_time = time.monotonic() - t0
        return Failure(), stats
    except BudgetExceededError:
        stats.wall_time = time.monotonic() - t0
        return BudgetExceeded(), stats
