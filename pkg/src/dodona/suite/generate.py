"""Suite generation: enumerate episodes, run each one along its label
sequence, and record a prompt graph per decision.

Every label sequence is replayed before it is emitted: the labelled path
must reach Terminal #t and consume exactly the produced labels, so a
buggy inverter aborts generation loudly instead of yielding bad data.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import os
from dataclasses import dataclass, field

from ..errors import DodonaError
from ..graph import ChoiceGraph, VOCAB_VERSION, build_choicepoint_graph
from ..interp import Choicepoint, StepBudget, resume, run_deterministic, step
from ..prng import SplitMix64
from ..reader import Const, ListForm, Sym, read_source
from ..values import NIL, Pair, from_pylist, print_value, to_pylist
from . import DD_FILES, base_env, load_dd_source
from .families import FO_RULE_SETS, TaskSpec, all_tasks


class GenerationError(DodonaError):
    pass


@dataclass
class Datapoint:
    task_id: str
    episode: int
    decision_index: int
    num_choices: int
    correct_choice_index: int
    graph: ChoiceGraph

    def to_json_obj(self) -> dict:
        return {
            "task": self.task_id,
            "episode": self.episode,
            "decision": self.decision_index,
            "num_choices": self.num_choices,
            "correct": self.correct_choice_index,
            "graph": self.graph.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Datapoint":
        return cls(
            obj["task"],
            obj["episode"],
            obj["decision"],
            obj["num_choices"],
            obj["correct"],
            ChoiceGraph.from_json_obj(obj["graph"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))


@dataclass
class SuiteResult:
    seed: int
    max_results: int
    families: list[str]
    tasks: list[TaskSpec]
    datapoints: list[Datapoint]
    split: dict[str, list[str]]  # train/valid/test -> sorted task ids
    split_ratios: tuple[int, int, int] = (70, 10, 20)
    episodes_per_task: dict[str, int] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# rewrite-rule termination check


def _sexpr_counts(e, mvs, sym_counts, mv_counts):
    if isinstance(e, ListForm):
        for item in e.items:
            _sexpr_counts(item, mvs, sym_counts, mv_counts)
    elif isinstance(e, Sym):
        tgt = mv_counts if e.name in mvs else sym_counts
        tgt[e.name] = tgt.get(e.name, 0) + 1
    else:
        sym_counts["<const>"] = sym_counts.get("<const>", 0) + 1


def check_rule_set(rules_sexpr: str, mvs: list[str], precedence: list[str]) -> bool:
    """Sound (incomplete) termination check for leftmost-innermost
    rewriting: every rule must (a) not duplicate metavariables and
    (b) strictly decrease the symbol-count vector ordered by
    `precedence`, with total fixed-symbol count as the final tiebreak.
    Under (a), each rewrite then strictly decreases that lexicographic
    measure, so rewriting to a fixpoint terminates."""
    forms = read_source(rules_sexpr)
    if len(forms) != 1 or not isinstance(forms[0], ListForm):
        raise GenerationError("rule set must be a single list of (lhs rhs) pairs")
    mvset = set(mvs)
    for rule in forms[0].items:
        if not (isinstance(rule, ListForm) and len(rule.items) == 2):
            raise GenerationError("each rule must be an (lhs rhs) pair")
        lhs, rhs = rule.items
        lsym, lmv, rsym, rmv = {}, {}, {}, {}
        _sexpr_counts(lhs, mvset, lsym, lmv)
        _sexpr_counts(rhs, mvset, rsym, rmv)
        for name, n in rmv.items():
            if n > lmv.get(name, 0):
                return False  # introduced or duplicated metavariable
        deltas = [rsym.get(s, 0) - lsym.get(s, 0) for s in precedence]
        others = set(lsym) | set(rsym)
        deltas.append(
            sum(rsym.get(s, 0) for s in others if s not in precedence)
            - sum(lsym.get(s, 0) for s in others if s not in precedence)
        )
        for d in deltas:
            if d < 0:
                break
            if d > 0:
                return False
        else:
            return False  # no strict decrease
    return True


# ---------------------------------------------------------------------------
# episode runners


def _labeled_rollout(expr, env, labels, budget, sink):
    """Run `expr` taking the decisions in `labels`; call
    `sink(decision_index, choicepoint, label)` at each choicepoint.
    Returns the terminal value; raises GenerationError on any mismatch."""
    r = step(expr, env, 0, None, budget)
    k = 0
    while isinstance(r, Choicepoint):
        if not r.choices:
            raise GenerationError("labelled path hit a dead branch")
        if k >= len(labels):
            raise GenerationError("label sequence too short for episode")
        idx = labels[k]
        if not (0 <= idx < len(r.choices)):
            raise GenerationError(
                f"label {idx} out of range for {len(r.choices)} choices"
            )
        sink(k, r, idx)
        r = resume(r, idx, budget)
        k += 1
    if k != len(labels):
        raise GenerationError(
            f"episode consumed {k} of {len(labels)} labels"
        )
    return r.value


def _call(name, *arg_exprs):
    return ListForm([Sym(name), *arg_exprs])


def _predict_app_episodes(spec: TaskSpec, env, max_results, budget):
    from ..search import Success, enumerate_outcomes

    res = enumerate_outcomes(_call("task-gen"), env, max_results, budget)
    episodes = []
    seen = set()
    for out in res.outcomes:
        if not isinstance(out, Success):  # pragma: no cover
            continue
        pair = to_pylist(out.value)
        if len(pair) != 2:
            raise GenerationError(f"{spec.task_id}: task-gen must return (fn arg)")
        fn, arg = pair
        target = run_deterministic(
            ListForm([Const(fn), Const(arg)]), env, budget
        )
        key = (print_value(arg), print_value(target))
        if key in seen:
            continue
        seen.add(key)
        labels_v = run_deterministic(_call("task-invert", Const(target)), env, budget)
        labels = to_pylist(labels_v)
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in labels):
            raise GenerationError(f"{spec.task_id}: non-integer label in {labels}")
        expr = ListForm(
            [
                Sym("if"),
                ListForm(
                    [
                        Sym("="),
                        _call("task-output"),
                        ListForm([Const(fn), Const(arg)]),
                    ]
                ),
                Const(True),
                _call("fail"),
            ]
        )
        episodes.append((expr, labels))
    return episodes


def _build_cons_tree(path, prefix):
    if len(prefix) == len(path):
        return list(prefix) == list(path)
    return from_pylist(
        [_build_cons_tree(path, prefix + (0,)), _build_cons_tree(path, prefix + (1,))]
    )


def _build_church_expr(path, prefix):
    if len(prefix) == len(path):
        return Const(list(prefix) == list(path))
    return ListForm(
        [
            Sym("cpair"),
            _build_church_expr(path, prefix + (0,)),
            _build_church_expr(path, prefix + (1,)),
        ]
    )


def _task_stream(seed: int, task_id: str) -> SplitMix64:
    digest = hashlib.blake2b(task_id.encode(), digest_size=8).digest()
    return SplitMix64(seed).split(int.from_bytes(digest, "big"))


def _planted_episodes(spec: TaskSpec, env, seed, max_results, budget):
    depth = spec.params["depth"]
    encoding = spec.params["encoding"]
    paths = list(itertools.product((0, 1), repeat=depth))
    _task_stream(seed, spec.task_id).shuffle(paths)
    episodes = []
    for path in paths[:max_results]:
        if encoding == "cons":
            tree = _build_cons_tree(path, ())
            expr = ListForm([Sym("walk-cons"), Const(tree), Const(depth)])
        else:
            cl = run_deterministic(_build_church_expr(path, ()), env, budget)
            expr = ListForm([Sym("walk-church"), Const(cl), Const(depth)])
        episodes.append((expr, list(path)))
    return episodes


def gen_task(
    spec: TaskSpec,
    seed: int,
    max_results: int,
    budget: StepBudget | None = None,
    max_nodes: int = 20_000,
) -> list[Datapoint]:
    """Generate the datapoints for one task, replay-checking every
    episode's label sequence."""
    if budget is None:
        budget = StepBudget(10**8)
    env = base_env(budget)
    for form in read_source(spec.source):
        run_deterministic(form, env, budget)
    if spec.kind == "predict-app":
        episodes = _predict_app_episodes(spec, env, max_results, budget)
    elif spec.kind == "planted":
        episodes = _planted_episodes(spec, env, seed, max_results, budget)
    else:
        raise GenerationError(f"unknown task kind {spec.kind!r}")
    datapoints: list[Datapoint] = []
    for ep, (expr, labels) in enumerate(episodes):
        def sink(k, cp, idx, _ep=ep):
            datapoints.append(
                Datapoint(
                    spec.task_id,
                    _ep,
                    k,
                    len(cp.choices),
                    idx,
                    build_choicepoint_graph(cp, max_nodes),
                )
            )
        final = _labeled_rollout(expr, env, labels, budget, sink)
        if final is not True:
            raise GenerationError(
                f"{spec.task_id} episode {ep}: labelled path ended in "
                f"{print_value(final)}, expected #t"
            )
    return datapoints


def split_tasks(
    task_ids: list[str], seed: int, ratios: tuple[int, int, int] = (70, 10, 20)
) -> dict[str, list[str]]:
    """Deterministic task-level train/valid/test split (percentages)."""
    if sum(ratios) != 100 or any(r < 0 for r in ratios):
        raise GenerationError(f"split ratios {ratios} must be >= 0 and sum to 100")
    ids = sorted(task_ids)
    rng = SplitMix64(seed).split(0xD0D0)
    rng.shuffle(ids)
    n = len(ids)
    n_test = round(ratios[2] / 100 * n)
    n_valid = round(ratios[1] / 100 * n)
    return {
        "test": sorted(ids[:n_test]),
        "valid": sorted(ids[n_test : n_test + n_valid]),
        "train": sorted(ids[n_test + n_valid :]),
    }


def gen_suite(
    seed: int,
    families: list[str] | None = None,
    max_results: int = 50,
    split_ratios: tuple[int, int, int] = (70, 10, 20),
) -> SuiteResult:
    if families is not None and not families:
        raise GenerationError("empty family filter")
    tasks = all_tasks(families)
    for task_id, (rules, _opts) in FO_RULE_SETS.items():
        if any(t.task_id == task_id for t in tasks):
            if not check_rule_set(rules, ["?x", "?y"], ["f", "g", "h"]):
                raise GenerationError(f"{task_id}: rule set not proven terminating")
    datapoints: list[Datapoint] = []
    episodes_per_task: dict[str, int] = {}
    for spec in sorted(tasks, key=lambda t: t.task_id):
        dps = gen_task(spec, seed, max_results)
        episodes_per_task[spec.task_id] = (
            1 + max(d.episode for d in dps) if dps else 0
        )
        datapoints.extend(dps)
    datapoints.sort(key=lambda d: (d.task_id, d.episode, d.decision_index))
    split = split_tasks([t.task_id for t in tasks], seed, split_ratios)
    from .families import FAMILIES

    return SuiteResult(
        seed=seed,
        max_results=max_results,
        families=list(families) if families is not None else list(FAMILIES),
        tasks=tasks,
        datapoints=datapoints,
        split=split,
        split_ratios=tuple(split_ratios),
        episodes_per_task=episodes_per_task,
    )


# ---------------------------------------------------------------------------
# on-disk format


def _manifest(result: SuiteResult) -> dict:
    fam_of = {t.task_id: t.family for t in result.tasks}
    return {
        "seed": result.seed,
        "max_results": result.max_results,
        "families": result.families,
        "split_ratios": list(result.split_ratios),
        "vocab_version": VOCAB_VERSION,
        "tasks": [
            {
                "task_id": t.task_id,
                "family": fam_of[t.task_id],
                "kind": t.kind,
                "params": t.params,
                "episodes": result.episodes_per_task.get(t.task_id, 0),
                "datapoints": sum(
                    1 for d in result.datapoints if d.task_id == t.task_id
                ),
            }
            for t in sorted(result.tasks, key=lambda t: t.task_id)
        ],
        "split": result.split,
    }


def write_suite(result: SuiteResult, outdir: str) -> None:
    """Write suite.json, one JSONL file per split, and the `.dd` corpus."""
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "suite.json"), "w") as f:
        json.dump(_manifest(result), f, indent=2, sort_keys=True)
        f.write("\n")
    by_task: dict[str, list[Datapoint]] = {}
    for d in result.datapoints:
        by_task.setdefault(d.task_id, []).append(d)
    for split_name, ids in result.split.items():
        with open(os.path.join(outdir, f"{split_name}.jsonl"), "w") as f:
            for task_id in ids:
                for d in by_task.get(task_id, []):
                    f.write(d.to_json() + "\n")
    dd_dir = os.path.join(outdir, "dd")
    os.makedirs(dd_dir, exist_ok=True)
    for name in DD_FILES:
        with open(os.path.join(dd_dir, name), "w") as f:
            f.write(load_dd_source(name))
    for t in sorted(result.tasks, key=lambda t: t.task_id):
        with open(os.path.join(dd_dir, f"{t.task_id}.dd"), "w") as f:
            f.write(t.source)


def load_datapoints(path: str) -> list[Datapoint]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(Datapoint.from_json_obj(json.loads(line)))
    return out


def verify_suite(outdir: str) -> dict:
    """Regenerate from the manifest and check byte-identity of every
    split file. Returns a report with per-split counts."""
    with open(os.path.join(outdir, "suite.json")) as f:
        manifest = json.load(f)
    result = gen_suite(
        manifest["seed"],
        manifest["families"],
        manifest["max_results"],
        tuple(manifest.get("split_ratios", (70, 10, 20))),
    )
    fresh = _manifest(result)
    report = {"ok": True, "splits": {}, "manifest_match": fresh == manifest}
    if not report["manifest_match"]:
        report["ok"] = False
    by_task: dict[str, list[Datapoint]] = {}
    for d in result.datapoints:
        by_task.setdefault(d.task_id, []).append(d)
    for split_name, ids in result.split.items():
        expected = "".join(
            d.to_json() + "\n" for task_id in ids for d in by_task.get(task_id, [])
        )
        path = os.path.join(outdir, f"{split_name}.jsonl")
        with open(path) as f:
            actual = f.read()
        match = actual == expected
        report["splits"][split_name] = {
            "datapoints": sum(len(by_task.get(t, [])) for t in ids),
            "byte_identical": match,
        }
        if not match:
            report["ok"] = False
    return report
