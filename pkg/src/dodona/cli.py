"""Command-line entry points.

Subcommands:

    dodona run FILE      execute one path through a program
    dodona search FILE   best-first or MCTS search for a Success
    dodona gen           generate the synthetic task suite
    dodona eval          score an oracle on a generated dataset

Every subcommand writes a manifest.json (full run configuration, git
revision, vocabulary version) into the output directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys

from .errors import (
    BudgetExceededError,
    DodonaError,
    DodonaRuntimeError,
    LexError,
    OracleFailure,
    ParseError,
)
from .interp import StepBudget, run_deterministic
from .oracle import (
    PolicyEstimate,
    RemoteOracle,
    UniformOracle,
    as_cp_oracle,
    nll_metric,
    uniform_policy,
)
from .reader import print_expr, read_source
from .search import BudgetExceeded, Failure, Success, best_first, mcts, rollout
from .suite import base_env, gen_suite
from .suite.generate import load_datapoints, verify_suite, write_suite
from .values import print_value

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_RUNTIME = 3
EXIT_FAILURE = 4
EXIT_BUDGET = 5
EXIT_ORACLE = 6


def _git_revision() -> str:
    try:
        return (
            subprocess.run(
                ["git", "rev-parse", "HEAD"],
                capture_output=True,
                text=True,
                cwd=os.path.dirname(os.path.abspath(__file__)),
                timeout=10,
            ).stdout.strip()
            or "unknown"
        )
    except OSError:  # pragma: no cover
        return "unknown"


def write_manifest(outdir: str, config: dict) -> None:
    from .graph import VOCAB_VERSION

    os.makedirs(outdir, exist_ok=True)
    manifest = {
        "config": config,
        "git_revision": _git_revision(),
        "vocab_version": VOCAB_VERSION,
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_program(path: str, budget: StepBudget):
    """Load a source file: all forms but the last run deterministically
    as setup; the last form is the program."""
    with open(path) as f:
        forms = read_source(f.read())
    if not forms:
        raise ParseError("empty source file")
    env = base_env(budget)
    for form in forms[:-1]:
        run_deterministic(form, env, budget)
    return forms[-1], env


def _make_oracle(endpoint: str):
    if endpoint == "uniform":
        return UniformOracle()
    if endpoint.startswith("exec:"):
        return RemoteOracle.exec(endpoint[len("exec:") :])
    if endpoint.startswith("tcp:"):
        host, _, port = endpoint[len("tcp:") :].rpartition(":")
        if not host:
            raise DodonaError(f"malformed tcp endpoint {endpoint!r}")
        return RemoteOracle.tcp(host, int(port))
    raise DodonaError(
        f"unknown oracle {endpoint!r}; expected uniform, exec:<cmd>, or tcp:<host:port>"
    )


def _run_config(args) -> dict:
    cfg = {"subcommand": args.command}
    for key in (
        "file",
        "policy",
        "algo",
        "oracle",
        "seed",
        "max_results",
        "families",
        "budget_steps",
        "budget_nodes",
        "simulations",
        "out",
        "split",
        "data",
        "split_file",
        "verify",
    ):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    budget = StepBudget(args.budget_steps) if args.budget_steps else StepBudget()
    program, env = _load_program(args.file, budget)
    if args.policy == "first":
        decide = lambda cp: 0  # noqa: E731
    elif args.policy == "last":
        decide = lambda cp: len(cp.choices) - 1  # noqa: E731
    else:
        try:
            indices = [int(x) for x in args.policy.split(",")]
        except ValueError:
            raise DodonaError(
                f"--policy must be first, last, or comma-separated indices, "
                f"got {args.policy!r}"
            )
        it = iter(indices)

        def decide(cp):
            try:
                return next(it)
            except StopIteration:
                raise DodonaRuntimeError("policy index list exhausted")

    outcome = rollout(program, env, decide, budget)
    write_manifest(args.out, _run_config(args))
    if isinstance(outcome, Success):
        print(print_value(outcome.value))
        print("trace:", json.dumps(outcome.trace))
        return EXIT_OK
    if isinstance(outcome, Failure):
        print("failure", file=sys.stderr)
        return EXIT_FAILURE
    print("budget exceeded", file=sys.stderr)
    return EXIT_BUDGET


def cmd_search(args) -> int:
    budget = StepBudget(args.budget_steps) if args.budget_steps else StepBudget()
    program, env = _load_program(args.file, budget)
    oracle = _make_oracle(args.oracle)
    cp_oracle = as_cp_oracle(oracle)
    if args.algo == "bfs":
        outcome, stats = best_first(
            program,
            env,
            lambda cp: cp_oracle(cp)[0],
            node_budget=args.budget_nodes,
            budget=budget,
        )
    else:
        outcome, stats = mcts(
            program, env, cp_oracle, simulations=args.simulations, budget=budget
        )
    write_manifest(args.out, _run_config(args))
    report = {
        "algo": args.algo,
        "outcome": type(outcome).__name__.lower(),
        "stats": {
            "nodes_expanded": stats.nodes_expanded,
            "choicepoints_seen": stats.choicepoints_seen,
            "wall_time": stats.wall_time,
        },
        "oracle_failures": len(cp_oracle.failures),
    }
    if isinstance(outcome, Success):
        report["value"] = print_value(outcome.value)
        report["trace"] = outcome.trace
    print(json.dumps(report))
    if isinstance(outcome, Success):
        return EXIT_OK
    if isinstance(outcome, Failure):
        return EXIT_FAILURE
    return EXIT_BUDGET


def cmd_gen(args) -> int:
    families = None
    if args.families is not None:
        families = [f for f in args.families.split(",") if f]
    ratios = tuple(int(x) for x in args.split.split(","))
    if len(ratios) != 3:
        raise DodonaError(f"--split must be three percentages, got {args.split!r}")
    result = gen_suite(
        args.seed, families, max_results=args.max_results, split_ratios=ratios
    )
    write_suite(result, args.out)
    write_manifest(args.out, _run_config(args))
    print(
        json.dumps(
            {
                "tasks": len(result.tasks),
                "datapoints": len(result.datapoints),
                "out": args.out,
            }
        )
    )
    return EXIT_OK


class _CountingOracle:
    """Per-datapoint failure isolation: a failing estimate falls back to
    uniform and is counted; the caller enforces the abort threshold."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0
        self.failures = 0

    def estimate(self, graph) -> PolicyEstimate:
        self.calls += 1
        try:
            return self.inner.estimate(graph)
        except OracleFailure as exc:
            self.failures += 1
            print(f"oracle failure: {exc}", file=sys.stderr)
            return uniform_policy(len(graph.choice_node_ids))


def _svg_bar_chart(report: dict, families: dict[str, str]) -> str:
    rows = sorted(report.items())
    bar_h, gap, label_w, half_w = 18, 4, 220, 180
    width = label_w + 2 * half_w + 20
    height = (bar_h + gap) * len(rows) + 30
    max_abs = max((abs(r["metric"]) for _, r in rows), default=1.0)
    if max_abs == 0 or not math.isfinite(max_abs):
        max_abs = 1.0
    cx = label_w + half_w
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="12">',
        f'<line x1="{cx}" y1="10" x2="{cx}" y2="{height - 20}" stroke="#888"/>',
    ]
    y = 10
    for task_id, r in rows:
        m = r["metric"]
        w = 0 if not math.isfinite(m) else abs(m) / max_abs * half_w
        color = "green" if m >= 0 else "red"
        x = cx if m >= 0 else cx - w
        parts.append(
            f'<text x="5" y="{y + bar_h - 5}">{task_id} ({families.get(task_id, "?")})</text>'
        )
        parts.append(
            f'<rect x="{x:.2f}" y="{y}" width="{w:.2f}" height="{bar_h}" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{cx + half_w + 4}" y="{y + bar_h - 5}">{m:+.3f}</text>'
        )
        y += bar_h + gap
    parts.append("</svg>")
    return "\n".join(parts)


def cmd_eval(args) -> int:
    suite_path = os.path.join(args.data, "suite.json")
    if not os.path.exists(suite_path):
        raise DodonaError(f"no suite.json in {args.data!r}")
    with open(suite_path) as f:
        suite_manifest = json.load(f)
    if args.verify:
        vr = verify_suite(args.data)
        if not vr["ok"]:
            raise DodonaError(f"dataset verification failed: {json.dumps(vr)}")
    datapoints = load_datapoints(os.path.join(args.data, args.split_file))
    if not datapoints:
        raise DodonaError(f"no datapoints in {args.split_file}")
    for d in datapoints:
        if d.num_choices != len(d.graph.choice_node_ids):
            raise DodonaError(
                f"corrupt datapoint {d.task_id}/{d.episode}/{d.decision_index}"
            )
    oracle = _CountingOracle(_make_oracle(args.oracle))
    report = nll_metric(datapoints, oracle)
    if oracle.calls and oracle.failures / oracle.calls > 0.01:
        print(
            f"aborting: {oracle.failures}/{oracle.calls} oracle calls failed",
            file=sys.stderr,
        )
        return EXIT_ORACLE
    families = {t["task_id"]: t["family"] for t in suite_manifest["tasks"]}
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.csv"), "w") as f:
        f.write("task_id,family,metric,datapoints\n")
        for task_id, r in sorted(report.items()):
            f.write(
                f"{task_id},{families.get(task_id, '?')},"
                f"{r['metric']:.6f},{r['datapoints']}\n"
            )
    with open(os.path.join(args.out, "report.svg"), "w") as f:
        f.write(_svg_bar_chart(report, families))
        f.write("\n")
    write_manifest(args.out, _run_config(args))
    print(
        json.dumps(
            {
                "tasks": len(report),
                "mean_metric": sum(r["metric"] for r in report.values()) / len(report),
                "oracle_failures": oracle.failures,
                "out": args.out,
            }
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dodona", description="Oracle-guided decision programming."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--budget-steps", type=int, default=None)
        p.add_argument("--out", default="dodona-out")

    p_run = sub.add_parser("run", help="execute one path through a program")
    p_run.add_argument("file")
    p_run.add_argument(
        "--policy",
        default="first",
        help="first, last, or comma-separated choice indices",
    )
    common(p_run)

    p_search = sub.add_parser("search", help="search for a Success outcome")
    p_search.add_argument("file")
    p_search.add_argument("--algo", choices=["bfs", "mcts"], default="bfs")
    p_search.add_argument("--oracle", default="uniform")
    p_search.add_argument("--budget-nodes", type=int, default=10_000)
    p_search.add_argument("--simulations", type=int, default=1000)
    common(p_search)

    p_gen = sub.add_parser("gen", help="generate the synthetic task suite")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--families", default=None, help="comma-separated filter")
    p_gen.add_argument("--max-results", type=int, default=50)
    p_gen.add_argument("--split", default="70,10,20")
    common(p_gen)

    p_eval = sub.add_parser("eval", help="score an oracle on a dataset")
    p_eval.add_argument("--data", required=True, help="directory written by gen")
    p_eval.add_argument("--oracle", default="uniform")
    p_eval.add_argument(
        "--split-file", default="test.jsonl", help="which split to score"
    )
    p_eval.add_argument(
        "--verify",
        action="store_true",
        help="regenerate the dataset and require byte-identity first",
    )
    common(p_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "run": cmd_run,
        "search": cmd_search,
        "gen": cmd_gen,
        "eval": cmd_eval,
    }[args.command]
    try:
        return handler(args)
    except (LexError, ParseError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetExceededError:
        print("budget exceeded", file=sys.stderr)
        return EXIT_BUDGET
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (DodonaRuntimeError, DodonaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
