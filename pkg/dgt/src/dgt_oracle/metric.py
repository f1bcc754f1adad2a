"""Per-task evaluation metric: log(uniformLoss / actualLoss).

Natural logarithms throughout. For each decision the actual loss is
-log p(correct choice) and the uniform loss is log(numChoices); both are
averaged per task and the metric is the log of their ratio, so 0 means
"no better than uniform" and positive means better. Forced moves (a
single choice) carry no information and are excluded.
"""

from __future__ import annotations

import math

PROB_CLAMP = 1e-9


def per_task_metric(records) -> dict[str, dict]:
    """`records` yields (task_id, num_choices, p_correct) triples."""
    per_task: dict[str, list[tuple[float, float]]] = {}
    for task_id, num_choices, p in records:
        if num_choices < 2:
            continue
        p = min(max(p, PROB_CLAMP), 1.0)
        per_task.setdefault(task_id, []).append(
            (-math.log(p), math.log(num_choices))
        )
    report = {}
    for task_id, losses in sorted(per_task.items()):
        actual = sum(a for a, _ in losses) / len(losses)
        uniform = sum(u for _, u in losses) / len(losses)
        report[task_id] = {
            "metric": math.log(uniform / actual) if actual > 0 else math.inf,
            "datapoints": len(losses),
        }
    return report


def mean_metric(report: dict[str, dict]) -> float:
    if not report:
        raise ValueError("no tasks in report")
    return sum(r["metric"] for r in report.values()) / len(report)
