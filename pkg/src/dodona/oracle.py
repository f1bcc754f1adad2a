"""Oracles and the evaluation metric.

An oracle maps a choicepoint graph to a policy over the choices plus an
optional value estimate. The remote oracle speaks newline-delimited JSON
over a child process's stdio or a TCP socket:

    request:  {"id": int, "graph": <ChoiceGraph JSON>}
    response: {"id": int, "policy": [float...], "value": float|null}
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import socket
import subprocess
import threading
from dataclasses import dataclass

from .errors import DodonaError, OracleFailure
from .graph import ChoiceGraph, build_choicepoint_graph
from .interp import Choicepoint

PROB_CLAMP = 1e-9


@dataclass
class PolicyEstimate:
    policy: list[float]
    value: float | None = None


def uniform_policy(n: int) -> PolicyEstimate:
    if n < 1:
        raise DodonaError("cannot form a policy over zero choices")
    return PolicyEstimate([1.0 / n] * n, 0.5)


class UniformOracle:
    """Baseline oracle: 1/n on every choice, value 0.5."""

    def estimate(self, graph: ChoiceGraph) -> PolicyEstimate:
        return uniform_policy(len(graph.choice_node_ids))

    # choicepoint-level adapters used by the search drivers
    def cp_score(self, cp: Choicepoint) -> list[float]:
        return uniform_policy(len(cp.choices)).policy

    def cp_estimate(self, cp: Choicepoint):
        est = uniform_policy(len(cp.choices))
        return est.policy, est.value


def as_cp_oracle(oracle, fallback_uniform: bool = True):
    """Adapt a graph-level oracle into the `cp -> (policy, value)` shape
    the search drivers expect; oracle failures substitute uniform."""

    failures = []

    def call(cp: Choicepoint):
        graph = build_choicepoint_graph(cp)
        try:
            est = oracle.estimate(graph)
        except OracleFailure as exc:
            if not fallback_uniform:
                raise
            failures.append(str(exc))
            est = uniform_policy(len(cp.choices))
        if len(est.policy) != len(cp.choices):
            raise OracleFailure(
                f"policy length {len(est.policy)} != {len(cp.choices)} choices"
            )
        value = 0.5 if est.value is None else est.value
        return est.policy, value

    call.failures = failures
    return call


# ---------------------------------------------------------------------------
# Metric


def nll_metric(datapoints, oracle) -> dict[str, dict]:
    """Per-task log(uniformLoss / actualLoss), natural logs throughout.

    `datapoints` yield objects with .task_id, .num_choices,
    .correct_choice_index and .graph (a ChoiceGraph). Decisions with a
    single choice are forced moves and excluded from both losses.
    """
    per_task: dict[str, list[tuple[float, float]]] = {}
    for dp in datapoints:
        if dp.num_choices < 2:
            continue
        est = oracle.estimate(dp.graph)
        if len(est.policy) != dp.num_choices:
            raise OracleFailure("policy length mismatch in metric computation")
        p = min(max(est.policy[dp.correct_choice_index], PROB_CLAMP), 1.0)
        per_task.setdefault(dp.task_id, []).append(
            (-math.log(p), math.log(dp.num_choices))
        )
    if not per_task:
        raise DodonaError("no scorable datapoints (all forced moves?)")
    report = {}
    for task_id, losses in sorted(per_task.items()):
        actual = sum(a for a, _ in losses) / len(losses)
        uniform = sum(u for _, u in losses) / len(losses)
        metric = math.log(uniform / actual) if actual > 0 else math.inf
        report[task_id] = {
            "metric": metric,
            "actual_loss": actual,
            "uniform_loss": uniform,
            "datapoints": len(losses),
        }
    return report


# ---------------------------------------------------------------------------
# Remote oracle


class _LineTransport:
    def send_line(self, line: str):
        raise NotImplementedError

    def recv_line(self, timeout: float) -> str:
        raise NotImplementedError

    def close(self):
        pass


class _ProcessTransport(_LineTransport):
    def __init__(self, command: str):
        self.proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._queue: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self.proc.stdout:
            self._queue.put(line)
        self._queue.put(None)

    def send_line(self, line: str):
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise OracleFailure(f"oracle process closed its stdin: {exc}")

    def recv_line(self, timeout: float) -> str:
        try:
            line = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise OracleFailure(f"oracle response timed out after {timeout}s")
        if line is None:
            raise OracleFailure("oracle process closed its stdout")
        return line

    def close(self):
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class _TcpTransport(_LineTransport):
    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port), timeout=30)
        self.rfile = self.sock.makefile("r")

    def send_line(self, line: str):
        try:
            self.sock.sendall((line + "\n").encode("utf-8"))
        except OSError as exc:
            raise OracleFailure(f"oracle socket error: {exc}")

    def recv_line(self, timeout: float) -> str:
        self.sock.settimeout(timeout)
        try:
            line = self.rfile.readline()
        except OSError as exc:
            raise OracleFailure(f"oracle socket error: {exc}")
        if not line:
            raise OracleFailure("oracle closed the connection")
        return line

    def close(self):
        self.sock.close()


class RemoteOracle:
    """Adapter speaking the wire protocol; tolerates out-of-order
    responses by parking them until their id is requested."""

    def __init__(self, transport: _LineTransport, timeout: float = 30.0):
        self.transport = transport
        self.timeout = timeout
        self._next_id = 0
        self._parked: dict[int, dict] = {}

    @classmethod
    def exec(cls, command: str, timeout: float = 30.0) -> "RemoteOracle":
        return cls(_ProcessTransport(command), timeout)

    @classmethod
    def tcp(cls, host: str, port: int, timeout: float = 30.0) -> "RemoteOracle":
        return cls(_TcpTransport(host, port), timeout)

    def estimate(self, graph: ChoiceGraph) -> PolicyEstimate:
        req_id = self._next_id
        self._next_id += 1
        self.transport.send_line(
            json.dumps({"id": req_id, "graph": graph.to_json_obj()}, separators=(",", ":"))
        )
        resp = self._await(req_id)
        policy = resp.get("policy")
        if not isinstance(policy, list) or len(policy) != len(graph.choice_node_ids):
            raise OracleFailure(
                f"bad policy in oracle response for request {req_id}: {policy!r}"
            )
        if abs(sum(policy) - 1.0) > 1e-6 or any(p < 0 for p in policy):
            raise OracleFailure(f"policy does not form a distribution: {policy!r}")
        value = resp.get("value")
        if value is not None and not (0.0 <= value <= 1.0):
            raise OracleFailure(f"oracle value {value} outside [0,1]")
        return PolicyEstimate(policy, value)

    def _await(self, req_id: int) -> dict:
        if req_id in self._parked:
            return self._parked.pop(req_id)
        while True:
            line = self.transport.recv_line(self.timeout)
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise OracleFailure(f"malformed oracle response line: {exc}")
            if obj.get("error"):
                raise OracleFailure(f"oracle error response: {obj['error']}")
            rid = obj.get("id")
            if rid == req_id:
                return obj
            self._parked[rid] = obj

    def close(self):
        self.transport.close()
