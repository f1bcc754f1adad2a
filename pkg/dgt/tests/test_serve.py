import json
import socket
import subprocess
import sys
import threading

import pytest
import torch

from dgt_oracle import DGT, DGTConfig, EDGE_TYPES, Vocab, load_dataset, save_checkpoint
from dgt_oracle.serve import Server
from dgt_oracle.train import load_checkpoint


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory, dataset_dir):
    """A freshly initialized (untrained) model saved over the dataset's
    vocabulary — protocol conformance does not require training."""
    ds = load_dataset(str(dataset_dir))
    vocab = Vocab.build(ds["train"])
    torch.manual_seed(0)
    cfg = DGTConfig(
        layers=2, dim=32, heads=4, head_dim=8,
        num_edge_types=len(EDGE_TYPES), vocab_size=len(vocab),
    )
    model = DGT(cfg).eval()
    path = tmp_path_factory.mktemp("ckpt") / "checkpoint.pt"
    save_checkpoint(str(path), model, vocab)
    return path


@pytest.fixture(scope="module")
def requests_from_dataset(dataset_dir):
    reqs = []
    with open(dataset_dir / "train.jsonl") as f:
        for i, line in enumerate(f):
            if i >= 10:
                break
            obj = json.loads(line)
            reqs.append(
                {"id": i, "graph": obj["graph"], "choices": obj["num_choices"]}
            )
    return reqs


def spawn_stdio(checkpoint):
    return subprocess.Popen(
        [sys.executable, "-m", "dgt_oracle.serve", str(checkpoint)],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )


class TestStdio:
    def test_pipelined_requests_one_response_each(self, checkpoint, requests_from_dataset):
        proc = spawn_stdio(checkpoint)
        try:
            for r in requests_from_dataset:
                proc.stdin.write(
                    json.dumps({"id": r["id"], "graph": r["graph"]}) + "\n"
                )
            proc.stdin.flush()
            seen = {}
            for _ in requests_from_dataset:
                resp = json.loads(proc.stdout.readline())
                seen[resp["id"]] = resp
            for r in requests_from_dataset:
                resp = seen[r["id"]]
                assert len(resp["policy"]) == r["choices"]
                assert abs(sum(resp["policy"]) - 1.0) <= 1e-6
                assert 0.0 <= resp["value"] <= 1.0
        finally:
            proc.kill()

    def test_malformed_line_keeps_process_alive(self, checkpoint, requests_from_dataset):
        proc = spawn_stdio(checkpoint)
        try:
            good = {"id": 5, "graph": requests_from_dataset[0]["graph"]}
            proc.stdin.write("this is not json\n")
            proc.stdin.write(json.dumps({"id": 9, "graph": 42}) + "\n")
            proc.stdin.write(json.dumps(good) + "\n")
            proc.stdin.flush()
            r1 = json.loads(proc.stdout.readline())
            assert r1["id"] is None and "error" in r1
            r2 = json.loads(proc.stdout.readline())
            assert r2["id"] == 9 and "error" in r2
            r3 = json.loads(proc.stdout.readline())
            assert r3["id"] == 5 and "policy" in r3
        finally:
            proc.kill()

    def test_unknown_edge_type_is_error_response(self, checkpoint, requests_from_dataset):
        graph = json.loads(json.dumps(requests_from_dataset[0]["graph"]))
        graph["edges"][0][2] = "NO-SUCH-EDGE"
        proc = spawn_stdio(checkpoint)
        try:
            proc.stdin.write(json.dumps({"id": 1, "graph": graph}) + "\n")
            proc.stdin.flush()
            resp = json.loads(proc.stdout.readline())
            assert resp["id"] == 1 and "error" in resp
        finally:
            proc.kill()

    def test_deterministic_across_restarts(self, checkpoint, requests_from_dataset):
        req = json.dumps({"id": 0, "graph": requests_from_dataset[0]["graph"]}) + "\n"
        policies = []
        for _ in range(2):
            proc = spawn_stdio(checkpoint)
            try:
                proc.stdin.write(req)
                proc.stdin.flush()
                policies.append(json.loads(proc.stdout.readline())["policy"])
            finally:
                proc.kill()
        assert all(
            abs(a - b) <= 1e-6 for a, b in zip(policies[0], policies[1])
        )


def test_tcp_transport(checkpoint, requests_from_dataset):
    model, vocab = load_checkpoint(str(checkpoint))
    server = Server(model, vocab)
    addr_box = {}
    ready = threading.Event()

    def run():
        server.run_tcp(
            "127.0.0.1", 0,
            ready=lambda a: (addr_box.update(addr=a), ready.set()),
        )

    t = threading.Thread(target=run, daemon=True)
    t.start()
    assert ready.wait(10)
    host, port = addr_box["addr"]
    with socket.create_connection((host, port), timeout=10) as sock:
        f = sock.makefile("rw")
        for r in requests_from_dataset[:3]:
            f.write(json.dumps({"id": r["id"], "graph": r["graph"]}) + "\n")
        f.flush()
        for r in requests_from_dataset[:3]:
            resp = json.loads(f.readline())
            assert resp["id"] == r["id"]
            assert len(resp["policy"]) == r["choices"]


def test_end_to_end_eval_via_generator_cli(checkpoint, dataset_dir, tmp_path):
    """The evaluator consumes this server purely over the wire protocol."""
    cmd = f"exec:{sys.executable} -m dgt_oracle.serve {checkpoint}"
    r = subprocess.run(
        [
            sys.executable, "-m", "dodona.cli", "eval",
            "--data", str(dataset_dir),
            "--oracle", cmd,
            "--out", str(tmp_path / "ev"),
        ],
        capture_output=True,
        text=True,
        timeout=600,
    )
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    assert "mean_metric" in out
    assert (tmp_path / "ev" / "report.csv").exists()
