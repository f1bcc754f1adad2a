"""Serve a trained model over the oracle wire protocol.

Newline-delimited JSON, one response per request, matched by id:

    request:  {"id": int, "graph": {"nodes": [...], "edges": [[src,dst,type],...],
                                    "choices": [...], "root": int}}
    response: {"id": int, "policy": [float...], "value": float}

A malformed request line yields an error response carrying the same id
(or null if no id could be recovered) and the process stays alive.
Requests may be pipelined; they are answered in arrival order.
"""

from __future__ import annotations

import argparse
import json
import socket
import socketserver
import sys
import threading

import torch

from .data import GraphExample, Vocab, collate
from .model import DGT
from .train import load_checkpoint


class Server:
    def __init__(self, model: DGT, vocab: Vocab):
        self.model = model
        self.vocab = vocab
        self.lock = threading.Lock()
        torch.manual_seed(0)

    @torch.no_grad()
    def answer(self, graph_obj: dict) -> tuple[list[float], float]:
        ex = GraphExample.from_json_obj({"graph": graph_obj, "correct": 0})
        if not ex.choice_ids:
            raise ValueError("graph has no choice nodes")
        with self.lock:
            batch = collate([ex], self.vocab)
            logits, value = self.model(batch)
            policy = torch.softmax(logits, dim=-1)[0].tolist()
        return policy, float(value[0].item())

    def handle_line(self, line: str) -> str:
        req_id = None
        try:
            obj = json.loads(line)
            if isinstance(obj, dict):
                req_id = obj.get("id")
            policy, value = self.answer(obj["graph"])
            resp = {"id": req_id, "policy": policy, "value": value}
        except Exception as exc:  # noqa: BLE001 - the process must stay alive
            resp = {"id": req_id, "error": f"{type(exc).__name__}: {exc}"}
        return json.dumps(resp, separators=(",", ":"))

    def run_stdio(self):
        for line in sys.stdin:
            line = line.strip()
            if not line:
                continue
            sys.stdout.write(self.handle_line(line) + "\n")
            sys.stdout.flush()

    def run_tcp(self, host: str, port: int, ready=None):
        server_self = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                for raw in self.rfile:
                    line = raw.decode().strip()
                    if not line:
                        continue
                    self.wfile.write(
                        (server_self.handle_line(line) + "\n").encode()
                    )
                    self.wfile.flush()

        class TCP(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        with TCP((host, port), Handler) as srv:
            if ready is not None:
                ready(srv.server_address)
            print(f"listening on {srv.server_address[0]}:{srv.server_address[1]}",
                  file=sys.stderr, flush=True)
            srv.serve_forever()


def main(argv=None):
    p = argparse.ArgumentParser(prog="dgt-serve")
    p.add_argument("checkpoint")
    p.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7333)
    args = p.parse_args(argv)
    model, vocab = load_checkpoint(args.checkpoint)
    server = Server(model, vocab)
    if args.transport == "stdio":
        server.run_stdio()
    else:
        server.run_tcp(args.host, args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
