"""Dataset loading, vocabulary, and batching for choicepoint graphs.

The on-disk format is the one produced by `dodona gen`: a `suite.json`
manifest plus `train.jsonl` / `valid.jsonl` / `test.jsonl`, where each line
is {"task","episode","decision","num_choices","correct","graph"} and the
graph is {"nodes": [token,...], "edges": [[src,dst,type],...],
"choices": [node-id,...], "root": id}.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources

import torch

with resources.files("dgt_oracle").joinpath("vocab.json").open() as _f:
    _VOCAB_FILE = json.load(_f)

VOCAB_VERSION: str = _VOCAB_FILE["version"]
EDGE_TYPES: list[str] = _VOCAB_FILE["edge_types"]
RESERVED_TOKENS: list[str] = _VOCAB_FILE["reserved_tokens"]
EDGE_TYPE_ID = {name: i for i, name in enumerate(EDGE_TYPES)}

UNK = "<UNK>"


class DataError(Exception):
    pass


class Vocab:
    """Token vocabulary: the reserved protocol tokens first, then every
    other token observed in the training data, then the unknown marker."""

    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}
        self.unk_id = self.index[UNK]

    def __len__(self):
        return len(self.tokens)

    def encode(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    @classmethod
    def build(cls, examples: list["GraphExample"]) -> "Vocab":
        extra = set()
        for ex in examples:
            extra.update(ex.tokens)
        extra.difference_update(RESERVED_TOKENS)
        return cls(RESERVED_TOKENS + sorted(extra) + [UNK])


@dataclass
class GraphExample:
    task_id: str
    tokens: list[str]
    edges: list[tuple[int, int, int]]  # (src, dst, edge-type id)
    choice_ids: list[int]
    correct: int

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GraphExample":
        g = obj["graph"]
        edges = []
        for src, dst, name in g["edges"]:
            if name not in EDGE_TYPE_ID:
                raise DataError(f"unknown edge type {name!r}")
            edges.append((src, dst, EDGE_TYPE_ID[name]))
        return cls(
            task_id=obj.get("task", ""),
            tokens=list(g["nodes"]),
            edges=edges,
            choice_ids=list(g["choices"]),
            correct=obj.get("correct", -1),
        )


def load_split(path: str) -> list[GraphExample]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(GraphExample.from_json_obj(json.loads(line)))
    return out


def load_dataset(data_dir: str) -> dict:
    """Load a generated suite directory. Aborts on vocabulary-version
    mismatch or a missing manifest."""
    manifest_path = os.path.join(data_dir, "suite.json")
    if not os.path.exists(manifest_path):
        raise DataError(f"no suite.json in {data_dir}")
    with open(manifest_path) as f:
        manifest = json.load(f)
    if str(manifest.get("vocab_version")) != VOCAB_VERSION:
        raise DataError(
            f"dataset vocab_version {manifest.get('vocab_version')!r} != "
            f"supported {VOCAB_VERSION!r}"
        )
    splits = {}
    for name in ("train", "valid", "test"):
        path = os.path.join(data_dir, f"{name}.jsonl")
        splits[name] = load_split(path) if os.path.exists(path) else []
    return {"manifest": manifest, **splits}


@dataclass
class BatchedGraph:
    """Padded batch. Padding positions are masked out of attention and
    loss; edge indices only reference real nodes."""

    tokens: torch.Tensor  # (B, N) long
    mask: torch.Tensor  # (B, N) bool, True = real node
    edge_batch: torch.Tensor  # (E,) long
    edge_src: torch.Tensor  # (E,) long
    edge_dst: torch.Tensor  # (E,) long
    edge_type: torch.Tensor  # (E,) long
    choice_nodes: torch.Tensor  # (B, C) long, padded with 0
    choice_mask: torch.Tensor  # (B, C) bool
    labels: torch.Tensor  # (B,) long; -1 when unlabeled
    task_ids: list[str]


def collate(
    examples: list[GraphExample], vocab: Vocab, device="cpu"
) -> BatchedGraph:
    if not examples:
        raise DataError("empty batch")
    B = len(examples)
    N = max(len(ex.tokens) for ex in examples)
    C = max(len(ex.choice_ids) for ex in examples)
    tokens = torch.zeros((B, N), dtype=torch.long)
    mask = torch.zeros((B, N), dtype=torch.bool)
    choice_nodes = torch.zeros((B, C), dtype=torch.long)
    choice_mask = torch.zeros((B, C), dtype=torch.bool)
    labels = torch.full((B,), -1, dtype=torch.long)
    eb, es, ed, et = [], [], [], []
    for b, ex in enumerate(examples):
        n = len(ex.tokens)
        tokens[b, :n] = torch.tensor(
            [vocab.encode(t) for t in ex.tokens], dtype=torch.long
        )
        mask[b, :n] = True
        for src, dst, t in ex.edges:
            if not (0 <= src < n and 0 <= dst < n):
                raise DataError(f"edge ({src},{dst}) out of range for {n} nodes")
            eb.append(b)
            es.append(src)
            ed.append(dst)
            et.append(t)
        for c, node in enumerate(ex.choice_ids):
            choice_nodes[b, c] = node
            choice_mask[b, c] = True
        labels[b] = ex.correct
    mk = lambda xs: torch.tensor(xs, dtype=torch.long, device=device)
    return BatchedGraph(
        tokens=tokens.to(device),
        mask=mask.to(device),
        edge_batch=mk(eb),
        edge_src=mk(es),
        edge_dst=mk(ed),
        edge_type=mk(et),
        choice_nodes=choice_nodes.to(device),
        choice_mask=choice_mask.to(device),
        labels=labels.to(device),
        task_ids=[ex.task_id for ex in examples],
    )
