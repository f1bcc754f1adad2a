"""Training loop: cross-entropy on the correct choice, per-epoch
validation metric, patience-based early stopping, checkpoint plus a
training-curve CSV."""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import time

import torch
import torch.nn.functional as F

from .config import DGTConfig
from .data import (
    EDGE_TYPES,
    VOCAB_VERSION,
    BatchedGraph,
    DataError,
    GraphExample,
    Vocab,
    collate,
    load_dataset,
)
from .metric import mean_metric, per_task_metric
from .model import DGT

VALUE_LOSS_WEIGHT = 0.1


def batch_loss(model: DGT, batch: BatchedGraph) -> torch.Tensor:
    logits, value = model(batch)
    policy_loss = F.cross_entropy(logits, batch.labels)
    # every generated datapoint lies on the labeled success path, so the
    # value target is identically 1; kept so MCTS has a served value
    value_loss = F.binary_cross_entropy(
        value, torch.ones_like(value)
    )
    return policy_loss + VALUE_LOSS_WEIGHT * value_loss


@torch.no_grad()
def evaluate(
    model: DGT, examples: list[GraphExample], vocab: Vocab, batch_size=32
) -> float:
    """Mean per-task metric of the model's policies on `examples`."""
    model.eval()
    records = []
    for i in range(0, len(examples), batch_size):
        chunk = examples[i : i + batch_size]
        batch = collate(chunk, vocab)
        policy = model.policy(batch)
        for row, ex in enumerate(chunk):
            p = policy[row, ex.correct].item()
            records.append((ex.task_id, len(ex.choice_ids), p))
    model.train()
    return mean_metric(per_task_metric(records))


def save_checkpoint(path: str, model: DGT, vocab: Vocab):
    torch.save(
        {
            "config": model.cfg.to_dict(),
            "vocab_tokens": vocab.tokens,
            "edge_types": EDGE_TYPES,
            "vocab_version": VOCAB_VERSION,
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path: str):
    ckpt = torch.load(path, map_location="cpu", weights_only=False)
    if ckpt.get("vocab_version") != VOCAB_VERSION:
        raise DataError("checkpoint vocabulary version mismatch")
    cfg = DGTConfig.from_dict(ckpt["config"])
    model = DGT(cfg)
    model.load_state_dict(ckpt["state_dict"])
    model.eval()
    return model, Vocab(ckpt["vocab_tokens"])


def train(
    data_dir: str,
    out_dir: str,
    config: DGTConfig | None = None,
    epochs: int = 200,
    patience: int = 10,
    batch_size: int = 25,
    seed: int = 0,
    limit: int | None = None,
    valid_override: list[GraphExample] | None = None,
    stop_at_metric: float | None = None,
    log=print,
) -> dict:
    """Returns {"best_valid_metric", "epochs_run", "checkpoint",
    "dropped_oversize"}; writes checkpoint + curve.csv into out_dir."""
    torch.manual_seed(seed)
    ds = load_dataset(data_dir)
    train_ex = ds["train"]
    if limit is not None:
        train_ex = train_ex[:limit]
    if not train_ex:
        raise DataError("no training datapoints")
    valid_ex = valid_override if valid_override is not None else ds["valid"]
    if not valid_ex:
        valid_ex = train_ex  # degenerate fallback for tiny harness runs

    cfg = config or DGTConfig()
    dropped = sum(1 for ex in train_ex if len(ex.tokens) > cfg.max_nodes)
    if dropped:
        log(f"dropping {dropped} oversize graphs (> {cfg.max_nodes} nodes)")
    train_ex = [ex for ex in train_ex if len(ex.tokens) <= cfg.max_nodes]
    if not train_ex:
        raise DataError("all training graphs exceed max_nodes")

    vocab = Vocab.build(train_ex)
    cfg.vocab_size = len(vocab)
    cfg.num_edge_types = len(EDGE_TYPES)
    model = DGT(cfg)
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    os.makedirs(out_dir, exist_ok=True)
    ckpt_path = os.path.join(out_dir, "checkpoint.pt")
    curve_path = os.path.join(out_dir, "curve.csv")
    rng = random.Random(seed)
    best = float("-inf")
    bad_epochs = 0
    epochs_run = 0
    with open(curve_path, "w", newline="") as cf:
        curve = csv.writer(cf)
        curve.writerow(["epoch", "train_loss", "valid_metric", "seconds"])
        t0 = time.monotonic()
        for epoch in range(1, epochs + 1):
            order = list(range(len(train_ex)))
            rng.shuffle(order)
            total = 0.0
            nb = 0
            for i in range(0, len(order), batch_size):
                batch = collate(
                    [train_ex[j] for j in order[i : i + batch_size]], vocab
                )
                loss = batch_loss(model, batch)
                opt.zero_grad()
                loss.backward()
                opt.step()
                total += loss.item()
                nb += 1
            vm = evaluate(model, valid_ex, vocab, batch_size)
            curve.writerow(
                [epoch, f"{total / nb:.6f}", f"{vm:.6f}",
                 f"{time.monotonic() - t0:.1f}"]
            )
            cf.flush()
            log(f"epoch {epoch}: loss {total / nb:.4f} valid metric {vm:.4f}")
            epochs_run = epoch
            if vm > best:
                best = vm
                bad_epochs = 0
                save_checkpoint(ckpt_path, model, vocab)
                if stop_at_metric is not None and best >= stop_at_metric:
                    log(f"reached target metric {stop_at_metric} at epoch {epoch}")
                    break
            else:
                bad_epochs += 1
                if bad_epochs >= patience:
                    log(f"early stop after {epoch} epochs (patience {patience})")
                    break
    with open(os.path.join(out_dir, "train_manifest.json"), "w") as f:
        json.dump(
            {
                "data_dir": os.path.abspath(data_dir),
                "config": cfg.to_dict(),
                "epochs_run": epochs_run,
                "best_valid_metric": best,
                "vocab_version": VOCAB_VERSION,
            },
            f,
            indent=2,
        )
    return {
        "best_valid_metric": best,
        "epochs_run": epochs_run,
        "checkpoint": ckpt_path,
        "dropped_oversize": dropped,
    }


def main(argv=None):
    p = argparse.ArgumentParser(prog="dgt-train")
    p.add_argument("--data", required=True, help="suite directory from the generator")
    p.add_argument("--out", default="dgt-out")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None,
                   help="cap the number of training datapoints")
    p.add_argument("--layers", type=int, default=12)
    args = p.parse_args(argv)
    cfg = DGTConfig(layers=args.layers)
    report = train(
        args.data,
        args.out,
        config=cfg,
        epochs=args.epochs,
        patience=args.patience,
        batch_size=args.batch_size,
        seed=args.seed,
        limit=args.limit,
    )
    print(json.dumps(report))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
