"""Dynamic graph transformer.

A pre-norm transformer encoder over graph nodes (no positional encoding,
so the model is permutation-equivariant by construction). In every
attention layer each node j is mapped by a learned linear function to a
bias matrix B_j of shape (heads, numEdgeTypes); the attention logit from
query node i to key node j gains B_j[h, t] summed over the types t of the
edges j -> i present in the graph (zero when there is no edge). With the
GREAT reduction the linear map is frozen to a constant, leaving one scalar
per (head, edge type) shared across nodes.

Choice scores are read from the choice nodes' final representations via a
linear scoring head (softmax over each graph's choice set gives the
policy); a masked-mean pooled head gives the value estimate.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .config import DGTConfig
from .data import BatchedGraph

NEG_INF = -1e30


class DGTLayer(nn.Module):
    def __init__(self, cfg: DGTConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.dim
        self.ln1 = nn.LayerNorm(d)
        self.ln2 = nn.LayerNorm(d)
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.o = nn.Linear(d, d)
        if cfg.great:
            self.great_bias = nn.Parameter(
                torch.zeros(cfg.heads, cfg.num_edge_types)
            )
        else:
            self.bias_map = nn.Linear(d, cfg.heads * cfg.num_edge_types)
        self.ffn = nn.Sequential(
            nn.Linear(d, cfg.ffn_mult * d),
            nn.GELU(),
            nn.Linear(cfg.ffn_mult * d, d),
        )

    def _edge_bias(self, h: torch.Tensor, batch: BatchedGraph) -> torch.Tensor:
        """(B, heads, N, N) additive attention-logit bias, query x key."""
        cfg = self.cfg
        B, N, _ = h.shape
        if cfg.bias_direction == "incoming":
            key_idx, query_idx = batch.edge_src, batch.edge_dst
        else:
            key_idx, query_idx = batch.edge_dst, batch.edge_src
        if cfg.great:
            vals = self.great_bias[:, batch.edge_type].T  # (E, heads)
        else:
            per_node = self.bias_map(h).view(
                B, N, cfg.heads, cfg.num_edge_types
            )
            vals = per_node[batch.edge_batch, key_idx, :, batch.edge_type]
        flat = h.new_zeros(B * N * N, cfg.heads)
        idx = batch.edge_batch * N * N + query_idx * N + key_idx
        flat.index_add_(0, idx, vals)
        return flat.view(B, N, N, cfg.heads).permute(0, 3, 1, 2)

    def forward(self, x: torch.Tensor, batch: BatchedGraph) -> torch.Tensor:
        cfg = self.cfg
        B, N, d = x.shape
        h = self.ln1(x)
        q = self.q(h).view(B, N, cfg.heads, cfg.head_dim).transpose(1, 2)
        k = self.k(h).view(B, N, cfg.heads, cfg.head_dim).transpose(1, 2)
        v = self.v(h).view(B, N, cfg.heads, cfg.head_dim).transpose(1, 2)
        logits = q @ k.transpose(-1, -2) / math.sqrt(cfg.head_dim)
        if batch.edge_type.numel():
            logits = logits + self._edge_bias(h, batch)
        key_mask = batch.mask[:, None, None, :]  # (B, 1, 1, N)
        logits = logits.masked_fill(~key_mask, NEG_INF)
        attn = torch.softmax(logits, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(B, N, d)
        x = x + self.o(out)
        x = x + self.ffn(self.ln2(x))
        return x * batch.mask.unsqueeze(-1)


class DGT(nn.Module):
    def __init__(self, cfg: DGTConfig):
        super().__init__()
        if cfg.vocab_size < 1:
            raise ValueError("vocab_size must be set")
        self.cfg = cfg
        self.embed = nn.Embedding(cfg.vocab_size, cfg.dim)
        self.layers = nn.ModuleList(DGTLayer(cfg) for _ in range(cfg.layers))
        self.final_ln = nn.LayerNorm(cfg.dim)
        self.score_head = nn.Linear(cfg.dim, 1)
        self.value_head = nn.Linear(cfg.dim, 1)

    def forward(self, batch: BatchedGraph):
        """Returns (choice_logits (B, C) with NEG_INF at padding,
        value (B,) in [0, 1])."""
        x = self.embed(batch.tokens) * batch.mask.unsqueeze(-1)
        for layer in self.layers:
            x = layer(x, batch)
        x = self.final_ln(x)
        B, C = batch.choice_nodes.shape
        b_idx = torch.arange(B, device=x.device).unsqueeze(1).expand(B, C)
        choice_repr = x[b_idx, batch.choice_nodes]  # (B, C, d)
        choice_logits = self.score_head(choice_repr).squeeze(-1)
        choice_logits = choice_logits.masked_fill(~batch.choice_mask, NEG_INF)
        denom = batch.mask.sum(dim=1, keepdim=True).clamp(min=1)
        pooled = (x * batch.mask.unsqueeze(-1)).sum(dim=1) / denom
        value = torch.sigmoid(self.value_head(pooled)).squeeze(-1)
        return choice_logits, value

    def policy(self, batch: BatchedGraph) -> torch.Tensor:
        logits, _ = self.forward(batch)
        return torch.softmax(logits, dim=-1)
