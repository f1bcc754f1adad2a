"""Model configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class DGTConfig:
    layers: int = 12
    dim: int = 128
    heads: int = 4
    head_dim: int = 32
    lr: float = 1e-4
    num_edge_types: int = 20
    vocab_size: int = 0
    max_nodes: int = 1024
    # frozen conventions, exposed as flags for ablation only:
    # - GREAT reduces the node-to-bias map to one scalar per (head, edge type)
    # - bias flows from the key node along edges *into* the query by default
    great: bool = False
    bias_direction: str = "incoming"  # or "outgoing"
    ffn_mult: int = 4

    def __post_init__(self):
        if self.heads * self.head_dim != self.dim:
            raise ValueError(
                f"heads * head_dim must equal dim "
                f"({self.heads} * {self.head_dim} != {self.dim})"
            )
        if self.bias_direction not in ("incoming", "outgoing"):
            raise ValueError(f"bad bias_direction {self.bias_direction!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DGTConfig":
        return cls(**d)
