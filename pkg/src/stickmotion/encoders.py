"""Condition encoders: stickman strokes and text tokens.

The stickman encoder treats the six strokes as an unordered set (no
positional encoding over strokes), so listing order cannot change the
embedding.  Its paired decoder reconstructs clean projected joints from
the pooled embedding, which is how the encoder is pretrained.  The text
encoder yields both token-level features for cross-attention and a pooled
vector for retrieval-style training.
"""

from __future__ import annotations

import torch
from torch import nn

from .sga import NUM_STROKES, POINTS_PER_STROKE
from .skeleton import NUM_JOINTS


class StickmanEncoder(nn.Module):
    """Strokes [B, 6, P, 2] -> per-stroke features [B, 6, E] and pooled [B, E]."""

    def __init__(self, dim: int = 128, heads: int = 4, depth: int = 4,
                 n_points: int = POINTS_PER_STROKE):
        super().__init__()
        self.dim = dim
        self.n_points = n_points
        self.point_proj = nn.Sequential(
            nn.Linear(2 * n_points, dim), nn.GELU(), nn.Linear(dim, dim))
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=heads, dim_feedforward=4 * dim,
            dropout=0.0, batch_first=True, norm_first=True)
        self.blocks = nn.TransformerEncoder(layer, depth, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(dim)

    def forward(self, strokes: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        B = strokes.shape[0]
        flat = strokes.reshape(B, NUM_STROKES, 2 * self.n_points)
        tokens = self.point_proj(flat)
        feats = self.norm(self.blocks(tokens))
        return feats, feats.mean(dim=1)


class StickmanDecoder(nn.Module):
    """Pooled embedding [B, E] -> clean projected joints [B, J, 2]."""

    def __init__(self, dim: int = 128, hidden: int = 256):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(dim, hidden), nn.GELU(),
            nn.Linear(hidden, hidden), nn.GELU(),
            nn.Linear(hidden, NUM_JOINTS * 2))

    def forward(self, embedding: torch.Tensor) -> torch.Tensor:
        return self.net(embedding).view(-1, NUM_JOINTS, 2)


class TextEncoder(nn.Module):
    """Tokens [B, Lt] -> token features [B, Lt, E] and pooled vector [B, out_dim].

    Index 0 is padding; padded positions are masked out of attention and
    excluded from the pooled mean.
    """

    def __init__(self, vocab_size: int, dim: int = 128, heads: int = 4,
                 depth: int = 2, max_len: int = 32, out_dim: int = 64):
        super().__init__()
        self.dim = dim
        self.embed = nn.Embedding(vocab_size, dim, padding_idx=0)
        self.pos = nn.Parameter(torch.zeros(max_len, dim))
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=heads, dim_feedforward=4 * dim,
            dropout=0.0, batch_first=True, norm_first=True)
        self.blocks = nn.TransformerEncoder(layer, depth, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(dim)
        self.pool_proj = nn.Linear(dim, out_dim)

    def forward(self, tokens: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Returns (features, pooled, valid_mask)."""
        mask = tokens != 0                                     # [B, Lt]
        x = self.embed(tokens) + self.pos[: tokens.shape[1]]
        x = self.blocks(x, src_key_padding_mask=~mask)
        x = self.norm(x)
        denom = mask.sum(dim=1, keepdim=True).clamp(min=1)
        pooled = (x * mask[:, :, None]).sum(dim=1) / denom
        return x, self.pool_proj(pooled), mask
