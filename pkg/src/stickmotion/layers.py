"""Attention building blocks for the denoiser.

The attention here is the linear-complexity variant: softmax over the
feature axis for queries, softmax over positions for keys, multiplied in
(key, value) order first.  The implied position-to-position weights are
never formed in the forward pass but can be materialized for testing; each
of their rows sums to one like ordinary attention.
"""

from __future__ import annotations

import math

import torch
from torch import nn


def sinusoidal_embedding(positions: torch.Tensor, dim: int,
                         max_period: float = 10000.0) -> torch.Tensor:
    """Standard sin/cos embedding; positions [N] -> [N, dim]."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(max_period) * torch.arange(half, dtype=torch.float32) / half
    )
    args = positions.float()[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=1)
    if dim % 2:
        emb = torch.cat([emb, torch.zeros_like(emb[:, :1])], dim=1)
    return emb


class EfficientAttention(nn.Module):
    """Linear attention with per-feature key softmax and per-row query softmax."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        if dim % heads:
            raise ValueError(f"dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(dim, dim)
        self.v_proj = nn.Linear(dim, dim)
        self.out_proj = nn.Linear(dim, dim)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        B, L, _ = x.shape
        return x.view(B, L, self.heads, self.head_dim).transpose(1, 2)

    def _normalized_qk(self, query, key, key_mask):
        q = self._split(self.q_proj(query))            # [B, h, Lq, d]
        k = self._split(self.k_proj(key))              # [B, h, Lk, d]
        q = torch.softmax(q, dim=-1)
        if key_mask is not None:
            k = k.masked_fill(~key_mask[:, None, :, None], float("-inf"))
        k = torch.softmax(k, dim=-2)                   # over positions, per feature
        if key_mask is not None:
            # rows that are fully padded would softmax to nan
            k = torch.nan_to_num(k, nan=0.0)
        return q, k

    def forward(self, query, key, value, key_mask=None):
        """query [B,Lq,E], key/value [B,Lk,E], key_mask [B,Lk] True = valid."""
        q, k = self._normalized_qk(query, key, key_mask)
        v = self._split(self.v_proj(value))
        context = torch.einsum("bhkd,bhke->bhde", k, v)     # [B, h, d, d]
        out = torch.einsum("bhqd,bhde->bhqe", q, context)   # [B, h, Lq, d]
        B, _, Lq, _ = out.shape
        out = out.transpose(1, 2).reshape(B, Lq, self.dim)
        return self.out_proj(out)

    def implied_weights(self, query, key, key_mask=None) -> torch.Tensor:
        """Materialized position weights [B, h, Lq, Lk]; rows sum to 1."""
        q, k = self._normalized_qk(query, key, key_mask)
        return torch.einsum("bhqd,bhld->bhql", q, k)


def _ffn(dim: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(dim, 4 * dim), nn.GELU(), nn.Linear(4 * dim, dim))


class FeatDecoderLayer(nn.Module):
    """Pre-norm block: efficient self-attention, cross-attention, FFN."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.self_attn = EfficientAttention(dim, heads)
        self.cross_attn = EfficientAttention(dim, heads)
        self.norm1 = nn.LayerNorm(dim)
        self.norm2 = nn.LayerNorm(dim)
        self.norm3 = nn.LayerNorm(dim)
        self.ffn = _ffn(dim)

    def forward(self, x, cond, cond_mask=None):
        h = self.norm1(x)
        x = x + self.self_attn(h, h, h)
        x = x + self.cross_attn(self.norm2(x), cond, cond, key_mask=cond_mask)
        return x + self.ffn(self.norm3(x))


class LatentEncoderLayer(nn.Module):
    """Pre-norm block: efficient self-attention then FFN."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.self_attn = EfficientAttention(dim, heads)
        self.norm1 = nn.LayerNorm(dim)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = _ffn(dim)

    def forward(self, x):
        h = self.norm1(x)
        x = x + self.self_attn(h, h, h)
        return x + self.ffn(self.norm2(x))


class FeatDecoder(nn.Module):
    """Stack of condition-injection layers producing an additive offset."""

    def __init__(self, dim: int, heads: int, depth: int = 2):
        super().__init__()
        self.layers = nn.ModuleList(FeatDecoderLayer(dim, heads) for _ in range(depth))
        self.norm = nn.LayerNorm(dim)
        self.out_proj = nn.Linear(dim, dim)
        # the decoder adds an offset to shared latents; start as a no-op
        nn.init.zeros_(self.out_proj.weight)
        nn.init.zeros_(self.out_proj.bias)

    def forward(self, x, cond, cond_mask=None):
        h = x
        for layer in self.layers:
            h = layer(h, cond, cond_mask)
        return self.out_proj(self.norm(h))
