"""Condition-fusion denoiser.

One network evaluates all four conditioning variants (text only, text and
stickman, stickman only, unconditioned) in a single forward pass.  Rows of
a batch are kept sorted by variant so that the text decoder can run on one
contiguous slice, the stickman decoder on another, and the shared latent
encoder on everything.  Unconditioned rows skip both decoders entirely.

The analytic FLOP counters at the bottom compare this layout with a plain
self-attention denoiser that concatenates condition tokens onto the frame
sequence for every row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
import torch
from torch import nn

from .corpus import MOTION_DIM
from .encoders import StickmanEncoder, TextEncoder
from .layers import FeatDecoder, LatentEncoderLayer, sinusoidal_embedding
from .sga import NUM_STROKES, POINTS_PER_STROKE

NUM_SLOTS = 3
SLOT_NAMES = ("start", "middle", "end")


class ConditionCombination(IntEnum):
    TEXT_ONLY = 0
    TEXT_AND_STICK = 1
    STICK_ONLY = 2
    NONE = 3

    @property
    def has_text(self) -> bool:
        return self in (ConditionCombination.TEXT_ONLY,
                        ConditionCombination.TEXT_AND_STICK)

    @property
    def has_stick(self) -> bool:
        return self in (ConditionCombination.TEXT_AND_STICK,
                        ConditionCombination.STICK_ONLY)


class UnsortedBatchError(ValueError):
    """Batch rows must be ordered by ConditionCombination value."""


@dataclass
class ConditionRow:
    """User-level conditioning for one batch row."""

    combo: ConditionCombination
    tokens: np.ndarray | None = None          # [Lt] int
    stickmen: dict[int, np.ndarray] = field(default_factory=dict)  # slot -> [6,P,2]

    def __post_init__(self):
        if self.combo.has_text and (self.tokens is None or len(self.tokens) == 0):
            raise ValueError(f"{self.combo.name} row needs text tokens")
        if not self.combo.has_text and self.tokens is not None:
            raise ValueError(f"{self.combo.name} row must not carry text")
        if self.combo.has_stick and not self.stickmen:
            raise ValueError(f"{self.combo.name} row needs at least one stickman")
        if not self.combo.has_stick and self.stickmen:
            raise ValueError(f"{self.combo.name} row must not carry stickmen")
        for slot in self.stickmen:
            if not (0 <= slot < NUM_SLOTS):
                raise ValueError(f"stickman slot {slot} outside 0..{NUM_SLOTS - 1}")


def sort_rows(rows: list[ConditionRow]) -> tuple[list[ConditionRow], np.ndarray]:
    """Stable sort by combination; returns (sorted rows, inverse permutation).

    `inverse[i]` is the position of original row i in the sorted batch.
    """
    order = np.argsort([int(r.combo) for r in rows], kind="stable")
    inverse = np.empty_like(order)
    inverse[order] = np.arange(len(rows))
    return [rows[i] for i in order], inverse


@dataclass
class ConditionBatch:
    """Model-ready conditioning, rows sorted by combination."""

    combos: tuple[ConditionCombination, ...]
    segments: tuple[int, int, int, int]       # row counts per combination
    text_feats: torch.Tensor                  # [B, Lt, E]
    text_mask: torch.Tensor                   # [B, Lt] bool
    stick_feats: torch.Tensor                 # [B, 3, 6, E]
    slot_mask: torch.Tensor                   # [B, 3] bool

    @property
    def batch_size(self) -> int:
        return len(self.combos)

    def row_slice(self, *combos: ConditionCombination) -> slice:
        """Contiguous slice covering the given adjacent combinations."""
        values = sorted(int(c) for c in combos)
        if values != list(range(values[0], values[-1] + 1)):
            raise ValueError("combinations are not adjacent")
        starts = np.concatenate([[0], np.cumsum(self.segments)])
        return slice(int(starts[values[0]]), int(starts[values[-1] + 1]))


class ConditionEmbedder:
    """Turns raw rows into a ConditionBatch using frozen feature towers."""

    def __init__(self, text_encoder: TextEncoder, stick_encoder: StickmanEncoder):
        self.text_encoder = text_encoder
        self.stick_encoder = stick_encoder
        for module in (self.text_encoder, self.stick_encoder):
            module.eval()
            module.requires_grad_(False)
        self.dim = stick_encoder.dim

    def __call__(self, rows: list[ConditionRow]) -> ConditionBatch:
        combos = [r.combo for r in rows]
        if any(combos[i] > combos[i + 1] for i in range(len(combos) - 1)):
            raise UnsortedBatchError(
                "rows must be sorted by combination; use sort_rows() first")
        segments = tuple(sum(1 for c in combos if c == want)
                         for want in ConditionCombination)
        B, E = len(rows), self.dim

        text_rows = [i for i, r in enumerate(rows) if r.combo.has_text]
        max_lt = max((len(rows[i].tokens) for i in text_rows), default=1)
        text_feats = torch.zeros(B, max_lt, E)
        text_mask = torch.zeros(B, max_lt, dtype=torch.bool)
        with torch.no_grad():
            if text_rows:
                padded = torch.zeros(len(text_rows), max_lt, dtype=torch.long)
                for k, i in enumerate(text_rows):
                    toks = torch.as_tensor(np.asarray(rows[i].tokens), dtype=torch.long)
                    padded[k, : len(toks)] = toks
                feats, _, mask = self.text_encoder(padded)
                for k, i in enumerate(text_rows):
                    text_feats[i] = feats[k]
                    text_mask[i] = mask[k]

            stick_feats = torch.zeros(B, NUM_SLOTS, NUM_STROKES, E)
            slot_mask = torch.zeros(B, NUM_SLOTS, dtype=torch.bool)
            entries = [(i, slot) for i, r in enumerate(rows)
                       for slot in sorted(r.stickmen)]
            if entries:
                strokes = torch.stack([
                    torch.as_tensor(rows[i].stickmen[slot], dtype=torch.float32)
                    for i, slot in entries])
                feats, _ = self.stick_encoder(strokes)
                for k, (i, slot) in enumerate(entries):
                    stick_feats[i, slot] = feats[k]
                    slot_mask[i, slot] = True

        return ConditionBatch(tuple(combos), segments, text_feats, text_mask,
                              stick_feats, slot_mask)


@dataclass
class DenoiserConfig:
    dim: int = 128
    heads: int = 4
    mcm_blocks: int = 2
    decoder_depth: int = 2
    latent_depth: int = 1
    max_len: int = 120
    max_text_len: int = 32
    motion_dim: int = MOTION_DIM

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class DenoiserOutput:
    eps: torch.Tensor           # [B, L, D]
    index_logits: torch.Tensor  # [B, L, 3]


class MCMBlock(nn.Module):
    """Text decoder on its slice, stickman decoder on its slice, shared encoder."""

    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        self.text_dec = FeatDecoder(cfg.dim, cfg.heads, cfg.decoder_depth)
        self.stick_dec = FeatDecoder(cfg.dim, cfg.heads, cfg.decoder_depth)
        self.latent = nn.ModuleList(
            LatentEncoderLayer(cfg.dim, cfg.heads) for _ in range(cfg.latent_depth))

    def forward(self, x, cond: ConditionBatch, stick_tokens, stick_token_mask):
        n1, n2, n3, _ = cond.segments
        t_end = n1 + n2
        s_end = n1 + n2 + n3
        if t_end > 0:
            off = self.text_dec(x[:t_end], cond.text_feats[:t_end],
                                cond.text_mask[:t_end])
            x = torch.cat([x[:t_end] + off, x[t_end:]], dim=0)
        if s_end > n1:
            off = self.stick_dec(x[n1:s_end], stick_tokens[n1:s_end],
                                 stick_token_mask[n1:s_end])
            x = torch.cat([x[:n1], x[n1:s_end] + off, x[s_end:]], dim=0)
        for layer in self.latent:
            x = layer(x)
        return x


class ConditionFusionDenoiser(nn.Module):
    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        self.cfg = cfg
        self.frame_proj = nn.Linear(cfg.motion_dim, cfg.dim)
        self.t_mlp = nn.Sequential(
            nn.Linear(cfg.dim, cfg.dim), nn.GELU(), nn.Linear(cfg.dim, cfg.dim))
        pe = sinusoidal_embedding(torch.arange(cfg.max_len), cfg.dim)
        self.register_buffer("frame_pe", pe, persistent=False)
        self.slot_tag = nn.Embedding(NUM_SLOTS, cfg.dim)
        self.blocks = nn.ModuleList(MCMBlock(cfg) for _ in range(cfg.mcm_blocks))
        self.out_norm = nn.LayerNorm(cfg.dim)
        self.eps_head = nn.Linear(cfg.dim, cfg.motion_dim)
        self.index_head = nn.Linear(cfg.dim, NUM_SLOTS)

    def _stick_tokens(self, cond: ConditionBatch):
        tagged = cond.stick_feats + self.slot_tag.weight[None, :, None, :]
        B = cond.batch_size
        tokens = tagged.reshape(B, NUM_SLOTS * NUM_STROKES, self.cfg.dim)
        mask = cond.slot_mask[:, :, None].expand(-1, -1, NUM_STROKES)
        return tokens, mask.reshape(B, NUM_SLOTS * NUM_STROKES)

    def forward(self, x_t: torch.Tensor, t: torch.Tensor,
                cond: ConditionBatch) -> DenoiserOutput:
        """x_t [B,L,D] normalized features, t [B] 1-based timesteps."""
        B, L, _ = x_t.shape
        if B != cond.batch_size:
            raise ValueError(f"batch size {B} != condition rows {cond.batch_size}")
        dtype = self.frame_proj.weight.dtype
        t_emb = self.t_mlp(sinusoidal_embedding(t.float(), self.cfg.dim).to(dtype))
        x = self.frame_proj(x_t) + self.frame_pe[None, :L] + t_emb[:, None, :]
        stick_tokens, stick_token_mask = self._stick_tokens(cond)
        for block in self.blocks:
            x = block(x, cond, stick_tokens, stick_token_mask)
        h = self.out_norm(x)
        return DenoiserOutput(self.eps_head(h), self.index_head(h))


class _StdAttnBlock(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.attn = nn.MultiheadAttention(dim, heads, dropout=0.0, batch_first=True)
        self.norm1 = nn.LayerNorm(dim)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(
            nn.Linear(dim, 4 * dim), nn.GELU(), nn.Linear(4 * dim, dim))

    def forward(self, x, key_padding_mask, need_weights=False):
        h = self.norm1(x)
        attn_out, weights = self.attn(
            h, h, h, key_padding_mask=key_padding_mask,
            need_weights=need_weights, average_attn_weights=True)
        x = x + attn_out
        return x + self.ffn(self.norm2(x)), weights


class SelfAttentionDenoiser(nn.Module):
    """Baseline: frames and condition tokens in one self-attended sequence.

    Every row carries slots for all condition tokens; absent conditions are
    masked out of attention.  Block count matches the fusion model's total
    (decoder layers for both modalities plus latent layers, per MCM block).
    """

    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        self.cfg = cfg
        self.frame_proj = nn.Linear(cfg.motion_dim, cfg.dim)
        self.t_mlp = nn.Sequential(
            nn.Linear(cfg.dim, cfg.dim), nn.GELU(), nn.Linear(cfg.dim, cfg.dim))
        pe = sinusoidal_embedding(torch.arange(cfg.max_len), cfg.dim)
        self.register_buffer("frame_pe", pe, persistent=False)
        self.slot_tag = nn.Embedding(NUM_SLOTS, cfg.dim)
        depth = cfg.mcm_blocks * (2 * cfg.decoder_depth + cfg.latent_depth)
        self.blocks = nn.ModuleList(
            _StdAttnBlock(cfg.dim, cfg.heads) for _ in range(depth))
        self.out_norm = nn.LayerNorm(cfg.dim)
        self.eps_head = nn.Linear(cfg.dim, cfg.motion_dim)
        self.index_head = nn.Linear(cfg.dim, NUM_SLOTS)

    def forward(self, x_t, t, cond: ConditionBatch, need_weights=False):
        B, L, _ = x_t.shape
        dtype = self.frame_proj.weight.dtype
        t_emb = self.t_mlp(sinusoidal_embedding(t.float(), self.cfg.dim).to(dtype))
        frames = self.frame_proj(x_t) + self.frame_pe[None, :L] + t_emb[:, None, :]
        tagged = cond.stick_feats + self.slot_tag.weight[None, :, None, :]
        stick_tokens = tagged.reshape(B, NUM_SLOTS * NUM_STROKES, self.cfg.dim)
        stick_mask = cond.slot_mask[:, :, None].expand(-1, -1, NUM_STROKES)
        stick_mask = stick_mask.reshape(B, NUM_SLOTS * NUM_STROKES)

        seq = torch.cat([frames, cond.text_feats, stick_tokens], dim=1)
        valid = torch.cat([
            torch.ones(B, L, dtype=torch.bool),
            cond.text_mask, stick_mask], dim=1)
        maps = []
        x = seq
        for block in self.blocks:
            x, weights = block(x, key_padding_mask=~valid, need_weights=need_weights)
            if need_weights:
                maps.append(weights)
        h = self.out_norm(x[:, :L])
        out = DenoiserOutput(self.eps_head(h), self.index_head(h))
        return (out, maps) if need_weights else out


# ---------------------------------------------------------------------------
# analytic cost model (multiply-accumulates; norms and softmaxes ignored;
# the input/output projections shared by both architectures are omitted)


def eff_self_macs(L: int, dim: int, heads: int) -> int:
    dh = dim // heads
    return 4 * L * dim * dim + 2 * L * dh * dim


def eff_cross_macs(L: int, S: int, dim: int, heads: int) -> int:
    dh = dim // heads
    return 2 * L * dim * dim + 2 * S * dim * dim + (L + S) * dh * dim


def ffn_macs(L: int, dim: int) -> int:
    return 8 * L * dim * dim


def std_attn_macs(S: int, dim: int) -> int:
    # q/k/v/out projections + quadratic score and mixing terms
    return 4 * S * dim * dim + 2 * S * S * dim


def fusion_forward_macs(cfg: DenoiserConfig, segments: tuple[int, int, int, int],
                        L: int, text_len: int | None = None) -> int:
    """Cost of one ConditionFusionDenoiser forward for a sorted batch."""
    St = cfg.max_text_len if text_len is None else text_len
    Ss = NUM_SLOTS * NUM_STROKES
    n1, n2, n3, n4 = segments
    text_rows, stick_rows, all_rows = n1 + n2, n2 + n3, sum(segments)
    dec_layer_t = eff_self_macs(L, cfg.dim, cfg.heads) \
        + eff_cross_macs(L, St, cfg.dim, cfg.heads) + ffn_macs(L, cfg.dim)
    dec_layer_s = eff_self_macs(L, cfg.dim, cfg.heads) \
        + eff_cross_macs(L, Ss, cfg.dim, cfg.heads) + ffn_macs(L, cfg.dim)
    latent_layer = eff_self_macs(L, cfg.dim, cfg.heads) + ffn_macs(L, cfg.dim)
    per_mcm = (text_rows * cfg.decoder_depth * dec_layer_t
               + stick_rows * cfg.decoder_depth * dec_layer_s
               + all_rows * cfg.latent_depth * latent_layer)
    return cfg.mcm_blocks * per_mcm


def baseline_forward_macs(cfg: DenoiserConfig, segments: tuple[int, int, int, int],
                          L: int, text_len: int | None = None) -> int:
    """Cost of one SelfAttentionDenoiser forward for the same batch.

    Each row self-attends over frames plus whichever condition tokens it
    actually has; absent tokens are assumed skipped rather than masked, which
    is the charitable reading for the baseline.
    """
    St = cfg.max_text_len if text_len is None else text_len
    Ss = NUM_SLOTS * NUM_STROKES
    seq_lens = {
        ConditionCombination.TEXT_ONLY: L + St,
        ConditionCombination.TEXT_AND_STICK: L + St + Ss,
        ConditionCombination.STICK_ONLY: L + Ss,
        ConditionCombination.NONE: L,
    }
    depth = cfg.mcm_blocks * (2 * cfg.decoder_depth + cfg.latent_depth)
    total = 0
    for combo, n in zip(ConditionCombination, segments):
        S = seq_lens[combo]
        total += n * depth * (std_attn_macs(S, cfg.dim) + ffn_macs(S, cfg.dim))
    return total
