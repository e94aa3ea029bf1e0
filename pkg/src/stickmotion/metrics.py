"""Evaluation: retrieval metrics, Fréchet distance, stickman similarity.

The retrieval metrics live in a 64-dim joint embedding space produced by a
small contrastive evaluator trained in this repo (motion tower here, text
tower shared with the generator's conditioning).  Stickman similarity
compares the conditioning sketch against every generated frame re-drawn
through the same projection, so it needs no learned parts at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .corpus import Corpus, FeatureStats, MOTION_DIM, MotionClip
from .encoders import TextEncoder
from .primitives import strip_starter
from .layers import sinusoidal_embedding
from .sga import Stickman, ideal_stickman


class EvaluatorQualityError(RuntimeError):
    """The contrastive evaluator failed its retrieval quality gate."""


class MotionEmbedder(nn.Module):
    """Normalized motion features [B, L, D] -> embeddings [B, out_dim]."""

    def __init__(self, dim: int = 128, heads: int = 4, depth: int = 2,
                 max_len: int = 120, out_dim: int = 64):
        super().__init__()
        self.in_proj = nn.Linear(MOTION_DIM, dim)
        pe = sinusoidal_embedding(torch.arange(max_len), dim)
        self.register_buffer("pe", pe, persistent=False)
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=heads, dim_feedforward=4 * dim,
            dropout=0.0, batch_first=True, norm_first=True)
        self.blocks = nn.TransformerEncoder(layer, depth, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(dim)
        self.out_proj = nn.Linear(dim, out_dim)

    def forward(self, feats: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """mask [B, L] True = real frame."""
        x = self.in_proj(feats) + self.pe[None, : feats.shape[1]]
        x = self.blocks(x, src_key_padding_mask=~mask)
        x = self.norm(x)
        denom = mask.sum(dim=1, keepdim=True).clamp(min=1)
        pooled = (x * mask[:, :, None]).sum(dim=1) / denom
        return self.out_proj(pooled)


def _pad_features(feats_list: list[np.ndarray]) -> tuple[torch.Tensor, torch.Tensor]:
    max_len = max(f.shape[0] for f in feats_list)
    batch = torch.zeros(len(feats_list), max_len, MOTION_DIM)
    mask = torch.zeros(len(feats_list), max_len, dtype=torch.bool)
    for i, f in enumerate(feats_list):
        batch[i, : f.shape[0]] = torch.as_tensor(f, dtype=torch.float32)
        mask[i, : f.shape[0]] = True
    return batch, mask


def embed_motions(embedder: MotionEmbedder, feats_list: list[np.ndarray],
                  stats: FeatureStats, batch_size: int = 64) -> np.ndarray:
    """Features are raw (denormalized); normalization happens here."""
    embedder.eval()
    out = []
    with torch.no_grad():
        for k in range(0, len(feats_list), batch_size):
            chunk = [stats.normalize(f) for f in feats_list[k : k + batch_size]]
            batch, mask = _pad_features(chunk)
            out.append(embedder(batch, mask).numpy())
    return np.concatenate(out)


def embed_texts(text_encoder: TextEncoder, tokens_list: list[np.ndarray],
                batch_size: int = 64) -> np.ndarray:
    text_encoder.eval()
    out = []
    with torch.no_grad():
        for k in range(0, len(tokens_list), batch_size):
            chunk = tokens_list[k : k + batch_size]
            max_lt = max(len(t) for t in chunk)
            batch = torch.zeros(len(chunk), max_lt, dtype=torch.long)
            for i, t in enumerate(chunk):
                batch[i, : len(t)] = torch.as_tensor(np.asarray(t), dtype=torch.long)
            _, pooled, _ = text_encoder(batch)
            out.append(pooled.numpy())
    return np.concatenate(out)


@dataclass
class EvaluatorConfig:
    dim: int = 128
    heads: int = 4
    depth: int = 2
    out_dim: int = 64
    steps: int = 1500
    batch_size: int = 48
    lr: float = 5e-4
    temperature: float = 0.07
    seed: int = 0
    min_top1: float = 0.5


@dataclass
class EvaluatorBundle:
    motion_embedder: MotionEmbedder
    text_encoder: TextEncoder
    retrieval_top1: float
    config: EvaluatorConfig


def retrieval_top1(motion_emb: np.ndarray, text_emb: np.ndarray) -> float:
    """Fraction of motions whose nearest text embedding is their own."""
    d = np.linalg.norm(motion_emb[:, None, :] - text_emb[None, :, :], axis=2)
    return float((d.argmin(axis=1) == np.arange(len(d))).mean())


def dedup_by_content(clips: list[MotionClip]) -> list[MotionClip]:
    """Keep the first clip per distinct motion description (subject stripped)."""
    seen: set[str] = set()
    out = []
    for clip in clips:
        key = strip_starter(clip.text)
        if key not in seen:
            seen.add(key)
            out.append(clip)
    return out


def train_evaluator(corpus: Corpus, cfg: EvaluatorConfig,
                    log_every: int = 0, log=print) -> EvaluatorBundle:
    """Symmetric InfoNCE over (motion, text) pairs with in-batch negatives.

    Batch rows whose texts describe the same motion (modulo the subject
    phrase) are masked out of each other's negatives; the generator samples
    duplicate descriptions on purpose, and punishing the model for confusing
    them just caps the loss floor.  The quality gate is 32-way retrieval
    (1 true text + 31 distractors) over the content-deduplicated held-out
    split.  Raises EvaluatorQualityError below the gate; downstream metrics
    would be meaningless then.
    """
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    motion = MotionEmbedder(cfg.dim, cfg.heads, cfg.depth, out_dim=cfg.out_dim)
    text = TextEncoder(len(corpus.vocab), dim=cfg.dim, heads=cfg.heads,
                       depth=cfg.depth, out_dim=cfg.out_dim)
    opt = torch.optim.Adam(list(motion.parameters()) + list(text.parameters()),
                           lr=cfg.lr)
    train = corpus.train_clips()
    contents = [strip_starter(c.text) for c in train]
    for step in range(cfg.steps):
        # 10x cosine-free decay: plateaus early otherwise
        scale = 0.1 ** (step / cfg.steps)
        for group in opt.param_groups:
            group["lr"] = cfg.lr * scale
        idx = rng.choice(len(train), size=min(cfg.batch_size, len(train)),
                         replace=False)
        clips = [train[i] for i in idx]
        feats = [corpus.stats.normalize(c.features()) for c in clips]
        batch, mask = _pad_features(feats)
        m_emb = motion(batch, mask)
        max_lt = max(len(c.tokens) for c in clips)
        toks = torch.zeros(len(clips), max_lt, dtype=torch.long)
        for i, c in enumerate(clips):
            toks[i, : len(c.tokens)] = torch.as_tensor(c.tokens, dtype=torch.long)
        _, t_emb, _ = text(toks)

        d2 = ((m_emb[:, None, :] - t_emb[None, :, :]) ** 2).sum(dim=2)
        logits = -d2 / cfg.temperature
        keys = [contents[i] for i in idx]
        same = torch.tensor([[i != j and keys[i] == keys[j]
                              for j in range(len(keys))]
                             for i in range(len(keys))])
        logits = logits.masked_fill(same, float("-inf"))
        labels = torch.arange(len(clips))
        loss = 0.5 * (nn.functional.cross_entropy(logits, labels)
                      + nn.functional.cross_entropy(logits.T, labels))
        opt.zero_grad()
        loss.backward()
        opt.step()
        if log_every and (step + 1) % log_every == 0:
            log(f"evaluator step {step + 1}: loss={loss.item():.4f}")

    held = dedup_by_content(corpus.test_clips() or train)
    m = embed_motions(motion, [c.features() for c in held], corpus.stats)
    t = embed_texts(text, [c.tokens for c in held])
    pool = min(32, len(held))
    top1 = r_precision(m, t, np.random.default_rng(cfg.seed),
                       pool=pool, top=(1,))[1]
    if top1 < cfg.min_top1:
        raise EvaluatorQualityError(
            f"held-out {pool}-way top-1 retrieval {top1:.3f} below gate "
            f"{cfg.min_top1}; train the evaluator longer or enlarge the corpus")
    return EvaluatorBundle(motion, text, top1, cfg)


# ---------------------------------------------------------------------------
# embedding-space metrics


def r_precision(motion_emb: np.ndarray, text_emb: np.ndarray,
                rng: np.random.Generator, pool: int = 32,
                top: tuple[int, ...] = (1, 2, 3)) -> dict[int, float]:
    """Euclidean ranking of the true text among pool-1 random distractors."""
    n = len(motion_emb)
    if n < pool:
        raise ValueError(f"need at least {pool} samples, have {n}")
    hits = {k: 0 for k in top}
    for i in range(n):
        others = rng.choice(np.delete(np.arange(n), i), size=pool - 1,
                            replace=False)
        cand = np.concatenate([[i], others])
        d = np.linalg.norm(text_emb[cand] - motion_emb[i], axis=1)
        rank = int((d.argsort() == 0).argmax())
        for k in top:
            hits[k] += rank < k
    return {k: hits[k] / n for k in top}


def mm_dist(motion_emb: np.ndarray, text_emb: np.ndarray) -> float:
    return float(np.linalg.norm(motion_emb - text_emb, axis=1).mean())


def frechet_distance(a: np.ndarray, b: np.ndarray) -> float:
    """FID between two embedding sets [N, d]; eigenvalue-based matrix root."""
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    ca = np.cov(a, rowvar=False)
    cb = np.cov(b, rowvar=False)
    # sqrtm(ca) through the symmetric eigendecomposition
    vals, vecs = np.linalg.eigh(ca)
    root = (vecs * np.sqrt(np.clip(vals, 1e-10, None))) @ vecs.T
    inner = root @ cb @ root
    inner_vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    trace_sqrt = np.sqrt(np.clip(inner_vals, 1e-10, None)).sum()
    diff = mu_a - mu_b
    return float(diff @ diff + np.trace(ca) + np.trace(cb) - 2.0 * trace_sqrt)


def diversity(embs: np.ndarray, rng: np.random.Generator,
              pairs: int = 300) -> float:
    n = len(embs)
    i = rng.integers(n, size=pairs)
    j = rng.integers(n, size=pairs)
    return float(np.linalg.norm(embs[i] - embs[j], axis=1).mean())


def multimodality(groups: list[np.ndarray], rng: np.random.Generator,
                  pairs: int = 10) -> float:
    """Mean within-group pairwise distance across condition groups."""
    dists = []
    for g in groups:
        if len(g) < 2:
            continue
        for _ in range(pairs):
            i, j = rng.choice(len(g), size=2, replace=False)
            dists.append(np.linalg.norm(g[i] - g[j]))
    return float(np.mean(dists)) if dists else 0.0


# ---------------------------------------------------------------------------
# stickman similarity


def stickman_frame_distance(target: Stickman, joints_abs: np.ndarray) -> float:
    """Mean point distance between a sketch and a frame re-drawn as a sketch."""
    drawn = ideal_stickman(joints_abs)
    return float(np.linalg.norm(target.strokes - drawn.strokes, axis=2).mean())


def per_frame_stick_distances(target: Stickman,
                              joints_abs: np.ndarray) -> np.ndarray:
    """Distances for every frame of a clip; joints_abs [L, J, 3]."""
    return np.array([stickman_frame_distance(target, joints_abs[i])
                     for i in range(joints_abs.shape[0])])


def stisim_from_distances(distances: np.ndarray, index: int) -> float:
    """1 - (distance at the chosen frame) / (mean distance over the clip)."""
    distances = np.asarray(distances, dtype=np.float64)
    mean = distances.sum() / len(distances)
    if mean == 0.0:
        raise ValueError("degenerate clip: all frames identical to the sketch")
    return 1.0 - float(distances[index]) / float(mean)


@dataclass
class StiSimEntry:
    sd: float       # distance at the reported frame
    md: float       # mean distance over the clip
    value: float    # 1 - sd / md


@dataclass
class StiSimReport:
    entries: list[StiSimEntry] = field(default_factory=list)

    def add(self, distances: np.ndarray, index: int) -> StiSimEntry:
        distances = np.asarray(distances, dtype=np.float64)
        entry = StiSimEntry(
            sd=float(distances[index]),
            md=float(distances.mean()),
            value=stisim_from_distances(distances, index))
        self.entries.append(entry)
        return entry

    @property
    def overall(self) -> float:
        """Aggregate ratio: mean of distances first, ratio second."""
        if not self.entries:
            raise ValueError("empty report")
        mean_sd = float(np.mean([e.sd for e in self.entries]))
        mean_md = float(np.mean([e.md for e in self.entries]))
        return 1.0 - mean_sd / mean_md

    @property
    def mean_value(self) -> float:
        return float(np.mean([e.value for e in self.entries]))
