"""Pretraining for the frozen stickman tower.

The stickman encoder is trained as a denoising autoencoder: perturbed
sketches in, clean front-projected joint positions out (through the small
decoder head).  The encoder learned this way is frozen for diffusion
training; the decoder survives only as a probe for reconstruction quality.

Quality is measured in canvas units.  The projection always scales the
figure to CANVAS_FILL of the canvas, so "fraction of skeleton height" is
simply error / CANVAS_FILL.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .corpus import Corpus
from .encoders import StickmanDecoder, StickmanEncoder
from .sga import CANVAS_FILL, DEFAULT_STYLE, front_project, stickman_from_pose


@dataclass
class StickmanPretrainConfig:
    dim: int = 128
    heads: int = 4
    depth: int = 4
    steps: int = 1200
    batch_size: int = 32
    lr: float = 1e-3
    frames_per_clip: int = 4
    seed: int = 0


def collect_poses(corpus: Corpus, frames_per_clip: int, seed: int,
                  split: str = "train") -> np.ndarray:
    """Absolute [N, J, 3] poses sampled uniformly from the given split."""
    rng = np.random.default_rng([seed, 101])
    clips = corpus.train_clips() if split == "train" else corpus.test_clips()
    poses = []
    for clip in clips:
        absolute = clip.absolute_joints()
        idx = rng.integers(clip.length, size=frames_per_clip)
        poses.extend(absolute[i] for i in idx)
    return np.stack(poses)


def _sketch_batch(poses: np.ndarray, rng: np.random.Generator
                  ) -> tuple[torch.Tensor, torch.Tensor]:
    """Perturbed strokes [B, 6, P, 2] and clean projected joints [B, J, 2]."""
    strokes, targets = [], []
    for pose in poses:
        strokes.append(stickman_from_pose(pose, DEFAULT_STYLE, rng).strokes)
        targets.append(front_project(pose))
    return (torch.as_tensor(np.stack(strokes), dtype=torch.float32),
            torch.as_tensor(np.stack(targets), dtype=torch.float32))


def reconstruction_error(encoder: StickmanEncoder, decoder: StickmanDecoder,
                         poses: np.ndarray, seed: int) -> float:
    """Mean joint L2 error (canvas units) on freshly perturbed sketches."""
    rng = np.random.default_rng([seed, 202])
    encoder.eval()
    decoder.eval()
    errs = []
    with torch.no_grad():
        for k in range(0, len(poses), 64):
            strokes, target = _sketch_batch(poses[k : k + 64], rng)
            _, pooled = encoder(strokes)
            pred = decoder(pooled)
            errs.append(torch.linalg.norm(pred - target, dim=2).mean(dim=1))
    return float(torch.cat(errs).mean())


def train_stickman_autoencoder(
    corpus: Corpus,
    cfg: StickmanPretrainConfig,
    log_every: int = 0,
    log=print,
) -> tuple[StickmanEncoder, StickmanDecoder, float]:
    """Returns (encoder, decoder, held-out error in canvas units)."""
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng([cfg.seed, 7])
    encoder = StickmanEncoder(cfg.dim, cfg.heads, cfg.depth)
    decoder = StickmanDecoder(cfg.dim)
    opt = torch.optim.Adam(
        list(encoder.parameters()) + list(decoder.parameters()), lr=cfg.lr)

    train_poses = collect_poses(corpus, cfg.frames_per_clip, cfg.seed, "train")
    for step in range(cfg.steps):
        idx = rng.integers(len(train_poses), size=cfg.batch_size)
        strokes, target = _sketch_batch(train_poses[idx], rng)
        _, pooled = encoder(strokes)
        loss = ((decoder(pooled) - target) ** 2).mean()
        opt.zero_grad()
        loss.backward()
        opt.step()
        if log_every and (step + 1) % log_every == 0:
            log(f"stickman step {step + 1}: loss={loss.item():.5f}")

    held_poses = collect_poses(corpus, cfg.frames_per_clip, cfg.seed, "test")
    err = reconstruction_error(encoder, decoder, held_poses, cfg.seed)
    if log_every:
        log(f"held-out joint error: {err:.4f} canvas units "
            f"({err / CANVAS_FILL:.1%} of skeleton height)")
    return encoder, decoder, err
