"""Denoiser training: condition dropout, slot supervision, the loop.

Each batch draws clips of one length, corrupts them to random timesteps,
and drops text and stickman conditions independently per row.  Rows that
keep their stickman get one to three slot poses, each rendered through the
sketch pipeline from the ground-truth frame; the index head is supervised
to point back at those frames through a soft expected-distance loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch

from . import diffusion as diff
from .checkpoint import module_checksum
from .corpus import Corpus, MOTION_DIM, MotionClip
from .denoiser import (ConditionBatch, ConditionCombination,
                       ConditionEmbedder, ConditionFusionDenoiser,
                       ConditionRow, NUM_SLOTS, SLOT_NAMES, sort_rows)
from .sga import DEFAULT_STYLE, StickmanStyle, stickman_from_pose

SLOT_START, SLOT_MIDDLE, SLOT_END = range(NUM_SLOTS)


class TrainingDivergedError(RuntimeError):
    pass


def sample_condition_assignment(n: int, rng: np.random.Generator,
                                p_text: float = 0.7, p_stick: float = 0.7
                                ) -> list[ConditionCombination]:
    """Independent keep-coins per row; two draws per row, text coin first."""
    out = []
    for _ in range(n):
        keep_text = rng.random() < p_text
        keep_stick = rng.random() < p_stick
        if keep_text and keep_stick:
            out.append(ConditionCombination.TEXT_AND_STICK)
        elif keep_text:
            out.append(ConditionCombination.TEXT_ONLY)
        elif keep_stick:
            out.append(ConditionCombination.STICK_ONLY)
        else:
            out.append(ConditionCombination.NONE)
    return out


def slot_frame_range(slot: int, length: int) -> tuple[int, int]:
    """Inclusive frame range a slot's stickman may come from."""
    if length < 8:
        raise ValueError(f"clip too short for slot ranges: {length}")
    if slot == SLOT_START:
        return 0, length // 4
    if slot == SLOT_MIDDLE:
        return math.ceil(3 * length / 8), (5 * length) // 8
    if slot == SLOT_END:
        return math.ceil(3 * length / 4), length - 1
    raise ValueError(f"unknown slot {slot}")


def sample_slot_poses(length: int, rng: np.random.Generator,
                      p_slot: float = 0.5) -> dict[int, int]:
    """Chooses slots (at least one) and a frame within each slot's range.

    Draw order: three presence coins per attempt, redrawn until any slot is
    chosen, then one frame draw per chosen slot in slot order.
    """
    while True:
        chosen = [slot for slot in range(NUM_SLOTS) if rng.random() < p_slot]
        if chosen:
            break
    out = {}
    for slot in chosen:
        lo, hi = slot_frame_range(slot, length)
        out[slot] = int(rng.integers(lo, hi + 1))
    return out


def index_loss_terms(index_logits: torch.Tensor, x0_hat: torch.Tensor,
                     slot_targets: dict[int, torch.Tensor]) -> dict[int, torch.Tensor]:
    """Per-slot expected squared distance under the index distribution.

    index_logits [L, 3], x0_hat [L, D]; each target is the clean feature
    vector of the frame the slot's stickman was drawn from.
    """
    out = {}
    for slot, target in slot_targets.items():
        p = torch.softmax(index_logits[:, slot], dim=0)
        d = ((x0_hat - target[None, :]) ** 2).sum(dim=1)
        out[slot] = (p * d).sum()
    return out


@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 32
    lr: float = 2e-4
    warmup: int = 1000
    p_text: float = 0.7
    p_stick: float = 0.7
    p_slot: float = 0.5
    pose_space_loss: bool = False
    seed: int = 0
    style: StickmanStyle = field(default_factory=lambda: DEFAULT_STYLE)
    checksum_every: int = 200


@dataclass
class PreparedBatch:
    """Everything the loss needs, rows already sorted by combination."""

    cond: ConditionBatch
    x0: torch.Tensor          # [B, L, D] normalized
    eps: torch.Tensor         # [B, L, D]
    x_t: torch.Tensor         # [B, L, D]
    t: torch.Tensor           # [B] long, 1-based
    abar: torch.Tensor        # [B] float
    slot_targets: list[dict[int, torch.Tensor]]  # per row


def prepare_batch(clips: list[MotionClip], corpus: Corpus,
                  schedule: diff.NoiseSchedule, embedder: ConditionEmbedder,
                  cfg: TrainConfig, rng: np.random.Generator) -> PreparedBatch:
    L = clips[0].length
    if any(c.length != L for c in clips):
        raise ValueError("training batch must hold same-length clips")
    combos = sample_condition_assignment(len(clips), rng, cfg.p_text, cfg.p_stick)

    rows, targets = [], []
    for clip, combo in zip(clips, combos):
        stickmen: dict[int, np.ndarray] = {}
        slot_targets: dict[int, torch.Tensor] = {}
        if combo.has_stick:
            frames = sample_slot_poses(L, rng, cfg.p_slot)
            feats = corpus.stats.normalize(clip.features())
            for slot, frame in frames.items():
                pose = clip.absolute_joints()[frame]
                man = stickman_from_pose(pose, cfg.style, rng)
                stickmen[slot] = man.strokes
                slot_targets[slot] = torch.as_tensor(feats[frame])
        rows.append(ConditionRow(
            combo=combo,
            tokens=clip.tokens if combo.has_text else None,
            stickmen=stickmen))
        targets.append(slot_targets)

    sorted_rows, inverse = sort_rows(rows)
    order = np.argsort(inverse)  # original index for each sorted position
    cond = embedder(sorted_rows)

    x0 = torch.stack([
        torch.as_tensor(corpus.stats.normalize(clips[i].features()))
        for i in order])
    t_np = rng.integers(1, schedule.T + 1, size=len(clips))
    eps = torch.as_tensor(
        rng.standard_normal(x0.shape), dtype=torch.float32)
    abar = torch.as_tensor(schedule.alpha_bar[t_np - 1], dtype=torch.float32)
    a = abar.sqrt()[:, None, None]
    b = (1.0 - abar).sqrt()[:, None, None]
    x_t = a * x0 + b * eps
    return PreparedBatch(
        cond=cond, x0=x0, eps=eps, x_t=x_t,
        t=torch.as_tensor(t_np, dtype=torch.long),
        abar=abar, slot_targets=[targets[i] for i in order])


def compute_losses(model: ConditionFusionDenoiser, batch: PreparedBatch,
                   pose_space: bool = False) -> dict[str, torch.Tensor]:
    """Slot losses plus the denoising loss; 'total' is their fixed-order sum."""
    out = model(batch.x_t, batch.t, batch.cond)
    if pose_space:
        a = batch.abar.sqrt()[:, None, None]
        b = (1.0 - batch.abar).sqrt()[:, None, None]
        x0_from_eps = (batch.x_t - b * out.eps) / a
        motion = ((x0_from_eps - batch.x0) ** 2).mean()
    else:
        motion = ((out.eps - batch.eps) ** 2).mean()

    a = batch.abar.sqrt()[:, None, None]
    b = (1.0 - batch.abar).sqrt()[:, None, None]
    x0_hat = (batch.x_t - b * out.eps) / a
    slot_sums = {slot: [] for slot in range(NUM_SLOTS)}
    for i, slot_targets in enumerate(batch.slot_targets):
        if not slot_targets:
            continue
        terms = index_loss_terms(out.index_logits[i], x0_hat[i], slot_targets)
        for slot, value in terms.items():
            slot_sums[slot].append(value)
    zero = motion.new_zeros(())
    losses = {}
    for slot in range(NUM_SLOTS):
        name = SLOT_NAMES[slot]
        losses[name] = (torch.stack(slot_sums[slot]).mean()
                        if slot_sums[slot] else zero)
    losses["motion"] = motion
    losses["total"] = ((losses["start"] + losses["middle"]) + losses["end"]) \
        + losses["motion"]
    return losses


class Trainer:
    """Adam with linear warmup over length-bucketed batches."""

    def __init__(self, model: ConditionFusionDenoiser, embedder: ConditionEmbedder,
                 corpus: Corpus, schedule: diff.NoiseSchedule, cfg: TrainConfig,
                 clips: list[MotionClip] | None = None):
        self.model = model
        self.embedder = embedder
        self.corpus = corpus
        self.schedule = schedule
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
        self.step_count = 0
        self.history: list[dict[str, float]] = []
        pool = clips if clips is not None else corpus.train_clips()
        self.buckets: dict[int, list[MotionClip]] = {}
        for clip in pool:
            self.buckets.setdefault(clip.length, []).append(clip)
        self._lengths = sorted(self.buckets)
        self._bucket_p = np.array(
            [len(self.buckets[L]) for L in self._lengths], dtype=np.float64)
        self._bucket_p /= self._bucket_p.sum()
        self._tower_sums = (module_checksum(embedder.text_encoder),
                            module_checksum(embedder.stick_encoder))

    def _draw_clips(self) -> list[MotionClip]:
        L = self._lengths[self.rng.choice(len(self._lengths), p=self._bucket_p)]
        bucket = self.buckets[L]
        idx = self.rng.integers(len(bucket), size=self.cfg.batch_size)
        return [bucket[i] for i in idx]

    def _lr_at(self, step: int) -> float:
        scale = min(1.0, (step + 1) / max(1, self.cfg.warmup))
        return self.cfg.lr * scale

    def step(self) -> dict[str, float]:
        self.model.train()
        batch = prepare_batch(self._draw_clips(), self.corpus, self.schedule,
                              self.embedder, self.cfg, self.rng)
        losses = compute_losses(self.model, batch, self.cfg.pose_space_loss)
        lr = self._lr_at(self.step_count)
        for group in self.opt.param_groups:
            group["lr"] = lr
        self.opt.zero_grad()
        losses["total"].backward()
        self.opt.step()
        self.step_count += 1

        record = {k: float(v.detach()) for k, v in losses.items() if k != "total"}
        # reported total re-sums the reported parts in the same fixed order
        record["total"] = ((record["start"] + record["middle"])
                           + record["end"]) + record["motion"]
        record["lr"] = lr
        if not math.isfinite(record["total"]):
            raise TrainingDivergedError(
                f"non-finite loss at step {self.step_count}: "
                + ", ".join(f"{k}={v:.4g}" for k, v in record.items()))
        self.history.append(record)
        if self.cfg.checksum_every and self.step_count % self.cfg.checksum_every == 0:
            now = (module_checksum(self.embedder.text_encoder),
                   module_checksum(self.embedder.stick_encoder))
            if now != self._tower_sums:
                raise TrainingDivergedError(
                    "frozen condition towers changed during training")
        return record

    def run(self, steps: int | None = None, log_every: int = 0,
            log=print) -> list[dict[str, float]]:
        n = steps if steps is not None else self.cfg.steps
        for _ in range(n):
            record = self.step()
            if log_every and self.step_count % log_every == 0:
                log(f"step {self.step_count}: "
                    + " ".join(f"{k}={record[k]:.4f}"
                               for k in ("total", "motion", "start", "middle", "end")))
        return self.history

    def trailing_motion_loss(self, window: int = 100) -> float:
        tail = [h["motion"] for h in self.history[-window:]]
        return float(np.mean(tail)) if tail else float("inf")
