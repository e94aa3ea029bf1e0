"""Noise schedule, multi-condition guidance mixture, and sampling.

Schedule quantities are float64 numpy with 1-based timestep accessors
(t runs from 1 to T).  Guidance mixes four denoiser passes: (text and
stickman), (stickman only), (text only), (unconditioned), in that order.
During most of the reverse pass a coin decides per step whether the
stickman-only or the text-only branch receives the extra weight; the final
tenth of the steps switches to fixed weights.  Any weight quadruple this
module hands out sums to exactly 1.0 in left-to-right float addition, and
configs for which that cannot hold are rejected up front.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import torch

from .corpus import FeatureStats, MOTION_DIM, features_to_motion
from .denoiser import (ConditionBatch, ConditionCombination, ConditionEmbedder,
                       ConditionRow, NUM_SLOTS, sort_rows)


class NoiseSchedule:
    """Per-step retention factors alpha_t and everything derived from them."""

    def __init__(self, alpha: np.ndarray):
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.ndim != 1 or len(alpha) < 2:
            raise ValueError("schedule needs at least two steps")
        if not ((alpha > 0.0) & (alpha < 1.0)).all():
            raise ValueError("alpha values must lie in (0, 1)")
        self.alpha = alpha
        self.beta = 1.0 - alpha
        self.alpha_bar = np.cumprod(alpha)
        abar_prev = np.concatenate([[1.0], self.alpha_bar[:-1]])
        # posterior stddev; the t=1 step is deterministic by construction
        self.sigma = np.sqrt((1.0 - abar_prev) / (1.0 - self.alpha_bar) * self.beta)

    @property
    def T(self) -> int:
        return len(self.alpha)

    def _check(self, t: int) -> int:
        if not (1 <= t <= self.T):
            raise ValueError(f"timestep {t} outside 1..{self.T}")
        return t - 1

    def alpha_at(self, t: int) -> float:
        return float(self.alpha[self._check(t)])

    def beta_at(self, t: int) -> float:
        return float(self.beta[self._check(t)])

    def alpha_bar_at(self, t: int) -> float:
        return float(self.alpha_bar[self._check(t)])

    def sigma_at(self, t: int) -> float:
        return float(self.sigma[self._check(t)])


def make_schedule(steps: int = 200, alpha_start: float = 0.9999,
                  alpha_end: float = 0.98) -> NoiseSchedule:
    """Retention linear in t, matching the usual motion-diffusion setup."""
    return NoiseSchedule(np.linspace(alpha_start, alpha_end, steps))


def q_sample(x0, t: int, eps, schedule: NoiseSchedule):
    """Forward corruption x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    abar = schedule.alpha_bar_at(t)
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def reconstruct_x0(x_t, t: int, eps_hat, schedule: NoiseSchedule):
    abar = schedule.alpha_bar_at(t)
    return (x_t - np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(abar)


def reverse_step(x_t, t: int, eps_hat, schedule: NoiseSchedule, noise=None):
    """One ancestral step; noise must be omitted (or None) at t = 1."""
    a = schedule.alpha_at(t)
    abar = schedule.alpha_bar_at(t)
    mean = (x_t - (1.0 - a) / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(a)
    if t == 1:
        if noise is not None:
            raise ValueError("the final step takes no noise")
        return mean
    if noise is None:
        raise ValueError(f"step t={t} needs noise")
    return mean + schedule.sigma_at(t) * noise


class MixtureWeights(NamedTuple):
    both: float   # text and stickman
    stick: float  # stickman only
    text: float   # text only
    none: float   # unconditioned

    def left_sum(self) -> float:
        return ((self.both + self.stick) + self.text) + self.none

    def for_combo(self, combo: ConditionCombination) -> float:
        return {
            ConditionCombination.TEXT_AND_STICK: self.both,
            ConditionCombination.STICK_ONLY: self.stick,
            ConditionCombination.TEXT_ONLY: self.text,
            ConditionCombination.NONE: self.none,
        }[combo]


class MixtureConfigError(ValueError):
    pass


@dataclass
class MixtureConfig:
    w: float = 2.5
    p_stick: float = 0.2      # chance per step that the coin favors the stickman
    final_weights: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.w > 1.0:
            raise MixtureConfigError(f"guidance weight must exceed 1, got {self.w}")
        if not (0.0 <= self.p_stick <= 1.0):
            raise MixtureConfigError(f"p_stick {self.p_stick} outside [0, 1]")
        if len(self.final_weights) != 4:
            raise MixtureConfigError("final_weights needs exactly four entries")
        for branch in (MixtureWeights(self.w, self.w, 0.0, 1.0 - 2.0 * self.w),
                       MixtureWeights(self.w, 0.0, self.w, 1.0 - 2.0 * self.w),
                       MixtureWeights(*self.final_weights)):
            if branch.left_sum() != 1.0:
                raise MixtureConfigError(
                    f"weights {tuple(branch)} sum to {branch.left_sum()!r}, not "
                    "exactly 1.0; pick values whose float sum is exact "
                    "(e.g. w = 2.5)")


def stage2_threshold(T: int) -> int:
    """Timesteps at or below this use the fixed final weights."""
    return max(1, T // 10)


def stage_weights(t: int, T: int, cfg: MixtureConfig,
                  rng: np.random.Generator) -> MixtureWeights:
    """Guidance weights for one reverse step; draws the coin in stage one."""
    if t <= stage2_threshold(T):
        return MixtureWeights(*cfg.final_weights)
    w_hat = cfg.w if rng.random() < cfg.p_stick else 0.0
    return MixtureWeights(cfg.w, w_hat, cfg.w - w_hat, 1.0 - 2.0 * cfg.w)


def mix_eps(eps_by_combo: dict[ConditionCombination, torch.Tensor],
            weights: MixtureWeights) -> torch.Tensor:
    """Weighted combination; zero-weight terms are skipped, not evaluated."""
    total = None
    for combo in ConditionCombination:
        w = weights.for_combo(combo)
        if w == 0.0:
            continue
        if combo not in eps_by_combo:
            raise KeyError(f"weight {w} on {combo.name} but no prediction given")
        term = w * eps_by_combo[combo]
        total = term if total is None else total + term
    if total is None:
        raise ValueError("all mixture weights are zero")
    return total


# ---------------------------------------------------------------------------
# sampling


@dataclass
class GenerationRequest:
    length: int
    tokens: np.ndarray | None = None
    stickmen: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.tokens is not None and len(self.tokens) == 0:
            self.tokens = None
        # a request with neither text nor stickmen is allowed: it samples
        # unconditionally
        for slot in self.stickmen:
            if not (0 <= slot < NUM_SLOTS):
                raise ValueError(f"stickman slot {slot} outside 0..{NUM_SLOTS - 1}")


@dataclass
class GenerationResult:
    features: np.ndarray               # [L, D] denormalized float32
    root: np.ndarray                   # [L, 3]
    joints: np.ndarray                 # [L, J, 3] root-relative
    index_logits: np.ndarray | None    # [L, 3] when a stickman row existed
    slot_argmax: dict[int, int]        # provided slot -> most likely frame
    weight_trace: list[MixtureWeights] | None = None


def effective_combo(combo: ConditionCombination, has_text: bool,
                    has_stick: bool) -> ConditionCombination:
    """Downgrades a mixture branch to what the request can actually supply."""
    want_text = combo.has_text and has_text
    want_stick = combo.has_stick and has_stick
    if want_text and want_stick:
        return ConditionCombination.TEXT_AND_STICK
    if want_text:
        return ConditionCombination.TEXT_ONLY
    if want_stick:
        return ConditionCombination.STICK_ONLY
    return ConditionCombination.NONE


def _request_rows(req: GenerationRequest) -> dict[ConditionCombination, ConditionRow]:
    has_text = req.tokens is not None
    has_stick = bool(req.stickmen)
    rows = {}
    for combo in ConditionCombination:
        eff = effective_combo(combo, has_text, has_stick)
        if eff in rows:
            continue
        rows[eff] = ConditionRow(
            combo=eff,
            tokens=req.tokens if eff.has_text else None,
            stickmen=dict(req.stickmen) if eff.has_stick else {},
        )
    return rows


def _aggregate_weights(weights: MixtureWeights, has_text: bool, has_stick: bool
                       ) -> dict[ConditionCombination, float]:
    out: dict[ConditionCombination, float] = {}
    for combo in ConditionCombination:
        eff = effective_combo(combo, has_text, has_stick)
        out[eff] = out.get(eff, 0.0) + weights.for_combo(combo)
    return out


def generate_batch(
    model,
    embedder: ConditionEmbedder,
    schedule: NoiseSchedule,
    stats: FeatureStats,
    requests: list[GenerationRequest],
    mixture: MixtureConfig,
    seed: int,
    trace: bool = False,
    on_step=None,
) -> list[GenerationResult]:
    """Reverse diffusion for same-length requests in one fused batch.

    Each request owns an rng stream derived from (seed, request index), so
    results do not depend on how requests are grouped.  Draw order per
    request: initial noise, then per step the stage-one coin followed by the
    ancestral noise (none at t = 1).
    """
    if not requests:
        return []
    L = requests[0].length
    if any(r.length != L for r in requests):
        raise ValueError("generate_batch needs equal-length requests")
    model.eval()

    rngs = [np.random.default_rng([seed, i]) for i in range(len(requests))]
    per_req_rows = [_request_rows(r) for r in requests]
    flat_rows, owners = [], []
    for i, rows in enumerate(per_req_rows):
        for combo, row in sorted(rows.items()):
            flat_rows.append(row)
            owners.append((i, combo))
    sorted_rows, inverse = sort_rows(flat_rows)
    cond = embedder(sorted_rows)
    # row index in the sorted batch for (request, combo), and the reverse map
    row_of = {owners[k]: int(inverse[k]) for k in range(len(flat_rows))}
    sorted_owner = [0] * len(flat_rows)
    for k in range(len(flat_rows)):
        sorted_owner[int(inverse[k])] = owners[k][0]

    x = np.stack([rngs[i].standard_normal((L, MOTION_DIM)) for i in range(len(requests))])
    traces = [[] for _ in requests] if trace else None
    final_logits: list[np.ndarray | None] = [None] * len(requests)

    with torch.no_grad():
        for t in range(schedule.T, 0, -1):
            x_rows = torch.as_tensor(x[sorted_owner], dtype=torch.float32)
            t_vec = torch.full((len(flat_rows),), t, dtype=torch.long)
            out = model(x_rows, t_vec, cond)
            eps_rows = out.eps.numpy().astype(np.float64)

            for i, req in enumerate(requests):
                has_text = req.tokens is not None
                has_stick = bool(req.stickmen)
                weights = stage_weights(t, schedule.T, mixture, rngs[i])
                if traces is not None:
                    traces[i].append(weights)
                agg = _aggregate_weights(weights, has_text, has_stick)
                eps_mix = None
                for combo, w in agg.items():
                    if w == 0.0:
                        continue
                    term = w * eps_rows[row_of[(i, combo)]]
                    eps_mix = term if eps_mix is None else eps_mix + term
                noise = rngs[i].standard_normal((L, MOTION_DIM)) if t > 1 else None
                x[i] = reverse_step(x[i], t, eps_mix, schedule, noise)

                if t == 1 and has_stick:
                    pick = (ConditionCombination.TEXT_AND_STICK if has_text
                            else ConditionCombination.STICK_ONLY)
                    final_logits[i] = out.index_logits[row_of[(i, pick)]].numpy()

            if on_step is not None:
                on_step(schedule.T - t + 1, schedule.T)

    results = []
    for i, req in enumerate(requests):
        feats = stats.denormalize(x[i].astype(np.float32))
        root, joints = features_to_motion(feats)
        logits = final_logits[i]
        slot_argmax = {}
        if logits is not None:
            for slot in sorted(req.stickmen):
                slot_argmax[slot] = int(np.argmax(logits[:, slot]))
        results.append(GenerationResult(
            features=feats, root=root, joints=joints,
            index_logits=logits, slot_argmax=slot_argmax,
            weight_trace=traces[i] if traces is not None else None))
    return results


def generate(
    model,
    embedder: ConditionEmbedder,
    schedule: NoiseSchedule,
    stats: FeatureStats,
    request: GenerationRequest,
    mixture: MixtureConfig,
    seed: int,
    trace: bool = False,
    on_step=None,
) -> GenerationResult:
    return generate_batch(model, embedder, schedule, stats, [request],
                          mixture, seed, trace=trace, on_step=on_step)[0]
