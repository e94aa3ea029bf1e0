"""Stickman generation: front projection, ideal strokes, perturbation.

A stickman is six strokes on the unit canvas (x right, y down, pelvis at
the center), each resampled to a fixed number of points.  Projection uses
the body's own pelvis frame, so world translation and yaw never change the
drawing.  Perturbation mimics hand sketching: correlated point jitter,
per-stroke misplacement, and a global scale wobble.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import skeleton as sk

POINTS_PER_STROKE = 32
NUM_STROKES = 6
STROKE_ORDER = ("head", "torso", "left_arm", "right_arm", "left_leg", "right_leg")
CANVAS_FILL = 0.8  # fraction of canvas height the figure occupies

_EPS = 1e-8


class DegeneratePoseError(ValueError):
    """Raised when the pelvis frame cannot be built (collapsed hips or spine)."""


@dataclass
class StickmanStyle:
    jitter_amp: float = 0.012
    smoothness: int = 5          # jitter box-filter width, in points
    misplace_std: float = 0.02
    scale_range: tuple[float, float] = (0.9, 1.1)


DEFAULT_STYLE = StickmanStyle()
IDENTITY_STYLE = StickmanStyle(jitter_amp=0.0, smoothness=1, misplace_std=0.0,
                               scale_range=(1.0, 1.0))


@dataclass
class Stickman:
    strokes: np.ndarray  # [6, P, 2] float64, canvas coords

    def as_array(self) -> np.ndarray:
        return self.strokes


def front_project(joints: np.ndarray) -> np.ndarray:
    """World joints [J,3] -> canvas points [J,2] in the pelvis frame.

    The horizontal axis follows the hip line, the vertical axis the pelvis
    to spine direction orthogonalized against it.  Canvas y grows downward.
    """
    l_hip, r_hip = joints[sk.L_HIP], joints[sk.R_HIP]
    pelvis, spine = joints[sk.PELVIS], joints[sk.SPINE]
    hip_axis = l_hip - r_hip
    hip_norm = np.linalg.norm(hip_axis)
    if hip_norm < _EPS:
        raise DegeneratePoseError("hip joints coincide, no horizontal axis")
    x_axis = hip_axis / hip_norm
    up = spine - pelvis
    up = up - np.dot(up, x_axis) * x_axis
    up_norm = np.linalg.norm(up)
    if up_norm < _EPS:
        raise DegeneratePoseError("spine parallel to hip line, no vertical axis")
    y_axis = up / up_norm

    rel = joints - pelvis
    u = rel @ x_axis
    v = rel @ y_axis
    scale = CANVAS_FILL / sk.chain_height(joints)
    return np.stack([0.5 + u * scale, 0.5 - v * scale], axis=1)


def _ellipse(center: np.ndarray, axis: np.ndarray, n_segments: int = 12) -> np.ndarray:
    """Closed ellipse polyline; major radius along `axis`, 0.7 aspect."""
    ry = np.linalg.norm(axis)
    if ry < _EPS:
        raise DegeneratePoseError("head collapsed onto the neck")
    d = axis / ry
    n = np.array([-d[1], d[0]])
    ry *= 0.9
    rx = 0.7 * ry
    theta = 2.0 * np.pi * np.arange(n_segments + 1) / n_segments
    return center + ry * np.cos(theta)[:, None] * d + rx * np.sin(theta)[:, None] * n


def ideal_strokes(canvas: np.ndarray) -> list[np.ndarray]:
    """Six native-resolution polylines from projected joints [J,2]."""
    head_axis = canvas[sk.HEAD] - canvas[sk.NECK]
    return [
        _ellipse(canvas[sk.HEAD], head_axis),
        canvas[[sk.NECK, sk.CHEST, sk.SPINE, sk.PELVIS]],
        canvas[[sk.L_SHOULDER, sk.L_ELBOW, sk.L_WRIST]],
        canvas[[sk.R_SHOULDER, sk.R_ELBOW, sk.R_WRIST]],
        canvas[[sk.L_HIP, sk.L_KNEE, sk.L_ANKLE]],
        canvas[[sk.R_HIP, sk.R_KNEE, sk.R_ANKLE]],
    ]


def resample_stroke(points: np.ndarray, n: int = POINTS_PER_STROKE) -> np.ndarray:
    """Arc-length uniform resampling of a polyline to n points."""
    points = np.asarray(points, dtype=np.float64)
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    if total < _EPS:
        return np.repeat(points[:1], n, axis=0)
    target = np.linspace(0.0, total, n)
    return np.stack([np.interp(target, arc, points[:, k]) for k in (0, 1)], axis=1)


def ideal_stickman(joints: np.ndarray, n_points: int = POINTS_PER_STROKE) -> Stickman:
    canvas = front_project(joints)
    strokes = [resample_stroke(s, n_points) for s in ideal_strokes(canvas)]
    return Stickman(np.stack(strokes))


def _smoothed_noise(n: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """Box-filtered unit-variance noise [n,2]; filtering keeps the variance."""
    raw = rng.standard_normal((n + width - 1, 2))
    kernel = np.ones(width) / np.sqrt(width)
    return np.stack([np.convolve(raw[:, k], kernel, mode="valid") for k in (0, 1)],
                    axis=1)


def perturb(stickman: Stickman, style: StickmanStyle,
            rng: np.random.Generator) -> Stickman:
    """Hand-sketch perturbation; the identity style returns the input values.

    Per stroke, in fixed order: correlated jitter, then whole-stroke offset.
    Finally one uniform scale about the figure centroid.  Zero-effect style
    fields skip their rng draws, so a given style always consumes the same
    stream regardless of the pose.
    """
    strokes = stickman.strokes.copy()
    n = strokes.shape[1]
    for i in range(NUM_STROKES):
        if style.jitter_amp > 0.0:
            strokes[i] += style.jitter_amp * _smoothed_noise(n, style.smoothness, rng)
        if style.misplace_std > 0.0:
            strokes[i] += style.misplace_std * rng.standard_normal(2)
    lo, hi = style.scale_range
    if not (lo == 1.0 and hi == 1.0):
        factor = rng.uniform(lo, hi)
        centroid = strokes.reshape(-1, 2).mean(axis=0)
        strokes = centroid + factor * (strokes - centroid)
    return Stickman(strokes)


def stickman_from_pose(
    joints: np.ndarray,
    style: StickmanStyle = DEFAULT_STYLE,
    rng: np.random.Generator | None = None,
    n_points: int = POINTS_PER_STROKE,
) -> Stickman:
    """Full pipeline: project, draw ideal strokes, resample, perturb."""
    clean = ideal_stickman(joints, n_points)
    if rng is None:
        return clean
    return perturb(clean, style, rng)


def stickman_to_json(stickman: Stickman) -> dict:
    return {"strokes": [s.tolist() for s in stickman.strokes]}


def stickman_from_json(data: dict) -> Stickman:
    strokes = data.get("strokes")
    if not isinstance(strokes, list) or len(strokes) != NUM_STROKES:
        raise ValueError(f"expected {NUM_STROKES} strokes")
    out = []
    for s in strokes:
        arr = np.asarray(s, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ValueError("each stroke must be a list of at least two [x, y] points")
        # already at the canonical resolution: keep the exact points
        if arr.shape[0] != POINTS_PER_STROKE:
            arr = resample_stroke(arr)
        out.append(arr)
    return Stickman(np.stack(out))


def svg_preview(stickmen: list[Stickman], size: int = 240) -> str:
    """Side-by-side SVG of one or more stickmen; canvas y is already down."""
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size * len(stickmen)}" '
        f'height="{size}" viewBox="0 0 {len(stickmen)} 1">'
    ]
    for k, man in enumerate(stickmen):
        for stroke in man.strokes:
            pts = " ".join(f"{k + x:.4f},{y:.4f}" for x, y in stroke)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="black" '
                f'stroke-width="0.008" stroke-linecap="round"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)
