"""Closed-form kinematic motion primitives and their text templates.

Every primitive produces per-frame person-frame joints plus a root-height /
forward-step / yaw-increment track; `assemble` integrates those into world
coordinates.  All quantities are analytic functions of the parameters, so
tests can recompute root displacement, nadir depth, or accumulated yaw
independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import skeleton as sk

DEFAULT_FPS = 20
STEP_PERIOD_S = 1.0  # seconds per walking step

ARM_REST = (0.0, 0.08, 0.1)


@dataclass
class Segment:
    joints: np.ndarray        # [L, J, 3] person frame
    root_y: np.ndarray        # [L]
    forward_step: np.ndarray  # [L] per-frame advance along current facing, meters
    dyaw: np.ndarray          # [L] per-frame yaw increment, radians
    clause: str               # text clause, e.g. "walks forward quickly"


@dataclass
class ParamSpec:
    name: str
    lo: float
    hi: float
    default: float
    integer: bool = False
    choices: tuple | None = None  # categorical values override lo/hi


@dataclass
class Primitive:
    name: str
    params: tuple[ParamSpec, ...]
    build: Callable[[dict, int, np.random.Generator], list[Segment]]
    extra_words: tuple[str, ...] = ()


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _bump(s: np.ndarray) -> np.ndarray:
    """0 -> 1 -> 0 profile, exactly 1 at s = 0.5."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * s)


def _envelope(s: np.ndarray, ramp: float = 0.15) -> np.ndarray:
    """Eases oscillations in from rest and back out to rest."""
    return _smoothstep(s / ramp) * _smoothstep((1.0 - s) / ramp)


def _neutral_tracks(L: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    root_y = np.full(L, sk.STANDING_ROOT_HEIGHT)
    return root_y, np.zeros(L), np.zeros(L)


def _frames(duration_s: float, fps: int) -> np.ndarray:
    L = int(round(duration_s * fps))
    return np.arange(L) / (L - 1)


# ---------------------------------------------------------------------------
# base primitives


def _build_walk(p: dict, fps: int, rng: np.random.Generator) -> list[Segment]:
    steps = int(p["steps"])
    speed = float(p["speed"])
    L = int(round(steps * STEP_PERIOD_S * fps))
    s = np.arange(L) / (L - 1)
    t = np.arange(L) / fps
    env = _envelope(s)
    phase = 2.0 * np.pi * 0.5 * t  # one stride (two steps) per 2 s

    amp = 0.25 + 0.18 * speed
    knee_amp = 0.5
    arm_amp = 0.35 * amp

    joints = np.zeros((L, sk.NUM_JOINTS, 3))
    for i in range(L):
        swing = amp * env[i] * np.sin(phase[i])
        knee_l = knee_amp * env[i] * max(0.0, np.sin(phase[i] - 0.5 * np.pi))
        knee_r = knee_amp * env[i] * max(0.0, np.sin(phase[i] + 0.5 * np.pi))
        joints[i] = sk.build_pose(
            l_arm=(-arm_amp * env[i] * np.sin(phase[i]), 0.08, 0.15),
            r_arm=(arm_amp * env[i] * np.sin(phase[i]), 0.08, 0.15),
            l_leg=(swing, knee_l),
            r_leg=(-swing, knee_r),
        )
    root_y = sk.STANDING_ROOT_HEIGHT - 0.018 * env * _bump((s * steps) % 1.0)
    forward = np.full(L, speed / fps)
    forward[0] = 0.0
    clause = _walk_clause(steps, speed, rng)
    return [Segment(joints, root_y, forward, np.zeros(L), clause)]


def _build_turn(p: dict, fps: int, rng: np.random.Generator) -> list[Segment]:
    angle = np.deg2rad(float(p["angle_deg"]))
    s = _frames(2.0, fps)
    L = len(s)
    yaw_profile = angle * _smoothstep(s)
    dyaw = np.diff(yaw_profile, prepend=0.0)
    env = _envelope(s)
    joints = np.zeros((L, sk.NUM_JOINTS, 3))
    for i in range(L):
        shuffle = 0.18 * env[i] * np.sin(2.0 * np.pi * s[i])
        joints[i] = sk.build_pose(
            l_leg=(shuffle, 0.12 * env[i]),
            r_leg=(-shuffle, 0.12 * env[i]),
        )
    root_y, forward, _ = _neutral_tracks(L)
    clause = _turn_clause(float(p["angle_deg"]), rng)
    return [Segment(joints, root_y, forward, dyaw, clause)]


def _build_squat(p: dict, fps: int, rng: np.random.Generator) -> list[Segment]:
    depth = float(p["depth"])
    s = _frames(3.05, fps)  # 61 frames at 20 fps; s = 0.5 lands on the grid
    L = len(s)
    q = _bump(s)
    drop = depth * q
    joints = np.zeros((L, sk.NUM_JOINTS, 3))
    for i in range(L):
        hip_swing, knee_bend = sk.squat_legs(drop[i])
        arm_swing = 1.2 * q[i]
        joints[i] = sk.build_pose(
            torso_pitch=0.25 * q[i],
            l_arm=(arm_swing, 0.08, 0.1),
            r_arm=(arm_swing, 0.08, 0.1),
            l_leg=(hip_swing, knee_bend),
            r_leg=(hip_swing, knee_bend),
        )
    root_y = sk.STANDING_ROOT_HEIGHT - drop
    clause = _squat_clause(depth, rng)
    return [Segment(joints, root_y, np.zeros(L), np.zeros(L), clause)]


def _build_kick(p: dict, fps: int, rng: np.random.Generator) -> list[Segment]:
    height = float(p["height"])
    side = str(p["side"])
    s = _frames(2.25, fps)  # 45 frames at 20 fps
    L = len(s)
    leg_len = sk.THIGH_LEN + sk.SHIN_LEN
    hip_y = sk.STANDING_ROOT_HEIGHT + sk.HIP_OFFSET[1]
    phi_peak = np.arccos(np.clip((hip_y - height) / leg_len, -1.0, 1.0))
    q = _bump(s)
    phi = phi_peak * q
    joints = np.zeros((L, sk.NUM_JOINTS, 3))
    for i in range(L):
        kick_leg = (phi[i], 0.0)
        arm = (0.6 * q[i], 0.08, 0.2)
        if side == "left":
            joints[i] = sk.build_pose(l_leg=kick_leg, r_leg=(0.0, 0.0), r_arm=arm, l_arm=ARM_REST)
        else:
            joints[i] = sk.build_pose(r_leg=kick_leg, l_leg=(0.0, 0.0), l_arm=arm, r_arm=ARM_REST)
    root_y, forward, dyaw = _neutral_tracks(L)
    clause = _kick_clause(height, side, rng)
    return [Segment(joints, root_y, forward, dyaw, clause)]


def _build_wave(p: dict, fps: int, rng: np.random.Generator) -> list[Segment]:
    cycles = int(p["cycles"])
    side = str(p["side"])
    dur = 2.0 + 0.6 * (cycles - 2)
    s = _frames(dur, fps)
    L = len(s)
    raise_prof = _smoothstep(np.minimum(s, 1.0 - s) / 0.2)
    joints = np.zeros((L, sk.NUM_JOINTS, 3))
    for i in range(L):
        abduct = 0.08 + 2.5 * raise_prof[i]
        bend = 0.6 * raise_prof[i] + 0.45 * raise_prof[i] * np.sin(2.0 * np.pi * cycles * s[i])
        wave_arm = (0.0, abduct, bend)
        if side == "left":
            joints[i] = sk.build_pose(l_arm=wave_arm, r_arm=ARM_REST)
        else:
            joints[i] = sk.build_pose(r_arm=wave_arm, l_arm=ARM_REST)
    root_y, forward, dyaw = _neutral_tracks(L)
    clause = _wave_clause(cycles, side, rng)
    return [Segment(joints, root_y, forward, dyaw, clause)]


def _build_jump(p: dict, fps: int, rng: np.random.Generator) -> list[Segment]:
    height = float(p["height"])
    s = _frames(2.45, fps)  # 49 frames at 20 fps; s = 0.5 on the grid
    L = len(s)
    crouch = np.zeros(L)
    flight = np.zeros(L)
    for i, si in enumerate(s):
        if 0.05 <= si <= 0.35:
            crouch[i] = 0.18 * (0.5 - 0.5 * np.cos(2.0 * np.pi * (si - 0.05) / 0.3))
        if 0.65 <= si <= 0.95:
            crouch[i] = 0.18 * (0.5 - 0.5 * np.cos(2.0 * np.pi * (si - 0.65) / 0.3))
        if abs(si - 0.5) <= 0.15:
            flight[i] = height * (1.0 - ((si - 0.5) / 0.15) ** 2)
    joints = np.zeros((L, sk.NUM_JOINTS, 3))
    for i in range(L):
        hip_swing, knee_bend = sk.squat_legs(crouch[i])
        arm_swing = 1.6 * (flight[i] / max(height, 1e-9)) + 0.8 * (crouch[i] / 0.18)
        joints[i] = sk.build_pose(
            l_arm=(arm_swing, 0.08, 0.1),
            r_arm=(arm_swing, 0.08, 0.1),
            l_leg=(hip_swing, knee_bend),
            r_leg=(hip_swing, knee_bend),
        )
    root_y = sk.STANDING_ROOT_HEIGHT - crouch + flight
    clause = _jump_clause(height, rng)
    return [Segment(joints, root_y, np.zeros(L), np.zeros(L), clause)]


# ---------------------------------------------------------------------------
# text templates

STARTERS = ("a person", "someone")

NUM_WORDS = {2: "two", 3: "three", 4: "four", 5: "five", 6: "six"}
ANGLE_WORDS = (
    (30, "thirty"),
    (45, "forty five"),
    (60, "sixty"),
    (90, "ninety"),
    (120, "one hundred and twenty"),
    (180, "one hundred and eighty"),
)


def _pick(options, rng: np.random.Generator):
    return options[int(rng.integers(len(options)))]


def _pace_words(speed: float) -> tuple[str, str]:
    if speed < 1.0:
        return "slow", "slowly"
    if speed > 1.4:
        return "quick", "quickly"
    return "steady", "steadily"


def _walk_options(steps: int, speed: float) -> tuple[str, ...]:
    pace, pace_adv = _pace_words(speed)
    n = NUM_WORDS[steps]
    return (
        f"walks forward at a {pace} pace taking {n} steps",
        f"walks straight ahead with {n} steps",
        f"is walking forwards {pace_adv}",
    )


def _turn_options(angle_deg: float) -> tuple[str, ...]:
    direction = "left" if angle_deg > 0 else "right"
    word = min(ANGLE_WORDS, key=lambda aw: abs(aw[0] - abs(angle_deg)))[1]
    return (
        f"turns {direction} by about {word} degrees",
        f"turns to the {direction}",
        f"rotates {word} degrees to the {direction}",
    )


def _squat_options(depth: float) -> tuple[str, ...]:
    adj = "shallow" if depth < 0.25 else ("half" if depth <= 0.4 else "deep")
    return (
        f"squats down into a {adj} squat and stands back up",
        f"performs a {adj} squat",
        "bends the knees into a squat",
    )


def _kick_options(height: float, side: str) -> tuple[str, ...]:
    adj = "low" if height < 0.5 else ("high" if height > 0.8 else "forward")
    return (
        f"kicks {adj} with the {side} leg",
        f"performs a {adj} {side} kick",
        f"raises the {side} leg in a kick",
    )


def _wave_options(cycles: int, side: str) -> tuple[str, ...]:
    n = NUM_WORDS[cycles]
    return (
        f"waves the {side} hand {n} times",
        f"waves hello with the {side} arm",
        f"raises the {side} arm and waves",
    )


def _jump_options(height: float) -> tuple[str, ...]:
    adj = "a little" if height < 0.3 else "high"
    return (
        f"jumps {adj} straight up",
        "jumps up and lands",
        "crouches and leaps upward",
    )


def _walk_clause(steps, speed, rng) -> str:
    return _pick(_walk_options(steps, speed), rng)


def _turn_clause(angle_deg, rng) -> str:
    return _pick(_turn_options(angle_deg), rng)


def _squat_clause(depth, rng) -> str:
    return _pick(_squat_options(depth), rng)


def _kick_clause(height, side, rng) -> str:
    return _pick(_kick_options(height, side), rng)


def _wave_clause(cycles, side, rng) -> str:
    return _pick(_wave_options(cycles, side), rng)


def _jump_clause(height, rng) -> str:
    return _pick(_jump_options(height), rng)


def render_text(clauses: list[str], rng: np.random.Generator) -> str:
    starter = _pick(STARTERS, rng)
    if len(clauses) == 1:
        return f"{starter} {clauses[0]}"
    joiner = _pick(("then", "and then"), rng)
    return f"{starter} " + f" {joiner} ".join(clauses)


def strip_starter(text: str) -> str:
    """Drop the subject phrase, leaving only the motion description.

    Two texts with equal stripped forms describe the same motion; retrieval
    between them is a coin flip, so dedup and negative masking key on this.
    """
    for starter in sorted(STARTERS, key=len, reverse=True):
        if text.startswith(starter):
            return text[len(starter):].strip()
    return text


# ---------------------------------------------------------------------------
# registry

def _compose(*builders):
    def build(p, fps, rng):
        segs = []
        for b in builders:
            segs.extend(b(p, fps, rng))
        return segs

    return build


_WALK_PARAMS = (
    ParamSpec("steps", 2, 6, 4, integer=True),
    ParamSpec("speed", 0.6, 1.8, 1.2),
)
_SIDE = ParamSpec("side", 0, 0, 0, choices=("left", "right"))

REGISTRY: dict[str, Primitive] = {
    prim.name: prim
    for prim in (
        Primitive("walk", _WALK_PARAMS, _build_walk),
        Primitive("turn", (ParamSpec("angle_deg", -180, 180, 90),), _build_turn),
        Primitive("squat", (ParamSpec("depth", 0.15, 0.5, 0.4),), _build_squat),
        Primitive("kick", (ParamSpec("height", 0.25, 1.1, 0.7), _SIDE), _build_kick),
        Primitive("wave", (ParamSpec("cycles", 2, 5, 3, integer=True), _SIDE), _build_wave),
        Primitive("jump", (ParamSpec("height", 0.15, 0.45, 0.3),), _build_jump),
        Primitive(
            "walk_then_turn",
            (
                ParamSpec("steps", 2, 3, 2, integer=True),
                ParamSpec("speed", 0.6, 1.8, 1.2),
                ParamSpec("angle_deg", -180, 180, 90),
            ),
            _compose(_build_walk, _build_turn),
        ),
        Primitive(
            "walk_then_squat",
            (
                ParamSpec("steps", 2, 2, 2, integer=True),
                ParamSpec("speed", 0.6, 1.8, 1.2),
                ParamSpec("depth", 0.15, 0.5, 0.4),
            ),
            _compose(_build_walk, _build_squat),
        ),
        Primitive(
            "squat_then_jump",
            (
                ParamSpec("depth", 0.15, 0.5, 0.3),
                ParamSpec("height", 0.15, 0.45, 0.3),
            ),
            _compose(_build_squat, _build_jump),
        ),
    )
}


class UnknownPrimitiveError(ValueError):
    pass


class ParamRangeError(ValueError):
    pass


def validate_params(name: str, params: dict) -> dict:
    if name not in REGISTRY:
        raise UnknownPrimitiveError(f"unknown primitive {name!r}")
    prim = REGISTRY[name]
    known = {ps.name for ps in prim.params}
    for key in params:
        if key not in known:
            raise ParamRangeError(f"{name}: unknown parameter {key!r}")
    out = {}
    for ps in prim.params:
        value = params.get(ps.name, ps.default if ps.choices is None else ps.choices[0])
        if ps.choices is not None:
            if value not in ps.choices:
                raise ParamRangeError(f"{name}.{ps.name}: {value!r} not in {ps.choices}")
            out[ps.name] = value
            continue
        value = float(value)
        if ps.integer:
            if value != int(value):
                raise ParamRangeError(f"{name}.{ps.name}: expected integer, got {value}")
            value = int(value)
        if not (ps.lo <= value <= ps.hi):
            raise ParamRangeError(
                f"{name}.{ps.name}: {value} outside [{ps.lo}, {ps.hi}]"
            )
        out[ps.name] = value
    return out


def sample_params(name: str, rng: np.random.Generator) -> dict:
    prim = REGISTRY[name]
    out = {}
    for ps in prim.params:
        if ps.choices is not None:
            out[ps.name] = _pick(ps.choices, rng)
        elif ps.integer:
            out[ps.name] = int(rng.integers(int(ps.lo), int(ps.hi) + 1))
        else:
            out[ps.name] = float(rng.uniform(ps.lo, ps.hi))
    return out


def build_segments(name: str, params: dict, fps: int, rng: np.random.Generator) -> list[Segment]:
    params = validate_params(name, params)
    return REGISTRY[name].build(params, fps, rng)


def assemble(segments: list[Segment]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate segments into (root [L,3], joints_world [L,J,3], yaw [L])."""
    joints_p = np.concatenate([seg.joints for seg in segments])
    root_y = np.concatenate([seg.root_y for seg in segments])
    forward = np.concatenate([seg.forward_step for seg in segments])
    dyaw = np.concatenate([seg.dyaw for seg in segments])
    L = len(root_y)

    yaw = np.cumsum(dyaw)
    root = np.zeros((L, 3))
    root[:, 1] = root_y
    xz = np.zeros((L, 2))
    for i in range(1, L):
        facing = np.array([np.sin(yaw[i]), np.cos(yaw[i])])
        xz[i] = xz[i - 1] + forward[i] * facing
    root[:, 0] = xz[:, 0]
    root[:, 2] = xz[:, 1]

    joints_w = np.empty_like(joints_p)
    for i in range(L):
        joints_w[i] = joints_p[i] @ sk.yaw_matrix(yaw[i]).T
    return root, joints_w, yaw


def all_clause_options() -> list[str]:
    """Every clause any template can emit, across all templates and word slots."""
    out: list[str] = []
    for st in (2, 3, 4, 5, 6):
        for sp in (0.8, 1.2, 1.6):
            out.extend(_walk_options(st, sp))
    for a in (-180, -120, -90, -60, -45, -30, 30, 45, 60, 90, 120, 180):
        out.extend(_turn_options(a))
    for d in (0.2, 0.3, 0.45):
        out.extend(_squat_options(d))
    for h in (0.3, 0.6, 1.0):
        for s in ("left", "right"):
            out.extend(_kick_options(h, s))
    for c in (2, 3, 4, 5):
        for s in ("left", "right"):
            out.extend(_wave_options(c, s))
    for h in (0.2, 0.4):
        out.extend(_jump_options(h))
    return out


def build_vocabulary() -> tuple[str, ...]:
    """Closed vocabulary: every word any template can emit, plus "<pad>" at 0."""
    words: set[str] = set()
    for phrase in all_clause_options() + list(STARTERS) + ["then", "and then"]:
        words.update(tokenize_words(phrase))
    return ("<pad>",) + tuple(sorted(words))


def tokenize_words(text: str) -> list[str]:
    cleaned = "".join(c if (c.isalnum() or c.isspace()) else " " for c in text.lower())
    return cleaned.split()
