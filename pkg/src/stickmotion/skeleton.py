"""Fixed 17-joint skeleton shared by every synthetic corpus.

Joint positions are root-relative (pelvis at the origin) and expressed in
world axes.  The canonical person frame used by the kinematic generators is
x = person's left, y = up, z = facing direction; a yaw rotation about y maps
person-frame joints to world axes.
"""

from __future__ import annotations

import numpy as np

JOINT_NAMES = (
    "pelvis",
    "spine",
    "chest",
    "neck",
    "head",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_hip",
    "r_knee",
    "r_ankle",
)

NUM_JOINTS = len(JOINT_NAMES)

PELVIS, SPINE, CHEST, NECK, HEAD = 0, 1, 2, 3, 4
L_SHOULDER, L_ELBOW, L_WRIST = 5, 6, 7
R_SHOULDER, R_ELBOW, R_WRIST = 8, 9, 10
L_HIP, L_KNEE, L_ANKLE = 11, 12, 13
R_HIP, R_KNEE, R_ANKLE = 14, 15, 16

# parent index per joint, -1 for the root
PARENTS = (-1, 0, 1, 2, 3, 2, 5, 6, 2, 8, 9, 0, 11, 12, 0, 14, 15)

# segment lengths in meters
SPINE_LEN = 0.22
CHEST_LEN = 0.20
NECK_LEN = 0.18
HEAD_LEN = 0.12
SHOULDER_OFFSET = np.array([0.20, 0.02, 0.0])  # from chest, left side (+x)
UPPER_ARM_LEN = 0.28
FOREARM_LEN = 0.26
HIP_OFFSET = np.array([0.10, -0.05, 0.0])  # from pelvis, left side (+x)
THIGH_LEN = 0.42
SHIN_LEN = 0.40

# pelvis height above ground when standing with straight legs
STANDING_ROOT_HEIGHT = -HIP_OFFSET[1] + THIGH_LEN + SHIN_LEN

# skeleton edges used by stroke construction and by renderers
BONE_EDGES = tuple((PARENTS[j], j) for j in range(1, NUM_JOINTS))


def mirror(offset: np.ndarray) -> np.ndarray:
    out = offset.copy()
    out[0] = -out[0]
    return out


def sagittal_dir(theta: float) -> np.ndarray:
    """Unit vector in the y/z plane: theta=0 points straight down,
    positive theta swings forward (+z)."""
    return np.array([0.0, -np.cos(theta), np.sin(theta)])


def yaw_matrix(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    # positive yaw carries +z toward +x (a left turn seen from above)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def build_pose(
    torso_pitch: float = 0.0,
    l_arm: tuple[float, float, float] = (0.0, 0.08, 0.1),
    r_arm: tuple[float, float, float] = (0.0, 0.08, 0.1),
    l_leg: tuple[float, float] = (0.0, 0.0),
    r_leg: tuple[float, float] = (0.0, 0.0),
    pelvis_drop: float = 0.0,
) -> np.ndarray:
    """Forward kinematics in the person frame -> [J, 3] root-relative joints.

    l_arm/r_arm: (swing, abduct, elbow_bend) in radians.  swing > 0 raises the
    arm forward, abduct > 0 lifts it away from the body, elbow_bend >= 0 folds
    the forearm forward relative to the upper arm.
    l_leg/r_leg: (hip_swing, knee_bend); hip_swing > 0 moves the thigh forward,
    knee_bend >= 0 folds the shin backward relative to the thigh.
    torso_pitch > 0 leans the spine chain forward.
    pelvis_drop only matters for the legs: it is resolved by the callers via
    the root height, so here it leaves joint offsets untouched.
    """
    joints = np.zeros((NUM_JOINTS, 3))

    spine_dir = np.array([0.0, np.cos(torso_pitch), np.sin(torso_pitch)])
    joints[SPINE] = SPINE_LEN * spine_dir
    joints[CHEST] = joints[SPINE] + CHEST_LEN * spine_dir
    joints[NECK] = joints[CHEST] + NECK_LEN * spine_dir
    joints[HEAD] = joints[NECK] + HEAD_LEN * spine_dir

    for side, (swing, abduct, bend) in (("l", l_arm), ("r", r_arm)):
        sgn = 1.0 if side == "l" else -1.0
        sh = CHEST
        offset = SHOULDER_OFFSET if side == "l" else mirror(SHOULDER_OFFSET)
        shoulder = joints[sh] + offset
        upper = _arm_dir(swing, sgn * abduct)
        fore = _arm_dir(swing + bend, sgn * abduct)
        elbow = shoulder + UPPER_ARM_LEN * upper
        wrist = elbow + FOREARM_LEN * fore
        if side == "l":
            joints[L_SHOULDER], joints[L_ELBOW], joints[L_WRIST] = shoulder, elbow, wrist
        else:
            joints[R_SHOULDER], joints[R_ELBOW], joints[R_WRIST] = shoulder, elbow, wrist

    for side, (hip_swing, knee_bend) in (("l", l_leg), ("r", r_leg)):
        offset = HIP_OFFSET if side == "l" else mirror(HIP_OFFSET)
        hip = offset.copy()
        knee = hip + THIGH_LEN * sagittal_dir(hip_swing)
        ankle = knee + SHIN_LEN * sagittal_dir(hip_swing - knee_bend)
        if side == "l":
            joints[L_HIP], joints[L_KNEE], joints[L_ANKLE] = hip, knee, ankle
        else:
            joints[R_HIP], joints[R_KNEE], joints[R_ANKLE] = hip, knee, ankle

    return joints


def _arm_dir(swing: float, abduct: float) -> np.ndarray:
    """Arm segment direction from (sagittal swing, signed abduction)."""
    d = np.array([np.sin(abduct), -np.cos(abduct), 0.0])
    c, s = np.cos(swing), np.sin(swing)
    # rotate the frontal-plane direction forward about the x axis
    return np.array([d[0], c * d[1], -s * d[1]])


def squat_legs(drop: float) -> tuple[float, float]:
    """(hip_swing, knee_bend) putting the ankle straight below the hip while
    the pelvis drops by `drop` meters.  Closed-form two-link IK in the
    sagittal plane; ankle stays planted so the hip-to-ankle distance shrinks
    from THIGH_LEN + SHIN_LEN to that minus `drop`."""
    reach = THIGH_LEN + SHIN_LEN - drop
    reach = max(reach, abs(THIGH_LEN - SHIN_LEN) + 1e-6)
    cos_knee = (THIGH_LEN**2 + SHIN_LEN**2 - reach**2) / (2 * THIGH_LEN * SHIN_LEN)
    knee_inner = np.arccos(np.clip(cos_knee, -1.0, 1.0))
    knee_bend = np.pi - knee_inner
    cos_hip = (THIGH_LEN**2 + reach**2 - SHIN_LEN**2) / (2 * THIGH_LEN * reach)
    hip_swing = np.arccos(np.clip(cos_hip, -1.0, 1.0))
    return float(hip_swing), float(knee_bend)


def chain_height(joints: np.ndarray) -> float:
    """Pose-invariant skeleton height estimate from bone lengths.

    Sum of the spine chain, the mean leg chain, and the head allowance;
    constant for a fixed skeleton regardless of pose, which keeps the canvas
    scale of the front projection stable across frames.
    """
    def d(a, b):
        return float(np.linalg.norm(joints[a] - joints[b]))

    spine_chain = d(PELVIS, SPINE) + d(SPINE, CHEST) + d(CHEST, NECK) + d(NECK, HEAD)
    left = d(PELVIS, L_HIP) + d(L_HIP, L_KNEE) + d(L_KNEE, L_ANKLE)
    right = d(PELVIS, R_HIP) + d(R_HIP, R_KNEE) + d(R_KNEE, R_ANKLE)
    head_allowance = 1.125 * d(NECK, HEAD)
    return spine_chain + 0.5 * (left + right) + head_allowance
