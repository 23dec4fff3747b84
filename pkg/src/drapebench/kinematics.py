"""Skeleton representation, forward kinematics, and procedural motion clips.

Conventions: right-handed coordinates, y up, z forward, units in meters.
Local joint rotations are parent-relative unit quaternions (w, x, y, z).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rotations as rot

MOTION_CLASSES = ("basic", "fast", "extreme")

# SMPL-style 24-joint body. Offsets are a neutral T-pose template that gets
# uniformly rescaled so the rest-pose joint extent is exactly the requested
# height. +x is the subject's left, +y up, +z forward.
SMPL_JOINT_NAMES = (
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hand",
    "right_hand",
)

SMPL_PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21)

_TEMPLATE_OFFSETS = np.array(
    [
        [0.000, 0.000, 0.000],   # pelvis (root)
        [+0.085, -0.080, 0.000],  # left_hip
        [-0.085, -0.080, 0.000],  # right_hip
        [0.000, +0.120, 0.000],   # spine1
        [0.000, -0.400, 0.000],   # left_knee
        [0.000, -0.400, 0.000],   # right_knee
        [0.000, +0.130, 0.000],   # spine2
        [0.000, -0.410, 0.000],   # left_ankle
        [0.000, -0.410, 0.000],   # right_ankle
        [0.000, +0.055, 0.000],   # spine3
        [0.000, -0.060, +0.120],  # left_foot
        [0.000, -0.060, +0.120],  # right_foot
        [0.000, +0.210, 0.000],   # neck
        [+0.075, +0.115, 0.000],  # left_collar
        [-0.075, +0.115, 0.000],  # right_collar
        [0.000, +0.065, 0.000],   # head
        [+0.095, 0.000, 0.000],   # left_shoulder
        [-0.095, 0.000, 0.000],   # right_shoulder
        [+0.260, 0.000, 0.000],   # left_elbow
        [-0.260, 0.000, 0.000],   # right_elbow
        [+0.250, 0.000, 0.000],   # left_wrist
        [-0.250, 0.000, 0.000],   # right_wrist
        [+0.080, 0.000, 0.000],   # left_hand
        [-0.080, 0.000, 0.000],   # right_hand
    ]
)


@dataclass(frozen=True)
class Skeleton:
    """Joint hierarchy with fixed parent-frame rest offsets.

    The benchmark body is the 24-joint set from :func:`default_skeleton`;
    arbitrary joint counts are allowed so externally parsed hierarchies can be
    represented too.
    """

    joint_names: tuple[str, ...]
    parents: tuple[int, ...]
    rest_offsets: np.ndarray  # (J, 3)

    def __post_init__(self):
        offsets = np.asarray(self.rest_offsets, dtype=float)
        object.__setattr__(self, "rest_offsets", offsets)
        j = len(self.joint_names)
        if len(self.parents) != j or offsets.shape != (j, 3):
            raise ValueError("joint_names, parents and rest_offsets disagree on joint count")
        roots = [i for i, p in enumerate(self.parents) if p < 0]
        if roots != [0]:
            raise ValueError("joint 0 must be the unique root")
        for i, p in enumerate(self.parents[1:], start=1):
            if not 0 <= p < i:
                raise ValueError(f"parent of joint {i} must precede it (got {p})")
            if np.linalg.norm(offsets[i]) == 0.0:
                raise ValueError(f"non-root joint {i} has zero rest offset")

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    def children(self, joint: int) -> list[int]:
        return [i for i, p in enumerate(self.parents) if p == joint]

    def primary_child(self, joint: int) -> int | None:
        """Child whose rest bone is longest; used for swing recovery."""
        kids = self.children(joint)
        if not kids:
            return None
        lengths = [np.linalg.norm(self.rest_offsets[c]) for c in kids]
        return kids[int(np.argmax(lengths))]

    def rest_height(self) -> float:
        pos, _ = forward_kinematics(self, Pose.rest(self))
        return float(pos[:, 1].max() - pos[:, 1].min())

    def scaled(self, factor: float) -> "Skeleton":
        return replace(self, rest_offsets=self.rest_offsets * factor)


@dataclass(frozen=True)
class Pose:
    """One frame: world root translation plus per-joint local rotations."""

    root_translation: np.ndarray  # (3,)
    local_rotations: np.ndarray   # (J, 4) unit quaternions, w first

    def __post_init__(self):
        object.__setattr__(self, "root_translation", np.asarray(self.root_translation, dtype=float))
        q = np.asarray(self.local_rotations, dtype=float)
        object.__setattr__(self, "local_rotations", q)
        norms = np.linalg.norm(q, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("local rotations must be unit quaternions (within 1e-9)")

    @staticmethod
    def rest(skeleton: Skeleton, root_translation=(0.0, 0.0, 0.0)) -> "Pose":
        q = np.zeros((skeleton.num_joints, 4))
        q[:, 0] = 1.0
        return Pose(np.asarray(root_translation, dtype=float), q)

    @property
    def num_joints(self) -> int:
        return self.local_rotations.shape[0]


@dataclass(frozen=True)
class MotionSequence:
    skeleton: Skeleton
    fps: float
    frames: tuple[Pose, ...]
    motion_class: str = "basic"

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if len(self.frames) < 1:
            raise ValueError("a motion sequence needs at least one frame")
        if self.motion_class not in MOTION_CLASSES:
            raise ValueError(f"motion_class must be one of {MOTION_CLASSES}")
        j = self.skeleton.num_joints
        for k, f in enumerate(self.frames):
            if f.num_joints != j:
                raise ValueError(f"frame {k} has {f.num_joints} joints, skeleton has {j}")
        object.__setattr__(self, "frames", tuple(self.frames))

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    def joint_positions(self) -> np.ndarray:
        """Ground-truth joint positions for every frame, shape (T, J, 3)."""
        return np.stack([forward_kinematics(self.skeleton, f)[0] for f in self.frames])


def forward_kinematics(skeleton: Skeleton, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    """Global joint positions (J, 3) and orientations (J, 4) for one pose.

    Child position = parent position + parent orientation applied to the rest
    offset; orientations compose down the chain.
    """
    j = skeleton.num_joints
    if pose.num_joints != j:
        raise ValueError(f"pose has {pose.num_joints} joints, skeleton has {j}")
    positions = np.empty((j, 3))
    orientations = np.empty((j, 4))
    positions[0] = pose.root_translation
    orientations[0] = pose.local_rotations[0]
    for i in range(1, j):
        p = skeleton.parents[i]
        positions[i] = positions[p] + rot.rotate(orientations[p], skeleton.rest_offsets[i])
        orientations[i] = rot.multiply(orientations[p], pose.local_rotations[i])
    return positions, orientations


def sequence_transforms(seq: MotionSequence) -> tuple[np.ndarray, np.ndarray]:
    """FK over all frames: positions (T, J, 3) and orientations (T, J, 4)."""
    pos = []
    orient = []
    for f in seq.frames:
        p, q = forward_kinematics(seq.skeleton, f)
        pos.append(p)
        orient.append(q)
    return np.stack(pos), np.stack(orient)


def default_skeleton(height: float = 1.70) -> Skeleton:
    """The built-in 24-joint body scaled so rest joint extent equals height."""
    raw = Skeleton(SMPL_JOINT_NAMES, SMPL_PARENTS, _TEMPLATE_OFFSETS.copy())
    return raw.scaled(height / raw.rest_height())


def rescale_to_height(seq: MotionSequence, target_height: float) -> MotionSequence:
    """Uniformly rescale offsets and root translations; rotations unchanged."""
    current = seq.skeleton.rest_height()
    if current <= 0.0:
        raise ValueError("skeleton rest height is zero; cannot rescale")
    factor = target_height / current
    skeleton = seq.skeleton.scaled(factor)
    frames = tuple(
        Pose(f.root_translation * factor, f.local_rotations) for f in seq.frames
    )
    return MotionSequence(skeleton, seq.fps, frames, seq.motion_class)


def _standing_root_height(skeleton: Skeleton) -> float:
    pos, _ = forward_kinematics(skeleton, Pose.rest(skeleton))
    return float(-pos[:, 1].min())


def procedural_motion(
    motion_class: str,
    duration: float,
    fps: float,
    seed: int,
    skeleton: Skeleton | None = None,
) -> MotionSequence:
    """Deterministic synthetic clips for the three motion intensities.

    basic: walk-cycle sinusoid swings below 45 deg and 1 Hz. fast: the same
    joints at 2-4 Hz with up to 90 deg amplitude. extreme: quasi-static ramps
    pushing hips, knees and spine toward joint limits (knee flexion exceeds
    120 deg mid-clip).

    Only single-child joints are driven and every rotation axis is
    perpendicular to the child bone, so clips are pure-swing: marker-based
    reconstruction and swing angle recovery are exact on them.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if motion_class not in MOTION_CLASSES:
        raise ValueError(f"unknown motion class {motion_class!r}")
    skeleton = skeleton if skeleton is not None else default_skeleton()
    names = {n: i for i, n in enumerate(skeleton.joint_names)}
    rng = np.random.default_rng(seed)
    n_frames = max(2, int(round(duration * fps)))
    t = np.arange(n_frames) / fps
    root_y = _standing_root_height(skeleton)

    x, y, z = np.eye(3)
    joint_angle = {}  # joint index -> (axis, angles over time, radians)

    if motion_class in ("basic", "fast"):
        if motion_class == "basic":
            f = rng.uniform(0.6, 0.95)
            a_hip = np.deg2rad(rng.uniform(18.0, 32.0))
            a_knee = np.deg2rad(rng.uniform(25.0, 44.0))
            speed = rng.uniform(0.5, 1.1)
        else:
            f = rng.uniform(2.0, 3.8)
            a_hip = np.deg2rad(rng.uniform(45.0, 75.0))
            a_knee = np.deg2rad(rng.uniform(55.0, 88.0))
            speed = rng.uniform(1.8, 3.0)
        w = 2.0 * np.pi * f
        swing = np.sin(w * t)
        joint_angle[names["left_hip"]] = (x, a_hip * swing)
        joint_angle[names["right_hip"]] = (x, -a_hip * swing)
        # Knees flex (never hyper-extend); peak while the same-side leg swings back.
        joint_angle[names["left_knee"]] = (x, a_knee * 0.5 * (1.0 - np.cos(w * t + np.pi)))
        joint_angle[names["right_knee"]] = (x, a_knee * 0.5 * (1.0 - np.cos(w * t)))
        # Arms counter-swing about the vertical axis, elbows flex slightly.
        a_arm = 0.55 * a_hip
        joint_angle[names["left_shoulder"]] = (y, -a_arm * swing)
        joint_angle[names["right_shoulder"]] = (y, -a_arm * swing)
        joint_angle[names["left_elbow"]] = (y, np.deg2rad(12.0) * (1.0 - np.cos(w * t)) * 0.5)
        joint_angle[names["right_elbow"]] = (y, -np.deg2rad(12.0) * (1.0 - np.cos(w * t + np.pi)) * 0.5)
        joint_angle[names["spine1"]] = (z, np.deg2rad(4.0) * swing)
        joint_angle[names["neck"]] = (z, -np.deg2rad(3.0) * swing)
        root = np.stack([np.zeros_like(t), root_y + 0.02 * np.sin(2 * w * t), speed * t], axis=-1)
    else:
        # Slow ramp peaking mid-clip: deep crouch with spine and arm involvement.
        ramp = np.sin(np.pi * t / duration) ** 2
        a_knee = np.deg2rad(rng.uniform(125.0, 145.0))
        a_hip = np.deg2rad(rng.uniform(95.0, 115.0))
        a_spine = np.deg2rad(rng.uniform(25.0, 40.0))
        joint_angle[names["left_knee"]] = (x, a_knee * ramp)
        joint_angle[names["right_knee"]] = (x, a_knee * ramp)
        joint_angle[names["left_hip"]] = (x, -a_hip * ramp)
        joint_angle[names["right_hip"]] = (x, -a_hip * ramp)
        joint_angle[names["spine1"]] = (x, -a_spine * 0.6 * ramp)
        joint_angle[names["spine2"]] = (x, -a_spine * 0.4 * ramp)
        joint_angle[names["left_shoulder"]] = (z, np.deg2rad(50.0) * ramp)
        joint_angle[names["right_shoulder"]] = (z, -np.deg2rad(50.0) * ramp)
        root = np.stack(
            [np.zeros_like(t), root_y - 0.35 * root_y * ramp, np.zeros_like(t)], axis=-1
        )

    frames = []
    for k in range(n_frames):
        q = np.zeros((skeleton.num_joints, 4))
        q[:, 0] = 1.0
        for j, (axis, angles) in joint_angle.items():
            q[j] = rot.from_axis_angle(axis, float(angles[k]))
        frames.append(Pose(root[k], q))
    return MotionSequence(skeleton, fps, tuple(frames), motion_class)


def _fit_rotation(rest_dirs: np.ndarray, obs_dirs: np.ndarray) -> np.ndarray:
    """Orthogonal Procrustes fit mapping unit rest directions onto observed ones."""
    h = obs_dirs.T @ rest_dirs
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(u @ vt))
    return rot.from_matrix(u @ np.diag([1.0, 1.0, d]) @ vt)


def poses_from_joint_positions(
    skeleton: Skeleton,
    positions: np.ndarray,
    valid: np.ndarray | None = None,
) -> tuple[list[Pose], np.ndarray]:
    """Recover parent-relative swing poses from per-frame joint positions.

    Each joint's local rotation is the minimal rotation (in its parent's
    frame) aligning the rest direction of its primary bone with the observed
    one; twist about the bone is left at rest. The root, whose parent frame is
    the world, is fit over all of its child bones so the recovery is
    equivariant under rigid motions of the input.

    Returns the poses plus an (T, J) mask of joints whose rotation was
    actually observed (invalid or leaf joints fall back to identity).
    """
    positions = np.asarray(positions, dtype=float)
    t_count, j_count = positions.shape[0], positions.shape[1]
    if j_count != skeleton.num_joints:
        raise ValueError("positions do not match the skeleton's joint count")
    if valid is None:
        valid = np.ones((t_count, j_count), dtype=bool)
    else:
        valid = np.broadcast_to(np.asarray(valid, dtype=bool), (t_count, j_count))
    primary = [skeleton.primary_child(j) for j in range(j_count)]
    root_kids = skeleton.children(0)
    poses = []
    observed = np.zeros((t_count, j_count), dtype=bool)
    for t in range(t_count):
        p = positions[t]
        ok = valid[t]
        locals_q = np.zeros((j_count, 4))
        locals_q[:, 0] = 1.0
        globals_q = np.zeros((j_count, 4))
        # Root: all usable child bones vote for its orientation.
        kids = [c for c in root_kids if ok[0] and ok[c] and np.linalg.norm(p[c] - p[0]) > 1e-12]
        if len(kids) >= 2:
            rest = np.stack([skeleton.rest_offsets[c] for c in kids])
            rest /= np.linalg.norm(rest, axis=1, keepdims=True)
            obs = np.stack([p[c] - p[0] for c in kids])
            obs /= np.linalg.norm(obs, axis=1, keepdims=True)
            locals_q[0] = _fit_rotation(rest, obs)
            observed[t, 0] = True
        elif len(kids) == 1:
            c = kids[0]
            locals_q[0] = rot.between(skeleton.rest_offsets[c], p[c] - p[0])
            observed[t, 0] = True
        globals_q[0] = locals_q[0]
        for j in range(1, j_count):
            parent = skeleton.parents[j]
            c = primary[j]
            if c is not None and ok[j] and ok[c]:
                d_obs = p[c] - p[j]
                if np.linalg.norm(d_obs) > 1e-12:
                    d_parent = rot.rotate(rot.conjugate(globals_q[parent]), d_obs)
                    locals_q[j] = rot.between(skeleton.rest_offsets[c], d_parent)
                    observed[t, j] = True
            globals_q[j] = rot.multiply(globals_q[parent], locals_q[j])
        root_t = p[0] if ok[0] else np.zeros(3)
        poses.append(Pose(root_t, locals_q))
    return poses, observed


def max_joint_speed(seq: MotionSequence) -> float:
    """Largest per-joint angular speed (rad/s) between consecutive frames."""
    best = 0.0
    for a, b in zip(seq.frames, seq.frames[1:]):
        dq = rot.multiply(rot.conjugate(a.local_rotations), b.local_rotations)
        best = max(best, float(rot.angle_of(dq).max()) * seq.fps)
    return best


def max_joint_angle(seq: MotionSequence) -> float:
    """Largest per-joint rotation angle (radians) over the clip."""
    return max(float(rot.angle_of(f.local_rotations).max()) for f in seq.frames)
