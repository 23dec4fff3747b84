"""Parametric capsule bodies, linear blend skinning, and bone colliders.

The six build labels are engine constants for desk-scale benchmarking; they
are not measurements of any particular person or dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rotations as rot
from .kinematics import Pose, Skeleton, default_skeleton, forward_kinematics
from .mesh import TriMesh, merge_meshes
from .primitives import capsule_mesh


@dataclass(frozen=True)
class Capsule:
    """Collision capsule: segment from p0 to p1 with a radius."""

    p0: np.ndarray
    p1: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float))
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=float))
        if self.radius <= 0:
            raise ValueError("capsule radius must be positive")


@dataclass(frozen=True)
class BodyBuild:
    height: float
    shoulder_scale: float
    torso_scale: float
    limb_scale: float
    hip_scale: float


BUILD_CATALOG: dict[str, BodyBuild] = {
    "female_small": BodyBuild(1.55, 0.92, 0.90, 0.88, 1.06),
    "female_average": BodyBuild(1.63, 0.97, 1.00, 1.00, 1.08),
    "female_large": BodyBuild(1.70, 1.02, 1.22, 1.18, 1.10),
    "male_small": BodyBuild(1.65, 1.04, 0.95, 0.92, 1.00),
    "male_average": BodyBuild(1.75, 1.10, 1.08, 1.05, 1.00),
    "male_large": BodyBuild(1.86, 1.16, 1.30, 1.25, 1.02),
}

# Base capsule radius per bone (child joint name -> radius at average build).
# Torso-group radii scale with torso girth, limb-group with limb girth.
_BONE_RADII = {
    "left_hip": 0.095,
    "right_hip": 0.095,
    "spine1": 0.125,
    "spine2": 0.130,
    "spine3": 0.125,
    "neck": 0.055,
    "left_collar": 0.070,
    "right_collar": 0.070,
    "head": 0.088,
    "left_shoulder": 0.060,
    "right_shoulder": 0.060,
    "left_elbow": 0.046,
    "right_elbow": 0.046,
    "left_wrist": 0.038,
    "right_wrist": 0.038,
    "left_hand": 0.032,
    "right_hand": 0.032,
    "left_knee": 0.077,
    "right_knee": 0.077,
    "left_ankle": 0.056,
    "right_ankle": 0.056,
    "left_foot": 0.042,
    "right_foot": 0.042,
}
_TORSO_BONES = {
    "left_hip", "right_hip", "spine1", "spine2", "spine3",
    "neck", "left_collar", "right_collar", "head",
}


@dataclass(frozen=True)
class SkinnedBody:
    """Rest-pose template mesh bound to a skeleton by per-vertex weights."""

    template: TriMesh
    skeleton: Skeleton
    weights: np.ndarray  # (V, J), rows sum to 1, at most 4 non-zeros per row
    build_label: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.shape != (self.template.num_vertices, self.skeleton.num_joints):
            raise ValueError("weights must be (num_vertices, num_joints)")
        if np.any(w < 0):
            raise ValueError("skinning weights must be non-negative")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("skinning weights must sum to 1 per vertex")
        if np.any((w > 0).sum(axis=1) > 4):
            raise ValueError("at most 4 joint influences per vertex")

    def rest_transforms(self) -> tuple[np.ndarray, np.ndarray]:
        return forward_kinematics(self.skeleton, Pose.rest(self.skeleton))

    @property
    def height(self) -> float:
        return BUILD_CATALOG[self.build_label].height


def body_skeleton(build_label: str) -> Skeleton:
    """Skeleton for a build: default joints scaled to the label's proportions."""
    if build_label not in BUILD_CATALOG:
        raise ValueError(f"unknown build label {build_label!r}; choose from {sorted(BUILD_CATALOG)}")
    b = BUILD_CATALOG[build_label]
    sk = default_skeleton(b.height)
    offsets = sk.rest_offsets.copy()
    names = list(sk.joint_names)
    for side in ("left", "right"):
        offsets[names.index(f"{side}_hip"), 0] *= b.hip_scale
        offsets[names.index(f"{side}_collar"), 0] *= b.shoulder_scale
        offsets[names.index(f"{side}_shoulder"), 0] *= b.shoulder_scale
    sk = Skeleton(sk.joint_names, sk.parents, offsets)
    # Re-normalize: girth tweaks leave height along y untouched, but keep exact.
    return sk.scaled(b.height / sk.rest_height())


def bone_radius(build_label: str, child_joint_name: str) -> float:
    b = BUILD_CATALOG[build_label]
    base = _BONE_RADII[child_joint_name]
    scale = b.torso_scale if child_joint_name in _TORSO_BONES else b.limb_scale
    return base * scale


def body_capsules(
    skeleton: Skeleton,
    build_label: str,
    joint_positions: np.ndarray | None = None,
    extra_radius: float = 0.0,
) -> list[Capsule]:
    """One capsule per bone at the given (default: rest) joint positions."""
    if joint_positions is None:
        joint_positions, _ = forward_kinematics(skeleton, Pose.rest(skeleton))
    caps = []
    for j in range(1, skeleton.num_joints):
        p = skeleton.parents[j]
        r = bone_radius(build_label, skeleton.joint_names[j])
        caps.append(Capsule(joint_positions[p], joint_positions[j], r + extra_radius))
    return caps


def _segment_distances(points: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    d = p1 - p0
    denom = float(d @ d)
    if denom < 1e-18:
        return np.linalg.norm(points - p0, axis=-1)
    t = np.clip(((points - p0) @ d) / denom, 0.0, 1.0)
    closest = p0 + t[:, None] * d[None, :]
    return np.linalg.norm(points - closest, axis=-1)


def _falloff_weights(vertices: np.ndarray, skeleton: Skeleton, capsules: list[Capsule], sigma: float = 0.04) -> np.ndarray:
    """Nearest-bone weights with gaussian falloff, 4 influences, normalized.

    Bone j's influence is credited to the parent joint of bone (parent -> j),
    which is the joint whose transform moves that bone under FK.
    """
    n = len(vertices)
    j_count = skeleton.num_joints
    dist = np.full((n, j_count), np.inf)
    for bone_child, cap in enumerate(capsules, start=1):
        owner = skeleton.parents[bone_child]
        d = _segment_distances(vertices, cap.p0, cap.p1) - cap.radius
        dist[:, owner] = np.minimum(dist[:, owner], d)
    order = np.argsort(dist, axis=1)[:, :4]
    picked = np.take_along_axis(dist, order, axis=1)
    scores = np.exp(-((picked - picked[:, :1]) / sigma) ** 2)
    scores /= scores.sum(axis=1, keepdims=True)
    weights = np.zeros((n, j_count))
    np.put_along_axis(weights, order, scores, axis=1)
    return weights


def build_parametric_body(build_label: str, skeleton: Skeleton | None = None) -> SkinnedBody:
    """Capsule-per-bone body template with smooth nearest-bone skin weights."""
    skeleton = skeleton if skeleton is not None else body_skeleton(build_label)
    if build_label not in BUILD_CATALOG:
        raise ValueError(f"unknown build label {build_label!r}; choose from {sorted(BUILD_CATALOG)}")
    capsules = body_capsules(skeleton, build_label)
    pieces = [capsule_mesh(c.p0, c.p1, c.radius, n_theta=14, n_axial=3, n_cap=3) for c in capsules]
    template = merge_meshes(pieces)
    weights = _falloff_weights(template.vertices, skeleton, capsules)
    return SkinnedBody(template, skeleton, weights, build_label)


def skin_lbs(body: SkinnedBody, positions: np.ndarray, orientations: np.ndarray) -> TriMesh:
    """Linear blend skinning of the template under posed joint transforms.

    positions (J, 3) and orientations (J, 4) come from forward_kinematics on
    the body's skeleton. At the rest pose the template is returned unchanged.
    """
    sk = body.skeleton
    if positions.shape != (sk.num_joints, 3) or orientations.shape != (sk.num_joints, 4):
        raise ValueError("transforms do not match the body's skeleton")
    rest_pos, rest_orient = body.rest_transforms()
    out = np.zeros_like(body.template.vertices)
    v = body.template.vertices
    for j in range(sk.num_joints):
        w = body.weights[:, j]
        idx = np.nonzero(w)[0]
        if len(idx) == 0:
            continue
        # x -> R_j R_rest^-1 (x - p_rest) + p_j
        q = rot.multiply(orientations[j], rot.conjugate(rest_orient[j]))
        moved = rot.rotate(q, v[idx] - rest_pos[j]) + positions[j]
        out[idx] += w[idx, None] * moved
    return body.template.with_vertices(out)
