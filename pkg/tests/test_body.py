import numpy as np
import pytest

from drapebench import rotations as rot
from drapebench.body import (
    BUILD_CATALOG,
    Capsule,
    SkinnedBody,
    body_capsules,
    body_skeleton,
    build_parametric_body,
    skin_lbs,
)
from drapebench.kinematics import Pose, Skeleton, forward_kinematics
from drapebench.mesh import enclosed_volume
from drapebench.primitives import capsule_mesh


def test_all_builds_watertight_and_normalized():
    for label in BUILD_CATALOG:
        b = build_parametric_body(label)
        assert b.template.is_watertight, label
        assert enclosed_volume(b.template) > 0, label
        sums = b.weights.sum(axis=1)
        assert np.abs(sums - 1.0).max() < 1e-6
        assert ((b.weights > 0).sum(axis=1) <= 4).all()
        assert abs(b.skeleton.rest_height() - BUILD_CATALOG[label].height) < 1e-9


def test_larger_builds_have_larger_volume():
    for gender in ("female", "male"):
        small = enclosed_volume(build_parametric_body(f"{gender}_small").template)
        large = enclosed_volume(build_parametric_body(f"{gender}_large").template)
        assert large > small


def test_build_deterministic():
    a = build_parametric_body("male_small")
    b = build_parametric_body("male_small")
    assert np.array_equal(a.template.vertices, b.template.vertices)
    assert np.array_equal(a.weights, b.weights)


def test_unknown_label_rejected():
    with pytest.raises(ValueError, match="unknown build label"):
        build_parametric_body("giant")
    with pytest.raises(ValueError):
        body_skeleton("giant")


def test_skin_lbs_rest_identity(body):
    pos, orient = body.rest_transforms()
    out = skin_lbs(body, pos, orient)
    assert np.abs(out.vertices - body.template.vertices).max() < 1e-9


def test_skin_lbs_single_joint_rigid():
    sk = Skeleton(("root", "tip"), (-1, 0), np.array([[0.0, 0, 0], [0.0, 0.4, 0]]))
    mesh = capsule_mesh(np.zeros(3), np.array([0.0, 0.4, 0.0]), 0.05)
    weights = np.zeros((mesh.num_vertices, 2))
    weights[:, 0] = 1.0
    body = SkinnedBody(mesh, sk, weights, "female_average")
    q = np.stack([rot.from_axis_angle([0, 0, 1], np.pi / 2), rot.IDENTITY])
    pose = Pose(np.zeros(3), q)
    pos, orient = forward_kinematics(sk, pose)
    out = skin_lbs(body, pos, orient)
    expected = rot.rotate(q[0], mesh.vertices)
    assert np.abs(out.vertices - expected).max() < 1e-9


def test_skin_lbs_blend_is_half_translation():
    sk = Skeleton(("root", "tip"), (-1, 0), np.array([[0.0, 0, 0], [0.0, 0.4, 0]]))
    mesh = capsule_mesh(np.zeros(3), np.array([0.0, 0.4, 0.0]), 0.05)
    weights = np.full((mesh.num_vertices, 2), 0.5)
    body = SkinnedBody(mesh, sk, weights, "female_average")
    rest_pos, rest_orient = body.rest_transforms()
    # Translate the whole skeleton: joint 0 fixed via identity, joint 1 moved.
    pos = rest_pos.copy()
    pos[1] = pos[1] + np.array([0.2, 0.0, 0.0])
    out = skin_lbs(body, pos, rest_orient)
    shift = out.vertices - mesh.vertices
    assert np.abs(shift - np.array([0.1, 0.0, 0.0])).max() < 1e-9


def test_skin_lbs_rejects_mismatched_transforms(body):
    with pytest.raises(ValueError):
        skin_lbs(body, np.zeros((3, 3)), np.zeros((3, 4)))


def test_weight_validation(body):
    bad = body.weights.copy()
    bad[0] *= 2.0
    with pytest.raises(ValueError, match="sum to 1"):
        SkinnedBody(body.template, body.skeleton, bad, body.build_label)


def test_body_capsules_cover_every_bone(body):
    caps = body_capsules(body.skeleton, body.build_label)
    assert len(caps) == body.skeleton.num_joints - 1
    assert all(isinstance(c, Capsule) and c.radius > 0 for c in caps)
