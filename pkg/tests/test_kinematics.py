import numpy as np
import pytest
from scipy.spatial.transform import Rotation as R

from drapebench import rotations as rot
from drapebench.kinematics import (
    MotionSequence,
    Pose,
    Skeleton,
    forward_kinematics,
    max_joint_angle,
    max_joint_speed,
    poses_from_joint_positions,
    procedural_motion,
    rescale_to_height,
    sequence_transforms,
)


def matrix_chain_fk(skeleton, pose):
    """Independent FK oracle: homogeneous 4x4 transforms chained with scipy."""
    j = skeleton.num_joints
    transforms = np.zeros((j, 4, 4))
    for i in range(j):
        q = pose.local_rotations[i]
        local = np.eye(4)
        local[:3, :3] = R.from_quat([q[1], q[2], q[3], q[0]]).as_matrix()
        local[:3, 3] = pose.root_translation if i == 0 else skeleton.rest_offsets[i]
        p = skeleton.parents[i]
        transforms[i] = local if p < 0 else transforms[p] @ local
    return transforms[:, :3, 3]


def random_pose(skeleton, rng):
    q = rng.normal(size=(skeleton.num_joints, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return Pose(rng.normal(size=3), q)


def test_fk_identity_is_cumulative_offsets(skeleton):
    pos, orient = forward_kinematics(skeleton, Pose.rest(skeleton))
    for j in range(skeleton.num_joints):
        expected = np.zeros(3)
        i = j
        while i > 0:
            expected += skeleton.rest_offsets[i]
            i = skeleton.parents[i]
        assert np.allclose(pos[j], expected, atol=1e-12)
    assert np.allclose(orient[:, 0], 1.0)


def test_fk_two_joint_rotation():
    sk = Skeleton(("root", "tip"), (-1, 0), np.array([[0.0, 0, 0], [1.0, 0, 0]]))
    q = np.stack([rot.from_axis_angle([0, 0, 1], np.pi / 2), rot.IDENTITY])
    pos, _ = forward_kinematics(sk, Pose(np.zeros(3), q))
    assert np.allclose(pos[1], [0.0, 1.0, 0.0], atol=1e-12)


def test_fk_matches_matrix_chain_oracle(skeleton, rng):
    for _ in range(100):
        pose = random_pose(skeleton, rng)
        ours, _ = forward_kinematics(skeleton, pose)
        oracle = matrix_chain_fk(skeleton, pose)
        assert np.abs(ours - oracle).max() < 1e-9


def test_fk_preserves_bone_lengths(skeleton, rng):
    for _ in range(20):
        pose = random_pose(skeleton, rng)
        pos, _ = forward_kinematics(skeleton, pose)
        for j in range(1, skeleton.num_joints):
            p = skeleton.parents[j]
            length = np.linalg.norm(pos[j] - pos[p])
            assert abs(length - np.linalg.norm(skeleton.rest_offsets[j])) < 1e-9


def test_fk_rejects_topology_mismatch(skeleton):
    small = Pose.rest(Skeleton(("a", "b"), (-1, 0), np.array([[0.0, 0, 0], [1.0, 0, 0]])))
    with pytest.raises(ValueError):
        forward_kinematics(skeleton, small)


def test_default_skeleton_shape(skeleton):
    assert skeleton.num_joints == 24
    assert skeleton.parents[0] == -1
    assert abs(skeleton.rest_height() - 1.70) < 1e-12
    assert skeleton.joint_names[0] == "pelvis"


def test_skeleton_rejects_cycles_and_bad_roots():
    with pytest.raises(ValueError):
        Skeleton(("a", "b"), (1, 0), np.ones((2, 3)))
    with pytest.raises(ValueError):
        Skeleton(("a", "b"), (-1, -1), np.ones((2, 3)))


def test_rescale_identity(skeleton):
    seq = procedural_motion("basic", 1.0, 30, 5, skeleton)
    same = rescale_to_height(seq, 1.70)
    assert np.abs(same.skeleton.rest_offsets - skeleton.rest_offsets).max() < 1e-12


def test_rescale_doubles(skeleton):
    seq = procedural_motion("basic", 1.0, 30, 5, skeleton)
    half = rescale_to_height(seq, 0.85)
    assert np.abs(half.skeleton.rest_offsets * 2 - skeleton.rest_offsets).max() < 1e-12
    assert np.abs(half.frames[3].root_translation * 2 - seq.frames[3].root_translation).max() < 1e-12


def test_rescale_round_trip_positions(skeleton):
    seq = procedural_motion("basic", 1.0, 30, 9, skeleton)
    back = rescale_to_height(rescale_to_height(seq, 0.85), 1.70)
    orig, _ = sequence_transforms(seq)
    again, _ = sequence_transforms(back)
    assert np.abs(orig - again).max() < 1e-9


def test_procedural_deterministic(skeleton):
    a = procedural_motion("basic", 2.0, 30, 7, skeleton)
    b = procedural_motion("basic", 2.0, 30, 7, skeleton)
    for fa, fb in zip(a.frames, b.frames):
        assert np.array_equal(fa.local_rotations, fb.local_rotations)
        assert np.array_equal(fa.root_translation, fb.root_translation)


def test_fast_is_faster_than_basic(skeleton):
    for seed in (1, 7, 23):
        basic = procedural_motion("basic", 2.0, 30, seed, skeleton)
        fast = procedural_motion("fast", 2.0, 30, seed, skeleton)
        assert max_joint_speed(fast) > max_joint_speed(basic)


def test_extreme_exceeds_120_degrees(skeleton):
    for seed in (1, 7, 23):
        ext = procedural_motion("extreme", 2.0, 30, seed, skeleton)
        assert np.rad2deg(max_joint_angle(ext)) > 120.0


def test_procedural_amplitude_bounds(skeleton):
    basic = procedural_motion("basic", 2.0, 30, 3, skeleton)
    assert np.rad2deg(max_joint_angle(basic)) <= 45.0
    fast = procedural_motion("fast", 2.0, 30, 3, skeleton)
    assert np.rad2deg(max_joint_angle(fast)) <= 90.0


def test_swing_recovery_round_trip(skeleton):
    seq = procedural_motion("basic", 1.0, 30, 17, skeleton)
    positions, _ = sequence_transforms(seq)
    poses, observed = poses_from_joint_positions(skeleton, positions)
    redone = np.stack([forward_kinematics(skeleton, p)[0] for p in poses])
    assert np.abs(redone - positions).max() < 1e-9


def test_swing_recovery_equivariance(skeleton, rng):
    seq = procedural_motion("basic", 0.5, 30, 4, skeleton)
    positions, _ = sequence_transforms(seq)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    t = rng.normal(size=3)
    moved = rot.rotate(q, positions) + t
    base_poses, _ = poses_from_joint_positions(skeleton, positions)
    moved_poses, _ = poses_from_joint_positions(skeleton, moved)
    base_fk = np.stack([forward_kinematics(skeleton, p)[0] for p in base_poses])
    moved_fk = np.stack([forward_kinematics(skeleton, p)[0] for p in moved_poses])
    assert np.abs(moved_fk - (rot.rotate(q, base_fk) + t)).max() < 1e-9


def test_motion_sequence_validation(skeleton):
    with pytest.raises(ValueError):
        MotionSequence(skeleton, 0.0, (Pose.rest(skeleton),))
    with pytest.raises(ValueError):
        MotionSequence(skeleton, 30.0, ())
    with pytest.raises(ValueError):
        MotionSequence(skeleton, 30.0, (Pose.rest(skeleton),), "jogging")
