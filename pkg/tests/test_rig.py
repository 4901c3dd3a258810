import json

import numpy as np
import pytest

from dqik.dualquat import (
    Axis,
    dq_mul,
    dq_pure_rotation,
    dq_pure_translation,
    dq_translation,
    expmap_to_quat,
    is_unit_dq,
    quat_from_axis_angle,
    quat_mul,
)
from dqik.rig import (
    ROOT,
    EndEffector,
    Joint,
    Rig,
    anatomical_joint_names,
    build_hand_model,
    end_effector_poses,
    forward_kinematics,
    joint_local_transform,
    load_hand_model,
    load_rig,
    rig_from_dict,
    rig_to_dict,
    rig_validate,
    save_rig,
    split_multi_dof,
)

from oracles import matrix_chain_fk, quat_to_matrix, quats_close_up_to_sign


def chain_rig(n, offset=(1.0, 0.0, 0.0), axis=Axis.Z, lower=-np.pi, upper=np.pi,
              effector_offset=(0.0, 0.0, 0.0)):
    joints = [Joint(id=i, parent=i - 1, offset=tuple(offset), axis=axis,
                    lower=lower, upper=upper, name=f"j{i}") for i in range(n)]
    return Rig(joints, [EndEffector(n - 1, tuple(effector_offset))])


def random_chain(rng, n):
    joints = []
    for i in range(n):
        joints.append(Joint(
            id=i, parent=i - 1,
            offset=tuple(rng.uniform(-1.0, 1.0, size=3)),
            axis=Axis(int(rng.integers(0, 3))),
            lower=-np.pi, upper=np.pi, name=f"j{i}"))
    return Rig(joints, [EndEffector(n - 1, (0.0, 0.0, 0.0))])


class TestValidate:
    def test_valid_chain_empty_report(self):
        assert rig_validate(chain_rig(3)) == []
        assert rig_validate(build_hand_model()) == []

    def test_limit_order_violation_names_joint(self):
        bad = Joint(id=0, parent=ROOT, offset=(0, 0, 0), axis=Axis.X,
                    lower=0.5, upper=-0.5, name="elbow")
        report = rig_validate(Rig([bad], []))
        assert any("elbow" in msg and "lower" in msg for msg in report)

    def test_limits_outside_pi(self):
        bad = Joint(id=0, parent=ROOT, offset=(0, 0, 0), axis=Axis.X,
                    lower=-4.0, upper=0.0, name="j0")
        assert any("pi" in msg for msg in rig_validate(Rig([bad], [])))

    def test_cycle_detected(self):
        a = Joint(id=0, parent=1, offset=(0, 0, 0), axis=Axis.X,
                  lower=0, upper=0, name="a")
        b = Joint(id=1, parent=0, offset=(0, 0, 0), axis=Axis.X,
                  lower=0, upper=0, name="b")
        report = rig_validate(Rig([a, b], []))
        assert any("cycle" in msg for msg in report)

    def test_multiple_roots(self):
        joints = [
            Joint(id=0, parent=ROOT, offset=(0, 0, 0), axis=Axis.X, lower=0, upper=0),
            Joint(id=1, parent=ROOT, offset=(0, 0, 0), axis=Axis.X, lower=0, upper=0),
        ]
        assert any("root" in msg for msg in rig_validate(Rig(joints, [])))

    def test_effector_out_of_range(self):
        rig = Rig(chain_rig(2).joints, [EndEffector(5, (0, 0, 0))])
        assert any("end effector" in msg for msg in rig_validate(rig))

    def test_bad_parent_order(self):
        joints = [
            Joint(id=0, parent=ROOT, offset=(0, 0, 0), axis=Axis.X, lower=0, upper=0),
            Joint(id=1, parent=1, offset=(0, 0, 0), axis=Axis.X, lower=0, upper=0),
        ]
        report = rig_validate(Rig(joints, []))
        assert any("not before" in msg for msg in report)


class TestForwardKinematics:
    def test_zero_pose_translation_chain(self):
        world = forward_kinematics(chain_rig(3), np.zeros(3))
        for i, expected in enumerate([(1, 0, 0), (2, 0, 0), (3, 0, 0)]):
            assert np.allclose(dq_translation(world[i]), expected)
            assert np.allclose(world[i][:4], [1, 0, 0, 0])

    def test_single_joint_quarter_turn(self):
        rig = chain_rig(1, effector_offset=(1.0, 0.0, 0.0))
        pose = end_effector_poses(rig, np.array([np.pi / 2]))[0]
        assert np.allclose(pose.position, [1.0, 1.0, 0.0], atol=1e-12)
        assert quats_close_up_to_sign(
            pose.orientation, quat_from_axis_angle([0, 0, 1], np.pi / 2), tol=1e-12)

    def test_planar_chain_matches_matrix_oracle(self):
        rng = np.random.default_rng(3)
        rig = chain_rig(3)
        for _ in range(200):
            w = rng.uniform(-np.pi, np.pi, size=3)
            world = forward_kinematics(rig, w)
            quats = [quat_from_axis_angle([0, 0, 1], a) for a in w]
            oracle = matrix_chain_fk([j.offset for j in rig.joints], quats)
            for got, mat in zip(world, oracle):
                assert np.allclose(dq_translation(got), mat[:3, 3], atol=1e-8)
                assert np.allclose(quat_to_matrix(got[:4]), mat[:3, :3], atol=1e-8)

    def test_random_chains_match_matrix_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(1, 8))
            rig = random_chain(rng, n)
            w = rng.uniform(-np.pi, np.pi, size=n)
            world = forward_kinematics(rig, w)
            axes = np.eye(3)
            quats = [quat_from_axis_angle(axes[rig.axes[i]], w[i]) for i in range(n)]
            oracle = matrix_chain_fk(rig.offsets, quats)
            for got, mat in zip(world, oracle):
                assert np.allclose(dq_translation(got), mat[:3, 3], atol=1e-8)
                assert np.allclose(quat_to_matrix(got[:4]), mat[:3, :3], atol=1e-8)

    def test_unit_outputs_long_chain(self):
        rng = np.random.default_rng(7)
        rig = random_chain(rng, 32)
        world = forward_kinematics(rig, rng.uniform(-np.pi, np.pi, size=32))
        for row in world:
            assert is_unit_dq(row, tol=1e-9)

    def test_determinism(self):
        rng = np.random.default_rng(9)
        rig = random_chain(rng, 6)
        w = rng.uniform(-np.pi, np.pi, size=6)
        a = forward_kinematics(rig, w)
        b = forward_kinematics(rig, w)
        assert np.array_equal(a, b)

    def test_locality(self):
        rig = build_hand_model()
        rng = np.random.default_rng(11)
        w = rng.uniform(rig.lower, rig.upper)
        base = forward_kinematics(rig, w)
        # Perturb one middle-finger joint; other fingers must not move.
        k = rig.joint_names().index("middle_pip_x")
        w2 = w.copy()
        w2[k] += 0.2
        moved = np.any(forward_kinematics(rig, w2) != base, axis=1)
        for i in np.nonzero(moved)[0]:
            assert rig.joints[i].name.startswith("middle")
        descendants = {i for i in range(rig.dof)
                       if rig.joints[i].name in ("middle_pip_x", "middle_dip_x")}
        assert set(np.nonzero(moved)[0]) == descendants

    def test_pose_length_mismatch(self):
        with pytest.raises(ValueError):
            forward_kinematics(chain_rig(3), np.zeros(4))

    def test_base_transform_applied(self):
        joints = chain_rig(2).joints
        base = dq_mul(dq_pure_translation([0, 0, 5.0]),
                      dq_pure_rotation(quat_from_axis_angle([0, 0, 1], np.pi / 2)))
        rig = Rig(joints, [EndEffector(1, (0, 0, 0))], base)
        world = forward_kinematics(rig, np.zeros(2))
        assert np.allclose(dq_translation(world[1]), [0.0, 2.0, 5.0], atol=1e-12)

    def test_local_transform_equals_factored_product(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            off = rng.normal(size=3)
            axis = int(rng.integers(0, 3))
            w = rng.uniform(-np.pi, np.pi)
            expmap = np.zeros(3)
            expmap[axis] = w
            expected = dq_mul(dq_pure_translation(off),
                              dq_pure_rotation(expmap_to_quat(expmap)))
            assert np.allclose(joint_local_transform(off, axis, w), expected, atol=1e-12)


class TestEndEffectors:
    def test_zero_pose_cumulative_offsets(self):
        rig = chain_rig(3, effector_offset=(0.5, 0.0, 0.0))
        pose = end_effector_poses(rig, np.zeros(3))[0]
        assert np.allclose(pose.position, [3.5, 0.0, 0.0])
        assert np.allclose(pose.orientation, [1, 0, 0, 0])

    def test_orientation_unit(self):
        rng = np.random.default_rng(17)
        rig = build_hand_model()
        for _ in range(50):
            w = rng.uniform(rig.lower, rig.upper)
            for pose in end_effector_poses(rig, w):
                assert abs(np.linalg.norm(pose.orientation) - 1.0) < 1e-9

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(19)
        rig = chain_rig(4, effector_offset=(0.3, -0.2, 0.1))
        for _ in range(100):
            w = rng.uniform(-np.pi, np.pi, size=4)
            quats = [quat_from_axis_angle([0, 0, 1], a) for a in w]
            last = matrix_chain_fk([j.offset for j in rig.joints], quats)[-1]
            expected = last[:3, :3] @ np.array([0.3, -0.2, 0.1]) + last[:3, 3]
            got = end_effector_poses(rig, w)[0]
            assert np.allclose(got.position, expected, atol=1e-8)


class TestSplitMultiDof:
    def test_single_axis_unchanged(self):
        out = split_multi_dof("elbow", 3, (0.1, 0.2, 0.3), (Axis.Y,), ((-1.0, 1.0),), 7)
        assert len(out) == 1
        j = out[0]
        assert (j.id, j.parent, j.axis) == (7, 3, Axis.Y)
        assert j.offset == (0.1, 0.2, 0.3)
        assert (j.lower, j.upper) == (-1.0, 1.0)

    def test_three_axis_offsets(self):
        out = split_multi_dof("ball", ROOT, (1.0, 0.0, 0.0),
                              (Axis.X, Axis.Y, Axis.Z), ((-1, 1),) * 3, 0)
        assert [j.offset for j in out] == [(1.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)]
        assert [j.parent for j in out] == [ROOT, 0, 1]
        assert [j.name for j in out] == ["ball_x", "ball_y", "ball_z"]

    def test_duplicate_axes_rejected(self):
        with pytest.raises(ValueError):
            split_multi_dof("bad", ROOT, (0, 0, 0), (Axis.X, Axis.X), ((-1, 1),) * 2, 0)

    def test_split_fk_equals_ordered_quat_product(self):
        rng = np.random.default_rng(23)
        joints = split_multi_dof("ball", ROOT, (0.0, 0.0, 0.0),
                                 (Axis.Z, Axis.X), ((-np.pi, np.pi),) * 2, 0)
        rig = Rig(joints, [EndEffector(1, (0, 0, 0))])
        for _ in range(200):
            t1, t2 = rng.uniform(-np.pi, np.pi, size=2)
            world = forward_kinematics(rig, np.array([t1, t2]))
            expected = quat_mul(quat_from_axis_angle([0, 0, 1], t1),
                                quat_from_axis_angle([1, 0, 0], t2))
            assert quats_close_up_to_sign(world[1][:4], expected, tol=1e-9)


class TestHandModel:
    def test_dof_count(self):
        assert build_hand_model().dof == 22

    def test_anatomical_counts(self):
        rig = build_hand_model()
        names = anatomical_joint_names(rig)
        assert len(names) == 16
        links = len(names) + 1
        assert links == 17

    def test_validates_clean(self):
        assert rig_validate(build_hand_model()) == []

    def test_effectors(self):
        rig = build_hand_model()
        assert len(rig.end_effectors) == 6

    def test_zero_pose_flat_and_finite(self):
        rig = build_hand_model()
        poses = end_effector_poses(rig, np.zeros(rig.dof))
        for pose in poses:
            assert np.all(np.isfinite(pose.position))
            assert abs(pose.position[2]) < 1e-12
        tips = np.array([p.position for p in poses[:5]])
        assert np.all(tips[:, 1] > 0.05)

    def test_zero_pose_within_limits(self):
        rig = build_hand_model()
        assert np.all(rig.lower <= 0.0) and np.all(rig.upper >= 0.0)


class TestRigFiles:
    def test_round_trip(self, tmp_path):
        rig = build_hand_model()
        path = tmp_path / "hand.json"
        save_rig(path, rig)
        back = load_rig(path)
        assert back.joints == rig.joints
        assert back.end_effectors == rig.end_effectors
        assert np.allclose(back.base_transform, rig.base_transform, atol=1e-12)

    def test_shipped_file_matches_builder(self):
        rig = build_hand_model()
        shipped = load_hand_model()
        assert shipped.joints == rig.joints
        assert shipped.end_effectors == rig.end_effectors
        assert np.allclose(shipped.base_transform, rig.base_transform, atol=1e-12)

    def test_dict_round_trip_with_base(self):
        rng = np.random.default_rng(29)
        base = dq_mul(dq_pure_translation(rng.normal(size=3)),
                      dq_pure_rotation(quat_from_axis_angle([0, 1, 0], 0.4)))
        rig = Rig(chain_rig(2).joints, [EndEffector(0, (0.0, 0.0, 1.0))], base)
        back = rig_from_dict(rig_to_dict(rig))
        assert back.joints == rig.joints
        assert np.allclose(back.base_transform, rig.base_transform, atol=1e-12)

    def test_malformed_data_raises(self):
        with pytest.raises(ValueError):
            rig_from_dict({"joints": [{"id": 0}]})
        with pytest.raises(ValueError):
            rig_from_dict({"joints": [{"id": 0, "parent": -1, "offset": [0, 0, 0],
                                       "axis": "w", "lower": 0, "upper": 0}]})

    def test_json_is_plain_serializable(self):
        text = json.dumps(rig_to_dict(build_hand_model()))
        assert "joints" in text
