"""Real-time inverse kinematics on dual quaternion rigs."""

from .dualquat import (
    TransformOrder,
    dq_from_rot_trans,
    dq_mul,
    dq_to_rot_trans,
    dq_transform_point,
    dq_translation,
    expmap_regularize,
    expmap_to_quat,
    quat_conjugate,
    quat_from_axis_angle,
    quat_mul,
    quat_rotate,
    quat_to_expmap,
    twist_swing_decompose,
)
from .jacobian import (
    Goal,
    compute_error,
    goals_validate,
    jacobian_analytic,
    jacobian_fd,
    pose_map,
)
from .rig import (
    Axis,
    EndEffector,
    Joint,
    Rig,
    build_hand_model,
    end_effector_poses,
    forward_kinematics,
    load_hand_model,
    load_rig,
    rig_validate,
    save_rig,
)
from .session import (
    Scene,
    TraceRecord,
    export_trace,
    import_trace,
    load_scene,
    run_to_convergence,
    save_scene,
    set_target,
    step,
)
from .solver import (
    SolverConfig,
    SolverState,
    ik_step,
    pgs_solve,
    solve_to_convergence,
)

__all__ = [name for name in dir() if not name.startswith("_")]
