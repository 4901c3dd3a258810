"""Scene state, stepping, goal files, and pose-trace persistence.

A Scene owns one rig plus the mutable solve state around it: current
pose, active goals (at most one per end effector), solver config, the
warm-start cache, a tick counter, and the accumulated trace. step()
advances the scene by one solver update and appends a trace record;
run_to_convergence() drives step() with the same termination rules as
the batch solver, so a scene trace replays bit-identically.

Trace files are CSV with columns tick, w_0..w_{n-1}, err_0..err_{m-1},
iters, reason, one error column per rig end effector (untargeted
effectors record 0.0). Floats are written with repr so export followed
by import is lossless.

Goal files are JSON: {"goals": [{"effector": i, "position": [x,y,z],
"orientation": [s,x,y,z], "pos_weight": a, "rot_weight": b}, ...],
"initial_pose": [w...]}. orientation defaults to identity; rot_weight
defaults to 1.0 when an orientation is given and 0.0 otherwise, so a
bare position goal does not silently pin the orientation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .jacobian import Goal, GoalSet, compute_error, goals_validate
from .rig import Rig, load_rig, rig_from_dict, rig_to_dict, rig_validate
from .solver import (
    BEST_REACH_WINDOW,
    MAX_RESTARTS,
    RESTART_MIN_BUDGET,
    STATUS_BEST_REACH,
    STATUS_MAX_STEPS,
    STATUS_REACHED,
    SolverConfig,
    SolverState,
    ik_step,
    restart_pose,
)

REASON_IDLE = "idle"
REASON_REACHED = "reached"


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    pose: tuple[float, ...]
    errors: tuple[float, ...]
    iterations: int
    reason: str


@dataclass
class Scene:
    rig: Rig
    pose: np.ndarray
    goals: dict[int, Goal] = field(default_factory=dict)
    config: SolverConfig = field(default_factory=SolverConfig)
    state: SolverState | None = None
    tick: int = 0
    trace: list[TraceRecord] = field(default_factory=list)

    def goal_list(self) -> GoalSet:
        return tuple(self.goals[k] for k in sorted(self.goals))


def _goal_from_dict(item: dict) -> Goal:
    orientation = item.get("orientation")
    rot_weight = item.get("rot_weight", 1.0 if orientation is not None else 0.0)
    return Goal(
        effector=int(item["effector"]),
        position=tuple(float(v) for v in item["position"]),
        orientation=tuple(float(v) for v in orientation) if orientation is not None
        else (1.0, 0.0, 0.0, 0.0),
        pos_weight=float(item.get("pos_weight", 1.0)),
        rot_weight=float(rot_weight),
    )


def _goal_to_dict(goal: Goal) -> dict:
    return {
        "effector": goal.effector,
        "position": list(goal.position),
        "orientation": list(goal.orientation),
        "pos_weight": goal.pos_weight,
        "rot_weight": goal.rot_weight,
    }


def make_config(overrides: dict | None = None) -> SolverConfig:
    try:
        return SolverConfig(**(overrides or {}))
    except TypeError as exc:
        raise ValueError(f"unknown solver config field: {exc}") from exc


def load_goals(path) -> tuple[dict[int, Goal], np.ndarray | None]:
    """Goal file -> (goals keyed by effector, optional initial pose)."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from exc
    goals: dict[int, Goal] = {}
    try:
        for item in data.get("goals", []):
            goal = _goal_from_dict(item)
            goals[goal.effector] = goal
        initial = data.get("initial_pose")
        pose = None if initial is None else np.array([float(v) for v in initial])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed goal entry: {exc}") from exc
    return goals, pose


def load_scene(rig_path, goals_path=None, overrides: dict | None = None) -> Scene:
    """Validated scene from a rig file and optional goal file."""
    rig = load_rig(rig_path)
    violations = rig_validate(rig)
    if violations:
        raise ValueError(f"{rig_path}: " + "; ".join(violations))
    goals: dict[int, Goal] = {}
    pose = np.zeros(rig.dof)
    if goals_path is not None:
        goals, initial = load_goals(goals_path)
        bad = goals_validate(rig, tuple(goals.values()))
        if bad:
            raise ValueError(f"{goals_path}: " + "; ".join(bad))
        if initial is not None:
            if initial.shape != (rig.dof,):
                raise ValueError(
                    f"{goals_path}: initial_pose length {initial.size} "
                    f"does not match rig DOF {rig.dof}")
            pose = initial
    pose = np.clip(pose, rig.lower, rig.upper)
    return Scene(rig=rig, pose=pose, goals=goals, config=make_config(overrides))


def set_target(scene: Scene, effector: int, position, orientation=(1.0, 0.0, 0.0, 0.0),
               pos_weight: float = 1.0, rot_weight: float = 1.0) -> Scene:
    """Replace one effector's goal; both weights zero clears the goal.

    The warm-start cache is left alone on purpose: small target motion
    should keep resolving cheaply from the previous solution.
    """
    if not 0 <= effector < len(scene.rig.end_effectors):
        raise ValueError(f"effector {effector} out of range")
    if pos_weight == 0.0 and rot_weight == 0.0:
        scene.goals.pop(effector, None)
        return scene
    goal = Goal(effector=effector,
                position=tuple(float(v) for v in position),
                orientation=tuple(float(v) for v in orientation),
                pos_weight=float(pos_weight), rot_weight=float(rot_weight))
    bad = goals_validate(scene.rig, (goal,))
    if bad:
        raise ValueError("; ".join(bad))
    scene.goals[effector] = goal
    return scene


def _per_effector_errors(scene: Scene, goals: GoalSet,
                         error: np.ndarray) -> tuple[float, ...]:
    out = [0.0] * len(scene.rig.end_effectors)
    for g, goal in enumerate(goals):
        out[goal.effector] = float(np.linalg.norm(error[6 * g:6 * g + 6]))
    return tuple(out)


def step(scene: Scene) -> tuple[Scene, TraceRecord]:
    """One solver update: apply ik_step, bump the tick, record the step.

    With no goals the scene idles: the pose holds still and the record
    carries reason "idle". With goals, the record's reason is "reached"
    once the weighted error norm is below the outer tolerance, otherwise
    the inner solver's termination reason.
    """
    goals = scene.goal_list()
    scene.tick += 1
    if not goals:
        record = TraceRecord(tick=scene.tick,
                             pose=tuple(float(v) for v in scene.pose),
                             errors=(0.0,) * len(scene.rig.end_effectors),
                             iterations=0, reason=REASON_IDLE)
    else:
        new_pose, state = ik_step(scene.rig, scene.pose, goals, scene.state,
                                  scene.config)
        scene.pose = new_pose
        scene.state = state
        error = compute_error(scene.rig, new_pose, goals)
        reached = float(np.linalg.norm(error)) < scene.config.outer_error_tol
        record = TraceRecord(
            tick=scene.tick, pose=tuple(float(v) for v in new_pose),
            errors=_per_effector_errors(scene, goals, error),
            iterations=state.iterations,
            reason=REASON_REACHED if reached else state.reason)
    scene.trace.append(record)
    return scene, record


def run_to_convergence(scene: Scene) -> str:
    """Drive step() with the batch solver's termination rules.

    Returns the same status strings as solve_to_convergence, applies
    the same deterministic restarts on stalls short of the goals, and
    leaves the per-step records on scene.trace.
    """
    goals = scene.goal_list()
    if not goals:
        raise ValueError("goal set is empty")
    cfg = scene.config
    error = compute_error(scene.rig, scene.pose, goals)
    if float(np.linalg.norm(error)) < cfg.outer_error_tol:
        return STATUS_REACHED
    stable = 0
    restarts = 0
    for step_index in range(cfg.outer_max_steps):
        previous = scene.pose
        _, record = step(scene)
        delta = float(np.max(np.abs(scene.pose - previous))) if scene.rig.dof else 0.0
        if record.reason == REASON_REACHED:
            return STATUS_REACHED
        stable = stable + 1 if delta < cfg.step_tol else 0
        if stable >= BEST_REACH_WINDOW:
            pinned = bool(np.any((scene.pose <= scene.rig.lower)
                                 | (scene.pose >= scene.rig.upper)))
            remaining = cfg.outer_max_steps - step_index - 1
            if pinned and restarts < MAX_RESTARTS and remaining >= RESTART_MIN_BUDGET:
                restarts += 1
                scene.pose = restart_pose(scene.rig, restarts)
                scene.state = None
                stable = 0
                continue
            return STATUS_BEST_REACH
    return STATUS_MAX_STEPS


def export_trace(scene_or_trace, path) -> None:
    """Write trace records as CSV; floats use repr for lossless reload."""
    trace = scene_or_trace.trace if isinstance(scene_or_trace, Scene) else scene_or_trace
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        if trace:
            n = len(trace[0].pose)
            m = len(trace[0].errors)
        else:
            n = m = 0
        writer.writerow(["tick"] + [f"w_{i}" for i in range(n)]
                        + [f"err_{i}" for i in range(m)] + ["iters", "reason"])
        for rec in trace:
            writer.writerow([rec.tick] + [repr(v) for v in rec.pose]
                            + [repr(v) for v in rec.errors]
                            + [rec.iterations, rec.reason])


def import_trace(path) -> list[TraceRecord]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty trace file") from None
        n = sum(1 for name in header if name.startswith("w_"))
        m = sum(1 for name in header if name.startswith("err_"))
        if header[:1] != ["tick"] or header[-2:] != ["iters", "reason"]:
            raise ValueError(f"{path}: unrecognized trace header")
        records = []
        for row in reader:
            if len(row) != 3 + n + m:
                raise ValueError(f"{path}: row has {len(row)} fields, "
                                 f"expected {3 + n + m}")
            records.append(TraceRecord(
                tick=int(row[0]),
                pose=tuple(float(v) for v in row[1:1 + n]),
                errors=tuple(float(v) for v in row[1 + n:1 + n + m]),
                iterations=int(row[1 + n + m]),
                reason=row[2 + n + m]))
    return records


def scene_to_dict(scene: Scene) -> dict:
    return {
        "rig": rig_to_dict(scene.rig),
        "pose": [float(v) for v in scene.pose],
        "goals": [_goal_to_dict(scene.goals[k]) for k in sorted(scene.goals)],
        "config": asdict(scene.config),
        "tick": scene.tick,
    }


def scene_from_dict(data: dict) -> Scene:
    rig = rig_from_dict(data["rig"])
    pose = np.array([float(v) for v in data["pose"]])
    if pose.shape != (rig.dof,):
        raise ValueError("scene pose length does not match rig DOF")
    goals = {}
    for item in data.get("goals", []):
        goal = _goal_from_dict(item)
        goals[goal.effector] = goal
    return Scene(rig=rig, pose=np.clip(pose, rig.lower, rig.upper), goals=goals,
                 config=make_config(data.get("config")), tick=int(data.get("tick", 0)))


def save_scene(path, scene: Scene) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(scene_to_dict(scene), handle, indent=2)
        handle.write("\n")


def load_scene_file(path) -> Scene:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from exc
    return scene_from_dict(data)
