"""Damped least-squares IK: normal equations plus projected Gauss-Seidel.

Each outer step linearizes the task map at the current pose, assembles

    A = J^T J + damping * I        b = J^T (target - current)

and solves A x = b for the joint-coordinate step x with a Gauss-Seidel
sweep that clamps every component into the joint's remaining range as
soon as it is updated, so limits hold inside the inner loop rather than
as a final projection. The converged x is cached and reused as the next
solve's starting point; on temporally coherent targets that warm start
cuts the sweep count to a few iterations.

Bounds handed to the inner solver live in step space: for joint i at
coordinate w_i the admissible step is [lower_i - w_i, upper_i - w_i].
The applied step is additionally capped at pi/2 in the max norm so a
single outer step never jumps near a half turn.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jacobian import (
    GoalSet,
    compute_error,
    goals_validate,
    jacobian_analytic,
    jacobian_fd,
)
from .rig import Rig

STATUS_REACHED = "reached"
STATUS_BEST_REACH = "best-reach"
STATUS_MAX_STEPS = "max-steps"

REASON_MAX_ITERATIONS = "max_iterations"
REASON_RESIDUAL = "residual"
REASON_STEP = "step"
REASON_STALLED = "stalled"

# Consecutive sub-step_tol outer steps required to call a reach stable.
BEST_REACH_WINDOW = 5

# Halvings tried when a full outer step fails the decrease test.
BACKTRACK_MAX_HALVINGS = 8

# Fraction of the predicted linear decrease a trial step must deliver.
BACKTRACK_SIGMA = 0.01


@dataclass(frozen=True)
class SolverConfig:
    damping: float = 1e-4
    max_iterations: int = 32
    residual_tol: float = 1e-6
    step_tol: float = 1e-8
    stall_tol: float = 1e-12
    outer_max_steps: int = 64
    outer_error_tol: float = 1e-4
    step_limit: float = np.pi / 2
    jacobian_mode: str = "analytic"

    def __post_init__(self):
        for name in ("damping", "residual_tol", "step_tol", "stall_tol",
                     "outer_error_tol", "step_limit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1 or self.outer_max_steps < 1:
            raise ValueError("iteration counts must be at least 1")
        if self.jacobian_mode not in ("analytic", "fd"):
            raise ValueError(f"unknown jacobian_mode {self.jacobian_mode!r}")


@dataclass
class NormalSystem:
    A: np.ndarray
    b: np.ndarray
    n: int


@dataclass
class SolverState:
    x: np.ndarray
    warm_start: np.ndarray | None = None
    iterations: int = 0
    residual: float = np.inf
    clamp_count: int = 0
    reason: str = ""


@dataclass(frozen=True)
class StepRecord:
    step: int
    pose: np.ndarray
    error_norm: float
    goal_errors: tuple[float, ...]
    iterations: int
    residual: float
    clamp_count: int
    reason: str
    pose_delta: float


@dataclass
class SolveTrace:
    status: str
    steps: list[StepRecord] = field(default_factory=list)


def assemble_normal_system(jacobian: np.ndarray, error: np.ndarray,
                           damping: float) -> NormalSystem:
    """A = J^T J + damping*I (symmetrized), b = J^T error."""
    jac = np.asarray(jacobian, dtype=float)
    err = np.asarray(error, dtype=float)
    if jac.ndim != 2 or err.shape != (jac.shape[0],):
        raise ValueError(f"shape mismatch: J {jac.shape}, error {err.shape}")
    if damping < 0:
        raise ValueError("damping must be nonnegative")
    n = jac.shape[1]
    a = jac.T @ jac
    a = 0.5 * (a + a.T)
    a[np.diag_indices(n)] += damping
    return NormalSystem(A=a, b=jac.T @ err, n=n)


def warm_start_load(state: SolverState | None, n: int) -> np.ndarray:
    """Cached solution from the previous solve, or zeros on cold start."""
    if state is None or state.warm_start is None or state.warm_start.size != n:
        return np.zeros(n)
    return state.warm_start.copy()


def warm_start_store(state: SolverState) -> np.ndarray:
    state.warm_start = state.x.copy()
    return state.warm_start


def pgs_solve(system: NormalSystem, x0: np.ndarray, lower: np.ndarray,
              upper: np.ndarray, cfg: SolverConfig) -> SolverState:
    """Projected Gauss-Seidel on A x = b with box bounds on x.

    Sweeps ascending component order; each component update is clamped
    into its bounds immediately, so later components in the same sweep
    already see the projected value. Stops on whichever fires first:
    residual below residual_tol, sweep step norm below step_tol, step
    norm unchanged within stall_tol, or the iteration cap.
    """
    a, b, n = system.A, system.b, system.n
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")
    diag = np.diag(a)
    if np.any(diag <= 0.0):
        raise ValueError("nonpositive diagonal in normal system")
    x = np.clip(np.asarray(x0, dtype=float).copy(), lower, upper)
    clamp_count = 0
    prev_step_norm = None
    reason = REASON_MAX_ITERATIONS
    iterations = 0
    residual = float(np.linalg.norm(a @ x - b))
    for _ in range(cfg.max_iterations):
        iterations += 1
        step_sq = 0.0
        for i in range(n):
            # The incremental form x_i += (b_i - sum_j A_ij x_j) / A_ii
            # (sum including j = i) equals the classic assignment
            # x_i = (b_i - sum_{j != i} A_ij x_j) / A_ii.
            free = x[i] + (b[i] - a[i] @ x) / diag[i]
            clamped = min(max(free, lower[i]), upper[i])
            if clamped != free:
                clamp_count += 1
            applied = clamped - x[i]
            x[i] = clamped
            step_sq += applied * applied
        step_norm = float(np.sqrt(step_sq))
        residual = float(np.linalg.norm(a @ x - b))
        if residual < cfg.residual_tol:
            reason = REASON_RESIDUAL
            break
        if step_norm < cfg.step_tol:
            reason = REASON_STEP
            break
        if prev_step_norm is not None and abs(step_norm - prev_step_norm) < cfg.stall_tol:
            reason = REASON_STALLED
            break
        prev_step_norm = step_norm
    return SolverState(x=x, iterations=iterations, residual=residual,
                       clamp_count=clamp_count, reason=reason)


def _scalar_regularize(pose: np.ndarray) -> np.ndarray:
    # Wrap any coordinate beyond a half turn back into (-pi, pi]; a no-op
    # while limits stay inside [-pi, pi], kept for wider custom limits.
    out = pose.copy()
    over = np.abs(out) > np.pi
    out[over] -= np.sign(out[over]) * 2.0 * np.pi
    return out


def _capped(step: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    largest = float(np.max(np.abs(step))) if step.size else 0.0
    if largest > cfg.step_limit:
        return step * (cfg.step_limit / largest)
    return step.copy()


def _backtrack(rig: Rig, w: np.ndarray, step: np.ndarray, goals: GoalSet,
               error: np.ndarray, b: np.ndarray,
               cfg: SolverConfig) -> np.ndarray | None:
    """Largest halving of the step that sufficiently decreases the error.

    Sufficient decrease is the Armijo test on f = 0.5*|error|^2, whose
    gradient is -b: a trial must beat f by BACKTRACK_SIGMA times the
    predicted linear decrease b.(applied step). Plain non-increase is
    not enough: near a fully stretched pose the Gauss-Newton model sees
    an almost flat valley and error-neutral jumps across it would cycle
    forever instead of settling.
    """
    f0 = 0.5 * float(error @ error)
    for _ in range(BACKTRACK_MAX_HALVINGS + 1):
        trial = _scalar_regularize(np.clip(w + step, rig.lower, rig.upper))
        predicted = float(b @ (trial - w))
        if predicted > 0.0:
            trial_error = compute_error(rig, trial, goals)
            f_trial = 0.5 * float(trial_error @ trial_error)
            if f_trial <= f0 - BACKTRACK_SIGMA * predicted:
                return trial
        step = 0.5 * step
    return None


def ik_step(rig: Rig, pose: np.ndarray, goals: GoalSet,
            state: SolverState | None = None,
            cfg: SolverConfig | None = None) -> tuple[np.ndarray, SolverState]:
    """One damped Gauss-Newton step; returns the new pose and solver state.

    Input coordinates are clamped into the joint limits before solving,
    and the output is clamped again after the step, so poses never leave
    the limit box. The linearization only holds for small task-space
    moves, so the applied step is halved until it passes a sufficient-
    decrease test; far-away or unreachable targets then settle into a
    still best-reach pose instead of overshooting back and forth across
    it. When no halving passes, the pose is returned unchanged. The
    returned state carries the warm-start cache for the next call.
    """
    if cfg is None:
        cfg = SolverConfig()
    violations = goals_validate(rig, goals)
    if violations:
        raise ValueError("; ".join(violations))
    w = np.clip(np.asarray(pose, dtype=float), rig.lower, rig.upper)
    error = compute_error(rig, w, goals)
    if cfg.jacobian_mode == "fd":
        jac = jacobian_fd(rig, w, goals)
    else:
        jac = jacobian_analytic(rig, w, goals)
    system = assemble_normal_system(jac, error, cfg.damping)
    lower = rig.lower - w
    upper = rig.upper - w
    x0 = warm_start_load(state, rig.dof)
    result = pgs_solve(system, x0, lower, upper, cfg)
    new_pose = _backtrack(rig, w, _capped(result.x, cfg), goals, error, system.b, cfg)
    if new_pose is None and np.any(x0 != 0.0):
        # A stale warm start can leave a partial solve pointing uphill;
        # from a zero start every projected sweep is a descent direction.
        result = pgs_solve(system, np.zeros(rig.dof), lower, upper, cfg)
        new_pose = _backtrack(rig, w, _capped(result.x, cfg), goals, error, system.b, cfg)
    if new_pose is None:
        new_pose = w
    # Cache only converged solves: an iteration-capped x still carries
    # warm-start junk in near-singular directions that damping has not
    # yet bled off, and re-seeding with it keeps the junk alive forever.
    if result.reason in (REASON_RESIDUAL, REASON_STEP):
        warm_start_store(result)
    return new_pose, result


def _goal_error_norms(error: np.ndarray) -> tuple[float, ...]:
    return tuple(float(np.linalg.norm(error[6 * g:6 * g + 6]))
                 for g in range(error.size // 6))


MAX_RESTARTS = 3
RESTART_MIN_BUDGET = 16


def restart_pose(rig: Rig, attempt: int) -> np.ndarray:
    """Deterministic re-seed for a solve stalled short of its goals.

    A damped step can park on a constrained saddle: a joint pinned on a
    limit while the remaining columns are orthogonal to the error (for
    a planar arm, folded flat with the tip aligned to the target ray).
    The gradient is exactly zero there, so no step-size rule escapes.
    Successive attempts bend each joint away from its limit midpoint
    with per-joint signs drawn from the attempt's bit pattern and a
    growing magnitude, walking through distinct orthants of the joint
    box without any randomness.
    """
    finite = np.isfinite(rig.lower) & np.isfinite(rig.upper)
    mid = np.where(finite, 0.5 * (rig.lower + rig.upper), 0.0)
    half = np.where(finite, 0.5 * (rig.upper - rig.lower), 1.0)
    scale = 0.3 + 0.15 * min(attempt, 4)
    joints = np.arange(rig.dof)
    signs = np.where((attempt >> (joints % 3)) & 1, -1.0, 1.0)
    return np.clip(mid + scale * signs * half, rig.lower, rig.upper)


def solve_to_convergence(rig: Rig, pose0: np.ndarray, goals: GoalSet,
                         cfg: SolverConfig | None = None) -> tuple[np.ndarray, SolveTrace]:
    """Run ik_step until the goals are met or the reach goes stable.

    Statuses: "reached" when the weighted error norm drops below
    outer_error_tol; "best-reach" when the pose delta stays below
    step_tol for BEST_REACH_WINDOW consecutive steps (unreachable
    targets settle here without oscillating); "max-steps" otherwise.

    A stall with a joint pinned on a limit triggers up to MAX_RESTARTS
    deterministic re-seeds (see restart_pose) while at least
    RESTART_MIN_BUDGET outer steps remain, so locked folded
    configurations do not masquerade as best reach. Interior stalls are
    genuine local optima and settle as best-reach directly. Re-running
    with identical inputs reproduces the trace exactly.
    """
    if cfg is None:
        cfg = SolverConfig()
    if not goals:
        raise ValueError("goal set is empty")
    violations = goals_validate(rig, goals)
    if violations:
        raise ValueError("; ".join(violations))
    w = np.clip(np.asarray(pose0, dtype=float), rig.lower, rig.upper)
    trace = SolveTrace(status=STATUS_MAX_STEPS)
    if float(np.linalg.norm(compute_error(rig, w, goals))) < cfg.outer_error_tol:
        trace.status = STATUS_REACHED
        return w, trace
    state: SolverState | None = None
    stable = 0
    restarts = 0
    for step_index in range(cfg.outer_max_steps):
        new_w, state = ik_step(rig, w, goals, state, cfg)
        delta = float(np.max(np.abs(new_w - w))) if rig.dof else 0.0
        error = compute_error(rig, new_w, goals)
        error_norm = float(np.linalg.norm(error))
        trace.steps.append(StepRecord(
            step=step_index, pose=new_w.copy(), error_norm=error_norm,
            goal_errors=_goal_error_norms(error), iterations=state.iterations,
            residual=state.residual, clamp_count=state.clamp_count,
            reason=state.reason, pose_delta=delta))
        w = new_w
        if error_norm < cfg.outer_error_tol:
            trace.status = STATUS_REACHED
            break
        stable = stable + 1 if delta < cfg.step_tol else 0
        if stable >= BEST_REACH_WINDOW:
            pinned = bool(np.any((w <= rig.lower) | (w >= rig.upper)))
            remaining = cfg.outer_max_steps - step_index - 1
            if pinned and restarts < MAX_RESTARTS and remaining >= RESTART_MIN_BUDGET:
                restarts += 1
                w = restart_pose(rig, restarts)
                state = None
                stable = 0
                continue
            trace.status = STATUS_BEST_REACH
            break
    return w, trace
