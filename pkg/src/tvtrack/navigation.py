"""Disk-robot navigation through circular obstacles.

The robot chases an estimate of the goal projected onto its local free
space: a polytope with one separating facet per obstacle (placed halfway
across the robot-to-obstacle surface gap, eroded by the robot radius)
intersected with the eroded workspace box. The estimate itself evolves
by the barrier tracking flow over that moving polytope, so feasibility
of the chased point, and hence collision avoidance, holds along the
whole run.
"""

import configparser
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discrete import TrajectoryRecord
from .exceptions import DivergedError, DomainError, InfeasibleSetError
from .flows import MAX_HALVINGS, _rk4_step
from .sets import Box, HalfspaceIntersection

# fixed 8-obstacle layout: (center_x, center_y, radius)
DEFAULT_OBSTACLES = np.array([
    [-12.0, -10.0, 2.5],
    [-2.0, -13.0, 2.0],
    [9.0, -11.0, 2.5],
    [13.0, 0.0, 2.0],
    [5.0, 3.0, 2.2],
    [-7.0, 1.0, 2.4],
    [-13.0, 11.0, 2.0],
    [2.0, 13.0, 2.6],
])

DEFAULT_WORKSPACE = ((-20.0, 20.0), (-20.0, 25.0))

# elliptic goal orbit; transits an inflated obstacle zone only early in
# the run, while the barrier weight is still small
DEFAULT_GOAL_CENTER = (0.0, 4.0)
DEFAULT_GOAL_RADIUS = (12.5, 13.5)
DEFAULT_GOAL_RATE = 0.06
DEFAULT_GOAL_PHASE = 2.2


def default_goal(t):
    cx, cy = DEFAULT_GOAL_CENTER
    rx, ry = DEFAULT_GOAL_RADIUS
    ang = DEFAULT_GOAL_RATE * t + DEFAULT_GOAL_PHASE
    return np.array([cx + rx * np.cos(ang), cy + ry * np.sin(ang)])


def default_goal_dot(t):
    rx, ry = DEFAULT_GOAL_RADIUS
    ang = DEFAULT_GOAL_RATE * t + DEFAULT_GOAL_PHASE
    return DEFAULT_GOAL_RATE * np.array([-rx * np.sin(ang), ry * np.cos(ang)])


@dataclass(frozen=True)
class RobotScene:
    """Workspace, obstacles, robot geometry, and goal signal."""

    workspace: Box
    centers: np.ndarray
    radii: np.ndarray
    robot_radius: float
    start: np.ndarray
    goal: Callable
    goal_dot: Optional[Callable] = None
    gain: float = 2.0

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        radii = np.atleast_1d(np.asarray(self.radii, dtype=float))
        if centers.shape[0] != radii.shape[0]:
            raise ValueError("centers/radii count mismatch")
        if np.any(radii <= 0) or self.robot_radius <= 0:
            raise ValueError("radii must be positive")
        for i in range(len(radii)):
            for j in range(i + 1, len(radii)):
                gap = np.linalg.norm(centers[i] - centers[j])
                if gap <= radii[i] + radii[j]:
                    raise InfeasibleSetError(
                        f"obstacles {i} and {j} intersect"
                    )
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(
            self, "start", np.atleast_1d(np.asarray(self.start, dtype=float))
        )
        if self.clearance(self.start) <= 0:
            raise InfeasibleSetError("robot starts in collision")

    @property
    def n_obstacles(self):
        return self.centers.shape[0]

    def clearance(self, x_r):
        """Smallest surface-to-surface distance from the robot disk."""
        dists = np.linalg.norm(self.centers - x_r, axis=1)
        return float(np.min(dists - self.radii - self.robot_radius))

    def eroded_workspace(self):
        r = self.robot_radius
        return Box(lo=self.workspace.lo + r, hi=self.workspace.hi - r)

    def goal_at(self, t):
        return np.atleast_1d(np.asarray(self.goal(t), dtype=float))

    def goal_dot_at(self, t):
        if self.goal_dot is not None:
            return np.atleast_1d(np.asarray(self.goal_dot(t), dtype=float))
        eps = 1e-6
        return (self.goal_at(t + eps) - self.goal_at(t - eps)) / (2 * eps)

    @classmethod
    def from_config(cls, path):
        """Load a scene from a key = value config file.

        Sections: [workspace] (xmin..ymax), [robot] (radius, start_x/y,
        gain), [obstacles] (one `obstacle_<i> = x y r` entry per disk),
        [goal] (radius_x/y, rate, phase).
        """
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise FileNotFoundError(path)
        ws = cp["workspace"]
        workspace = Box(
            lo=np.array([ws.getfloat("xmin"), ws.getfloat("ymin")]),
            hi=np.array([ws.getfloat("xmax"), ws.getfloat("ymax")]),
        )
        rows = [
            [float(v) for v in value.split()]
            for key, value in sorted(cp["obstacles"].items())
            if key.startswith("obstacle")
        ]
        obstacles = np.asarray(rows, dtype=float)
        rb = cp["robot"]
        goal = cp["goal"] if cp.has_section("goal") else {}
        cx = float(goal.get("center_x", DEFAULT_GOAL_CENTER[0]))
        cy = float(goal.get("center_y", DEFAULT_GOAL_CENTER[1]))
        rx = float(goal.get("radius_x", DEFAULT_GOAL_RADIUS[0]))
        ry = float(goal.get("radius_y", DEFAULT_GOAL_RADIUS[1]))
        rate = float(goal.get("rate", DEFAULT_GOAL_RATE))
        phase = float(goal.get("phase", DEFAULT_GOAL_PHASE))

        def goal_fn(t):
            ang = rate * t + phase
            return np.array([cx + rx * np.cos(ang), cy + ry * np.sin(ang)])

        def goal_dot_fn(t):
            ang = rate * t + phase
            return rate * np.array([-rx * np.sin(ang), ry * np.cos(ang)])

        return cls(
            workspace=workspace,
            centers=obstacles[:, :2],
            radii=obstacles[:, 2],
            robot_radius=rb.getfloat("radius"),
            start=np.array([rb.getfloat("start_x"), rb.getfloat("start_y")]),
            goal=goal_fn,
            goal_dot=goal_dot_fn,
            gain=rb.getfloat("gain", fallback=2.0),
        )


def default_scene(gain=2.0):
    return RobotScene(
        workspace=Box(
            lo=np.array([DEFAULT_WORKSPACE[0][0], DEFAULT_WORKSPACE[1][0]]),
            hi=np.array([DEFAULT_WORKSPACE[0][1], DEFAULT_WORKSPACE[1][1]]),
        ),
        centers=DEFAULT_OBSTACLES[:, :2],
        radii=DEFAULT_OBSTACLES[:, 2],
        robot_radius=1.0,
        start=np.array([-16.0, -16.0]),
        goal=default_goal,
        goal_dot=default_goal_dot,
        gain=gain,
    )


def _facets(scene, x_r):
    """Separating facets (normals, offsets) for the current robot position."""
    a = scene.centers - x_r
    dists = np.linalg.norm(a, axis=1)
    inflated = scene.radii + scene.robot_radius
    if np.any(dists <= inflated):
        raise InfeasibleSetError("robot is in collision with an obstacle")
    offsets = a @ x_r + dists * (dists - inflated) / 2.0
    return a, offsets


def local_free_space(scene, x_r):
    """Obstacle-free convex polytope of robot-center positions.

    One halfspace per obstacle, each placed at the midpoint of the
    surface-to-surface gap and eroded by the robot radius, intersected
    with the eroded workspace box. Contains ``x_r`` by construction.
    """
    x_r = np.atleast_1d(np.asarray(x_r, dtype=float))
    eroded = scene.eroded_workspace()
    if not eroded.contains(x_r):
        raise InfeasibleSetError("robot center outside the eroded workspace")
    normals, offsets = _facets(scene, x_r)
    return HalfspaceIntersection(normals=normals, offsets=offsets, box=eroded)


def project_goal_reference(polytope, x_d, tol=1e-10):
    """High-accuracy projection of the goal onto the free polytope."""
    return polytope.project(np.atleast_1d(np.asarray(x_d, dtype=float)))


@dataclass(frozen=True)
class NavigationRecord:
    """Co-integrated robot / goal-estimate trajectories plus references."""

    times: np.ndarray
    robot_path: np.ndarray
    estimate_path: np.ndarray
    clearances: np.ndarray
    ref_times: np.ndarray
    references: np.ndarray
    errors: np.ndarray
    wall_ns: np.ndarray

    def min_clearance(self):
        return float(np.min(self.clearances))


_BOX_NORMALS = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


def nav_polytope_rows(scene, x_r):
    """All facet rows (obstacles then workspace box) at robot position x_r."""
    a_obs, b_obs = _facets(scene, x_r)
    lo = scene.eroded_workspace().lo
    hi = scene.eroded_workspace().hi
    box_offsets = np.array([hi[0], -lo[0], hi[1], -lo[1]])
    return np.vstack([a_obs, _BOX_NORMALS]), np.concatenate([b_obs, box_offsets])


def nav_barrier_terms(scene, c0, c_rate, x_r, v_r, x, t):
    """Gradient, Hessian, and time derivative of the navigation barrier.

    The barrier is taken at the goal estimate ``x`` over the free
    polytope of the robot at ``x_r``; its time dependence enters through
    the goal motion, the barrier weight, and the facet motion induced by
    the robot velocity ``v_r``.
    """
    A, b = nav_polytope_rows(scene, x_r)
    d = b - A @ x
    if np.any(d <= 0.0):
        raise DomainError("goal estimate left the free polytope")
    c = c0 * np.exp(c_rate * t)
    inv_cd = 1.0 / (c * d)
    grad = (x - scene.goal_at(t)) + A.T @ inv_cd
    hess = np.eye(2) + (A.T * (inv_cd / d)) @ A
    # facet motion: a_i = x_i - x_r moves at -v_r, the offset follows the
    # midpoint of the shrinking surface gap
    a_obs = A[:scene.n_obstacles]
    dists = np.linalg.norm(a_obs, axis=1)
    inflated = scene.radii + scene.robot_radius
    a_dot = -np.tile(v_r, (scene.n_obstacles, 1))
    dist_dot = -(a_obs @ v_r) / dists
    b_dot = (-(v_r @ x_r) + a_obs @ v_r
             + dist_dot * (2.0 * dists - inflated) / 2.0)
    gap_dot = np.zeros_like(d)
    gap_dot[:scene.n_obstacles] = b_dot - a_dot @ x
    time_grad = -scene.goal_dot_at(t) - c_rate * (A.T @ inv_cd)
    time_grad += np.vstack([a_dot, np.zeros((4, 2))]).T @ inv_cd
    time_grad -= A.T @ (gap_dot * inv_cd / d)
    return grad, hess, time_grad


def _nav_rhs(scene, c0, c_rate, kappa, structured):
    """Right-hand side of the coupled (robot, estimate) dynamics."""
    gain = scene.gain

    def rhs(z, t):
        x_r, x = z[:2], z[2:]
        v_r = -gain * (x_r - x)
        grad, hess, time_grad = nav_barrier_terms(
            scene, c0, c_rate, x_r, v_r, x, t)
        drive = kappa * grad + time_grad if structured else kappa * grad
        vel = -np.linalg.solve(hess, drive)
        return np.concatenate([v_r, vel])

    return rhs


def run_robot_navigation(scene, mode, t_final=50.0, dt=0.01, kappa=0.1,
                         c0=1.0, c_rate=0.1, ref_stride=10):
    """Simulate the navigation loop in structured or unstructured mode.

    The structured flow carries the facet- and goal-motion compensation
    term; the unstructured flow drops it and otherwise performs the same
    per-step computation. Collisions abort the run. References are
    high-accuracy projections of the goal onto the current free
    polytope, sampled every ``ref_stride`` steps.
    """
    if mode not in ("structured", "unstructured"):
        raise ValueError(f"unknown navigation mode {mode!r}")
    rhs = _nav_rhs(scene, c0, c_rate, kappa, structured=(mode == "structured"))
    n_steps = int(round(t_final / dt))
    times = dt * np.arange(n_steps + 1)
    z = np.concatenate([scene.start, scene.start])  # estimate starts on robot
    robot_path = np.empty((n_steps + 1, 2))
    estimate_path = np.empty((n_steps + 1, 2))
    clearances = np.empty(n_steps + 1)
    wall_ns = np.zeros(n_steps + 1, dtype=np.int64)
    robot_path[0] = z[:2]
    estimate_path[0] = z[2:]
    clearances[0] = scene.clearance(z[:2])
    ref_times, references, errors = [], [], []

    def sample_reference(i):
        poly = local_free_space(scene, robot_path[i])
        ref = project_goal_reference(poly, scene.goal_at(times[i]))
        ref_times.append(times[i])
        references.append(ref)
        errors.append(float(np.linalg.norm(estimate_path[i] - ref)))

    sample_reference(0)
    for i in range(n_steps):
        t = times[i]
        tic = time.perf_counter_ns()
        accepted = None
        for j in range(MAX_HALVINGS + 1):
            n_sub = 2 ** j
            delta = dt / n_sub
            try:
                zz = z
                for s in range(n_sub):
                    zz = _rk4_step(rhs, t + s * delta, zz, delta)
                rhs(zz, times[i + 1])  # domain check at the landing state
                accepted = zz
                break
            except DomainError:
                continue
        if accepted is None:
            raise DomainError(
                f"free-space violation persisted at t={t:.6g}"
            )
        z = accepted
        wall_ns[i + 1] = time.perf_counter_ns() - tic
        if not np.all(np.isfinite(z)):
            raise DivergedError("navigation state is non-finite",
                                step=times[i + 1])
        robot_path[i + 1] = z[:2]
        estimate_path[i + 1] = z[2:]
        clearances[i + 1] = scene.clearance(z[:2])
        if clearances[i + 1] <= 0.0:
            raise DivergedError("collision detected", step=times[i + 1])
        if (i + 1) % ref_stride == 0 or i + 1 == n_steps:
            sample_reference(i + 1)
    return NavigationRecord(
        times=times,
        robot_path=robot_path,
        estimate_path=estimate_path,
        clearances=clearances,
        ref_times=np.asarray(ref_times),
        references=np.asarray(references),
        errors=np.asarray(errors),
        wall_ns=wall_ns,
    )
