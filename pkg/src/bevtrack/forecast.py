"""Track preprocessing and pluggable BEV motion forecasting.

A raw track history (irregular frames, pixel noise) is resampled onto a
uniform step grid ending at the last observation and smoothed with a
constant-velocity Kalman filter plus RTS pass. Motion models then emit k
forecast branches covering every future frame up to the horizon; the tracker
consumes them one frame at a time through a shared cursor and never re-seeds
a forecast mid-occlusion. Branches only disappear by being pruned or by the
cursor running past their end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DeadForecast
from .smoothing import smooth_constant_velocity

MOTION_KINDS = ("static", "kalman_cv", "fan")


@dataclass(frozen=True)
class ObservedTrajectory:
    """Smoothed, uniformly resampled history ending at the last observation.

    points holds obs_len BEV positions spaced dt seconds apart; the first
    extrapolated_prefix of them were back-extrapolated (history too short)
    rather than observed. fps records the frame rate the grid was built
    against, so one step spans dt*fps frames.
    """

    points: np.ndarray  # (obs_len, 2)
    dt: float
    last_frame: int
    extrapolated_prefix: int
    fps: float
    velocities: np.ndarray  # (obs_len, 2) smoothed velocity estimates, m/s

    def __post_init__(self):
        if self.dt <= 0 or self.fps <= 0:
            raise ValueError("dt and fps must be positive")
        if len(self.points) == 0:
            raise ValueError("points must be non-empty")
        if not 0 <= self.extrapolated_prefix < len(self.points):
            raise ValueError("extrapolated_prefix must be < number of points")

    @property
    def frames_per_step(self) -> int:
        return max(1, round(self.dt * self.fps))


def preprocess(
    history,
    obs_len: int = 8,
    dt: float = 0.4,
    fps: float = 20.0,
    process_noise: float = 0.1,
    obs_noise: float = 0.25,
) -> ObservedTrajectory:
    """Resample and smooth a track history for forecasting.

    Args:
        history: sequence of (frame, (x, y)) with strictly increasing frames.
        obs_len: number of grid steps in the output.
        dt: grid step, seconds.
        fps: frames per second of the source video.
        process_noise, obs_noise: smoother parameters.

    Returns:
        ObservedTrajectory of exactly obs_len points ending at the last
        observation. Grid points earlier than the first observation are
        back-extrapolated along the earliest smoothed velocity and counted in
        extrapolated_prefix.
    """
    if len(history) == 0:
        raise ValueError("history must be non-empty")
    frames = np.array([f for f, _ in history], dtype=float)
    pos = np.array([list(p) for _, p in history], dtype=float)
    if np.any(np.diff(frames) <= 0):
        raise ValueError("history frames must be strictly increasing")

    last = frames[-1]
    step_frames = dt * fps
    grid = last - step_frames * np.arange(obs_len)[::-1]  # ascending, ends at last
    covered = grid >= frames[0] - 1e-9
    n_cov = int(covered.sum())  # >= 1: the last grid point is the last observation

    gx = np.interp(grid[covered], frames, pos[:, 0])
    gy = np.interp(grid[covered], frames, pos[:, 1])
    smoothed, vel = smooth_constant_velocity(
        np.stack([gx, gy], axis=1), dt, process_noise, obs_noise
    )

    prefix = obs_len - n_cov
    if prefix > 0:
        v0 = vel[0]
        steps = np.arange(prefix, 0, -1)[:, None]  # prefix, ..., 1
        pre_pts = smoothed[0] - steps * dt * v0
        smoothed = np.vstack([pre_pts, smoothed])
        vel = np.vstack([np.repeat(v0[None, :], prefix, axis=0), vel])

    return ObservedTrajectory(
        points=smoothed,
        dt=dt,
        last_frame=int(round(last)),
        extrapolated_prefix=prefix,
        fps=fps,
        velocities=vel,
    )


@dataclass(frozen=True)
class MotionModelSpec:
    """Which forecaster to run and with how many branches.

    kinds: "static" repeats the last point, "kalman_cv" propagates the
    smoothed constant-velocity state, "fan" spreads k constant-velocity
    branches across fan_angles (degrees, rotating the smoothed velocity).
    The fan is a deterministic stand-in for learned multi-modal forecasters.
    """

    kind: str = "kalman_cv"
    k: int = 1
    fan_angles: tuple[float, ...] = (-30.0, 0.0, 30.0)

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.kind!r}, expected one of {MOTION_KINDS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.kind in ("static", "kalman_cv") and self.k != 1:
            raise ValueError(f"{self.kind} emits a single branch, got k={self.k}")
        if self.kind == "fan" and self.k != len(self.fan_angles):
            raise ValueError("fan requires k == len(fan_angles)")


@dataclass
class ForecastBranch:
    """One predicted trajectory: BEV points with per-frame indices."""

    points: np.ndarray  # (N, 2)
    frames: np.ndarray  # (N,) strictly increasing, uniform spacing
    alive: bool = True
    visible_streak: int = 0  # consecutive frames spent in visible freespace

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.frames = np.asarray(self.frames, dtype=int)
        if len(self.points) != len(self.frames) or len(self.points) == 0:
            raise ValueError("points and frames must be equal-length and non-empty")
        d = np.diff(self.frames)
        if len(d) and (np.any(d <= 0) or np.any(d != d[0])):
            raise ValueError("frames must be strictly increasing with uniform spacing")

    def __len__(self):
        return len(self.points)


@dataclass
class Forecast:
    """k branches sharing a single consumption cursor."""

    branches: list[ForecastBranch]
    created_frame: int
    cursor: int = 0
    dead: bool = field(default=False)

    @property
    def alive_branches(self) -> list[int]:
        return [i for i, b in enumerate(self.branches) if b.alive]

    def current_points(self) -> list[tuple[int, np.ndarray]]:
        """(branch_index, point) for every alive branch at the current cursor."""
        if self.cursor == 0:
            return []
        out = []
        for i, b in enumerate(self.branches):
            if b.alive and self.cursor <= len(b):
                out.append((i, b.points[self.cursor - 1]))
        return out

    def current_frame(self) -> int:
        return self.created_frame + self.cursor

    def advance(self) -> list[tuple[int, np.ndarray]]:
        """Move one frame along the predicted trajectories.

        Returns (branch_index, point) for every branch still alive. A branch
        whose points are exhausted dies; when nothing remains the forecast is
        dead and DeadForecast is raised (also on any later call).
        """
        if self.dead:
            raise DeadForecast("forecast has no alive branches")
        self.cursor += 1
        out = []
        for i, b in enumerate(self.branches):
            if not b.alive:
                continue
            if self.cursor > len(b):
                b.alive = False
                continue
            out.append((i, b.points[self.cursor - 1]))
        if not out:
            self.dead = True
            raise DeadForecast("forecast exhausted at cursor %d" % self.cursor)
        return out


def forecast(model: MotionModelSpec, obs: ObservedTrajectory, horizon_steps: int) -> Forecast:
    """Predict k branches covering every frame up to horizon_steps grid steps.

    Model steps are computed on the dt grid and interpolated linearly onto
    individual frames, so branch f spans frames last_frame+1 ..
    last_frame + horizon_steps * (dt * fps).
    """
    if horizon_steps < 1:
        raise ValueError("horizon_steps must be >= 1")
    spf = obs.frames_per_step
    n_frames = horizon_steps * spf
    last_pt = obs.points[-1]
    frames = obs.last_frame + 1 + np.arange(n_frames)
    tsec = (np.arange(n_frames) + 1.0) / obs.fps  # seconds past the last observation

    if model.kind == "static":
        vels = [np.zeros(2)]
    else:
        v = obs.velocities[-1]
        if model.kind == "kalman_cv":
            vels = [v]
        else:  # fan
            vels = []
            for ang in model.fan_angles:
                a = math.radians(ang)
                rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
                vels.append(rot @ v)

    branches = [
        ForecastBranch(points=last_pt + tsec[:, None] * vel[None, :], frames=frames.copy())
        for vel in vels
    ]
    return Forecast(branches=branches, created_frame=obs.last_frame)


def predicted_box(last_box, point: np.ndarray, lh, ego=None, frame: int = 0):
    """Translate the last observed box so its bottom-center sits at the
    pixel image of the given BEV point."""
    px = lh.bev_to_px(np.asarray(point, dtype=float), ego=ego, frame=frame)
    return last_box.with_bottom_center(px[0], px[1])
