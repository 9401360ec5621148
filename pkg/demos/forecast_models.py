"""Forecasting an occluded walker with the three motion models.

A walker strolls at 1.2 m/s and starts turning just before vanishing behind a
wall. The static model parks at the last seen position, the constant-velocity
model extrapolates the last smoothed heading, and the fan hedges with three
branches at -30/0/+30 degrees. The fan's turning branch is the one that stays
near the walker's true path.
"""

import math

import numpy as np

from bevtrack.forecast import MotionModelSpec, forecast, preprocess


def walker_path(t):
    """Straight along +x at 1.2 m/s, then a smooth 30 degree left turn at t=4s."""
    speed = 1.2
    if t <= 4.0:
        return np.array([-4.0 + speed * t, 10.0])
    a = math.radians(30.0)
    d = np.array([math.cos(a), math.sin(a)])
    return np.array([-4.0 + speed * 4.0, 10.0]) + d * speed * (t - 4.0)


def main():
    fps = 20.0
    seen = [(f, tuple(walker_path(f / fps))) for f in range(0, 85)]  # last seen at t=4.2s
    rng = np.random.default_rng(0)
    noisy = [(f, (x + rng.normal(0, 0.03), y + rng.normal(0, 0.03))) for f, (x, y) in seen]

    obs = preprocess(noisy, obs_len=8, dt=0.4, fps=fps)
    print(f"history: {len(noisy)} frames, resampled to {len(obs.points)} steps of {obs.dt}s")
    print(f"smoothed end velocity: ({obs.velocities[-1][0]:+.2f}, {obs.velocities[-1][1]:+.2f}) m/s")

    horizon_steps = 8  # 8 x 0.4s = 3.2 s ahead
    models = {
        "static": MotionModelSpec(kind="static"),
        "kalman_cv": MotionModelSpec(kind="kalman_cv"),
        "fan": MotionModelSpec(kind="fan", k=3, fan_angles=(-30.0, 0.0, 30.0)),
    }
    t_end = (84 + horizon_steps * obs.frames_per_step) / fps
    truth = walker_path(t_end)
    print(f"\ntrue position {t_end - 84 / fps:.1f}s after the last observation: "
          f"({truth[0]:+.2f}, {truth[1]:+.2f})")
    for name, spec in models.items():
        fc = forecast(spec, obs, horizon_steps=horizon_steps)
        print(f"  {name}:")
        for i, br in enumerate(fc.branches):
            end = br.points[-1]
            err = np.linalg.norm(end - truth)
            print(f"    branch {i}: endpoint ({end[0]:+.2f}, {end[1]:+.2f}), off by {err:.2f} m")

    print("\nthe fan's +30 degree branch lands closest; during tracking the branch")
    print("that overlaps the reappeared detection wins the re-association.")


if __name__ == "__main__":
    main()
