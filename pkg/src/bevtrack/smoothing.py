"""Constant-velocity Kalman filtering with Rauch-Tung-Striebel smoothing.

State is [x, y, vx, vy] on a uniform time grid. On noiseless
constant-velocity input every innovation is zero, so the smoothed output
reproduces the input exactly regardless of the noise settings.
"""

from __future__ import annotations

import numpy as np


def smooth_constant_velocity(
    points: np.ndarray,
    dt: float,
    process_noise: float = 0.1,
    obs_noise: float = 0.25,
) -> tuple[np.ndarray, np.ndarray]:
    """Smooth a uniformly sampled 2D trajectory.

    Args:
        points: (N, 2) positions, one per grid step.
        dt: grid step, seconds.
        process_noise: white-acceleration sigma, m/s^2.
        obs_noise: observation sigma, meters.

    Returns:
        (positions, velocities): both (N, 2), the RTS-smoothed estimates.
    """
    z = np.asarray(points, dtype=float)
    if z.ndim != 2 or z.shape[1] != 2:
        raise ValueError("points must be (N, 2)")
    n = z.shape[0]
    if n == 0:
        raise ValueError("points must be non-empty")
    if n == 1:
        return z.copy(), np.zeros((1, 2))

    f = np.eye(4)
    f[0, 2] = dt
    f[1, 3] = dt
    h = np.zeros((2, 4))
    h[0, 0] = 1.0
    h[1, 1] = 1.0
    q1 = process_noise**2 * np.array(
        [[dt**4 / 4.0, dt**3 / 2.0], [dt**3 / 2.0, dt**2]]
    )
    q = np.zeros((4, 4))
    q[np.ix_([0, 2], [0, 2])] = q1
    q[np.ix_([1, 3], [1, 3])] = q1
    r = obs_noise**2 * np.eye(2)

    x = np.zeros(4)
    x[:2] = z[0]
    x[2:] = (z[1] - z[0]) / dt
    p = np.diag([obs_noise**2, obs_noise**2, (2.0 * obs_noise / dt) ** 2, (2.0 * obs_noise / dt) ** 2])

    xs_post = np.zeros((n, 4))
    ps_post = np.zeros((n, 4, 4))
    xs_prior = np.zeros((n, 4))
    ps_prior = np.zeros((n, 4, 4))

    for k in range(n):
        if k > 0:
            x = f @ x
            p = f @ p @ f.T + q
        xs_prior[k] = x
        ps_prior[k] = p
        innov = z[k] - h @ x
        s = h @ p @ h.T + r
        gain = p @ h.T @ np.linalg.inv(s)
        x = x + gain @ innov
        p = (np.eye(4) - gain @ h) @ p
        xs_post[k] = x
        ps_post[k] = p

    # Backward RTS pass.
    xs = xs_post.copy()
    for k in range(n - 2, -1, -1):
        c = ps_post[k] @ f.T @ np.linalg.inv(ps_prior[k + 1])
        xs[k] = xs_post[k] + c @ (xs[k + 1] - xs_prior[k + 1])

    return xs[:, :2], xs[:, 2:]
