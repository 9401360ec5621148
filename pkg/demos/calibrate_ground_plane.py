"""Estimate a metric ground mapping from a point cloud and pixel correspondences.

The camera hangs 6 m above a flat plaza, tilted 30 degrees down. We sample
ground points, fit the plane with RANSAC, build the pixel-to-BEV homography,
and measure how well held-out points land after removing the free in-plane
rotation/translation of the recovered frame.
"""

import numpy as np

from bevtrack.experiments import (
    calibrate_from_cloud,
    default_camera,
    rigid_align_2d,
)
from bevtrack.simulator import project_points


def sample_ground(cam, n, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-18.0, 18.0, 40 * n)
    y = rng.uniform(1.5, 45.0, 40 * n)
    world = np.stack([x, y, np.zeros_like(x)], axis=1)
    px, _ = project_points(cam, world, (0.0, 0.0))
    ok = (
        (px[:, 0] >= 0)
        & (px[:, 0] < cam.image_width)
        & (px[:, 1] >= 0)
        & (px[:, 1] < cam.image_height)
    )
    idx = np.nonzero(ok)[0][:n]
    return world[idx], px[idx]


def rmse(a, b):
    return float(np.sqrt(np.mean(np.sum((a - b) ** 2, axis=1))))


def main():
    cam = default_camera()
    world_train, px_train = sample_ground(cam, 500, seed=1)
    world_test, px_test = sample_ground(cam, 500, seed=2)

    print("fitting the plane and homography on 500 visible ground points ...")
    cal = calibrate_from_cloud(world_train, px_train, world_train)
    n = cal.plane.normal
    print(f"  plane normal  ({n[0]:+.6f}, {n[1]:+.6f}, {n[2]:+.6f})")
    print(f"  plane offset  {cal.plane.offset:.6f} m (the plaza is the z=0 plane here;")
    print("                 a camera-frame cloud would recover the 6 m camera height)")

    # the calibrated BEV frame is metric but rotated/shifted; align once on the
    # training points, then judge generalization on the held-out set
    lift_train = cal.homography.apply(px_train)
    rot, trans, _ = rigid_align_2d(lift_train, world_train[:, :2])
    lift_test = cal.homography.apply(px_test) @ rot.T + trans
    print(f"  held-out reprojection rmse, noiseless: {rmse(lift_test, world_test[:, :2]):.2e} m")

    rng = np.random.default_rng(3)
    noisy_px = px_train + rng.normal(0.0, 0.5, px_train.shape)
    cal_n = calibrate_from_cloud(world_train, noisy_px, world_train)
    lift_train_n = cal_n.homography.apply(px_train)
    rot_n, trans_n, _ = rigid_align_2d(lift_train_n, world_train[:, :2])
    lift_test_n = cal_n.homography.apply(px_test) @ rot_n.T + trans_n
    near = np.linalg.norm(world_test[:, :2], axis=1) <= 10.0
    print(
        f"  with 0.5 px pixel noise: {rmse(lift_test_n, world_test[:, :2]):.4f} m overall, "
        f"{rmse(lift_test_n[near], world_test[near, :2]):.4f} m within 10 m of the camera"
    )
    print("pixels far up the image lift to distant, noise-amplified BEV points;")
    print("close-range geometry stays accurate to a few centimeters.")


if __name__ == "__main__":
    main()
