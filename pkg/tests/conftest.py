import numpy as np
import pytest

from bevtrack.homography import Homography
from bevtrack.linearized import linearize
from bevtrack.simulator import CameraSpec, true_homography


@pytest.fixture
def camera():
    return CameraSpec(height=6.0, tilt_deg=30.0, focal=1000.0, image_width=1920, image_height=1080)


@pytest.fixture
def true_h(camera) -> Homography:
    return true_homography(camera)


@pytest.fixture
def lh(camera, true_h):
    return linearize(true_h, (camera.image_width, camera.image_height), 0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
