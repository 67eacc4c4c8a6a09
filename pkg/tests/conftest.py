import numpy as np
import pytest

from camshake import CameraIntrinsics, GyroSequence


@pytest.fixture
def intrinsics():
    return CameraIntrinsics(1000.0, 1000.0, 640.0, 360.0)


def random_gyro_sequence(rng, n=10, rate=200.0, scale=0.5):
    """Hand-shake-like window: smooth random angular velocities."""
    times = np.arange(n) / rate
    steps = rng.standard_normal((n, 3)) * scale * 0.3
    omega = np.cumsum(steps, axis=0)
    omega -= omega.mean(axis=0, keepdims=True)
    omega += rng.standard_normal(3) * scale * 0.2
    return GyroSequence(times, omega, rate)


def constant_gyro_sequence(omega, n=10, rate=200.0):
    times = np.arange(n) / rate
    return GyroSequence(times, np.tile(np.asarray(omega, float), (n, 1)), rate)


def zero_gyro_sequence(n=10, rate=200.0):
    return constant_gyro_sequence((0.0, 0.0, 0.0), n=n, rate=rate)
