"""Gyro error simulation and curriculum blending.

Covers the two dominant gyro error sources for still-shot deblurring:
per-axis Gaussian sensor noise and a shifted rotational center (the
camera does not pivot exactly about the assumed principal point). Clean
and erroneous motion fields are combined by a convex blend whose weight
follows a staircase curriculum over training epochs.

Everything is pure given (inputs, seed); separate seeds give independent
streams, so parallel generation is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gyro import CameraIntrinsics, CameraMotionField, GyroSequence, build_cmf
from .rng import derive_seed

__all__ = [
    "GyroNoiseModel",
    "CenterShiftRange",
    "CurriculumSchedule",
    "default_noise_model",
    "inject_gyro_noise",
    "shift_rotation_center",
    "blend_cmf",
    "curriculum_alpha",
    "make_noisy_cmf",
]


@dataclass(frozen=True)
class GyroNoiseModel:
    """Per-axis Gaussian noise parameters (mean, sigma) in rad/s."""

    mean_x: float
    sigma_x: float
    mean_y: float
    sigma_y: float
    mean_z: float
    sigma_z: float

    def __post_init__(self):
        if self.sigma_x < 0 or self.sigma_y < 0 or self.sigma_z < 0:
            raise ValueError("noise sigmas must be non-negative")

    def means(self) -> np.ndarray:
        return np.array([self.mean_x, self.mean_y, self.mean_z])

    def sigmas(self) -> np.ndarray:
        return np.array([self.sigma_x, self.sigma_y, self.sigma_z])


@dataclass(frozen=True)
class CenterShiftRange:
    """Rotational-center shift drawn uniformly from [-max_abs, max_abs] px per axis."""

    max_abs: float = 500.0

    def __post_init__(self):
        if self.max_abs < 0:
            raise ValueError("max_abs must be non-negative")


@dataclass(frozen=True)
class CurriculumSchedule:
    """Staircase schedule for the clean/noisy blending weight.

    alpha(ep) = step * floor(ep / stage_len) while ep < saturate_epoch,
    and 1 afterwards.
    """

    step: float = 0.1
    stage_len: int = 10
    saturate_epoch: int = 100

    def __post_init__(self):
        if self.stage_len <= 0 or self.saturate_epoch <= 0 or self.step <= 0:
            raise ValueError("schedule parameters must be positive")


def default_noise_model() -> GyroNoiseModel:
    """Per-axis gyro noise measured from a stationary Samsung Galaxy S22."""
    return GyroNoiseModel(
        mean_x=-0.00005643153,
        sigma_x=0.0008631607,
        mean_y=-0.00006369004,
        sigma_y=0.0015023947,
        mean_z=0.00021379517,
        sigma_z=0.0007655643,
    )


def inject_gyro_noise(seq: GyroSequence, model: GyroNoiseModel, seed: int) -> GyroSequence:
    """Add independent per-sample, per-axis Gaussian noise to a sequence.

    Timestamps are unchanged; the draw is a pure function of (seq, model,
    seed) using a PCG64 stream.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.standard_normal((len(seq), 3)) * model.sigmas() + model.means()
    return GyroSequence(seq.times.copy(), seq.omega + noise, seq.rate_hz)


def shift_rotation_center(k: CameraIntrinsics, delta) -> CameraIntrinsics:
    """Move the principal point by (dx, dy) pixels.

    Homographies built with the shifted intrinsics pivot about the shifted
    point, which is how an off-center rotation error enters the motion
    field.
    """
    dx, dy = float(delta[0]), float(delta[1])
    return CameraIntrinsics(k.fx, k.fy, k.cx + dx, k.cy + dy)


def blend_cmf(
    v_clean: CameraMotionField, v_noisy: CameraMotionField, alpha: float
) -> CameraMotionField:
    """Elementwise convex combination (1-alpha)*clean + alpha*noisy."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    same = (
        v_clean.width_g == v_noisy.width_g
        and v_clean.height_g == v_noisy.height_g
        and v_clean.m == v_noisy.m
        and v_clean.s == v_noisy.s
        and v_clean.source_dims == v_noisy.source_dims
    )
    if not same:
        raise ValueError("motion fields have mismatched dimensions")
    data = (1.0 - alpha) * v_clean.data + alpha * v_noisy.data
    return CameraMotionField(
        v_clean.width_g, v_clean.height_g, v_clean.m, v_clean.s,
        v_clean.source_dims, data,
    )


def curriculum_alpha(sched: CurriculumSchedule, ep: int) -> float:
    """Blending weight for a training epoch under a staircase schedule."""
    if ep < 0:
        raise ValueError(f"epoch must be non-negative, got {ep}")
    if ep >= sched.saturate_epoch:
        return 1.0
    return sched.step * (ep // sched.stage_len)


def make_noisy_cmf(
    seq: GyroSequence,
    k: CameraIntrinsics,
    dims: tuple[int, int],
    m: int,
    s: int,
    model: GyroNoiseModel,
    shift_range: CenterShiftRange,
    seed: int,
) -> CameraMotionField:
    """Motion field with simulated gyro errors, reproducible per seed.

    One rotational-center shift is drawn per field (the offset between
    gyro and camera centers is static within an exposure); sensor noise
    is drawn per sample. The two draws use seeds derived from `seed` at
    indices 0 and 1.
    """
    w, h = dims
    shift_rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 0)))
    delta = shift_rng.uniform(-shift_range.max_abs, shift_range.max_abs, size=2)
    noisy_seq = inject_gyro_noise(seq, model, derive_seed(seed, 1))
    return build_cmf(noisy_seq, shift_rotation_center(k, delta), w, h, m, s)
