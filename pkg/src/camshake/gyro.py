"""Camera motion fields from gyroscope data.

An angular-velocity sequence covering one exposure is resampled,
integrated into camera orientations referenced to the temporal center,
and converted to per-pixel displacement chains through the rotation
homography H = K R K^-1.

Conventions: image x grows right, y grows down; angular velocities are
rad/s about the device x/y/z axes; orientations are axis-angle rotation
vectors in radians. Motion-field vectors are always expressed in
full-resolution pixel units, whatever the grid scale. All functions are
pure and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "GyroSample",
    "GyroSequence",
    "CameraIntrinsics",
    "ResampledGyro",
    "OrientationTrack",
    "Homography",
    "CameraMotionField",
    "rotation_matrix",
    "rotation_vector_from_matrix",
    "resample_gyro",
    "integrate_orientations",
    "homography",
    "warp_point",
    "homography_track",
    "build_cmf",
]

_TINY_ANGLE = 1e-12
_TINY_DEPTH = 1e-12


@dataclass(frozen=True)
class GyroSample:
    """One gyro reading: timestamp in seconds, angular velocity in rad/s."""

    t: float
    omega: tuple[float, float, float]


@dataclass(frozen=True)
class GyroSequence:
    """Timestamped angular-velocity record, pre-windowed to one exposure.

    Parameters
    ----------
    times : ndarray, shape (N,)
        Sample timestamps in seconds, strictly increasing, N >= 2.
    omega : ndarray, shape (N, 3)
        Angular velocities in rad/s about the x, y, z axes.
    rate_hz : float, optional
        Nominal sampling rate. Inferred from the median spacing when
        omitted.
    """

    times: np.ndarray
    omega: np.ndarray
    rate_hz: float | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        omega = np.asarray(self.omega, dtype=np.float64)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("gyro sequence needs at least 2 samples")
        if omega.shape != (times.size, 3):
            raise ValueError(f"omega must be (N, 3), got {omega.shape}")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(omega)):
            raise ValueError("gyro sequence contains non-finite values")
        if np.any(np.diff(times) <= 0):
            raise ValueError("gyro timestamps must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "omega", omega)

    def __len__(self):
        return self.times.size

    @property
    def duration(self) -> float:
        """Time span between the first and last sample, in seconds."""
        return float(self.times[-1] - self.times[0])

    @property
    def nominal_rate(self) -> float:
        if self.rate_hz is not None:
            return float(self.rate_hz)
        return 1.0 / float(np.median(np.diff(self.times)))

    def samples(self):
        """Iterate the sequence as GyroSample values."""
        for t, w in zip(self.times, self.omega):
            yield GyroSample(float(t), (float(w[0]), float(w[1]), float(w[2])))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def inverse_matrix(self) -> np.ndarray:
        # analytic inverse; never goes through a linear solver
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )


@dataclass(frozen=True)
class ResampledGyro:
    """Angular velocities at m+1 uniformly spaced instants over the exposure."""

    omega: np.ndarray  # (m+1, 3)
    m: int

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=np.float64)
        if omega.shape != (self.m + 1, 3):
            raise ValueError(f"expected ({self.m + 1}, 3) omega, got {omega.shape}")
        object.__setattr__(self, "omega", omega)


@dataclass(frozen=True)
class OrientationTrack:
    """m+1 camera orientations (axis-angle), zero at the temporal center."""

    thetas: np.ndarray  # (m+1, 3)
    exposure: float

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=np.float64)
        if thetas.ndim != 2 or thetas.shape[1] != 3:
            raise ValueError("thetas must be (m+1, 3)")
        object.__setattr__(self, "thetas", thetas)

    @property
    def center_index(self) -> int:
        return (self.thetas.shape[0] - 1) // 2


@dataclass(frozen=True)
class Homography:
    """3x3 projective image-plane map, normalized so h[2,2] == 1."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        if h.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        object.__setattr__(self, "h", h)


@dataclass(frozen=True)
class CameraMotionField:
    """Grid of per-pixel displacement chains.

    ``data`` has shape (height_g, width_g, 2*m): for grid cell (gy, gx),
    channels [2j, 2j+1] hold the (dx, dy) of the j-th consecutive
    displacement of that cell's full-resolution sample point, in
    full-resolution pixels.
    """

    width_g: int
    height_g: int
    m: int
    s: int
    source_dims: tuple[int, int]  # (W, H) of the full-resolution image
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (self.height_g, self.width_g, 2 * self.m):
            raise ValueError(
                f"expected data shape {(self.height_g, self.width_g, 2 * self.m)}, "
                f"got {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("motion field contains non-finite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "source_dims", tuple(int(v) for v in self.source_dims))


def rotation_matrix(theta) -> np.ndarray:
    """Proper rotation matrix for an axis-angle vector (exponential map).

    Angles below 1e-12 rad return the exact identity.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (3,):
        raise ValueError("rotation vector must have 3 components")
    if not np.all(np.isfinite(theta)):
        raise ValueError("rotation vector must be finite")
    angle = float(np.linalg.norm(theta))
    if angle < _TINY_ANGLE:
        return np.eye(3)
    kx, ky, kz = theta / angle
    k = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def _quaternion_from_matrix(r: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) with w >= 0 from a rotation matrix."""
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s,
             (r[1, 0] - r[0, 1]) / s]
        )
    elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
        s = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array(
            [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s,
             (r[0, 2] + r[2, 0]) / s]
        )
    elif r[1, 1] >= r[2, 2]:
        s = np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array(
            [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s,
             (r[1, 2] + r[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array(
            [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s,
             (r[1, 2] + r[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def rotation_vector_from_matrix(r) -> np.ndarray:
    """Axis-angle vector (angle in [0, pi]) for a rotation matrix."""
    q = _quaternion_from_matrix(np.asarray(r, dtype=np.float64))
    w, v = q[0], q[1:]
    n = float(np.linalg.norm(v))
    if n < _TINY_ANGLE:
        # q ~ (1, theta/2) for small rotations
        return 2.0 * v
    return (2.0 * np.arctan2(n, w) / n) * v


def resample_gyro(seq: GyroSequence, m: int) -> ResampledGyro:
    """Resample a gyro sequence to m+1 uniformly spaced angular velocities.

    Each axis is interpolated independently with a natural cubic spline
    over [t_first, t_last]; the endpoints reproduce the shutter open and
    close instants exactly.
    """
    if m < 2 or m % 2 != 0:
        raise ValueError(f"m must be even and >= 2, got {m}")
    ts = np.linspace(seq.times[0], seq.times[-1], m + 1)
    out = np.empty((m + 1, 3))
    for axis in range(3):
        spline = CubicSpline(seq.times, seq.omega[:, axis], bc_type="natural")
        out[:, axis] = spline(ts)
    return ResampledGyro(out, m)


def integrate_orientations(rs: ResampledGyro, exposure: float) -> OrientationTrack:
    """Integrate resampled angular velocities into center-referenced orientations.

    Cumulative trapezoidal integration with step exposure/m yields absolute
    orientations; each is then composed with the inverse of the center
    orientation (rotation composition, not vector subtraction) so the track
    is exactly zero at index m//2.
    """
    if not exposure > 0:
        raise ValueError(f"exposure must be positive, got {exposure}")
    m = rs.m
    dt = exposure / m
    incr = 0.5 * (rs.omega[:-1] + rs.omega[1:]) * dt
    thetas_abs = np.vstack([np.zeros(3), np.cumsum(incr, axis=0)])
    center = m // 2
    r_center_inv = rotation_matrix(thetas_abs[center]).T
    thetas = np.empty_like(thetas_abs)
    for i, th in enumerate(thetas_abs):
        thetas[i] = rotation_vector_from_matrix(rotation_matrix(th) @ r_center_inv)
    thetas[center] = 0.0
    return OrientationTrack(thetas, float(exposure))


def homography(k: CameraIntrinsics, r) -> Homography:
    """Rotation-induced homography H = K R K^-1, normalized to h[2,2] = 1."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if np.array_equal(r, np.eye(3)):
        # conjugating the identity is the identity; skip the float round trip
        return Homography(np.eye(3))
    h = k.matrix() @ r @ k.inverse_matrix()
    return Homography(h / h[2, 2])


def warp_point(h: Homography, p) -> tuple[float, float]:
    """Apply a homography to a 2D point (projective division)."""
    x, y = float(p[0]), float(p[1])
    v = h.h @ np.array([x, y, 1.0])
    if abs(v[2]) < _TINY_DEPTH:
        raise ValueError(f"point {(x, y)} maps to infinity under the homography")
    return (float(v[0] / v[2]), float(v[1] / v[2]))


def orientation_homographies(
    track: OrientationTrack, k: CameraIntrinsics
) -> list[Homography]:
    """One homography per orientation in the track."""
    return [homography(k, rotation_matrix(th)) for th in track.thetas]


def homography_track(seq: GyroSequence, k: CameraIntrinsics, m: int) -> list[Homography]:
    """Resample, integrate and map a gyro window to m+1 homographies.

    The exposure is taken to be the sequence's own time span (inputs are
    assumed pre-windowed to the exposure).
    """
    rs = resample_gyro(seq, m)
    track = integrate_orientations(rs, seq.duration)
    return orientation_homographies(track, k)


def _warp_grid(hom: Homography, pts: np.ndarray) -> np.ndarray:
    """Warp an (..., 3) homogeneous point grid, returning (..., 2)."""
    q = pts @ hom.h.T
    z = q[..., 2]
    if np.any(np.abs(z) < _TINY_DEPTH):
        raise ValueError("grid point maps to infinity under the homography")
    return q[..., :2] / z[..., None]


def grid_points(w: int, h: int, s: int) -> np.ndarray:
    """Full-resolution sample points of the motion-field grid cells.

    Cell (gy, gx) samples the cell center ((gx+0.5)*s - 0.5,
    (gy+0.5)*s - 0.5). Returns homogeneous points of shape (h//s, w//s, 3).
    """
    gx = (np.arange(w // s) + 0.5) * s - 0.5
    gy = (np.arange(h // s) + 0.5) * s - 0.5
    px, py = np.meshgrid(gx, gy)
    return np.stack([px, py, np.ones_like(px)], axis=-1)


def build_cmf(
    seq: GyroSequence, k: CameraIntrinsics, w: int, h: int, m: int, s: int
) -> CameraMotionField:
    """Build the camera motion field for a w x h image at grid scale s.

    At every grid cell the sample point is warped by the m+1
    center-referenced homographies of the window; the 2m channels are the
    m consecutive coordinate differences (dx, dy), so the chain passes
    through the unwarped point at the temporal center.
    """
    if s < 1:
        raise ValueError(f"scale must be >= 1, got {s}")
    if w % s != 0 or h % s != 0:
        raise ValueError(f"dims ({w}, {h}) must be divisible by scale {s}")
    homs = homography_track(seq, k, m)
    pts = grid_points(w, h, s)
    hg, wg = pts.shape[:2]
    warped = np.empty((m + 1, hg, wg, 2))
    for i, hom in enumerate(homs):
        warped[i] = _warp_grid(hom, pts)
    diffs = np.diff(warped, axis=0)  # (m, hg, wg, 2)
    data = np.moveaxis(diffs, 0, 2).reshape(hg, wg, 2 * m)
    return CameraMotionField(wg, hg, m, s, (w, h), data)
