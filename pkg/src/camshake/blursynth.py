"""Synthetic camera-shake blur from sharp frames and gyro windows.

A sharp frame is warped by the dense homography chain of a gyro window
and the warped frames are averaged, optionally with an alpha-composited
moving object, then center-cropped to the region valid in every frame.
Saturation scaling, heteroscedastic shot/read sensor noise and the sRGB
transfer curve turn the linear result into a realistic 8-bit pair.

Images are numpy float64 arrays of shape (H, W, C) in linear color,
nominally in [0, 1] before saturation scaling. The full camera ISP
(demosaicking, color matrices, CRF) is deliberately replaced by this
linear-domain approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy.interpolate import CubicSpline

from .gyro import (
    CameraIntrinsics,
    CameraMotionField,
    GyroSequence,
    Homography,
    ResampledGyro,
    build_cmf,
    integrate_orientations,
    orientation_homographies,
    warp_point,
)

__all__ = [
    "NoiseParams",
    "MovingObjectSpec",
    "SynthConfig",
    "SynthResult",
    "default_noise_params",
    "densify_gyro",
    "warp_image",
    "valid_crop",
    "synthesize_blur",
    "composite_object",
    "sample_object_spec",
    "apply_saturation",
    "shot_read_variance",
    "apply_noise",
    "linear_to_srgb",
    "srgb_to_linear",
    "load_image_linear",
    "save_image_srgb",
    "synth_pipeline",
]

OBJECT_DISTANCE_RANGE = (30.0, 70.0)  # px travelled by a moving object


@dataclass(frozen=True)
class NoiseParams:
    """Shot/read noise calibration on [0, 1] linear signal.

    log2(shot) is anchored at ISO 100 and ISO 1600 and interpolated
    linearly in log2(ISO); log2(read) is an affine function of log2(shot).
    Pixel variance is shot * signal + read.
    """

    log2_shot_iso100: float
    log2_shot_iso1600: float
    slope: float
    intercept: float


def default_noise_params() -> NoiseParams:
    """Shot/read calibration of a Samsung Galaxy S22 ultra-wide camera."""
    return NoiseParams(
        log2_shot_iso100=-10.0009938243,
        log2_shot_iso1600=-9.3348824266,
        slope=3.15578751,
        intercept=10.0003514152,
    )


@dataclass(frozen=True)
class MovingObjectSpec:
    """A sprite moving at constant speed across the exposure.

    sprite: (h, w, 4) RGBA in linear color, alpha in [0, 1].
    position: top-left (x, y) of the sprite in the first frame.
    direction: motion heading in degrees, [0, 360).
    distance: total travel in pixels over the exposure.
    """

    sprite: np.ndarray
    position: tuple[float, float]
    direction: float
    distance: float

    def __post_init__(self):
        sprite = np.asarray(self.sprite, dtype=np.float64)
        if sprite.ndim != 3 or sprite.shape[2] != 4:
            raise ValueError("sprite must be (h, w, 4) RGBA")
        if self.distance < 0:
            raise ValueError("distance must be non-negative")
        object.__setattr__(self, "sprite", sprite)


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for one synthesis run.

    The gyro window (`gyro_window` samples, nominally at `rate_hz` of the
    source sequence) is mapped onto [0, exposure]; with the defaults that
    is 10 samples at 200 Hz covering 1/20 s.
    """

    intrinsics: CameraIntrinsics
    exposure: float = 0.05
    gyro_window: int = 10
    interp_factor: int = 8
    m: int = 8
    s: int = 2
    noise: NoiseParams = field(default_factory=default_noise_params)
    saturation_scale: float = 1.0
    iso: float = 100.0

    def __post_init__(self):
        if self.interp_factor < 1:
            raise ValueError("interp_factor must be >= 1")
        if self.gyro_window < 2:
            raise ValueError("gyro_window must be >= 2")
        if not self.exposure > 0:
            raise ValueError("exposure must be positive")


@dataclass(frozen=True)
class SynthResult:
    """Outputs of one synthesis run: sRGB-encoded pair plus gyro products."""

    blurred: np.ndarray
    gt: np.ndarray
    cmf: CameraMotionField
    window: GyroSequence  # times remapped to [0, exposure]
    crop: tuple[int, int, int, int]  # (x0, y0, w, h) in source pixels


def densify_gyro(seq: GyroSequence, factor: int) -> GyroSequence:
    """Interpolate a sequence to (N-1)*factor + 1 samples.

    Each original interval is subdivided uniformly and sampled from a
    per-axis natural cubic spline, so the original instants are
    reproduced exactly.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return seq
    t = seq.times
    sub = np.arange(factor) / factor
    times = (t[:-1, None] + np.diff(t)[:, None] * sub[None, :]).ravel()
    times = np.append(times, t[-1])
    omega = np.empty((times.size, 3))
    for axis in range(3):
        spline = CubicSpline(t, seq.omega[:, axis], bc_type="natural")
        omega[:, axis] = spline(times)
    rate = None if seq.rate_hz is None else seq.rate_hz * factor
    return GyroSequence(times, omega, rate)


def warp_image(img: np.ndarray, hom: Homography) -> tuple[np.ndarray, np.ndarray]:
    """Warp an image by a homography (inverse mapping, bilinear).

    Returns (warped, mask); destination pixels whose source sample falls
    outside the image are 0 with mask 0.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    try:
        hinv = np.linalg.inv(hom.h)
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate homography") from exc
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    pts = np.stack([xs, ys, np.ones_like(xs)], axis=-1)
    q = pts @ hinv.T
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = q[..., 0] / q[..., 2]
        sy = q[..., 1] / q[..., 2]
    valid = (
        np.isfinite(sx) & np.isfinite(sy)
        & (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
    )
    sx = np.where(valid, sx, 0.0)
    sy = np.where(valid, sy, 0.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    fx = sx - x0
    fy = sy - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx3 = fx[..., None]
    fy3 = fy[..., None]
    out = (1 - fy3) * ((1 - fx3) * img[y0, x0] + fx3 * img[y0, x1]) + fy3 * (
        (1 - fx3) * img[y1, x0] + fx3 * img[y1, x1]
    )
    out *= valid[..., None]
    return out, valid


def valid_crop(
    homographies: list[Homography], w: int, h: int, multiple: int = 2
) -> tuple[int, int, int, int]:
    """Maximal centered rectangle valid under every homography warp.

    A destination pixel is valid for one homography iff it lies inside
    the forward image of the source rectangle; that image is the convex
    quad of the warped corners, so per-side incursions come from corner
    coordinates. Margins are symmetric about the image center and the
    crop dims are rounded down to a multiple of `multiple` (even by
    default). Returns (x0, y0, crop_w, crop_h).
    """
    corners = [(0.0, 0.0), (w - 1.0, 0.0), (0.0, h - 1.0), (w - 1.0, h - 1.0)]
    xlo, xhi = 0.0, w - 1.0
    ylo, yhi = 0.0, h - 1.0
    for hom in homographies:
        (tlx, tly), (trx, try_), (blx, bly), (brx, bry) = (
            warp_point(hom, c) for c in corners
        )
        xlo = max(xlo, tlx, blx)
        xhi = min(xhi, trx, brx)
        ylo = max(ylo, tly, try_)
        yhi = min(yhi, bly, bry)
    need_x = max(xlo, (w - 1.0) - xhi, 0.0)
    need_y = max(ylo, (h - 1.0) - yhi, 0.0)
    mx = int(np.ceil(need_x - 1e-12))
    my = int(np.ceil(need_y - 1e-12))
    cw = w - 2 * mx
    ch = h - 2 * my
    cw -= cw % multiple
    ch -= ch % multiple
    if cw <= 0 or ch <= 0:
        raise ValueError("no common valid region after warping")
    return mx, my, cw, ch


def _warp_stack(img: np.ndarray, homographies: list[Homography]):
    frames = []
    mask_all = np.ones(img.shape[:2], dtype=bool)
    for hom in homographies:
        warped, mask = warp_image(img, hom)
        frames.append(warped)
        mask_all &= mask
    return frames, mask_all


def _blend_frames(
    frames: list[np.ndarray], mask_all: np.ndarray, crop: tuple[int, int, int, int]
) -> np.ndarray:
    x0, y0, cw, ch = crop
    if not mask_all[y0 : y0 + ch, x0 : x0 + cw].all():
        raise ValueError("crop rectangle intersects invalid warped pixels")
    acc = np.zeros((ch, cw) + frames[0].shape[2:])
    for f in frames:
        acc += f[y0 : y0 + ch, x0 : x0 + cw]
    return acc / len(frames)


def synthesize_blur(img: np.ndarray, homographies: list[Homography]) -> np.ndarray:
    """Average the warped frames of `img`, cropped to the all-valid region."""
    if not homographies:
        raise ValueError("at least one homography is required")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    frames, mask_all = _warp_stack(img, homographies)
    crop = valid_crop(homographies, w, h)
    return _blend_frames(frames, mask_all, crop)


def _splat_sprite(canvas_hw: tuple[int, int], sprite: np.ndarray, x: float, y: float):
    """Premultiplied sprite splatted at fractional top-left (x, y).

    Returns (rgb, alpha) canvas-sized layers; bilinear splat spreads each
    sprite pixel over its four neighbours.
    """
    ch, cw = canvas_hw
    hs, ws = sprite.shape[:2]
    alpha = sprite[:, :, 3:4]
    pre = np.concatenate([sprite[:, :, :3] * alpha, alpha], axis=2)
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    fx, fy = x - x0, y - y0
    buf = np.zeros((hs + 1, ws + 1, 4))
    buf[:hs, :ws] += (1 - fx) * (1 - fy) * pre
    buf[:hs, 1:] += fx * (1 - fy) * pre
    buf[1:, :ws] += (1 - fx) * fy * pre
    buf[1:, 1:] += fx * fy * pre
    rgb = np.zeros((ch, cw, 3))
    a = np.zeros((ch, cw))
    sy0, sx0 = max(0, -y0), max(0, -x0)
    dy0, dx0 = max(0, y0), max(0, x0)
    sy1 = min(hs + 1, ch - y0)
    sx1 = min(ws + 1, cw - x0)
    if sy1 > sy0 and sx1 > sx0:
        rgb[dy0 : dy0 + sy1 - sy0, dx0 : dx0 + sx1 - sx0] = buf[sy0:sy1, sx0:sx1, :3]
        a[dy0 : dy0 + sy1 - sy0, dx0 : dx0 + sx1 - sx0] = buf[sy0:sy1, sx0:sx1, 3]
    return rgb, a


def composite_object(frames: list[np.ndarray], spec: MovingObjectSpec) -> list[np.ndarray]:
    """Alpha-composite a constant-speed moving sprite onto each frame.

    Frame k of N receives the sprite at position + (k/(N-1)) * distance
    along the heading, placed with sub-pixel bilinear splatting.
    """
    if not frames:
        raise ValueError("frames must be non-empty")
    ch, cw = frames[0].shape[:2]
    hs, ws = spec.sprite.shape[:2]
    if hs > ch or ws > cw:
        raise ValueError(f"sprite {(hs, ws)} larger than frame {(ch, cw)}")
    n = len(frames)
    rad = np.deg2rad(spec.direction)
    step = np.array([np.cos(rad), np.sin(rad)]) * spec.distance
    out = []
    for k, frame in enumerate(frames):
        frac = 0.0 if n == 1 else k / (n - 1)
        x = spec.position[0] + frac * step[0]
        y = spec.position[1] + frac * step[1]
        rgb, a = _splat_sprite((ch, cw), spec.sprite, x, y)
        out.append(frame * (1.0 - a[..., None]) + rgb)
    return out


def sample_object_spec(
    rng: np.random.Generator, frame_w: int, frame_h: int, sprite: np.ndarray
) -> MovingObjectSpec:
    """Draw a moving-object placement: heading in [0, 360) degrees, travel
    distance in [30, 70] px, position uniform over the frame interior."""
    hs, ws = sprite.shape[:2]
    if hs > frame_h or ws > frame_w:
        raise ValueError("sprite larger than frame")
    direction = rng.uniform(0.0, 360.0)
    lo, hi = OBJECT_DISTANCE_RANGE
    distance = rng.uniform(lo, hi)
    x = rng.uniform(0.0, max(frame_w - ws, 1))
    y = rng.uniform(0.0, max(frame_h - hs, 1))
    return MovingObjectSpec(sprite, (x, y), float(direction), float(distance))


def apply_saturation(img: np.ndarray, scale: float) -> np.ndarray:
    """Scale intensities (>= 1) and clip to [0, 1] to create saturated pixels."""
    if scale < 1.0:
        raise ValueError(f"saturation scale must be >= 1, got {scale}")
    return np.clip(np.asarray(img, dtype=np.float64) * scale, 0.0, 1.0)


def _shot_read(params: NoiseParams, iso: float) -> tuple[float, float]:
    if not 100.0 <= iso <= 1600.0:
        raise ValueError(f"iso {iso} outside calibrated range [100, 1600]")
    t = (np.log2(iso) - np.log2(100.0)) / (np.log2(1600.0) - np.log2(100.0))
    log2_shot = (1.0 - t) * params.log2_shot_iso100 + t * params.log2_shot_iso1600
    log2_read = params.slope * log2_shot + params.intercept
    return float(2.0 ** log2_shot), float(2.0 ** log2_read)


def shot_read_variance(params: NoiseParams, iso: float, signal: float) -> float:
    """Pixel noise variance shot * signal + read at a given ISO."""
    if signal < 0:
        raise ValueError("signal must be non-negative")
    shot, read = _shot_read(params, iso)
    return shot * signal + read


def apply_noise(img: np.ndarray, iso: float, params: NoiseParams, seed: int) -> np.ndarray:
    """Add signal-dependent Gaussian noise and clip to [0, 1].

    Per-pixel variance is shot * signal + read; deterministic per seed.
    """
    img = np.asarray(img, dtype=np.float64)
    shot, read = _shot_read(params, iso)
    var = shot * np.clip(img, 0.0, None) + read
    rng = np.random.Generator(np.random.PCG64(seed))
    noisy = img + np.sqrt(var) * rng.standard_normal(img.shape)
    return np.clip(noisy, 0.0, 1.0)


def linear_to_srgb(img: np.ndarray) -> np.ndarray:
    """Standard sRGB transfer curve for linear values in [0, 1]."""
    img = np.asarray(img, dtype=np.float64)
    low = img * 12.92
    high = 1.055 * np.power(np.clip(img, 0.0, None), 1.0 / 2.4) - 0.055
    return np.where(img <= 0.0031308, low, high)


def srgb_to_linear(img: np.ndarray) -> np.ndarray:
    """Inverse sRGB transfer curve for encoded values in [0, 1]."""
    img = np.asarray(img, dtype=np.float64)
    low = img / 12.92
    high = np.power((np.clip(img, 0.0, None) + 0.055) / 1.055, 2.4)
    return np.where(img <= 0.04045, low, high)


def load_image_linear(path) -> np.ndarray:
    """Decode an 8/16-bit PNG (or similar) to a linear (H, W, 3) float array."""
    with Image.open(path) as im:
        im = im.convert("RGB") if im.mode not in ("RGB", "I;16") else im
        arr = np.asarray(im)
    if arr.dtype == np.uint16:
        encoded = arr.astype(np.float64) / 65535.0
    else:
        encoded = arr.astype(np.float64) / 255.0
    if encoded.ndim == 2:
        encoded = np.repeat(encoded[:, :, None], 3, axis=2)
    return srgb_to_linear(encoded)


def save_image_srgb(path, encoded: np.ndarray) -> None:
    """Write an sRGB-encoded [0, 1] image as 8-bit PNG."""
    arr = np.clip(np.asarray(encoded), 0.0, 1.0)
    data = np.round(arr * 255.0).astype(np.uint8)
    Image.fromarray(data).save(path, format="PNG")


def _remap_window(seq: GyroSequence, exposure: float) -> GyroSequence:
    """Place the window's samples uniformly on [0, exposure]."""
    times = np.linspace(0.0, exposure, len(seq))
    return GyroSequence(times, seq.omega.copy(), seq.rate_hz)


def synth_pipeline(
    sharp: np.ndarray,
    seq: GyroSequence,
    cfg: SynthConfig,
    seed: int,
    obj: MovingObjectSpec | None = None,
) -> SynthResult:
    """Full blurred/sharp/motion-field synthesis for one gyro window.

    densify -> center-referenced homographies -> (optional moving object)
    -> average -> centered crop -> saturation -> sensor noise -> sRGB.
    The ground truth is the sharp frame under the identical crop,
    saturation scaling and sRGB encode, without blur or noise; the motion
    field is built from the same window with the crop-adjusted principal
    point.
    """
    sharp = np.asarray(sharp, dtype=np.float64)
    h, w = sharp.shape[:2]
    window = _remap_window(seq, cfg.exposure)
    dense = densify_gyro(window, cfg.interp_factor)
    rs = ResampledGyro(dense.omega, len(dense) - 1)
    track = integrate_orientations(rs, cfg.exposure)
    homs = orientation_homographies(track, cfg.intrinsics)

    frames, mask_all = _warp_stack(sharp, homs)
    if obj is not None:
        frames = composite_object(frames, obj)
    multiple = cfg.s if cfg.s % 2 == 0 else 2 * cfg.s
    crop = valid_crop(homs, w, h, multiple=max(2, multiple))
    x0, y0, cw, ch = crop
    blur_lin = _blend_frames(frames, mask_all, crop)
    gt_lin = sharp[y0 : y0 + ch, x0 : x0 + cw]

    blur_lin = apply_saturation(blur_lin, cfg.saturation_scale)
    gt_lin = apply_saturation(gt_lin, cfg.saturation_scale)
    blur_lin = apply_noise(blur_lin, cfg.iso, cfg.noise, seed)

    blurred = linear_to_srgb(blur_lin)
    gt = linear_to_srgb(gt_lin)

    k = cfg.intrinsics
    k_crop = CameraIntrinsics(k.fx, k.fy, k.cx - x0, k.cy - y0)
    cmf = build_cmf(window, k_crop, cw, ch, cfg.m, cfg.s)
    return SynthResult(blurred, gt, cmf, window, crop)
