"""Patch-wise blur kernels rendered from gyro trajectories.

The image is tiled by overlapping patches; for each patch the
displacement trajectory of its center under the homography chain is
rasterized into a normalized kernel. Kernels follow the convolution
convention: a tap at displacement (dx, dy) contributes img(p - (dx, dy))
to the blurred pixel p, so convolving a sharp patch with its kernel
reproduces the frame-averaged blur for locally uniform motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gyro import (
    CameraIntrinsics,
    GyroSequence,
    Homography,
    ResampledGyro,
    integrate_orientations,
    orientation_homographies,
    warp_point,
)

__all__ = [
    "PatchLayout",
    "KernelGrid",
    "patch_layout",
    "render_kernel",
    "render_all",
]

# trajectory samples per pixel of arc length
SAMPLES_PER_PIXEL = 4.0


@dataclass(frozen=True)
class PatchLayout:
    """Overlapping patch tiling of a width x height image.

    Patch origins step by `stride`; the last row/column is clamped so the
    tiles end exactly at the image edge, which keeps every patch full
    size and covers every pixel.
    """

    patch: int
    stride: int
    rows: int
    cols: int
    width: int
    height: int

    def origin(self, r: int, c: int) -> tuple[int, int]:
        """Top-left (x0, y0) of patch (r, c), clamped to the image."""
        x0 = min(c * self.stride, self.width - self.patch)
        y0 = min(r * self.stride, self.height - self.patch)
        return x0, y0

    def center(self, r: int, c: int) -> tuple[float, float]:
        """Patch center in full-resolution pixel coordinates."""
        x0, y0 = self.origin(r, c)
        return x0 + (self.patch - 1) / 2.0, y0 + (self.patch - 1) / 2.0


@dataclass(frozen=True)
class KernelGrid:
    """One kernel per patch: weights of shape (rows, cols, ksize, ksize)."""

    layout: PatchLayout
    ksize: int
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        expected = (self.layout.rows, self.layout.cols, self.ksize, self.ksize)
        if weights.shape != expected:
            raise ValueError(f"expected weights {expected}, got {weights.shape}")
        object.__setattr__(self, "weights", weights)


def patch_layout(w: int, h: int, patch: int, overlap: float) -> PatchLayout:
    """Tile a w x h image with square patches at a fractional overlap."""
    if patch > min(w, h):
        raise ValueError(f"patch {patch} exceeds image dims ({w}, {h})")
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    stride = max(1, int(round(patch * (1.0 - overlap))))
    cols = int(np.ceil((w - patch) / stride)) + 1
    rows = int(np.ceil((h - patch) / stride)) + 1
    return PatchLayout(patch, stride, rows, cols, w, h)


def _check_kernel(weights: np.ndarray, tol: float = 1e-9):
    if np.any(weights < 0):
        raise ValueError("kernel has negative weights")
    if abs(weights.sum() - 1.0) > tol:
        raise ValueError("kernel does not sum to 1")


def render_kernel(
    homographies: list[Homography], center, ksize: int
) -> np.ndarray:
    """Rasterize a patch-center trajectory into a normalized blur kernel.

    The polyline {warp(H_i, center) - center} is sampled uniformly in arc
    length (at least SAMPLES_PER_PIXEL samples per pixel of length) and
    each sample splats bilinearly onto the kernel grid, whose center cell
    (ksize//2, ksize//2) is displacement (0, 0). Raises if the trajectory
    leaves the kernel support.
    """
    if ksize < 1 or ksize % 2 == 0:
        raise ValueError(f"ksize must be odd and positive, got {ksize}")
    if not homographies:
        raise ValueError("at least one homography is required")
    cx, cy = float(center[0]), float(center[1])
    pts = np.array([warp_point(hom, (cx, cy)) for hom in homographies])
    pts -= (cx, cy)

    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1) if len(pts) > 1 else np.zeros(0)
    total = float(seg.sum())
    if total < 1e-12:
        samples = pts[:1]
    else:
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        # drop zero-length segments so arc length is strictly increasing
        keep = np.concatenate([[True], seg > 0])
        cum, pts_k = cum[keep], pts[keep]
        n = max(int(np.ceil(total * SAMPLES_PER_PIXEL)) + 1, len(pts_k))
        s = np.linspace(0.0, total, n)
        samples = np.column_stack(
            [np.interp(s, cum, pts_k[:, 0]), np.interp(s, cum, pts_k[:, 1])]
        )

    half = ksize // 2
    gx = samples[:, 0] + half
    gy = samples[:, 1] + half
    if gx.min() < 0 or gy.min() < 0 or gx.max() > ksize - 1 or gy.max() > ksize - 1:
        raise ValueError(
            f"trajectory exceeds kernel support {ksize} "
            f"(extent x [{samples[:, 0].min():.2f}, {samples[:, 0].max():.2f}], "
            f"y [{samples[:, 1].min():.2f}, {samples[:, 1].max():.2f}])"
        )
    x0 = np.floor(gx).astype(np.intp)
    y0 = np.floor(gy).astype(np.intp)
    fx = gx - x0
    fy = gy - y0
    x1 = np.minimum(x0 + 1, ksize - 1)
    y1 = np.minimum(y0 + 1, ksize - 1)
    weights = np.zeros((ksize, ksize))
    wsample = 1.0 / len(samples)
    np.add.at(weights, (y0, x0), (1 - fx) * (1 - fy) * wsample)
    np.add.at(weights, (y0, x1), fx * (1 - fy) * wsample)
    np.add.at(weights, (y1, x0), (1 - fx) * fy * wsample)
    np.add.at(weights, (y1, x1), fx * fy * wsample)
    weights /= weights.sum()
    _check_kernel(weights)
    return weights


def render_all(
    seq: GyroSequence, k: CameraIntrinsics, layout: PatchLayout, ksize: int
) -> KernelGrid:
    """Render one kernel per patch from a gyro window.

    The homography chain uses every sample of `seq` (densify beforehand
    for smooth trajectories), center-referenced at the middle sample.
    """
    rs = ResampledGyro(seq.omega, len(seq) - 1)
    track = integrate_orientations(rs, seq.duration)
    homs = orientation_homographies(track, k)
    weights = np.empty((layout.rows, layout.cols, ksize, ksize))
    for r in range(layout.rows):
        for c in range(layout.cols):
            weights[r, c] = render_kernel(homs, layout.center(r, c), ksize)
    return KernelGrid(layout, ksize, weights)
