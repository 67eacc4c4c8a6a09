"""Forward-only reference numerics for the gyro feature blocks.

Two small computations are covered: channel reweighting of a gyro
feature guided by pooled image features, and image-feature deblurring
through offset-driven deformable 3x3 convolution plus sigmoid spatial
attention. Weights are supplied externally (seeded-random or loaded from
file); there is no training and no gradients, so every operation is a
pure, deterministic function of (features, weights).

Feature maps are numpy arrays of shape (C, H, W).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GyroRefinementWeights",
    "OffsetConvWeights",
    "conv2d",
    "sigmoid",
    "global_average_pool",
    "gyro_refinement_forward",
    "compute_offsets",
    "deformable_conv",
    "spatial_attention",
    "random_refinement_weights",
    "random_offset_weights",
    "random_conv_weights",
]

OFFSET_CHANNELS = 18  # nine (dy, dx) pairs for a 3x3 deformable kernel


def _as_feature(x, name="feature") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"{name} must be (C, H, W), got shape {x.shape}")
    return x


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def global_average_pool(feat: np.ndarray) -> np.ndarray:
    """Spatial mean per channel: (C, H, W) -> (C,)."""
    return _as_feature(feat).mean(axis=(1, 2))


def conv2d(
    feat: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None, padding: int = 1
) -> np.ndarray:
    """Standard 2D convolution (cross-correlation) with zero padding.

    weight is (C_out, C_in, kh, kw); stride is 1.
    """
    feat = _as_feature(feat)
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 4:
        raise ValueError("conv weight must be (C_out, C_in, kh, kw)")
    cout, cin, kh, kw = weight.shape
    if feat.shape[0] != cin:
        raise ValueError(f"feature has {feat.shape[0]} channels, weight expects {cin}")
    _, h, w = feat.shape
    padded = np.pad(feat, ((0, 0), (padding, padding), (padding, padding)))
    oh = h + 2 * padding - kh + 1
    ow = w + 2 * padding - kw + 1
    out = np.zeros((cout, oh, ow))
    for i in range(kh):
        for j in range(kw):
            out += np.tensordot(
                weight[:, :, i, j], padded[:, i : i + oh, j : j + ow], axes=([1], [0])
            )
    if bias is not None:
        out += np.asarray(bias, dtype=np.float64)[:, None, None]
    return out


@dataclass(frozen=True)
class GyroRefinementWeights:
    """Weights of the gyro-feature refinement step for channel count c.

    conv1: 1x1, 2c -> c, applied to the pooled concat feature.
    conv2: 3x3, c -> c, padding 1, applied after channel reweighting.
    """

    conv1_w: np.ndarray  # (c, 2c)
    conv1_b: np.ndarray  # (c,)
    conv2_w: np.ndarray  # (c, c, 3, 3)
    conv2_b: np.ndarray  # (c,)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "conv1_w": self.conv1_w,
            "conv1_b": self.conv1_b,
            "conv2_w": self.conv2_w,
            "conv2_b": self.conv2_b,
        }

    @classmethod
    def from_dict(cls, d) -> "GyroRefinementWeights":
        return cls(d["conv1_w"], d["conv1_b"], d["conv2_w"], d["conv2_b"])


@dataclass(frozen=True)
class OffsetConvWeights:
    """3x3 conv predicting 18 offset channels from a concat feature."""

    w: np.ndarray  # (18, 2c, 3, 3)
    b: np.ndarray  # (18,)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    @classmethod
    def from_dict(cls, d) -> "OffsetConvWeights":
        return cls(d["w"], d["b"])


def gyro_refinement_forward(
    gyro: np.ndarray,
    image: np.ndarray,
    weights: GyroRefinementWeights,
    gate: bool = False,
) -> np.ndarray:
    """Refine a gyro feature with channel weights pooled from image context.

    concat -> global average pool -> 1x1 conv -> per-channel multiply
    with the gyro feature -> 3x3 conv (padding 1). `gate` optionally
    squashes the channel weights through a sigmoid before multiplying.
    """
    gyro = _as_feature(gyro, "gyro feature")
    image = _as_feature(image, "image feature")
    if gyro.shape != image.shape:
        raise ValueError(f"feature shapes differ: {gyro.shape} vs {image.shape}")
    c = gyro.shape[0]
    if weights.conv1_w.shape != (c, 2 * c):
        raise ValueError(f"conv1 weight must be ({c}, {2 * c})")
    pooled = global_average_pool(np.concatenate([gyro, image], axis=0))
    cw = weights.conv1_w @ pooled + weights.conv1_b
    if gate:
        cw = sigmoid(cw)
    reweighted = gyro * cw[:, None, None]
    return conv2d(reweighted, weights.conv2_w, weights.conv2_b, padding=1)


def compute_offsets(
    image: np.ndarray, gyro: np.ndarray, weights: OffsetConvWeights
) -> np.ndarray:
    """Deformable-kernel offsets from concatenated image and gyro features.

    Returns an 18-channel field: channels (2t, 2t+1) are the (dy, dx)
    offset of tap t in row-major 3x3 order.
    """
    image = _as_feature(image, "image feature")
    gyro = _as_feature(gyro, "gyro feature")
    if image.shape != gyro.shape:
        raise ValueError(f"feature shapes differ: {image.shape} vs {gyro.shape}")
    out = conv2d(np.concatenate([image, gyro], axis=0), weights.w, weights.b, padding=1)
    if out.shape[0] != OFFSET_CHANNELS:
        raise ValueError(f"offset conv must emit {OFFSET_CHANNELS} channels")
    return out


def _bilinear_sample(feat: np.ndarray, sy: np.ndarray, sx: np.ndarray) -> np.ndarray:
    """Sample (C, H, W) at fractional (sy, sx) grids with zero padding."""
    c, h, w = feat.shape
    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    fy = sy - y0
    fx = sx - x0
    out = np.zeros((c,) + sy.shape)
    for dy, dx, wgt in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yy = y0 + dy
        xx = x0 + dx
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        yc = np.clip(yy, 0, h - 1)
        xc = np.clip(xx, 0, w - 1)
        out += feat[:, yc, xc] * (wgt * inside)
    return out


def deformable_conv(
    feat: np.ndarray,
    offsets: np.ndarray,
    weight: np.ndarray,
    bias: np.ndarray | None = None,
) -> np.ndarray:
    """3x3 deformable convolution with bilinear sampling, zero padded.

    Tap t at output (y, x) samples the input at
    (y + dy_t + off[2t], x + dx_t + off[2t+1]) where (dy_t, dx_t) is the
    tap's base position in the 3x3 stencil. Zero offsets reduce to
    conv2d with padding 1.
    """
    feat = _as_feature(feat)
    offsets = np.asarray(offsets, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 4 or weight.shape[2:] != (3, 3):
        raise ValueError("weight must be (C_out, C_in, 3, 3)")
    if offsets.shape != (OFFSET_CHANNELS,) + feat.shape[1:]:
        raise ValueError(
            f"offsets must be ({OFFSET_CHANNELS}, H, W) matching the feature"
        )
    if weight.shape[1] != feat.shape[0]:
        raise ValueError("weight input channels do not match the feature")
    _, h, w = feat.shape
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    out = np.zeros((weight.shape[0], h, w))
    for t in range(9):
        dy, dx = t // 3 - 1, t % 3 - 1
        sy = ys + dy + offsets[2 * t]
        sx = xs + dx + offsets[2 * t + 1]
        sampled = _bilinear_sample(feat, sy, sx)
        out += np.tensordot(weight[:, :, t // 3, t % 3], sampled, axes=([1], [0]))
    if bias is not None:
        out += np.asarray(bias, dtype=np.float64)[:, None, None]
    return out


def spatial_attention(
    feat: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None
) -> np.ndarray:
    """Gate a feature by sigmoid(conv(feat)): output = attention * feat."""
    feat = _as_feature(feat)
    attn = sigmoid(conv2d(feat, weight, bias, padding=1))
    if attn.shape != feat.shape:
        raise ValueError("attention conv must preserve the feature shape")
    return attn * feat


def random_conv_weights(
    cout: int, cin: int, k: int, seed: int, scale: float = 0.1
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded Gaussian (weight, bias) for a cout x cin k x k convolution."""
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.standard_normal((cout, cin, k, k)) * scale
    b = rng.standard_normal(cout) * scale
    return w, b


def random_refinement_weights(c: int, seed: int, scale: float = 0.1) -> GyroRefinementWeights:
    rng = np.random.Generator(np.random.PCG64(seed))
    return GyroRefinementWeights(
        conv1_w=rng.standard_normal((c, 2 * c)) * scale,
        conv1_b=rng.standard_normal(c) * scale,
        conv2_w=rng.standard_normal((c, c, 3, 3)) * scale,
        conv2_b=rng.standard_normal(c) * scale,
    )


def random_offset_weights(c: int, seed: int, scale: float = 0.1) -> OffsetConvWeights:
    w, b = random_conv_weights(OFFSET_CHANNELS, 2 * c, 3, seed, scale)
    return OffsetConvWeights(w, b)
