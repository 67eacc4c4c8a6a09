"""File formats: gyro CSV, key-value configs, and the binary containers.

Binary layouts (all little-endian):
  CMF1  motion field: magic ``CMF1``, u32 width_g, height_g, m, s, W, H,
        then f32 data in (row, col, channel) order.
  KRN1  kernel grid: magic ``KRN1``, u32 rows, cols, ksize, patch,
        stride, width, height, then f32 weights in (row, col, ky, kx)
        order.
  WGT1  named tensors: magic ``WGT1``, u32 count, then per tensor
        u32 name length, UTF-8 name, u32 ndim, u32 dims..., f32 data.

Write -> read -> write round-trips are byte-identical.
"""

from __future__ import annotations

import struct

import numpy as np

from .errorsim import CenterShiftRange, GyroNoiseModel
from .gyro import CameraIntrinsics, CameraMotionField, GyroSequence
from .kernels import KernelGrid, PatchLayout

__all__ = [
    "load_gyro_csv",
    "save_gyro_csv",
    "load_intrinsics",
    "save_intrinsics",
    "load_error_model",
    "save_error_model",
    "load_cmf",
    "save_cmf",
    "load_kernel_grid",
    "save_kernel_grid",
    "load_weights",
    "save_weights",
]

GYRO_CSV_HEADER = "t,wx,wy,wz"


def load_gyro_csv(path) -> GyroSequence:
    """Read a ``t,wx,wy,wz`` CSV; parse failures report the line number."""
    times = []
    omega = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != GYRO_CSV_HEADER:
            raise ValueError(
                f"{path}:1: expected header {GYRO_CSV_HEADER!r}, got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                t, wx, wy, wz = (float(p) for p in parts)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            times.append(t)
            omega.append((wx, wy, wz))
    if len(times) < 2:
        raise ValueError(f"{path}: gyro CSV needs at least 2 samples")
    return GyroSequence(np.array(times), np.array(omega))


def save_gyro_csv(path, seq: GyroSequence) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(GYRO_CSV_HEADER + "\n")
        for t, (wx, wy, wz) in zip(seq.times, seq.omega):
            fh.write(f"{float(t)!r},{float(wx)!r},{float(wy)!r},{float(wz)!r}\n")


def _parse_keyvalues(path) -> dict[str, float]:
    values: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace("=", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'key value' pairs")
            try:
                values[parts[0]] = float(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad number {parts[1]!r}") from None
    return values


def _require_keys(path, values: dict, keys):
    missing = [k for k in keys if k not in values]
    if missing:
        raise ValueError(f"{path}: missing keys {missing}")


def load_intrinsics(path) -> CameraIntrinsics:
    """Read fx, fy, cx, cy from a key-value text file."""
    values = _parse_keyvalues(path)
    _require_keys(path, values, ("fx", "fy", "cx", "cy"))
    return CameraIntrinsics(values["fx"], values["fy"], values["cx"], values["cy"])


def save_intrinsics(path, k: CameraIntrinsics) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in ("fx", "fy", "cx", "cy"):
            fh.write(f"{name} {float(getattr(k, name))!r}\n")


_ERROR_KEYS = ("mean_x", "sigma_x", "mean_y", "sigma_y", "mean_z", "sigma_z")


def load_error_model(path) -> tuple[GyroNoiseModel, CenterShiftRange]:
    """Read a gyro error model (per-axis noise + max center shift)."""
    values = _parse_keyvalues(path)
    _require_keys(path, values, _ERROR_KEYS + ("max_center_shift",))
    model = GyroNoiseModel(*(values[k] for k in _ERROR_KEYS))
    return model, CenterShiftRange(values["max_center_shift"])


def save_error_model(path, model: GyroNoiseModel, shift: CenterShiftRange) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in _ERROR_KEYS:
            fh.write(f"{name} {float(getattr(model, name))!r}\n")
        fh.write(f"max_center_shift {float(shift.max_abs)!r}\n")


_CMF_MAGIC = b"CMF1"
_KRN_MAGIC = b"KRN1"
_WGT_MAGIC = b"WGT1"


def save_cmf(path, field: CameraMotionField) -> None:
    with open(path, "wb") as fh:
        fh.write(_CMF_MAGIC)
        w, h = field.source_dims
        fh.write(struct.pack("<6I", field.width_g, field.height_g, field.m, field.s, w, h))
        fh.write(np.ascontiguousarray(field.data, dtype="<f4").tobytes())


def load_cmf(path) -> CameraMotionField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CMF_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {_CMF_MAGIC!r}")
        wg, hg, m, s, w, h = struct.unpack("<6I", fh.read(24))
        raw = fh.read(hg * wg * 2 * m * 4)
        data = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        if data.size != hg * wg * 2 * m:
            raise ValueError(f"{path}: truncated motion-field payload")
    return CameraMotionField(wg, hg, m, s, (w, h), data.reshape(hg, wg, 2 * m))


def save_kernel_grid(path, grid: KernelGrid) -> None:
    lay = grid.layout
    with open(path, "wb") as fh:
        fh.write(_KRN_MAGIC)
        fh.write(
            struct.pack(
                "<7I", lay.rows, lay.cols, grid.ksize, lay.patch, lay.stride,
                lay.width, lay.height,
            )
        )
        fh.write(np.ascontiguousarray(grid.weights, dtype="<f4").tobytes())


def load_kernel_grid(path) -> KernelGrid:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _KRN_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {_KRN_MAGIC!r}")
        rows, cols, ksize, patch, stride, width, height = struct.unpack("<7I", fh.read(28))
        raw = fh.read(rows * cols * ksize * ksize * 4)
        data = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        if data.size != rows * cols * ksize * ksize:
            raise ValueError(f"{path}: truncated kernel payload")
    layout = PatchLayout(patch, stride, rows, cols, width, height)
    return KernelGrid(layout, ksize, data.reshape(rows, cols, ksize, ksize))


def save_weights(path, tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(_WGT_MAGIC)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype="<f4")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_weights(path) -> dict[str, np.ndarray]:
    tensors: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _WGT_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {_WGT_MAGIC!r}")
        (count,) = struct.unpack("<I", fh.read(4))
        for _ in range(count):
            (nlen,) = struct.unpack("<I", fh.read(4))
            name = fh.read(nlen).decode("utf-8")
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            n = int(np.prod(shape)) if ndim else 1
            raw = fh.read(n * 4)
            data = np.frombuffer(raw, dtype="<f4")
            if data.size != n:
                raise ValueError(f"{path}: truncated tensor {name!r}")
            tensors[name] = data.astype(np.float64).reshape(shape)
    return tensors
