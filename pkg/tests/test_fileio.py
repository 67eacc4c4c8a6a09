import numpy as np
import pytest

from camshake import (
    CameraIntrinsics,
    CenterShiftRange,
    GyroSequence,
    build_cmf,
    default_noise_model,
    patch_layout,
    render_all,
)
from camshake.fileio import (
    load_cmf,
    load_error_model,
    load_gyro_csv,
    load_intrinsics,
    load_kernel_grid,
    save_cmf,
    save_error_model,
    save_gyro_csv,
    save_intrinsics,
    save_kernel_grid,
)

from conftest import random_gyro_sequence, zero_gyro_sequence


def test_gyro_csv_round_trip(tmp_path):
    seq = random_gyro_sequence(np.random.default_rng(1))
    p = tmp_path / "gyro.csv"
    save_gyro_csv(p, seq)
    loaded = load_gyro_csv(p)
    np.testing.assert_array_equal(loaded.times, seq.times)
    np.testing.assert_array_equal(loaded.omega, seq.omega)
    # write -> read -> write is byte-identical
    p2 = tmp_path / "gyro2.csv"
    save_gyro_csv(p2, loaded)
    assert p.read_bytes() == p2.read_bytes()


def test_gyro_csv_reports_line_numbers(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,wx,wy,wz\n0.0,0.0,0.0,0.0\n0.005,nope,0.0,0.0\n")
    with pytest.raises(ValueError, match="bad.csv:3"):
        load_gyro_csv(p)
    p.write_text("time,wx,wy,wz\n")
    with pytest.raises(ValueError, match=":1"):
        load_gyro_csv(p)
    p.write_text("t,wx,wy,wz\n0.0,0.0,0.0\n")
    with pytest.raises(ValueError, match=":2"):
        load_gyro_csv(p)


def test_intrinsics_round_trip(tmp_path):
    k = CameraIntrinsics(1532.25, 1534.5, 639.125, 355.75)
    p = tmp_path / "intrinsics.txt"
    save_intrinsics(p, k)
    loaded = load_intrinsics(p)
    assert loaded == k
    p.write_text("fx 100\nfy 100\ncx 0\n")
    with pytest.raises(ValueError, match="missing"):
        load_intrinsics(p)


def test_intrinsics_accepts_equals_and_comments(tmp_path):
    p = tmp_path / "intrinsics.txt"
    p.write_text("# calibration\nfx = 1000\nfy 1000\ncx = 640\ncy 360\n")
    k = load_intrinsics(p)
    assert (k.fx, k.cy) == (1000.0, 360.0)


def test_error_model_round_trip(tmp_path):
    model = default_noise_model()
    shift = CenterShiftRange(500.0)
    p = tmp_path / "noise.txt"
    save_error_model(p, model, shift)
    m2, s2 = load_error_model(p)
    assert m2 == model
    assert s2 == shift


def test_cmf_round_trip(tmp_path, intrinsics):
    seq = random_gyro_sequence(np.random.default_rng(2))
    field = build_cmf(seq, intrinsics, 128, 64, 8, 2)
    p = tmp_path / "field.cmf"
    save_cmf(p, field)
    loaded = load_cmf(p)
    assert (loaded.width_g, loaded.height_g, loaded.m, loaded.s) == (64, 32, 8, 2)
    assert loaded.source_dims == (128, 64)
    np.testing.assert_allclose(loaded.data, field.data, atol=1e-6)
    p2 = tmp_path / "field2.cmf"
    save_cmf(p2, loaded)
    assert p.read_bytes() == p2.read_bytes()
    assert p.read_bytes()[:4] == b"CMF1"


def test_cmf_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.cmf"
    p.write_bytes(b"NOPE" + b"\x00" * 24)
    with pytest.raises(ValueError, match="magic"):
        load_cmf(p)


def test_kernel_grid_round_trip(tmp_path, intrinsics):
    layout = patch_layout(128, 64, 32, 0.5)
    grid = render_all(zero_gyro_sequence(), intrinsics, layout, 9)
    p = tmp_path / "grid.krn"
    save_kernel_grid(p, grid)
    loaded = load_kernel_grid(p)
    assert loaded.layout == layout
    assert loaded.ksize == 9
    np.testing.assert_allclose(loaded.weights, grid.weights, atol=1e-7)
    p2 = tmp_path / "grid2.krn"
    save_kernel_grid(p2, loaded)
    assert p.read_bytes() == p2.read_bytes()
    assert p.read_bytes()[:4] == b"KRN1"


def test_kernel_grid_truncation_detected(tmp_path, intrinsics):
    layout = patch_layout(64, 64, 32, 0.5)
    grid = render_all(zero_gyro_sequence(), intrinsics, layout, 9)
    p = tmp_path / "grid.krn"
    save_kernel_grid(p, grid)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError, match="truncated"):
        load_kernel_grid(p)
