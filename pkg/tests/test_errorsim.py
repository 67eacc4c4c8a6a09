import numpy as np
import pytest

from camshake import (
    CameraIntrinsics,
    CenterShiftRange,
    CurriculumSchedule,
    GyroNoiseModel,
    blend_cmf,
    build_cmf,
    curriculum_alpha,
    default_noise_model,
    homography_track,
    inject_gyro_noise,
    make_noisy_cmf,
    shift_rotation_center,
    warp_point,
)

from conftest import constant_gyro_sequence, random_gyro_sequence, zero_gyro_sequence

ZERO_MODEL = GyroNoiseModel(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_default_model_constants():
    m = default_noise_model()
    assert (m.mean_x, m.sigma_x) == (-0.00005643153, 0.0008631607)
    assert (m.mean_y, m.sigma_y) == (-0.00006369004, 0.0015023947)
    assert (m.mean_z, m.sigma_z) == (0.00021379517, 0.0007655643)


def test_model_rejects_negative_sigma():
    with pytest.raises(ValueError):
        GyroNoiseModel(0.0, -1.0, 0.0, 0.0, 0.0, 0.0)


def test_inject_zero_model_is_identity():
    seq = random_gyro_sequence(np.random.default_rng(1))
    out = inject_gyro_noise(seq, ZERO_MODEL, seed=5)
    np.testing.assert_array_equal(out.omega, seq.omega)
    np.testing.assert_array_equal(out.times, seq.times)


def test_inject_same_seed_bit_identical():
    seq = random_gyro_sequence(np.random.default_rng(2))
    a = inject_gyro_noise(seq, default_noise_model(), seed=99)
    b = inject_gyro_noise(seq, default_noise_model(), seed=99)
    assert np.array_equal(a.omega, b.omega)
    c = inject_gyro_noise(seq, default_noise_model(), seed=100)
    assert not np.array_equal(a.omega, c.omega)


def test_inject_noise_statistics():
    n = 100_000
    seq = zero_gyro_sequence(n=n)
    model = default_noise_model()
    out = inject_gyro_noise(seq, model, seed=2024)
    noise = out.omega - seq.omega
    means = model.means()
    sigmas = model.sigmas()
    for axis in range(3):
        mean_tol = 4.0 * sigmas[axis] / np.sqrt(n)
        assert abs(noise[:, axis].mean() - means[axis]) < mean_tol
        assert abs(noise[:, axis].std(ddof=1) - sigmas[axis]) < 0.02 * sigmas[axis]


def test_shift_center_moves_principal_point():
    k = CameraIntrinsics(1000.0, 1000.0, 640.0, 360.0)
    same = shift_rotation_center(k, (0.0, 0.0))
    assert (same.cx, same.cy) == (k.cx, k.cy)
    moved = shift_rotation_center(k, (500.0, 500.0))
    assert (moved.cx, moved.cy) == (1140.0, 860.0)
    assert (moved.fx, moved.fy) == (k.fx, k.fy)


def test_shift_center_composes_additively():
    k = CameraIntrinsics(1000.0, 1000.0, 640.0, 360.0)
    a = shift_rotation_center(shift_rotation_center(k, (120.0, -40.0)), (7.0, 13.0))
    b = shift_rotation_center(k, (127.0, -27.0))
    assert (a.cx, a.cy) == (b.cx, b.cy)


def test_shifted_center_moves_zero_displacement_point():
    # pure z-rotation pivots about the (shifted) principal point
    k = CameraIntrinsics(1000.0, 1000.0, 640.0, 360.0)
    seq = constant_gyro_sequence((0.0, 0.0, 0.4))
    shifted = shift_rotation_center(k, (200.0, -100.0))
    homs = homography_track(seq, shifted, 8)
    new_pivot = (840.0, 260.0)
    old_pivot = (640.0, 360.0)
    for hom in homs:
        np.testing.assert_allclose(warp_point(hom, new_pivot), new_pivot, atol=1e-9)
    moved = np.array(warp_point(homs[0], old_pivot)) - old_pivot
    assert np.linalg.norm(moved) > 0.5


def test_blend_endpoints_and_midpoint(intrinsics):
    rng = np.random.default_rng(5)
    seq = random_gyro_sequence(rng)
    clean = build_cmf(seq, intrinsics, 128, 64, 8, 2)
    noisy = make_noisy_cmf(
        seq, intrinsics, (128, 64), 8, 2, default_noise_model(),
        CenterShiftRange(500.0), seed=7,
    )
    assert np.array_equal(blend_cmf(clean, noisy, 0.0).data, clean.data)
    assert np.array_equal(blend_cmf(clean, noisy, 1.0).data, noisy.data)
    mid = blend_cmf(clean, noisy, 0.5)
    np.testing.assert_allclose(mid.data, (clean.data + noisy.data) / 2.0, atol=1e-12)


def test_blend_linearity(intrinsics):
    rng = np.random.default_rng(6)
    seq = random_gyro_sequence(rng)
    a = build_cmf(seq, intrinsics, 128, 64, 8, 2)
    b = make_noisy_cmf(
        seq, intrinsics, (128, 64), 8, 2, default_noise_model(),
        CenterShiftRange(300.0), seed=8,
    )
    for alpha in (0.1, 0.25, 0.4):
        s = blend_cmf(a, b, alpha).data + blend_cmf(a, b, 1.0 - alpha).data
        np.testing.assert_allclose(s, a.data + b.data, atol=1e-12)


def test_blend_rejects_bad_inputs(intrinsics):
    seq = zero_gyro_sequence()
    a = build_cmf(seq, intrinsics, 128, 64, 8, 2)
    b = build_cmf(seq, intrinsics, 64, 64, 8, 2)
    with pytest.raises(ValueError):
        blend_cmf(a, b, 0.5)
    with pytest.raises(ValueError):
        blend_cmf(a, a, 1.5)


def test_curriculum_schedule_values():
    sched = CurriculumSchedule()
    assert curriculum_alpha(sched, 0) == 0.0
    assert curriculum_alpha(sched, 35) == pytest.approx(0.3)
    assert curriculum_alpha(sched, 100) == 1.0
    assert curriculum_alpha(sched, 250) == 1.0
    # exact staircase, zero tolerance
    for ep in range(0, 401):
        expected = 0.1 * (ep // 10) if ep < 100 else 1.0
        assert curriculum_alpha(sched, ep) == expected


def test_curriculum_monotone_and_default_consistent():
    sched = CurriculumSchedule()
    assert sched.step * (sched.saturate_epoch / sched.stage_len) == pytest.approx(1.0)
    values = [curriculum_alpha(sched, ep) for ep in range(0, 400)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    with pytest.raises(ValueError):
        curriculum_alpha(sched, -1)


def test_make_noisy_cmf_zero_errors_equals_clean(intrinsics):
    seq = random_gyro_sequence(np.random.default_rng(9))
    clean = build_cmf(seq, intrinsics, 128, 64, 8, 2)
    noisy = make_noisy_cmf(
        seq, intrinsics, (128, 64), 8, 2, ZERO_MODEL, CenterShiftRange(0.0), seed=3,
    )
    np.testing.assert_array_equal(noisy.data, clean.data)


def test_make_noisy_cmf_deterministic(intrinsics):
    seq = random_gyro_sequence(np.random.default_rng(10))
    kwargs = dict(model=default_noise_model(), shift_range=CenterShiftRange(500.0))
    a = make_noisy_cmf(seq, intrinsics, (128, 64), 8, 2, seed=42, **kwargs)
    b = make_noisy_cmf(seq, intrinsics, (128, 64), 8, 2, seed=42, **kwargs)
    assert np.array_equal(a.data, b.data)
    c = make_noisy_cmf(seq, intrinsics, (128, 64), 8, 2, seed=43, **kwargs)
    assert not np.array_equal(a.data, c.data)


def test_make_noisy_cmf_shift_only_differs_except_near_pivot(intrinsics):
    # zero gyro noise, pure rotation: the error field vanishes only around
    # the shifted pivot's consistent locus
    seq = constant_gyro_sequence((0.0, 0.0, 0.5))
    clean = build_cmf(seq, intrinsics, 1280, 720, 8, 2)
    noisy = make_noisy_cmf(
        seq, intrinsics, (1280, 720), 8, 2, ZERO_MODEL, CenterShiftRange(400.0),
        seed=12,
    )
    diff = np.linalg.norm((noisy.data - clean.data).reshape(360, 640, 8, 2), axis=3)
    assert diff.max() > 0.1
    # rotation by the same angles about a shifted center differs everywhere
    # by (roughly) the same translation, so nowhere is it exactly zero
    assert (diff.sum(axis=2) > 1e-6).mean() > 0.99
