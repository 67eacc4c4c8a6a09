import numpy as np
import pytest

from camshake.netblocks import (
    GyroRefinementWeights,
    OffsetConvWeights,
    compute_offsets,
    conv2d,
    deformable_conv,
    gyro_refinement_forward,
    random_conv_weights,
    random_offset_weights,
    random_refinement_weights,
    sigmoid,
    spatial_attention,
)


def naive_conv3x3(feat, weight, bias=None):
    """Loop-based zero-padded 3x3 convolution, independent of conv2d."""
    cout, cin = weight.shape[:2]
    _, h, w = feat.shape
    padded = np.zeros((cin, h + 2, w + 2))
    padded[:, 1:-1, 1:-1] = feat
    out = np.zeros((cout, h, w))
    for o in range(cout):
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for c in range(cin):
                    for i in range(3):
                        for j in range(3):
                            acc += weight[o, c, i, j] * padded[c, y + i, x + j]
                out[o, y, x] = acc
        if bias is not None:
            out[o] += bias[o]
    return out


def test_conv2d_matches_naive_oracle():
    rng = np.random.default_rng(1)
    feat = rng.standard_normal((3, 7, 8))
    w, b = random_conv_weights(4, 3, 3, seed=2)
    np.testing.assert_allclose(conv2d(feat, w, b), naive_conv3x3(feat, w, b),
                               atol=1e-12)


# ------------------------------------------------------- gyro refinement

def test_refinement_identity_configuration():
    # conv1 emitting all-ones channel weights and conv2 = per-channel
    # identity stencil reproduce the gyro feature exactly
    c = 6
    rng = np.random.default_rng(3)
    gyro = rng.standard_normal((c, 10, 12))
    image = rng.standard_normal((c, 10, 12))
    conv2_w = np.zeros((c, c, 3, 3))
    for i in range(c):
        conv2_w[i, i, 1, 1] = 1.0
    weights = GyroRefinementWeights(
        conv1_w=np.zeros((c, 2 * c)),
        conv1_b=np.ones(c),
        conv2_w=conv2_w,
        conv2_b=np.zeros(c),
    )
    out = gyro_refinement_forward(gyro, image, weights)
    np.testing.assert_allclose(out, gyro, atol=1e-12)


def test_refinement_channel_scaling_property():
    # scaling gyro channel j by t scales the multiply-stage output of that
    # channel by t (weights held fixed); check through an identity conv2
    c = 4
    rng = np.random.default_rng(4)
    gyro = rng.standard_normal((c, 6, 6))
    image = rng.standard_normal((c, 6, 6))
    conv2_w = np.zeros((c, c, 3, 3))
    for i in range(c):
        conv2_w[i, i, 1, 1] = 1.0
    fixed_cw = rng.standard_normal(c)

    # direct tensor-algebra oracle of the multiply stage
    def multiply_stage(g):
        return g * fixed_cw[:, None, None]

    weights = GyroRefinementWeights(
        conv1_w=np.zeros((c, 2 * c)), conv1_b=fixed_cw,
        conv2_w=conv2_w, conv2_b=np.zeros(c),
    )
    t = 3.7
    scaled = gyro.copy()
    scaled[2] *= t
    out_ref = gyro_refinement_forward(gyro, image, weights)
    out_scaled = gyro_refinement_forward(scaled, image, weights)
    np.testing.assert_allclose(out_ref, multiply_stage(gyro), atol=1e-12)
    np.testing.assert_allclose(out_scaled[2], t * out_ref[2], atol=1e-12)
    np.testing.assert_allclose(out_scaled[:2], out_ref[:2], atol=1e-12)


def test_refinement_shapes_and_gate():
    c = 8
    rng = np.random.default_rng(5)
    gyro = rng.standard_normal((c, 12, 9))
    image = rng.standard_normal((c, 12, 9))
    weights = random_refinement_weights(c, seed=6)
    out = gyro_refinement_forward(gyro, image, weights)
    assert out.shape == (c, 12, 9)
    gated = gyro_refinement_forward(gyro, image, weights, gate=True)
    assert gated.shape == (c, 12, 9)
    assert not np.allclose(out, gated)
    with pytest.raises(ValueError):
        gyro_refinement_forward(gyro, image[:, :6], weights)


# ------------------------------------------------------------- offsets

def test_offsets_zero_weights_zero_output():
    c = 16
    rng = np.random.default_rng(7)
    image = rng.standard_normal((c, 8, 8))
    gyro = rng.standard_normal((c, 8, 8))
    weights = OffsetConvWeights(np.zeros((18, 2 * c, 3, 3)), np.zeros(18))
    out = compute_offsets(image, gyro, weights)
    assert out.shape == (18, 8, 8)
    assert np.all(out == 0.0)


def test_offsets_match_direct_conv_oracle():
    c = 5
    rng = np.random.default_rng(8)
    image = rng.standard_normal((c, 6, 7))
    gyro = rng.standard_normal((c, 6, 7))
    weights = random_offset_weights(c, seed=9)
    out = compute_offsets(image, gyro, weights)
    oracle = naive_conv3x3(np.concatenate([image, gyro]), weights.w, weights.b)
    np.testing.assert_allclose(out, oracle, atol=1e-12)


# ------------------------------------------------------ deformable conv

def test_deformable_zero_offsets_equals_standard_conv():
    rng = np.random.default_rng(10)
    feat = rng.standard_normal((16, 64, 64))
    w, b = random_conv_weights(16, 16, 3, seed=11)
    offsets = np.zeros((18, 64, 64))
    got = deformable_conv(feat, offsets, w, b)
    ref = conv2d(feat, w, b, padding=1)
    assert np.max(np.abs(got - ref)) < 1e-5


def test_deformable_integer_offset_is_shifted_conv():
    # every tap offset (dy, dx) = (0, 1) samples the input shifted left
    rng = np.random.default_rng(12)
    feat = rng.standard_normal((3, 10, 10))
    w, _ = random_conv_weights(2, 3, 3, seed=13)
    offsets = np.zeros((18, 10, 10))
    offsets[1::2] = 1.0  # dx channels
    got = deformable_conv(feat, offsets, w)
    shifted = np.zeros_like(feat)
    shifted[:, :, :-1] = feat[:, :, 1:]
    ref = conv2d(shifted, w, padding=1)
    # at column 0 the shifted array's zero pad hides a real sample the
    # deformable path still sees; all other columns agree exactly
    np.testing.assert_allclose(got[:, :, 1:], ref[:, :, 1:], atol=1e-12)


def test_deformable_fractional_offset_averages_neighbors():
    rng = np.random.default_rng(14)
    feat = rng.standard_normal((1, 8, 8))
    # single active center tap
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1.0
    offsets = np.zeros((18, 8, 8))
    offsets[2 * 4 + 1] = 0.5  # center tap dx = 0.5
    got = deformable_conv(feat, offsets, w)
    expect = 0.5 * feat[:, :, :] + 0.5 * np.concatenate(
        [feat[:, :, 1:], np.zeros((1, 8, 1))], axis=2
    )
    np.testing.assert_allclose(got, expect, atol=1e-12)


def test_deformable_rejects_bad_offsets():
    feat = np.zeros((4, 8, 8))
    w, _ = random_conv_weights(4, 4, 3, seed=15)
    with pytest.raises(ValueError):
        deformable_conv(feat, np.zeros((17, 8, 8)), w)


# ----------------------------------------------------- spatial attention

def test_spatial_attention_zero_weights_halves_feature():
    rng = np.random.default_rng(16)
    feat = rng.standard_normal((6, 9, 9))
    out = spatial_attention(feat, np.zeros((6, 6, 3, 3)), np.zeros(6))
    np.testing.assert_allclose(out, 0.5 * feat, atol=1e-12)


def test_spatial_attention_bounds():
    rng = np.random.default_rng(17)
    feat = rng.standard_normal((4, 12, 12))
    w, b = random_conv_weights(4, 4, 3, seed=18)
    attn = sigmoid(conv2d(feat, w, b, padding=1))
    assert np.all(attn > 0.0) and np.all(attn < 1.0)
    out = spatial_attention(feat, w, b)
    assert np.all(np.abs(out) <= np.abs(feat) + 1e-15)
    # oracle: direct conv + sigmoid + multiply
    oracle = sigmoid(naive_conv3x3(feat, w, b)) * feat
    np.testing.assert_allclose(out, oracle, atol=1e-12)


# --------------------------------------------------------- weight files

def test_weight_file_round_trip_bit_exact(tmp_path):
    from camshake.fileio import load_weights, save_weights

    weights = random_refinement_weights(8, seed=19)
    path = tmp_path / "block.wgt"
    save_weights(path, weights.as_dict())
    loaded = load_weights(path)
    for name, arr in weights.as_dict().items():
        assert np.array_equal(
            loaded[name].astype(np.float32), arr.astype(np.float32)
        )
    again = tmp_path / "block2.wgt"
    save_weights(again, loaded)
    assert path.read_bytes() == again.read_bytes()
    rebuilt = GyroRefinementWeights.from_dict(loaded)
    assert rebuilt.conv2_w.shape == (8, 8, 3, 3)
