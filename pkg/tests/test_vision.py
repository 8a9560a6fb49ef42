"""Image encoder contracts: shapes, pooling behavior, gradients."""

import numpy as np
import pytest

from personaforge import tensor as T
from personaforge import vision
from personaforge.errors import DimensionError


def test_zero_image_zero_biases_gives_relu_fc_bias():
    rng = np.random.default_rng(0)
    p = vision.ImageEncoderParams.init(rng)
    out = vision.encode_images([T.Tensor(np.zeros(vision.IMAGE_SHAPE))], p)
    assert np.allclose(out.data, np.maximum(p.fc_b.data, 0.0))


def test_duplicated_image_matches_single_image():
    rng = np.random.default_rng(1)
    p = vision.ImageEncoderParams.init(rng)
    img = rng.uniform(size=vision.IMAGE_SHAPE)
    once = vision.encode_images([T.Tensor(img)], p).data
    tenfold = vision.encode_images([T.Tensor(img) for _ in range(10)], p).data
    assert np.allclose(once, tenfold, atol=1e-12)


def test_mean_across_images_matches_per_image_oracle():
    rng = np.random.default_rng(2)
    p = vision.ImageEncoderParams.init(rng)
    imgs = [rng.uniform(size=vision.IMAGE_SHAPE) for _ in range(3)]
    feats = [vision.conv_features(T.Tensor(i), p).data for i in imgs]
    manual = np.maximum(np.mean(feats, axis=0) @ p.fc_w.data + p.fc_b.data, 0.0)
    got = vision.encode_images([T.Tensor(i) for i in imgs], p).data
    assert np.max(np.abs(got - manual)) <= 1e-12


def test_permutation_invariant_across_image_list():
    rng = np.random.default_rng(3)
    p = vision.ImageEncoderParams.init(rng)
    imgs = [rng.uniform(size=vision.IMAGE_SHAPE) for _ in range(4)]
    a = vision.encode_images([T.Tensor(i) for i in imgs], p).data
    b = vision.encode_images([T.Tensor(i) for i in imgs[::-1]], p).data
    assert np.allclose(a, b, atol=1e-12)


def test_keeps_ten_most_recent_by_timestamp():
    rng = np.random.default_rng(4)
    imgs = [rng.uniform(size=(2, 2)) for _ in range(12)]
    stamps = list(range(12))  # larger stamp = more recent
    kept = vision.select_recent(list(zip(imgs, stamps)))
    assert len(kept) == 10
    assert all(any(np.array_equal(k, imgs[i]) for i in range(2, 12)) for k in kept)


def test_wrong_shape_raises_dimension_error():
    rng = np.random.default_rng(5)
    p = vision.ImageEncoderParams.init(rng)
    with pytest.raises(DimensionError):
        vision.encode_images([T.Tensor(np.zeros((1, 64, 64)))], p)
    with pytest.raises(DimensionError):
        vision.encode_images([T.Tensor(np.zeros((3, 32, 32)))], p)


def test_output_contract_and_finiteness():
    rng = np.random.default_rng(6)
    p = vision.ImageEncoderParams.init(rng)
    out = vision.encode_images([T.Tensor(rng.uniform(size=vision.IMAGE_SHAPE))], p)
    assert out.shape == (vision.IMAGE_VIEW_DIM,)
    assert np.all(np.isfinite(out.data))


def test_conv_block_grad_check_miniature():
    # one block of the stack at reduced spatial size keeps the check fast
    rng = np.random.default_rng(7)
    block = vision.ConvBlockParams.init(rng, 2, 3)
    x = T.Tensor(rng.normal(size=(2, 6, 6)), requires_grad=True)

    def f(*ts):
        xx = ts[0]
        h = T.relu(T.add_channel_bias(T.conv2d(xx, block.k1, pad=1), block.b1))
        h = T.relu(T.add_channel_bias(T.conv2d(h, block.k2, pad=1), block.b2))
        return T.mean_all(T.pool(h, "max", 2))
    err = T.grad_check(f, [x] + block.tensors())
    assert err < 1e-4
