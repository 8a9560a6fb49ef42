"""Image view: a small VGG-style conv stack over 3x64x64 inputs.

Four blocks of two 3x3 convs + max-pool, global average pooling to a
64-dim feature, mean across the (up to 10 most recent) images, then a
projection FC to the 32-dim view vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import DimensionError
from .tensor import Tensor

IMAGE_SHAPE = (3, 64, 64)
BLOCK_CHANNELS = (16, 32, 64, 64)
FEATURE_DIM = 64
IMAGE_VIEW_DIM = 32
MAX_RECENT_IMAGES = 10


@dataclass
class ConvBlockParams:
    k1: Tensor
    b1: Tensor
    k2: Tensor
    b2: Tensor

    @classmethod
    def init(cls, rng, c_in, c_out, dtype=np.float64):
        def kernel(ci, co):
            fan_in = ci * 9
            scale = np.sqrt(2.0 / fan_in)
            return Tensor(rng.normal(0.0, scale, (co, ci, 3, 3)).astype(dtype),
                          requires_grad=True)
        zero = lambda: Tensor(np.zeros(c_out, dtype), requires_grad=True)
        return cls(kernel(c_in, c_out), zero(), kernel(c_out, c_out), zero())

    def tensors(self):
        return [self.k1, self.b1, self.k2, self.b2]


@dataclass
class ImageEncoderParams:
    blocks: list[ConvBlockParams]
    fc_w: Tensor
    fc_b: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, dtype=np.float64) -> "ImageEncoderParams":
        blocks = []
        c_in = IMAGE_SHAPE[0]
        for c_out in BLOCK_CHANNELS:
            blocks.append(ConvBlockParams.init(rng, c_in, c_out, dtype))
            c_in = c_out
        bound = np.sqrt(6.0 / (FEATURE_DIM + IMAGE_VIEW_DIM))
        fc_w = Tensor(rng.uniform(-bound, bound,
                                  (FEATURE_DIM, IMAGE_VIEW_DIM)).astype(dtype),
                      requires_grad=True)
        fc_b = Tensor(np.zeros(IMAGE_VIEW_DIM, dtype), requires_grad=True)
        return cls(blocks, fc_w, fc_b)

    def tensors(self) -> list[Tensor]:
        out = []
        for b in self.blocks:
            out.extend(b.tensors())
        out.extend([self.fc_w, self.fc_b])
        return out

    def named(self, prefix: str = "image") -> dict[str, Tensor]:
        out = {}
        for i, b in enumerate(self.blocks):
            for name, t in zip(("k1", "b1", "k2", "b2"), b.tensors()):
                out[f"{prefix}.block{i}.{name}"] = t
        out[f"{prefix}.fc_w"] = self.fc_w
        out[f"{prefix}.fc_b"] = self.fc_b
        return out


def conv_features(image: Tensor, p: ImageEncoderParams) -> Tensor:
    """3x64x64 -> 64-dim feature via conv blocks + global average pool."""
    if image.shape != IMAGE_SHAPE:
        raise DimensionError(f"image encoder expects {IMAGE_SHAPE}, got {image.shape}")
    x = image
    for block in p.blocks:
        x = T.relu(T.add_channel_bias(T.conv2d(x, block.k1, pad=1), block.b1))
        x = T.relu(T.add_channel_bias(T.conv2d(x, block.k2, pad=1), block.b2))
        x = T.pool(x, "max", 2)
    gap = T.pool(x, "avg", x.shape[1])
    return T.reshape(gap, (FEATURE_DIM,))


def select_recent(images_with_ts: list[tuple[np.ndarray, int]],
                  k: int = MAX_RECENT_IMAGES) -> list[np.ndarray]:
    """The k most recent images by timestamp (stable for equal stamps)."""
    ordered = sorted(enumerate(images_with_ts), key=lambda e: (-e[1][1], e[0]))
    return [img for _, (img, _) in ordered[:k]]


def encode_images(images: list, p: ImageEncoderParams,
                  timestamps: list[int] | None = None) -> Tensor:
    """Mean of per-image conv features, projected through FC + relu."""
    if not images:
        raise ValueError("encode_images needs at least one image")
    if timestamps is not None and len(images) > MAX_RECENT_IMAGES:
        images = select_recent(list(zip(images, timestamps)))
    elif len(images) > MAX_RECENT_IMAGES:
        images = images[:MAX_RECENT_IMAGES]
    tensors = [img if isinstance(img, Tensor) else Tensor(img) for img in images]
    pooled = conv_features(tensors[0], p)
    for img in tensors[1:]:
        pooled = T.add(pooled, conv_features(img, p))
    pooled = T.mul(pooled, 1.0 / len(tensors))
    return T.relu(T.affine(pooled, p.fc_w, p.fc_b))
