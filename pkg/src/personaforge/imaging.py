"""PNG round-tripping and range conversions.

Pixel conventions: encoder inputs are [3,h,w] float arrays in [0,1];
generator space is [3,32,32] in [-1,1]. PNGs store 8-bit RGB.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def save_png(path, arr: np.ndarray):
    """Write a [3,h,w] array in [0,1] as an 8-bit RGB PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    u8 = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(u8.transpose(1, 2, 0), mode="RGB").save(path)


def load_png(path) -> np.ndarray:
    """Read a PNG into a [3,h,w] float64 array in [0,1]."""
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return rgb.transpose(2, 0, 1)


def to_gan_range(arr: np.ndarray) -> np.ndarray:
    """[0,1] -> [-1,1]."""
    return arr * 2.0 - 1.0


def from_gan_range(arr: np.ndarray) -> np.ndarray:
    """[-1,1] -> [0,1], clipped."""
    return np.clip((arr + 1.0) / 2.0, 0.0, 1.0)


def downsample_2x(arr: np.ndarray) -> np.ndarray:
    """Average-pool [c,h,w] by 2 in each spatial extent."""
    c, h, w = arr.shape
    return arr.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))
