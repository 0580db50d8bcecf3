"""Synthetic foggy test scenes, generated deterministically from a seed."""
from __future__ import annotations

import numpy as np

from defog.imaging import RgbImage


def foggy_scene(size: int = 256, seed: int = 0, transmission: float = 0.35, airlight: float = 215.0) -> RgbImage:
    """Low-contrast gradient scene with a small high-contrast object, seen through fog.

    The clear scene is a street-like vertical gradient with mild texture and a dark
    figure with a bright patch; fog blends it towards ``airlight`` with the given
    transmission.
    """
    rng = np.random.default_rng(seed)
    h = w = size
    y = np.linspace(0.0, 1.0, h)[:, None]
    x = np.linspace(0.0, 1.0, w)[None, :]
    base = 60.0 + 120.0 * y + 20.0 * np.sin(6.0 * np.pi * x) * y
    clear = np.repeat(base[..., None], 3, axis=2) * np.array([0.95, 1.0, 1.05])
    clear = clear + rng.normal(0.0, 6.0, size=(h, w, 3))
    # the "cyclist": a dark block with a bright strip
    r0, r1 = int(0.45 * h), int(0.62 * h)
    c0, c1 = int(0.55 * w), int(0.62 * w)
    clear[r0:r1, c0:c1] = [20.0, 20.0, 25.0]
    clear[r0 + (r1 - r0) // 3:r0 + (r1 - r0) // 2, c0:c1] = [230.0, 60.0, 40.0]
    hazy = clear * transmission + airlight * (1.0 - transmission)
    return RgbImage(np.clip(np.rint(hazy), 0, 255).astype(np.uint8))


def gray_image(width: int, height: int, value: int = 128) -> RgbImage:
    return RgbImage(np.full((height, width, 3), value, dtype=np.uint8))
