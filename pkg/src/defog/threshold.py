"""Fixed-level bi-level thresholding on brightness."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from defog.errors import InvalidParams
from defog.imaging import RgbImage

DEFAULT_THRESHOLD = 127


@dataclass(frozen=True)
class ThresholdSpec:
    t: int = DEFAULT_THRESHOLD
    enabled: bool = True

    def __post_init__(self):
        _check_level(self.t)


def _check_level(t) -> int:
    if isinstance(t, bool) or int(t) != t or not 0 <= t <= 255:
        raise InvalidParams(f"threshold must be an integer in [0, 255], got {t!r}")
    return int(t)


def threshold(img: RgbImage, t: int) -> RgbImage:
    """White where brightness >= t, black elsewhere."""
    t = _check_level(t)
    # brightness (r+g+b)/3 >= t, compared in integers so the boundary is exact
    mask = img.pixels.astype(np.int32).sum(axis=2) >= 3 * t
    out = np.where(mask[..., None], np.uint8(255), np.uint8(0))
    return RgbImage(np.broadcast_to(out, img.pixels.shape))
