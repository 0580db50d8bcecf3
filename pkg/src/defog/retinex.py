"""Multi-scale Retinex with colour restoration (MSRCR).

Parameters follow the GIMP plugin vocabulary: ``scale`` is the largest surround,
``scale_division`` the number of surrounds, ``dynamic`` the width of the final
contrast-stretch window in standard deviations and ``level`` how the surrounds
are spread between 2 and ``scale``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

from defog.errors import DimensionMismatch, InvalidParams
from defog.imaging import RgbImage, ScalarField, ScalarMode, to_scalar

SCALE_MIN = 16
SCALE_MAX = 250

# colour-restoration constants of the reference plugin
CR_ALPHA = 128.0
CR_GAIN = 1.0
CR_OFFSET = 0.0


class Level(str, enum.Enum):
    UNIFORM = "uniform"
    LOW = "low"
    HIGH = "high"

    @property
    def code(self) -> str:
        return self.value[0].upper()

    @classmethod
    def parse(cls, value: "str | Level") -> "Level":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for level in cls:
            if text in (level.value, level.value[0]):
                return level
        raise InvalidParams(f"unknown level {value!r}; expected uniform, low or high")


@dataclass(frozen=True)
class RetinexParams:
    scale: int = 240
    scale_division: int = 3
    dynamic: float = 1.2
    level: Level = Level.UNIFORM

    def __post_init__(self):
        object.__setattr__(self, "level", Level.parse(self.level))
        if isinstance(self.scale, bool) or int(self.scale) != self.scale:
            raise InvalidParams(f"scale must be an integer, got {self.scale!r}")
        if isinstance(self.scale_division, bool) or int(self.scale_division) != self.scale_division:
            raise InvalidParams(f"scale_division must be an integer, got {self.scale_division!r}")
        object.__setattr__(self, "scale", int(self.scale))
        object.__setattr__(self, "scale_division", int(self.scale_division))
        object.__setattr__(self, "dynamic", float(self.dynamic))
        if not SCALE_MIN <= self.scale <= SCALE_MAX:
            raise InvalidParams(f"scale must be in [{SCALE_MIN}, {SCALE_MAX}], got {self.scale}")
        if self.scale_division < 1:
            raise InvalidParams(f"scale_division must be >= 1, got {self.scale_division}")
        if not (math.isfinite(self.dynamic) and self.dynamic >= 0):
            raise InvalidParams(f"dynamic must be a finite value >= 0, got {self.dynamic}")


def distribute_scales(s: int, n: int, level: "Level | str") -> list[float]:
    """Return ``n`` Gaussian surround widths for maximum scale ``s``.

    >>> distribute_scales(240, 3, "uniform")
    [2.0, 82.0, 162.0]
    """
    level = Level.parse(level)
    if s < SCALE_MIN or s > SCALE_MAX:
        raise InvalidParams(f"scale must be in [{SCALE_MIN}, {SCALE_MAX}], got {s}")
    if n < 1:
        raise InvalidParams(f"scale division must be >= 1, got {n}")
    if n == 1:
        return [s / 2.0]
    if n == 2:
        return [s / 2.0, float(s)]
    if level is Level.UNIFORM:
        step = s / n
        return [2.0 + i * step for i in range(n)]
    log_step = math.log(s - 2.0) / n
    if level is Level.LOW:
        return [2.0 + math.exp(i * log_step) for i in range(n)]
    return [s - math.exp(i * log_step) for i in range(n)]


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps over ``[-ceil(3 sigma), ceil(3 sigma)]``."""
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _blur_axis(values: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = (kernel.size - 1) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(values, pad, mode="edge")
    shape = [1, 1]
    shape[axis] = kernel.size
    return fftconvolve(padded, kernel.reshape(shape), mode="valid", axes=axis)


def gaussian_blur(f: ScalarField, sigma: float) -> ScalarField:
    """Separable truncated-Gaussian blur with clamp-to-edge boundaries."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise InvalidParams(f"sigma must be positive, got {sigma}")
    kernel = gaussian_kernel(sigma)
    # Blurring deviations from a reference value keeps constant fields exactly constant.
    ref = f.values[0, 0]
    dev = f.values - ref
    if not dev.any():
        return f
    out = _blur_axis(_blur_axis(dev, kernel, 0), kernel, 1)
    return ScalarField(out + ref)


def msr(channel: ScalarField, scales: Sequence[float]) -> ScalarField:
    if len(scales) == 0:
        raise InvalidParams("msr needs at least one scale")
    log_c = np.log(channel.values + 1.0)
    acc = np.zeros_like(log_c)
    for sigma in scales:
        blurred = gaussian_blur(channel, sigma).values
        acc += log_c - np.log(blurred + 1.0)
    return ScalarField(acc / len(scales))


def color_restore(
    msr_rgb: Sequence[ScalarField],
    src: RgbImage,
    alpha: float = CR_ALPHA,
    gain: float = CR_GAIN,
    offset: float = CR_OFFSET,
) -> list[ScalarField]:
    if len(msr_rgb) != 3:
        raise InvalidParams("color_restore expects three channel fields")
    for field in msr_rgb:
        if field.shape != src.shape:
            raise DimensionMismatch(f"field shape {field.shape} != image shape {src.shape}")
    px = src.pixels.astype(np.float64)
    log_sum = np.log(px.sum(axis=2) + 3.0)
    return [
        ScalarField(gain * (np.log(alpha * (px[..., c] + 1.0)) - log_sum) * msr_rgb[c].values + offset)
        for c in range(3)
    ]


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def dynamic_normalize(fields: Sequence[ScalarField], d: float) -> RgbImage:
    """Stretch ``[mean - d*std, mean + d*std]`` of all three fields jointly onto ``[0, 255]``."""
    if d < 0:
        raise InvalidParams(f"dynamic must be >= 0, got {d}")
    if len(fields) != 3:
        raise InvalidParams("dynamic_normalize expects three channel fields")
    stack = np.stack([f.values for f in fields], axis=-1)
    mean = stack.mean()
    std = stack.std()
    lo = mean - d * std
    hi = mean + d * std
    if std == 0 or d == 0 or not hi > lo:
        return RgbImage(np.full(stack.shape, 128, dtype=np.uint8))
    scaled = round_half_away(255.0 * (stack - lo) / (hi - lo))
    return RgbImage(np.clip(scaled, 0, 255).astype(np.uint8))


def restored_fields(img: RgbImage, scale: int, scale_division: int, level: "Level | str") -> list[ScalarField]:
    """Everything in the pipeline that precedes the dynamic stretch."""
    scales = distribute_scales(scale, scale_division, level)
    channels = [to_scalar(img, m) for m in (ScalarMode.R, ScalarMode.G, ScalarMode.B)]
    return color_restore([msr(ch, scales) for ch in channels], img)


def retinex(img: RgbImage, p: RetinexParams) -> RgbImage:
    return dynamic_normalize(restored_fields(img, p.scale, p.scale_division, p.level), p.dynamic)
