"""Area-variance statistics of a processed image against its original.

For a partition of the image into areas ``a_i``:

* ``AAV_i`` -- variance of the scalar values in area ``i``
* ``RAV_i`` -- ``AAV_i`` divided by the variance of the whole image
* ``VVO_i`` -- ``RAV_i`` of the variant divided by ``RAV_i`` of the original
* ``AVV``   -- variance of the set ``{RAV_i}``
* ``RVV``   -- ``AVV`` of the variant divided by ``AVV`` of the original

All variances are population variances (divisor ``M``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from defog.errors import DegenerateOriginal, DimensionMismatch, InvalidParams
from defog.imaging import RgbImage, ScalarField, ScalarMode, to_scalar


@dataclass(frozen=True)
class PartitionSpec:
    """Grid of ``rows x cols`` near-equal rectangles; horizontal stripes have ``cols == 1``."""

    rows: int
    cols: int = 1

    def __post_init__(self):
        if self.cols == 1:
            if self.rows < 2:
                raise InvalidParams(f"stripe count must be >= 2, got {self.rows}")
        elif self.rows < 2 or self.cols < 2:
            raise InvalidParams(f"lattice must be at least 2x2, got {self.rows}x{self.cols}")

    @classmethod
    def stripes(cls, n: int) -> "PartitionSpec":
        return cls(int(n), 1)

    @classmethod
    def lattice(cls, rows: int, cols: int) -> "PartitionSpec":
        if cols < 2:
            raise InvalidParams(f"lattice must be at least 2x2, got {rows}x{cols}")
        return cls(int(rows), int(cols))

    @classmethod
    def parse(cls, text: str) -> "PartitionSpec":
        """Accept ``stripes:N`` / ``lattice:RxC`` (the inverse of ``str``)."""
        kind, _, arg = text.partition(":")
        try:
            if kind == "stripes":
                return cls.stripes(int(arg))
            if kind == "lattice":
                r, c = arg.lower().split("x")
                return cls.lattice(int(r), int(c))
        except ValueError:
            pass
        raise InvalidParams(f"bad partition description {text!r}")

    @property
    def is_stripes(self) -> bool:
        return self.cols == 1

    @property
    def n_areas(self) -> int:
        return self.rows * self.cols

    def __str__(self):
        return f"stripes:{self.rows}" if self.is_stripes else f"lattice:{self.rows}x{self.cols}"


def _bounds(length: int, parts: int) -> list[tuple[int, int]]:
    return [(i * length // parts, (i + 1) * length // parts) for i in range(parts)]


def area_slices(height: int, width: int, spec: PartitionSpec) -> list[tuple[slice, slice]]:
    """Row-major list of ``(row_slice, col_slice)`` covering the image exactly once."""
    if height < spec.rows or width < spec.cols:
        raise InvalidParams(f"{height}x{width} image is too small for partition {spec}")
    return [
        (slice(r0, r1), slice(c0, c1))
        for r0, r1 in _bounds(height, spec.rows)
        for c0, c1 in _bounds(width, spec.cols)
    ]


def partition(f: ScalarField, spec: PartitionSpec) -> list[np.ndarray]:
    return [f.values[rs, cs].ravel() for rs, cs in area_slices(f.height, f.width, spec)]


def variance(values) -> float:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InvalidParams("variance of an empty set is undefined")
    dev = arr - arr.mean()
    return float(np.mean(dev * dev))


@dataclass(frozen=True)
class MetricsReport:
    variant_id: str
    total_variance: float
    aav: tuple[float, ...]
    rav: tuple[float, ...]
    vvo: tuple[float, ...]
    avv: float
    rvv: float
    max_vvo: float = field(init=False)

    def __post_init__(self):
        if not (len(self.aav) == len(self.rav) == len(self.vvo)) or not self.aav:
            raise InvalidParams("per-area sequences must be non-empty and of equal length")
        object.__setattr__(self, "max_vvo", max(self.vvo))

    @property
    def n_areas(self) -> int:
        return len(self.aav)

    def to_dict(self) -> dict:
        return {
            "id": self.variant_id,
            "total_var": self.total_variance,
            "AAV": list(self.aav),
            "RAV": list(self.rav),
            "VVO": list(self.vvo),
            "AVV": self.avv,
            "RVV": self.rvv,
            "max_VVO": self.max_vvo,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            variant_id=str(d["id"]),
            total_variance=float(d["total_var"]),
            aav=tuple(float(v) for v in d["AAV"]),
            rav=tuple(float(v) for v in d["RAV"]),
            vvo=tuple(float(v) for v in d["VVO"]),
            avv=float(d["AVV"]),
            rvv=float(d["RVV"]),
        )


@dataclass(frozen=True)
class AreaStats:
    """Absolute area variances and whole-image variance of one image."""

    aav: tuple[float, ...]
    total: float

    @property
    def rav(self) -> np.ndarray:
        arr = np.asarray(self.aav, dtype=np.float64)
        if self.total <= 0:
            # a constant image has no spread anywhere
            return np.zeros_like(arr)
        return arr / self.total


def area_stats(f: ScalarField, spec: PartitionSpec) -> AreaStats:
    return AreaStats(tuple(variance(a) for a in partition(f, spec)), variance(f.values))


def _check_baseline(base: AreaStats) -> float:
    if base.total <= 0:
        raise DegenerateOriginal("original image has zero variance")
    avv_b = variance(base.rav)
    if avv_b <= 0:
        raise DegenerateOriginal("original image has equal relative variance in every area")
    return avv_b


def check_original(stats: AreaStats) -> None:
    """Raise DegenerateOriginal if ``stats`` cannot serve as the baseline."""
    _check_baseline(stats)


def _report(variant_id: str, proc: AreaStats, base: AreaStats) -> MetricsReport:
    if len(proc.aav) != len(base.aav):
        raise InvalidParams("variant and original have different area counts")
    avv_b = _check_baseline(base)
    rav_p = proc.rav
    rav_b = base.rav
    vvo = []
    for p, b in zip(rav_p, rav_b):
        if b > 0:
            vvo.append(float(p / b))
        else:
            vvo.append(math.inf if p > 0 else 1.0)
    avv = variance(rav_p)
    return MetricsReport(
        variant_id=variant_id,
        total_variance=float(proc.total),
        aav=tuple(float(v) for v in proc.aav),
        rav=tuple(float(v) for v in rav_p),
        vvo=tuple(vvo),
        avv=avv,
        rvv=avv / avv_b,
    )


def compute_report(
    P: RgbImage,
    B: RgbImage,
    spec: PartitionSpec,
    mode: "ScalarMode | str" = ScalarMode.BRIGHTNESS,
    variant_id: str = "",
) -> MetricsReport:
    if P.shape != B.shape:
        raise DimensionMismatch(f"variant is {P.width}x{P.height}, original is {B.width}x{B.height}")
    base = area_stats(to_scalar(B, mode), spec)
    proc = area_stats(to_scalar(P, mode), spec)
    return _report(variant_id, proc, base)


def report_against(P: RgbImage, base: AreaStats, spec: PartitionSpec, mode, variant_id: str) -> MetricsReport:
    """Like compute_report with the original's statistics already computed."""
    return _report(variant_id, area_stats(to_scalar(P, mode), spec), base)


def report_from_precomputed(
    stripe_vars_P: Sequence[float],
    total_var_P: float,
    stripe_vars_B: Sequence[float],
    total_var_B: float,
    variant_id: str = "",
) -> MetricsReport:
    """Same arithmetic as compute_report, starting from already-measured variances."""
    if not stripe_vars_P or len(stripe_vars_P) != len(stripe_vars_B):
        raise InvalidParams("area variance lists must be non-empty and of equal length")
    if not (total_var_P > 0 and total_var_B > 0):
        raise InvalidParams("total variances must be positive")
    if min(stripe_vars_P) < 0 or min(stripe_vars_B) < 0:
        raise InvalidParams("variances cannot be negative")
    proc = AreaStats(tuple(float(v) for v in stripe_vars_P), float(total_var_P))
    base = AreaStats(tuple(float(v) for v in stripe_vars_B), float(total_var_B))
    return _report(variant_id, proc, base)
