"""Bulk generation of Retinex variants over a discrete parameter grid."""
from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from defog.errors import InvalidParams
from defog.imaging import RgbImage, pixel_checksum, save_image
from defog.retinex import Level, RetinexParams, dynamic_normalize, restored_fields
from defog.threshold import ThresholdSpec, threshold

MANIFEST_NAME = "manifest.json"

GridEntry = tuple[RetinexParams, Optional[int]]


def _axis(name: str, values, convert) -> tuple:
    vals = [convert(v) for v in values]
    if not vals:
        raise InvalidParams(f"grid axis {name} is empty")
    if len(set(vals)) != len(vals):
        raise InvalidParams(f"grid axis {name} contains duplicates: {vals}")
    return tuple(sorted(vals))


def _dynamic(v) -> float:
    v = float(v)
    # ids encode dynamic in tenths
    if not math.isfinite(v) or v < 0 or abs(v * 10 - round(v * 10)) > 1e-9:
        raise InvalidParams(f"dynamic values must be >= 0 with one decimal place, got {v}")
    return round(v, 1)


_LEVEL_ORDER = {lv: i for i, lv in enumerate(Level)}


@dataclass(frozen=True)
class ParamGrid:
    scales: tuple[int, ...] = (16, 60, 120, 180, 240)
    divisions: tuple[int, ...] = (3,)
    dynamics: tuple[float, ...] = (0.6, 1.2, 2.4)
    levels: tuple[Level, ...] = (Level.UNIFORM, Level.LOW, Level.HIGH)
    thresholds: tuple[int, ...] = (127,)

    def __post_init__(self):
        object.__setattr__(self, "scales", _axis("scale", self.scales, int))
        object.__setattr__(self, "divisions", _axis("scale_division", self.divisions, int))
        object.__setattr__(self, "dynamics", _axis("dynamic", self.dynamics, _dynamic))
        levels = [Level.parse(v) for v in self.levels]
        if not levels or len(set(levels)) != len(levels):
            raise InvalidParams(f"level axis must be non-empty and duplicate-free: {self.levels}")
        object.__setattr__(self, "levels", tuple(sorted(levels, key=_LEVEL_ORDER.__getitem__)))
        ts = [ThresholdSpec(int(t)).t for t in self.thresholds]
        if len(set(ts)) != len(ts):
            raise InvalidParams(f"duplicate threshold values: {ts}")
        object.__setattr__(self, "thresholds", tuple(sorted(ts)))
        # validate every corner of the grid up front
        for s, n in itertools.product(self.scales, self.divisions):
            RetinexParams(s, n, self.dynamics[0], self.levels[0])

    @property
    def size(self) -> int:
        n_params = len(self.scales) * len(self.divisions) * len(self.dynamics) * len(self.levels)
        return n_params * (1 + len(self.thresholds))


def build_grid(spec: ParamGrid) -> list[GridEntry]:
    out: list[GridEntry] = []
    for s, n, d, lv in itertools.product(spec.scales, spec.divisions, spec.dynamics, spec.levels):
        p = RetinexParams(s, n, d, lv)
        out.append((p, None))
        out.extend((p, t) for t in spec.thresholds)
    return out


def variant_id(params: RetinexParams, t: Optional[int] = None) -> str:
    """``s{scale}_n{division}_d{10*dynamic}_l{U|L|H}_t{threshold|none}``."""
    d10 = int(round(params.dynamic * 10))
    tt = "none" if t is None else str(int(t))
    return f"s{params.scale}_n{params.scale_division}_d{d10}_l{params.level.code}_t{tt}"


@dataclass(frozen=True)
class VariantRecord:
    id: str
    params: RetinexParams
    threshold: Optional[int]
    image_path: Path
    source_checksum: str = field(default="", compare=False)

    def to_dict(self, relative_to: Optional[Path] = None) -> dict:
        path = self.image_path
        if relative_to is not None:
            path = Path(os.path.relpath(path, relative_to))
        return {
            "id": self.id,
            "s": self.params.scale,
            "n": self.params.scale_division,
            "d": self.params.dynamic,
            "l": self.params.level.value,
            "t": self.threshold,
            "path": path.as_posix(),
            "source_checksum": self.source_checksum,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path) -> "VariantRecord":
        params = RetinexParams(int(d["s"]), int(d["n"]), float(d["d"]), d["l"])
        return cls(
            id=str(d["id"]),
            params=params,
            threshold=None if d.get("t") is None else int(d["t"]),
            image_path=base_dir / d["path"],
            source_checksum=d.get("source_checksum", ""),
        )


def _render_group(B: RgbImage, s: int, n: int, level: Level, spec: ParamGrid, out_dir: Path, checksum: str):
    fields = restored_fields(B, s, n, level)
    records = []
    for d in spec.dynamics:
        p = RetinexParams(s, n, d, level)
        img = dynamic_normalize(fields, p.dynamic)
        for t in (None, *spec.thresholds):
            vid = variant_id(p, t)
            path = out_dir / f"{vid}.png"
            save_image(img if t is None else threshold(img, t), path)
            records.append(VariantRecord(vid, p, t, path, checksum))
    return records


def generate_bulk(B: RgbImage, spec: ParamGrid, out_dir, workers: int = 1) -> list[VariantRecord]:
    """Render every grid entry into ``out_dir`` and write ``manifest.json``.

    Variants sharing (scale, division, level) share the expensive Retinex core,
    so those triples are the unit of parallel work. The manifest is sorted by id.
    """
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise FileNotFoundError(f"output directory {out_dir} does not exist")
    if workers < 1:
        raise InvalidParams(f"worker count must be >= 1, got {workers}")
    checksum = pixel_checksum(B)
    groups = list(itertools.product(spec.scales, spec.divisions, spec.levels))
    if workers == 1:
        batches = [_render_group(B, s, n, lv, spec, out_dir, checksum) for s, n, lv in groups]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_render_group, B, s, n, lv, spec, out_dir, checksum) for s, n, lv in groups]
            batches = [f.result() for f in futures]
    records = sorted((r for batch in batches for r in batch), key=lambda r: r.id)
    write_manifest(records, out_dir / MANIFEST_NAME)
    return records


def write_manifest(records: Sequence[VariantRecord], path) -> None:
    path = Path(path)
    payload = [r.to_dict(relative_to=path.parent) for r in records]
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_manifest(path) -> list[VariantRecord]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidParams(f"{path}: malformed manifest: {exc}") from exc
    if not isinstance(payload, list):
        raise InvalidParams(f"{path}: manifest must be a JSON array")
    return [VariantRecord.from_dict(d, path.parent) for d in payload]
