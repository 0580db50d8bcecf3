"""Command line entry point.

Exit codes: 0 success, 1 every variant rejected, 2 invalid arguments or
configuration, 3 I/O failure, 4 degenerate original image.
"""
from __future__ import annotations

import argparse
import logging
import os
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from defog import bulk, imaging, metrics, reports, retinex, selector
from defog.errors import (
    CorruptData,
    DegenerateOriginal,
    DimensionMismatch,
    InvalidParams,
    UnsupportedFormat,
)
from defog.threshold import DEFAULT_THRESHOLD, threshold

log = logging.getLogger("defog")

EXIT_OK = 0
EXIT_NONE_ACCEPTED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4

WORKERS_ENV = "DEFOG_WORKERS"
IMAGE_SUFFIXES = (".png", ".ppm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --------------------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    input: Path
    output: Path
    grid: bulk.ParamGrid = field(default_factory=bulk.ParamGrid)
    partition: metrics.PartitionSpec = field(default_factory=lambda: metrics.PartitionSpec.stripes(5))
    scalar_mode: imaging.ScalarMode = imaging.ScalarMode.BRIGHTNESS
    gates: selector.GateThresholds = field(default_factory=selector.GateThresholds)
    rank_key: selector.RankKey = selector.RankKey.MAX_VVO
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise InvalidParams(f"worker count must be >= 1, got {self.workers}")


def _split(value) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, (int, float)):
        return [value]
    text = str(value).strip()
    if text.lower() in ("", "none"):
        return []
    return [v.strip() for v in text.split(",") if v.strip()]


def _int(v) -> int:
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise InvalidParams(f"expected an integer, got {v!r}") from None
    if f != int(f):
        raise InvalidParams(f"expected an integer, got {v!r}")
    return int(f)


def _float(v) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        raise InvalidParams(f"expected a number, got {v!r}") from None


def load_config(path) -> dict:
    """Flat ``key = value`` TOML file; keys use underscores (``scale_division``)."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidParams(f"{path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise InvalidParams(f"{path}: config must be flat, found tables {nested}")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _pick(args: argparse.Namespace, cfg: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.get(name, default)


def _resolve_workers(args, cfg) -> int:
    if getattr(args, "workers", None) is not None:
        return _int(args.workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return _int(env)
    return _int(cfg.get("workers", 1))


def _grid_from(args, cfg) -> bulk.ParamGrid:
    d = bulk.ParamGrid()
    return bulk.ParamGrid(
        scales=[_int(v) for v in _split(_pick(args, cfg, "scale", list(d.scales)))],
        divisions=[_int(v) for v in _split(_pick(args, cfg, "scale_division", list(d.divisions)))],
        dynamics=[_float(v) for v in _split(_pick(args, cfg, "dynamic", list(d.dynamics)))],
        levels=_split(_pick(args, cfg, "level", [lv.value for lv in d.levels])),
        thresholds=[_int(v) for v in _split(_pick(args, cfg, "thresholds", list(d.thresholds)))],
    )


def _partition_from(args, cfg) -> metrics.PartitionSpec:
    if getattr(args, "lattice", None) is not None:
        lattice, stripes = args.lattice, None
    elif getattr(args, "stripes", None) is not None:
        lattice, stripes = None, args.stripes
    else:
        lattice, stripes = cfg.get("lattice"), cfg.get("stripes")
    if lattice is not None:
        try:
            r, c = str(lattice).lower().split("x")
        except ValueError:
            raise InvalidParams(f"lattice must look like RxC, got {lattice!r}") from None
        return metrics.PartitionSpec.lattice(_int(r), _int(c))
    return metrics.PartitionSpec.stripes(_int(stripes if stripes is not None else 5))


def _gates_from(args, cfg) -> selector.GateThresholds:
    d = selector.GateThresholds()
    return selector.GateThresholds(
        epsilon=_float(_pick(args, cfg, "epsilon", d.epsilon)),
        tau=_float(_pick(args, cfg, "tau", d.tau)),
        mu=_float(_pick(args, cfg, "mu", d.mu)),
    )


def build_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    return RunConfig(
        input=Path(args.input),
        output=Path(args.output),
        grid=_grid_from(args, cfg),
        partition=_partition_from(args, cfg),
        scalar_mode=imaging.ScalarMode.parse(_pick(args, cfg, "scalar_mode", "brightness")),
        gates=_gates_from(args, cfg),
        rank_key=selector.RankKey.parse(_pick(args, cfg, "rank_key", "max_vvo")),
        workers=_resolve_workers(args, cfg),
    )


# --------------------------------------------------------------------------- commands


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_enhance(args) -> int:
    params = retinex.RetinexParams(
        scale=_int(args.scale),
        scale_division=_int(args.scale_division),
        dynamic=_float(args.dynamic),
        level=args.level,
    )
    img = imaging.load_image(args.input)
    imaging.save_image(retinex.retinex(img, params), args.output)
    return EXIT_OK


def cmd_threshold(args) -> int:
    img = imaging.load_image(args.input)
    imaging.save_image(threshold(img, _int(args.t)), args.output)
    return EXIT_OK


def cmd_bulk(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    grid = _grid_from(args, cfg)
    workers = _resolve_workers(args, cfg)
    img = imaging.load_image(args.input)
    out = _ensure_dir(Path(args.output))
    records = bulk.generate_bulk(img, grid, out, workers=workers)
    log.info("wrote %d variants to %s", len(records), out)
    return EXIT_OK


def _variant_sources(source: Path) -> list[tuple[str, Path]]:
    if source.is_dir():
        manifest = source / bulk.MANIFEST_NAME
        if manifest.exists():
            return [(r.id, r.image_path) for r in bulk.load_manifest(manifest)]
        files = sorted(p for p in source.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        return [(p.stem, p) for p in files]
    if source.suffix.lower() == ".json":
        return [(r.id, r.image_path) for r in bulk.load_manifest(source)]
    return [(source.stem, source)]


def _score_images(original: imaging.RgbImage, sources, partition, mode, workers: int):
    base = metrics.area_stats(imaging.to_scalar(original, mode), partition)
    metrics.check_original(base)

    def one(item):
        vid, path = item
        img = imaging.load_image(path)
        if img.shape != original.shape:
            raise DimensionMismatch(f"{path}: {img.width}x{img.height} differs from the original "
                                    f"{original.width}x{original.height}")
        return metrics.report_against(img, base, partition, mode, vid)

    if workers == 1:
        out = [one(s) for s in sources]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, sources))
    return sorted(out, key=lambda r: r.variant_id)


def cmd_score(args) -> int:
    out = _ensure_dir(Path(args.output))
    if args.from_variances:
        variants, (base_areas, base_total) = reports.load_variance_table(args.from_variances)
        reps = [
            metrics.report_from_precomputed(areas, total, base_areas, base_total, vid)
            for vid, areas, total in variants
        ]
        reports.write_reports(out, reps, meta={"source": "precomputed"})
        return EXIT_OK
    if not args.original or not args.variants:
        raise UsageError("score needs ORIGINAL and VARIANTS, or --from-variances FILE")
    cfg = load_config(args.config) if args.config else {}
    partition = _partition_from(args, cfg)
    mode = imaging.ScalarMode.parse(_pick(args, cfg, "scalar_mode", "brightness"))
    original = imaging.load_image(args.original)
    sources = _variant_sources(Path(args.variants))
    if not sources:
        raise InvalidParams(f"no variant images found in {args.variants}")
    reps = _score_images(original, sources, partition, mode, _resolve_workers(args, cfg))
    reports.write_reports(out, reps, meta={"partition": str(partition), "scalar_mode": mode.value})
    return EXIT_OK


def _gate_meta(gates: selector.GateThresholds, key: selector.RankKey) -> dict:
    return {"epsilon": gates.epsilon, "tau": gates.tau, "mu": gates.mu, "rank_key": key.value}


def cmd_select(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    gates = _gates_from(args, cfg)
    key = selector.RankKey.parse(_pick(args, cfg, "rank_key", "max_vvo"))
    reps, meta = reports.load_report_json(args.report)
    ranking, verdicts = selector.select_and_rank(reps, gates, key)
    out = _ensure_dir(Path(args.output))
    reports.write_reports(out, reps, verdicts, ranking, meta={**meta, **_gate_meta(gates, key)})
    _log_ranking(ranking)
    return EXIT_OK if len(ranking) else EXIT_NONE_ACCEPTED


def _log_ranking(ranking: selector.RankedList) -> None:
    if not len(ranking):
        log.warning("every variant was rejected")
    for e in ranking.entries[:5]:
        log.info("rank %d: %s (%s = %.4f)", e.rank, e.variant_id, ranking.key.value, e.key_value)


def run_pipeline(config: RunConfig) -> int:
    original = imaging.load_image(config.input)
    base = metrics.area_stats(imaging.to_scalar(original, config.scalar_mode), config.partition)
    metrics.check_original(base)
    out = _ensure_dir(config.output)
    records = bulk.generate_bulk(original, config.grid, out, workers=config.workers)
    sources = [(r.id, r.image_path) for r in records]
    reps = _score_images(original, sources, config.partition, config.scalar_mode, config.workers)
    ranking, verdicts = selector.select_and_rank(reps, config.gates, config.rank_key)
    meta = {"partition": str(config.partition), "scalar_mode": config.scalar_mode.value,
            **_gate_meta(config.gates, config.rank_key)}
    reports.write_reports(out, reps, verdicts, ranking, meta=meta)
    best = out / "best.png"
    _log_ranking(ranking)
    if not len(ranking):
        best.unlink(missing_ok=True)
        return EXIT_NONE_ACCEPTED
    by_id = {r.id: r for r in records}
    shutil.copyfile(by_id[ranking.entries[0].variant_id].image_path, best)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    return run_pipeline(build_run_config(args))


# --------------------------------------------------------------------------- parser


def _add_grid_args(p):
    g = p.add_argument_group("parameter grid (comma-separated lists)")
    g.add_argument("--scale", help="scales, e.g. 16,60,120,180,240")
    g.add_argument("--scale-division", "--division", dest="scale_division", help="scale divisions, e.g. 3")
    g.add_argument("--dynamic", help="dynamics, e.g. 0.6,1.2,2.4")
    g.add_argument("--level", help="levels from uniform,low,high")
    g.add_argument("--thresholds", help="threshold values for the thresholded branch, or 'none'")


def _add_partition_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--stripes", type=int, help="number of horizontal stripes (default 5)")
    g.add_argument("--lattice", help="RxC rectangular lattice, e.g. 3x3")
    p.add_argument("--scalar-mode", dest="scalar_mode", choices=[m.value for m in imaging.ScalarMode])


def _add_gate_args(p):
    p.add_argument("--epsilon", type=float, help="minimum relative area variance (default 0.001)")
    p.add_argument("--tau", type=float, help="minimum relative variance of variances (default 1.0)")
    p.add_argument("--mu", type=float, help="VVO some area must exceed (default 1.0)")
    p.add_argument("--rank-key", dest="rank_key", choices=[k.value for k in selector.RankKey])


def _add_common(p):
    p.add_argument("--config", help="flat TOML config file; command-line flags take precedence")
    p.add_argument("--workers", type=int, help=f"worker threads (also ${WORKERS_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="defog", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enhance", help="apply one Retinex filter")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--scale", default="240")
    p.add_argument("--scale-division", "--division", dest="scale_division", default="3")
    p.add_argument("--dynamic", default="1.2")
    p.add_argument("--level", default="uniform")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("threshold", help="bi-level threshold on brightness")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("-t", "--threshold", dest="t", default=str(DEFAULT_THRESHOLD))
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("bulk", help="generate the bulk variant set and manifest.json")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_grid_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_bulk)

    p = sub.add_parser("score", help="variance statistics of variants against the original")
    p.add_argument("original", nargs="?")
    p.add_argument("variants", nargs="?", help="manifest.json, a directory, or one image")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--from-variances", dest="from_variances",
                   help="CSV of pre-measured variances: id,total,area_1..area_N with an 'original' row")
    _add_partition_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select", help="gate and rank a report.json produced by score")
    p.add_argument("report")
    p.add_argument("-o", "--output", required=True)
    _add_gate_args(p)
    p.add_argument("--config")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("pipeline", help="bulk + score + select, copying the winner to best.png")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_grid_args(p)
    _add_partition_args(p)
    _add_gate_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"defog: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DegenerateOriginal as exc:
        print(f"defog: degenerate original: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, InvalidParams, DimensionMismatch) as exc:
        print(f"defog: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, CorruptData, UnsupportedFormat) as exc:
        print(f"defog: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
