"""CSV / JSON serialization of metric reports, verdicts and rankings."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Optional, Sequence

from defog.errors import InvalidParams
from defog.metrics import MetricsReport
from defog.selector import RankedList, Verdict


def fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.4f}"


def _json_float(value: float):
    return fmt(value) if math.isinf(value) else value


def csv_header(n_areas: int, with_selection: bool = False) -> list[str]:
    cols = ["id", "total_var"]
    for name in ("AAV", "RAV", "VVO"):
        cols += [f"{name}_{i + 1}" for i in range(n_areas)]
    cols += ["AVV", "RVV", "max_VVO"]
    if with_selection:
        cols += ["verdict", "reasons", "rank"]
    return cols


def render_csv(
    reports: Sequence[MetricsReport],
    verdicts: Optional[Sequence[Verdict]] = None,
    ranking: Optional[RankedList] = None,
) -> str:
    n = reports[0].n_areas if reports else 0
    with_sel = verdicts is not None
    by_id = {v.variant_id: v for v in verdicts} if with_sel else {}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(n, with_sel))
    for r in reports:
        row = [r.variant_id, fmt(r.total_variance)]
        row += [fmt(v) for v in (*r.aav, *r.rav, *r.vvo)]
        row += [fmt(r.avv), fmt(r.rvv), fmt(r.max_vvo)]
        if with_sel:
            v = by_id[r.variant_id]
            rk = ranking.rank_of(r.variant_id) if ranking is not None else None
            row += [
                "accepted" if v.accepted else "rejected",
                ";".join(reason.value for reason in v.reasons),
                "" if rk is None else str(rk),
            ]
        writer.writerow(row)
    return buf.getvalue()


def render_json(
    reports: Sequence[MetricsReport],
    verdicts: Optional[Sequence[Verdict]] = None,
    ranking: Optional[RankedList] = None,
    meta: Optional[dict] = None,
) -> str:
    by_id = {v.variant_id: v for v in verdicts} if verdicts is not None else {}
    rows = []
    for r in reports:
        d = r.to_dict()
        d["total_var"] = _json_float(d["total_var"])
        d["VVO"] = [_json_float(v) for v in d["VVO"]]
        d["RVV"] = _json_float(d["RVV"])
        d["max_VVO"] = _json_float(d["max_VVO"])
        if verdicts is not None:
            v = by_id[r.variant_id]
            d["verdict"] = "accepted" if v.accepted else "rejected"
            d["reasons"] = [reason.value for reason in v.reasons]
            d["rank"] = ranking.rank_of(r.variant_id) if ranking is not None else None
        rows.append(d)
    payload = dict(meta or {})
    if ranking is not None:
        payload["ranking"] = [
            {"rank": e.rank, "id": e.variant_id, ranking.key.value: _json_float(e.key_value)} for e in ranking
        ]
    payload["variants"] = rows
    return json.dumps(payload, indent=2) + "\n"


def write_reports(out_dir, reports, verdicts=None, ranking=None, meta=None, json_too: bool = True) -> None:
    out_dir = Path(out_dir)
    (out_dir / "report.csv").write_text(render_csv(reports, verdicts, ranking), encoding="utf-8")
    if json_too:
        (out_dir / "report.json").write_text(render_json(reports, verdicts, ranking, meta), encoding="utf-8")


def load_report_json(path) -> tuple[list[MetricsReport], dict]:
    """Read the ``variants`` of a report.json back into MetricsReport objects."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        reports = [MetricsReport.from_dict(d) for d in payload["variants"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InvalidParams(f"{path}: not a valid report file ({exc})") from exc
    meta = {k: v for k, v in payload.items() if k not in ("variants", "ranking")}
    return reports, meta


def load_variance_table(path) -> tuple[list[tuple[str, list[float], float]], tuple[list[float], float]]:
    """Parse a pre-measured variance table.

    Columns: ``id,total,area_1,...,area_N``. The row with id ``original`` is the
    baseline; all other rows are variants, returned in file order.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if len(rows) < 2:
        raise InvalidParams(f"{path}: need a header and at least an 'original' row")
    header = [c.strip() for c in rows[0]]
    if header[:2] != ["id", "total"] or len(header) < 3:
        raise InvalidParams(f"{path}: header must start with 'id,total,area_1,...'")
    baseline = None
    variants = []
    for row in rows[1:]:
        if len(row) != len(header):
            raise InvalidParams(f"{path}: row {row!r} has {len(row)} fields, expected {len(header)}")
        try:
            total = float(row[1])
            areas = [float(c) for c in row[2:]]
        except ValueError as exc:
            raise InvalidParams(f"{path}: {exc}") from exc
        vid = row[0].strip()
        if vid == "original":
            baseline = (areas, total)
        else:
            variants.append((vid, areas, total))
    if baseline is None:
        raise InvalidParams(f"{path}: no row with id 'original'")
    return variants, baseline
