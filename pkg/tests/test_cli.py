import csv
import json

import numpy as np
import pytest

from conftest import REFERENCE_CSV
from defog.cli import main
from defog.fixtures import gray_image
from defog.imaging import load_image, save_image

FAST_GRID = ["--scale", "16,60", "--scale-division", "3", "--dynamic", "1.2", "--level", "uniform,low"]


@pytest.fixture
def foggy_png(tmp_path, foggy_small):
    path = tmp_path / "foggy.png"
    save_image(foggy_small, path)
    return path


@pytest.fixture
def gray_png(tmp_path):
    path = tmp_path / "gray.png"
    save_image(gray_image(16, 16, 140), path)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_enhance(tmp_path, foggy_png):
    out = tmp_path / "out.png"
    code = main(["enhance", str(foggy_png), "--scale", "240", "--division", "3", "--dynamic", "1.2",
                 "--level", "low", "-o", str(out)])
    assert code == 0
    assert load_image(out).shape == (64, 64)


def test_enhance_gray(tmp_path, gray_png):
    out = tmp_path / "out.png"
    assert main(["enhance", str(gray_png), "-o", str(out)]) == 0
    assert np.all(load_image(out).pixels == 128)


@pytest.mark.parametrize("bad", [["--scale", "300"], ["--level", "medium"], ["--dynamic", "x"], ["--bogus"]])
def test_enhance_bad_args(tmp_path, foggy_png, bad):
    assert main(["enhance", str(foggy_png), "-o", str(tmp_path / "o.png"), *bad]) == 2


def test_enhance_missing_input(tmp_path):
    assert main(["enhance", str(tmp_path / "none.png"), "-o", str(tmp_path / "o.png")]) == 3


def test_threshold_command(tmp_path, foggy_png):
    out = tmp_path / "bw.png"
    assert main(["threshold", str(foggy_png), "-t", "175", "-o", str(out)]) == 0
    assert set(np.unique(load_image(out).pixels)) <= {0, 255}
    assert main(["threshold", str(foggy_png), "-t", "256", "-o", str(out)]) == 2


def test_bulk_command(tmp_path, foggy_png):
    out = tmp_path / "bulk"
    assert main(["bulk", str(foggy_png), "-o", str(out), *FAST_GRID, "--thresholds", "127,175"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest) == 2 * 1 * 1 * 2 * 3


def test_score_from_variances(tmp_path):
    assert main(["score", "--from-variances", str(REFERENCE_CSV), "-o", str(tmp_path)]) == 0
    rows = {r["id"]: r for r in read_csv(tmp_path / "report.csv")}
    assert set(rows) == {"0_5_0_39_1", "60_1_0_13_0", "240_7_1_13_0", "240_5_2_26_1", "180_1_1_13_1"}
    assert float(rows["60_1_0_13_0"]["RVV"]) == pytest.approx(59.63, rel=0.02)
    assert rows["60_1_0_13_0"]["AVV"] == "0.2656"
    assert float(rows["180_1_1_13_1"]["RVV"]) == pytest.approx(47.81, abs=0.01)
    assert "verdict" not in rows["60_1_0_13_0"]


def test_score_original_against_itself(tmp_path, foggy_png):
    out = tmp_path / "s"
    assert main(["score", str(foggy_png), str(foggy_png), "-o", str(out)]) == 0
    (row,) = read_csv(out / "report.csv")
    assert row["RVV"] == "1.0000"
    assert all(row[f"VVO_{i}"] == "1.0000" for i in range(1, 6))


def test_score_dimension_mismatch(tmp_path, foggy_png):
    other = tmp_path / "other.png"
    save_image(gray_image(10, 64, 3), other)
    assert main(["score", str(foggy_png), str(other), "-o", str(tmp_path / "s")]) == 2


def test_score_lattice_and_mode(tmp_path, foggy_png):
    out = tmp_path / "s"
    assert main(["score", str(foggy_png), str(foggy_png), "-o", str(out), "--lattice", "3x3",
                 "--scalar-mode", "g"]) == 0
    (row,) = read_csv(out / "report.csv")
    assert "VVO_9" in row
    assert json.loads((out / "report.json").read_text())["scalar_mode"] == "g"


def test_score_then_select(tmp_path, foggy_png):
    bulk_dir = tmp_path / "bulk"
    assert main(["bulk", str(foggy_png), "-o", str(bulk_dir), *FAST_GRID]) == 0
    score_dir = tmp_path / "score"
    assert main(["score", str(foggy_png), str(bulk_dir / "manifest.json"), "-o", str(score_dir)]) == 0
    assert len(read_csv(score_dir / "report.csv")) == 8
    sel_dir = tmp_path / "sel"
    code = main(["select", str(score_dir / "report.json"), "-o", str(sel_dir), "--rank-key", "rvv"])
    rows = read_csv(sel_dir / "report.csv")
    accepted = [r for r in rows if r["verdict"] == "accepted"]
    assert code == (0 if accepted else 1)
    assert sorted(int(r["rank"]) for r in accepted) == list(range(1, len(accepted) + 1))
    assert all(r["rank"] == "" and r["reasons"] for r in rows if r["verdict"] == "rejected")


def test_select_reference_table(tmp_path):
    main(["score", "--from-variances", str(REFERENCE_CSV), "-o", str(tmp_path / "s")])
    assert main(["select", str(tmp_path / "s" / "report.json"), "-o", str(tmp_path / "sel")]) == 0
    payload = json.loads((tmp_path / "sel" / "report.json").read_text())
    assert [e["id"] for e in payload["ranking"]] == ["60_1_0_13_0", "240_7_1_13_0"]
    verdicts = {v["id"]: v["reasons"] for v in payload["variants"]}
    assert verdicts["0_5_0_39_1"] == ["FakeDetailEverywhere"]
    assert verdicts["240_5_2_26_1"] == ["SolidArea"]


def test_select_all_rejected(tmp_path):
    main(["score", "--from-variances", str(REFERENCE_CSV), "-o", str(tmp_path / "s")])
    code = main(["select", str(tmp_path / "s" / "report.json"), "-o", str(tmp_path / "sel"), "--mu", "1000"])
    assert code == 1
    assert len(read_csv(tmp_path / "sel" / "report.csv")) == 5


def test_pipeline_small(tmp_path, foggy_png):
    out = tmp_path / "run"
    assert main(["pipeline", str(foggy_png), "-o", str(out), *FAST_GRID]) == 0
    for name in ("manifest.json", "report.csv", "report.json", "best.png"):
        assert (out / name).exists()
    payload = json.loads((out / "report.json").read_text())
    best_id = payload["ranking"][0]["id"]
    assert (out / "best.png").read_bytes() == (out / f"{best_id}.png").read_bytes()
    assert len(read_csv(out / "report.csv")) == 8


def test_pipeline_gray_is_degenerate(tmp_path, gray_png):
    assert main(["pipeline", str(gray_png), "-o", str(tmp_path / "run"), *FAST_GRID]) == 4


def test_pipeline_all_rejected(tmp_path, foggy_png):
    out = tmp_path / "run"
    assert main(["pipeline", str(foggy_png), "-o", str(out), *FAST_GRID, "--mu", "1e6"]) == 1
    assert not (out / "best.png").exists()
    assert (out / "report.csv").exists()


def test_pipeline_config_file(tmp_path, foggy_png):
    cfg = tmp_path / "run.toml"
    cfg.write_text('scale = [16]\nscale_division = 3\ndynamic = 1.2\nlevel = ["low"]\nthresholds = []\n'
                   'lattice = "2x2"\nrank_key = "rvv"\n')
    out = tmp_path / "run"
    code = main(["pipeline", str(foggy_png), "-o", str(out), "--config", str(cfg), "--scale", "60"])
    assert code in (0, 1)
    (row,) = read_csv(out / "report.csv")
    assert row["id"] == "s60_n3_d12_lL_tnone"
    assert "VVO_4" in row and "VVO_5" not in row
    assert json.loads((out / "report.json").read_text())["rank_key"] == "rvv"


def test_bad_config(tmp_path, foggy_png):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("scale = [\n")
    assert main(["pipeline", str(foggy_png), "-o", str(tmp_path / "r"), "--config", str(cfg)]) == 2
    cfg.write_text("epsilon = 0.5\n")
    assert main(["pipeline", str(foggy_png), "-o", str(tmp_path / "r"), "--config", str(cfg)]) == 2


def test_workers_env(tmp_path, foggy_png, monkeypatch):
    monkeypatch.setenv("DEFOG_WORKERS", "0")
    assert main(["bulk", str(foggy_png), "-o", str(tmp_path / "b"), *FAST_GRID]) == 2
    monkeypatch.setenv("DEFOG_WORKERS", "3")
    assert main(["bulk", str(foggy_png), "-o", str(tmp_path / "b"), *FAST_GRID]) == 0


def test_no_subcommand():
    assert main([]) == 2
