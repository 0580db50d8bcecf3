"""Run the full bulk/score/select pipeline on a synthetic foggy scene and
summarize which parameter settings survive the gates.

    python scripts/foggy_sweep.py --size 256 --out runs/foggy
"""
import argparse
import json
import time
from collections import Counter
from pathlib import Path

from defog.cli import main as defog_main
from defog.fixtures import foggy_scene
from defog.imaging import save_image, to_scalar
from defog.metrics import variance


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs/foggy")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--rank-key", default="max_vvo")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scene = foggy_scene(args.size, seed=args.seed)
    src = out / "input.png"
    save_image(scene, src)

    start = time.perf_counter()
    code = defog_main(["pipeline", str(src), "-o", str(out / "pipeline"), "--workers", str(args.workers),
                       "--rank-key", args.rank_key])
    elapsed = time.perf_counter() - start
    print(f"pipeline exit code {code} in {elapsed:.1f}s")

    payload = json.loads((out / "pipeline" / "report.json").read_text())
    rows = payload["variants"]
    print(f"input variance {variance(to_scalar(scene).values):.1f}")
    print(f"{sum(r['verdict'] == 'accepted' for r in rows)} of {len(rows)} variants accepted")
    reasons = Counter(reason for r in rows for reason in r["reasons"])
    for reason, count in reasons.most_common():
        print(f"  {reason}: {count}")
    for entry in payload.get("ranking", [])[:10]:
        print(f"  #{entry['rank']:<3} {entry['id']}")


if __name__ == "__main__":
    main()
