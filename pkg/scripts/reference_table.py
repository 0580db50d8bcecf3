"""Recompute the reference statistics table from its published stripe variances.

    python scripts/reference_table.py [--tau 1.0] [--mu 1.0] [--epsilon 0.001]
"""
import argparse
from pathlib import Path

from defog.metrics import report_from_precomputed
from defog.reports import load_variance_table
from defog.selector import GateThresholds, select_and_rank

TABLE = Path(__file__).resolve().parent.parent / "tests" / "data" / "reference_variances.csv"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--table", default=str(TABLE))
    parser.add_argument("--epsilon", type=float, default=0.001)
    parser.add_argument("--tau", type=float, default=1.0)
    parser.add_argument("--mu", type=float, default=1.0)
    args = parser.parse_args()

    variants, (base_areas, base_total) = load_variance_table(args.table)
    reports = [report_from_precomputed(a, t, base_areas, base_total, vid) for vid, a, t in variants]
    ranked, verdicts = select_and_rank(reports, GateThresholds(args.epsilon, args.tau, args.mu))

    for rep, verdict in zip(reports, verdicts):
        print(f"{rep.variant_id:>14}  total={rep.total_variance:g}")
        print("    RAV " + "  ".join(f"{v:7.4f}" for v in rep.rav))
        print("    VVO " + "  ".join(f"{v:7.4f}" for v in rep.vvo))
        print(f"    AVV {rep.avv:.4f}  RVV {rep.rvv:.2f}  max VVO {rep.max_vvo:.4f}")
        status = "accepted" if verdict.accepted else "rejected: " + ", ".join(r.value for r in verdict.reasons)
        print(f"    {status}")
    print()
    for e in ranked:
        print(f"rank {e.rank}: {e.variant_id} (max VVO {e.key_value:.4f})")


if __name__ == "__main__":
    main()
