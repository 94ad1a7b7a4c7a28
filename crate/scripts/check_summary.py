#!/usr/bin/env python3
"""Recompute a run summary from its trace CSV and compare with the summary line.

Usage: check_summary.py out/push5.csv [out/push5.summary.txt]
"""
import csv
import math
import sys


def parse_summary(path):
    with open(path) as f:
        return dict(kv.split("=", 1) for kv in f.read().split())


def recompute(rows, window_start):
    window = [r for r in rows if float(r["t"]) >= window_start]
    n = max(len(window), 1)
    errors = [abs(float(r["v_axis"]) - float(r["v_cmd"])) for r in window]
    m_hat = [float(r["m_hat"]) for r in rows]
    return {
        "records": len(rows),
        "mean_velocity": sum(float(r["v_axis"]) for r in window) / n,
        "mean_velocity_error": sum(errors) / n,
        "max_velocity_error": max(errors, default=0.0),
        "final_m_hat": m_hat[-1] if rows else 0.0,
        "final_theta_x": float(rows[-1]["theta_x"]) if rows else 0.0,
        "min_m_hat": min(m_hat, default=math.inf),
        "max_m_hat": max(m_hat, default=-math.inf),
        "qp_failures": sum(r["qp_solved"] == "0" for r in rows),
        "max_cone_violation": max((float(r["cone_violation"]) for r in rows), default=0.0),
    }


def main(argv):
    if len(argv) not in (2, 3):
        sys.exit(__doc__.strip())
    trace = argv[1]
    summary_path = argv[2] if len(argv) == 3 else trace[: -len(".csv")] + ".summary.txt"
    summary = parse_summary(summary_path)
    with open(trace, newline="") as f:
        rows = list(csv.DictReader(f))
    ok = True
    for key, value in recompute(rows, float(summary["window_start"])).items():
        reported = float(summary[key])
        good = math.isclose(value, reported, rel_tol=1e-9, abs_tol=1e-12)
        ok &= good
        print(f"{'ok ' if good else 'BAD'} {key}: summary {reported!r}, recomputed {value!r}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
