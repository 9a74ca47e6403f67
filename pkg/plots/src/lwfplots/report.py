"""Estimate-vs-formula scatter plots from validation report CSVs.

The input schema is experiment,label,formula,estimate,stderr,z,pass (leading
'#' comment lines ignored).  Each row becomes a point at (formula, estimate)
with a 1.96-standard-error bar; the y = x diagonal marks perfect agreement
and failing rows are drawn in red.
"""

from __future__ import annotations

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

HEADER = ["experiment", "label", "formula", "estimate", "stderr", "z", "pass"]


def read_report_csv(path: str):
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    if [c.strip() for c in rows[0]] != HEADER:
        raise ValueError(f"{path}: expected header {','.join(HEADER)}")
    if len(rows) == 1:
        raise ValueError(f"{path}: no data rows")
    out = []
    for row in rows[1:]:
        if len(row) != 7:
            raise ValueError(f"{path}: bad row {row}")
        out.append(
            {
                "experiment": row[0],
                "label": row[1],
                "formula": float(row[2]),
                "estimate": float(row[3]),
                "stderr": float(row[4]),
                "passed": row[6].strip().lower() in ("true", "1", "yes"),
            }
        )
    return out


def render(csv_path: str, out_path: str):
    rows = read_report_csv(csv_path)
    formula = np.array([r["formula"] for r in rows])
    estimate = np.array([r["estimate"] for r in rows])
    err = 1.96 * np.array([r["stderr"] for r in rows])
    passed = np.array([r["passed"] for r in rows])
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    lo = min(float((formula - err).min()), float((estimate - err).min()))
    hi = max(float((formula + err).max()), float((estimate + err).max()))
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], color="grey", linewidth=0.8)
    for ok, color, label in ((True, "black", "pass"), (False, "red", "fail")):
        sel = passed == ok
        if np.any(sel):
            ax.errorbar(
                formula[sel],
                estimate[sel],
                yerr=err[sel],
                fmt="o",
                markersize=3,
                color=color,
                elinewidth=0.8,
                capsize=2,
                label=label,
            )
    ax.set_xlabel("formula value")
    ax.set_ylabel("Monte Carlo estimate (±1.96 se)")
    ax.legend(loc="upper left", fontsize=8)
    ax.set_xlim(lo - pad, hi + pad)
    ax.set_ylim(lo - pad, hi + pad)
    fig.savefig(out_path, dpi=150, metadata={"Description": "report-scatter"})
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_report",
        description="Scatter a validation report CSV against the y = x line",
    )
    parser.add_argument("csv", help="input report CSV")
    parser.add_argument("out", help="output image path")
    args = parser.parse_args(argv)
    try:
        render(args.csv, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
