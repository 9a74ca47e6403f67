"""Triangular-domain heatmaps from x1,x2,value CSV grids.

Each input CSV holds lattice points of the two-simplex (x3 = 1 - x1 - x2
implied).  Values are drawn with the Greys colormap so that darker means
larger, and when several CSVs are passed the panels share one colour scale.
Output is deterministic for fixed inputs: fixed figure geometry, fixed
colormap, and the colormap name recorded in the image metadata.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CMAP = "Greys"
ROOT3_HALF = np.sqrt(3.0) / 2.0


def read_heatmap_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse one heatmap CSV; raises ValueError on schema problems."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    if [c.strip() for c in rows[0]] != ["x1", "x2", "value"]:
        raise ValueError(f"{path}: expected header x1,x2,value, got {rows[0]}")
    if len(rows) == 1:
        raise ValueError(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric cell ({exc})") from exc
    if data.shape[1] != 3:
        raise ValueError(f"{path}: rows must have 3 columns")
    x1, x2, val = data[:, 0], data[:, 1], data[:, 2]
    if np.any(x1 < -1e-9) or np.any(x2 < -1e-9) or np.any(x1 + x2 > 1.0 + 1e-9):
        raise ValueError(f"{path}: (x1,x2) must lie in the simplex")
    if np.any(val < 0.0):
        raise ValueError(f"{path}: values must be nonnegative")
    return x1, x2, val


def _panel(ax, x1, x2, val, vmin, vmax, title):
    # equilateral-triangle projection of the simplex
    px = x1 + 0.5 * x2
    py = ROOT3_HALF * x2
    if px.size >= 3:
        m = ax.tripcolor(
            px, py, val, shading="gouraud", cmap=CMAP, vmin=vmin, vmax=vmax
        )
    else:
        m = ax.scatter(
            px, py, c=val, s=400, marker="^", cmap=CMAP, vmin=vmin, vmax=vmax
        )
    ax.plot([0, 1, 0.5, 0], [0, 0, ROOT3_HALF, 0], color="black", linewidth=0.8)
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, ROOT3_HALF + 0.05)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title, fontsize=10)
    return m


def render(csv_paths, out_path, titles=()):
    panels = [read_heatmap_csv(p) for p in csv_paths]
    vmin = min(float(v.min()) for _, _, v in panels)
    vmax = max(float(v.max()) for _, _, v in panels)
    if vmax <= vmin:
        vmax = vmin + 1.0
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.4), squeeze=False)
    mappable = None
    for i, (x1, x2, val) in enumerate(panels):
        title = titles[i] if i < len(titles) else os.path.basename(csv_paths[i])
        mappable = _panel(axes[0][i], x1, x2, val, vmin, vmax, title)
    fig.colorbar(
        mappable, ax=[ax for row in axes for ax in row], shrink=0.8, pad=0.02
    )
    fig.savefig(out_path, dpi=150, metadata={"Description": f"cmap={CMAP}"})
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_heatmap",
        description="Render simplex heatmap CSVs as a (multi-panel) figure",
    )
    parser.add_argument("csv", nargs="+", help="input CSV file(s), one per panel")
    parser.add_argument("out", help="output image path")
    parser.add_argument("--title", nargs="*", default=[], help="per-panel titles")
    args = parser.parse_args(argv)
    try:
        render(args.csv, args.out, args.title)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({len(args.csv)} panel(s), cmap={CMAP})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
