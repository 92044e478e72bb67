"""Regenerate the binding-parity golden corpus by driving the CLI.

Everything is seeded, so reruns are byte-identical; regenerate only
after an intentional format or kernel change, and commit the result.
"""

import json
import os
import shutil
import subprocess
import sys

import numpy as np

from sketchdist import raster

HERE = os.path.dirname(os.path.abspath(__file__))


def cli(*args):
    result = subprocess.run(
        [sys.executable, "-m", "sketchdist", *args], capture_output=True, text=True
    )
    if result.returncode != 0:
        raise RuntimeError(f"cli {args} failed: {result.stderr}")
    return json.loads(result.stdout)


def save_report(report, name):
    with open(os.path.join(HERE, name), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def main():
    rng = np.random.default_rng(2025)
    h = w = 64
    gt = np.zeros((h, w), np.int32)
    yy, xx = np.ogrid[:h, :w]
    placed = []
    label = 0
    while label < 4:
        r = int(rng.integers(6, 12))
        cx, cy = int(rng.integers(r, w - r)), int(rng.integers(r, h - r))
        if all(np.hypot(cx - px, cy - py) >= r + pr + 2 for px, py, pr in placed):
            label += 1
            gt[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = label
            placed.append((cx, cy, r))
    gt_path = os.path.join(HERE, "gt.png")
    raster.write_label_png(gt, gt_path)

    for d in ("sp", "tg", "spfull", "tgfull", "gr"):
        shutil.rmtree(os.path.join(HERE, d), ignore_errors=True)

    sp = os.path.join(HERE, "sp")
    cli("sparsify", "--labels", gt_path, "--fraction", "0.45", "--sigma", "9",
        "--seed", "77", "--out", sp)
    tg = os.path.join(HERE, "tg")
    save_report(
        cli("targets", "--strokes", f"{sp}/strokes.png", "--edges", f"{sp}/b_edges.skf",
            "--out", tg),
        "targets_report.json",
    )

    # a deterministic noisy prediction around the gold targets
    d_star = raster.read_array(f"{tg}/d_star.skf")
    v_star = raster.read_array(f"{tg}/v_star.skf")
    noise = np.random.default_rng(404)
    d_pred = d_star + 0.25 * noise.standard_normal(d_star.shape)
    v_pred = v_star + 0.2 * noise.standard_normal(v_star.shape)
    raster.write_array(d_pred, os.path.join(HERE, "d_pred.skf"))
    raster.write_array(v_pred, os.path.join(HERE, "v_pred.skf"))
    save_report(
        cli("loss", "--pred-dist", os.path.join(HERE, "d_pred.skf"),
            "--pred-flow", os.path.join(HERE, "v_pred.skf"), "--targets", tg,
            "--grad-out", os.path.join(HERE, "gr")),
        "loss_report.json",
    )

    # full annotation for the reconstruction / metrics legs
    spfull = os.path.join(HERE, "spfull")
    cli("sparsify", "--labels", gt_path, "--fraction", "1.0", "--seed", "1", "--out", spfull)
    tgfull = os.path.join(HERE, "tgfull")
    cli("targets", "--strokes", f"{spfull}/strokes.png", "--edges", f"{spfull}/b_edges.skf",
        "--out", tgfull)
    save_report(
        cli("reconstruct", "--dist", f"{tgfull}/d_star.skf", "--flow", f"{tgfull}/v_star.skf",
            "--out", os.path.join(HERE, "rec.png")),
        "reconstruct_report.json",
    )
    save_report(
        cli("eval", "--pred", os.path.join(HERE, "rec.png"), "--gt", gt_path),
        "eval_report.json",
    )
    print("golden corpus written to", HERE)


if __name__ == "__main__":
    main()
