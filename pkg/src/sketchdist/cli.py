"""Command-line front door composing the library into reproducible pipelines.

Subcommands: validate, targets, reconstruct, sparsify, loss, eval, curve.
Reports go to stdout as JSON (deterministic key order, embedding the
tool version and the resolved parameters); diagnostics and
machine-readable error JSON go to stderr. Exit codes: 0 success, 1 I/O
or parse error, 2 validation failure, 3 dimension or format mismatch.
All file outputs are written to temp names and renamed on success.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, losses, metrics, raster, sparsity, supervision
from .flowfield import ReconstructionParams, reconstruct_masks

__all__ = ["main", "run"]

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_FORMAT = 3


class _CliParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliParseError(message)


def _emit(report):
    sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")


def _emit_error(kind, message):
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": str(message)}}) + "\n")


def _report(subcommand, params, body):
    return {
        "tool": "sketchdist",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": params,
        **body,
    }


def _require_files(*paths):
    for p in paths:
        if p is not None and not os.path.exists(p):
            raise FileNotFoundError(p)


def _jobs_default():
    env = os.environ.get("SKETCHDIST_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _checked_params(build):
    """Constraint violations on flag values are invocation errors."""
    try:
        return build()
    except ValueError as exc:
        raise _CliParseError(str(exc)) from exc


def _load_annotation(strokes_path, edges_path):
    codes = raster.read_stroke_png(strokes_path)
    ann = supervision.annotation_from_codes(codes)
    if edges_path:
        edges = raster.read_array(edges_path)
        if edges.ndim != 2 or edges.shape[1] != 4:
            raise raster.SkfError("boundary edge file must hold an (n, 4) array")
        ann = supervision.AnnotationSet(
            background=ann.background,
            foreground=ann.foreground,
            boundary_pixels=ann.boundary_pixels,
            boundary_edges=edges.astype(np.int64),
        )
    return ann


def _cmd_validate(args):
    _require_files(args.strokes, args.labels, args.edges)
    ann = _load_annotation(args.strokes, args.edges)
    gt = raster.read_label_png(args.labels)
    report = supervision.validate_annotation(ann, gt)
    params = {"strokes": args.strokes, "labels": args.labels, "edges": args.edges}
    _emit(_report("validate", params, report.to_dict()))
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _cmd_targets(args):
    _require_files(args.strokes, args.edges)
    ann = _load_annotation(args.strokes, args.edges)
    targets = supervision.make_targets(
        ann, bg_value=args.bg_value, border_is_boundary=args.border_boundary
    )
    params = {
        "strokes": args.strokes,
        "edges": args.edges,
        "out": args.out,
        "bg_value": args.bg_value,
        "border_boundary": args.border_boundary,
    }
    provenance = {"tool": "sketchdist", "version": __version__, "parameters": params}
    supervision.write_targets(targets, args.out, provenance=provenance)
    _emit(
        _report(
            "targets",
            params,
            {
                "valid_pixels": int(targets.valid.sum()),
                "flow_valid_pixels": int(targets.flow_valid.sum()),
            },
        )
    )
    return EXIT_OK


def _cmd_reconstruct(args):
    _require_files(args.dist, args.flow)
    d = raster.read_array(args.dist)
    v = raster.read_array(args.flow)
    params_obj = _checked_params(
        lambda: ReconstructionParams(
            fg_threshold=args.fg_thresh,
            dt=args.dt,
            steps=args.steps,
            cluster_radius=args.cluster_radius,
            min_size=args.min_size,
        )
    )
    labels = reconstruct_masks(d, v, params_obj)
    raster.write_label_png(labels, args.out)
    params = {
        "dist": args.dist,
        "flow": args.flow,
        "out": args.out,
        "dt": args.dt,
        "steps": args.steps,
        "fg_thresh": args.fg_thresh,
        "cluster_radius": args.cluster_radius,
        "min_size": args.min_size,
    }
    _emit(_report("reconstruct", params, {"instances": int(labels.max())}))
    return EXIT_OK


def _cmd_sparsify(args):
    _require_files(args.labels)
    gt = raster.read_label_png(args.labels)
    h, w = gt.shape
    config = _checked_params(
        lambda: sparsity.SparsityConfig(fraction=args.fraction, sigma=args.sigma, seed=args.seed)
    )
    mask = sparsity.gaussian_mask(w, h, config)
    ann = sparsity.derive_annotation(gt, mask)
    os.makedirs(args.out, exist_ok=True)
    raster.write_stroke_png(mask.astype(np.uint8), os.path.join(args.out, "mask.png"))
    raster.write_stroke_png(
        supervision.annotation_to_codes(ann), os.path.join(args.out, "strokes.png")
    )
    raster.write_array(
        ann.boundary_edges.astype(np.int32), os.path.join(args.out, "b_edges.skf")
    )
    params = {
        "labels": args.labels,
        "fraction": args.fraction,
        "sigma": args.sigma,
        "seed": args.seed,
        "out": args.out,
    }
    sidecar = {"tool": "sketchdist", "version": __version__, "parameters": params}
    raster._atomic_write_bytes(
        os.path.join(args.out, "config.json"),
        (json.dumps(sidecar, sort_keys=True, indent=2) + "\n").encode(),
    )
    _emit(_report("sparsify", params, {"mask_pixels": int(mask.sum())}))
    return EXIT_OK


def _cmd_loss(args):
    _require_files(args.pred_dist, args.pred_flow, args.weights)
    d = raster.read_array(args.pred_dist)
    v = raster.read_array(args.pred_flow)
    targets = supervision.read_targets(args.targets)
    if args.weights:
        with open(args.weights) as fh:
            weights = losses.LossWeights.from_dict(json.load(fh))
    else:
        weights = losses.LossWeights()
    mode = {"theorem": "theorem_consistent", "paper": "paper_literal"}[args.ineq_mode]
    flow_term = losses.loss_flow_partial(v, targets, weights.flow_mse)
    dist_term = losses.loss_distance_partial(d, targets, weights.distance)
    ineq_term = losses.loss_distance_ineq(d, targets, weights.distance_ineq, mode)
    total = losses.sketchpose_total(d, v, targets, weights, mode)
    if args.grad_out:
        os.makedirs(args.grad_out, exist_ok=True)
        raster.write_array(total.grad_dist, os.path.join(args.grad_out, "grad_d.skf"))
        raster.write_array(total.grad_flow, os.path.join(args.grad_out, "grad_v.skf"))
    params = {
        "pred_dist": args.pred_dist,
        "pred_flow": args.pred_flow,
        "targets": args.targets,
        "weights": weights.to_dict(),
        "ineq_mode": args.ineq_mode,
        "grad_out": args.grad_out,
    }
    body = {
        "terms": {
            "flow_partial": flow_term.value,
            "distance_partial": dist_term.value,
            "distance_ineq": ineq_term.value,
        },
        "total": total.value,
    }
    _emit(_report("loss", params, body))
    return EXIT_OK


def _image_metrics(pred, gt, tau):
    result = metrics.match_instances(pred, gt, tau=tau)
    p, r, f1 = metrics.precision_recall_f1(result)
    dice, jaccard = metrics.average_dice_and_jaccard(result, pred, gt)
    dq, sq = metrics.panoptic_dq_sq(result)
    oa = metrics.object_accuracy([result])
    return {
        "tp": result.tp,
        "fp": result.fp,
        "fn": result.fn,
        "object_accuracy": oa,
        "precision": p,
        "recall": r,
        "f1": f1,
        "dice": dice,
        "jaccard": jaccard,
        "dq": dq,
        "sq": sq,
    }


def _cmd_eval(args):
    _require_files(args.pred, args.gt)
    pred = raster.read_label_png(args.pred)
    gt = raster.read_label_png(args.gt)
    body = _image_metrics(pred, gt, args.tau)
    params = {"pred": args.pred, "gt": args.gt, "tau": args.tau}
    _emit(_report("eval", params, body))
    return EXIT_OK


def _parse_taus(spec):
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise _CliParseError(f"bad tau range {spec!r}; expected start:stop:step") from exc
    if step <= 0:
        raise _CliParseError("tau step must be positive")
    taus = []
    t = start
    while t <= stop + 1e-9:
        taus.append(round(t, 10))
        t += step
    return taus


def _cmd_curve(args):
    for d in (args.pred_dir, args.gt_dir):
        if not os.path.isdir(d):
            raise FileNotFoundError(d)
    names = sorted(os.listdir(args.pred_dir))
    gt_names = sorted(os.listdir(args.gt_dir))
    if names != gt_names:
        raise ValueError("prediction and ground-truth directories hold different file sets")
    taus = _parse_taus(args.taus)

    def load(name):
        return (
            raster.read_label_png(os.path.join(args.pred_dir, name)),
            raster.read_label_png(os.path.join(args.gt_dir, name)),
        )

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        pairs = list(pool.map(load, names))
    preds = [p for p, _ in pairs]
    gts = [g for _, g in pairs]
    curve = metrics.f1_curve(preds, gts, taus)
    if args.csv:
        lines = ["tau,f1"] + [f"{t},{f1}" for t, f1 in curve]
        raster._atomic_write_bytes(args.csv, ("\n".join(lines) + "\n").encode())
    params = {
        "pred_dir": args.pred_dir,
        "gt_dir": args.gt_dir,
        "taus": args.taus,
        "csv": args.csv,
        "jobs": args.jobs,
    }
    _emit(_report("curve", params, {"curve": [{"tau": t, "f1": f1} for t, f1 in curve]}))
    return EXIT_OK


def _build_parser():
    parser = _Parser(prog="sketchdist", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="check an annotation against ground truth")
    p.add_argument("--strokes", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--edges", default=None)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("targets", help="supervision targets from strokes")
    p.add_argument("--strokes", required=True)
    p.add_argument("--edges", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--bg-value", type=float, default=-1.0)
    p.add_argument("--border-boundary", action="store_true")
    p.set_defaults(func=_cmd_targets)

    p = sub.add_parser("reconstruct", help="instance masks from distance + flow")
    p.add_argument("--dist", required=True)
    p.add_argument("--flow", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--fg-thresh", type=float, default=0.0)
    p.add_argument("--cluster-radius", type=int, default=1)
    p.add_argument("--min-size", type=int, default=15)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("sparsify", help="sparsity mask + derived strokes from labels")
    p.add_argument("--labels", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--sigma", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sparsify)

    p = sub.add_parser("loss", help="partial-annotation losses for a prediction")
    p.add_argument("--pred-dist", required=True)
    p.add_argument("--pred-flow", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--weights", default=None)
    p.add_argument("--ineq-mode", choices=("theorem", "paper"), default="theorem")
    p.add_argument("--grad-out", default=None)
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("eval", help="instance metrics for one prediction")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--tau", type=float, default=0.5)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("curve", help="dataset F1 vs IoU threshold")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--taus", default="0.5:0.95:0.05")
    p.add_argument("--csv", default=None)
    p.add_argument("--jobs", type=int, default=_jobs_default())
    p.set_defaults(func=_cmd_curve)

    return parser


def run(argv):
    """Parse and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _CliParseError as exc:
        _emit_error("parse", exc)
        return EXIT_IO
    try:
        return args.func(args)
    except _CliParseError as exc:
        _emit_error("parse", exc)
        return EXIT_IO
    except (raster.SkfError, raster.PngFormatError) as exc:
        _emit_error("format", exc)
        return EXIT_FORMAT
    except json.JSONDecodeError as exc:
        _emit_error("parse", exc)
        return EXIT_IO
    except ValueError as exc:
        kind = "format" if ("dimension" in str(exc) or "shape" in str(exc)) else "value"
        _emit_error(kind, exc)
        return EXIT_FORMAT
    except FileNotFoundError as exc:
        _emit_error("io", f"missing input: {exc}")
        return EXIT_IO
    except OSError as exc:
        _emit_error("io", exc)
        return EXIT_IO


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
