// Typed-array bindings for the sketchdist supervision kernels.
//
// Every function validates shapes against the kernel contract, serializes
// the host buffers once into the interchange formats (SKF arrays, gray
// PNGs), drives the CLI in an isolated scratch directory, and parses the
// results back into typed arrays. Calls are independent and re-entrant;
// input buffers are never retained past return.

import * as fs from "node:fs";
import * as path from "node:path";

import { decodeGrayPng, encodeGrayPng } from "./png.js";
import { decodeSkf, dtypeOf, encodeSkf, SkfData } from "./skf.js";
import { runCli, SketchdistError, withScratchDir } from "./runner.js";

export { SketchdistError } from "./runner.js";
export { encodeSkf, decodeSkf } from "./skf.js";
export { encodeGrayPng, decodeGrayPng } from "./png.js";

export const STROKE_UNLABELED = 0;
export const STROKE_BACKGROUND = 1;
export const STROKE_FOREGROUND = 2;
export const STROKE_BOUNDARY = 3;

export interface ScalarField {
  width: number;
  height: number;
  values: Float64Array; // row-major, height * width
}

export interface VectorField {
  width: number;
  height: number;
  vx: Float64Array;
  vy: Float64Array;
}

export interface LabelField {
  width: number;
  height: number;
  labels: Uint16Array;
}

export interface StrokeRaster {
  width: number;
  height: number;
  codes: Uint8Array; // 0=unlabeled, 1=background, 2=foreground, 3=manual boundary
}

/** Inter-pixel boundary edge: endpoints of two 4-adjacent pixels. */
export type BoundaryEdge = [number, number, number, number];

export interface SupervisionTargets {
  width: number;
  height: number;
  distTarget: Float64Array;
  flowX: Float64Array;
  flowY: Float64Array;
  valid: Uint8Array;
  flowValid: Uint8Array;
  lowerBound: Float64Array;
  background: Uint8Array;
  foreground: Uint8Array;
  bgValue: number;
}

export interface LossWeights {
  boundary?: number;
  distance?: number;
  flow_mse?: number;
  flow_norm?: number;
  flow_euler?: number;
  distance_ineq?: number;
}

export interface LossResult {
  value: number;
  terms: { flow_partial: number; distance_partial: number; distance_ineq: number };
  gradDist: Float64Array;
  gradFlowX: Float64Array;
  gradFlowY: Float64Array;
}

export interface ReconstructParams {
  fgThreshold?: number;
  dt?: number;
  steps?: number;
  clusterRadius?: number;
  minSize?: number;
}

export interface MetricsReport {
  tp: number;
  fp: number;
  fn: number;
  object_accuracy: number;
  precision: number;
  recall: number;
  f1: number;
  dice: number;
  jaccard: number;
  dq: number;
  sq: number;
}

function checkSize(name: string, data: SkfData, n: number): void {
  if (data.length !== n) {
    throw new Error(`${name} holds ${data.length} elements, expected ${n}`);
  }
}

function writeSkf(file: string, shape: number[], data: SkfData): void {
  fs.writeFileSync(file, encodeSkf({ dtype: dtypeOf(data), shape, data }));
}

function readScalarSkf(file: string, width: number, height: number): Float64Array {
  const arr = decodeSkf(fs.readFileSync(file));
  if (arr.shape.length !== 2 || arr.shape[0] !== height || arr.shape[1] !== width) {
    throw new Error(`${path.basename(file)} has shape ${arr.shape.join("x")}`);
  }
  return Float64Array.from(arr.data as Float64Array);
}

function readMaskPng(file: string, width: number, height: number): Uint8Array {
  const img = decodeGrayPng(fs.readFileSync(file));
  if (img.width !== width || img.height !== height) {
    throw new Error(`${path.basename(file)} has size ${img.width}x${img.height}`);
  }
  return Uint8Array.from(img.pixels as Uint8Array);
}

function writeEdgesSkf(file: string, edges: BoundaryEdge[]): void {
  const flat = new Int32Array(edges.length * 4);
  edges.forEach((e, i) => flat.set(e, 4 * i));
  writeSkf(file, [edges.length, 4], flat);
}

function splitFlow(file: string, width: number, height: number): [Float64Array, Float64Array] {
  const arr = decodeSkf(fs.readFileSync(file));
  if (arr.shape.length !== 3 || arr.shape[0] !== 2 || arr.shape[1] !== height || arr.shape[2] !== width) {
    throw new Error(`${path.basename(file)} has shape ${arr.shape.join("x")}`);
  }
  const n = width * height;
  const data = arr.data as Float64Array;
  return [Float64Array.from(data.subarray(0, n)), Float64Array.from(data.subarray(n))];
}

function joinFlow(vx: Float64Array, vy: Float64Array): Float64Array {
  const out = new Float64Array(vx.length * 2);
  out.set(vx, 0);
  out.set(vy, vx.length);
  return out;
}

/**
 * Certified supervision targets from a stroke raster.
 *
 * Boundary edges (sub-pixel interface marks, e.g. from a derived
 * annotation) are passed separately since the 0..3 code raster cannot
 * carry them.
 */
export function makeTargets(
  strokes: StrokeRaster,
  opts: { edges?: BoundaryEdge[]; bgValue?: number; borderBoundary?: boolean } = {},
): SupervisionTargets {
  const { width, height, codes } = strokes;
  checkSize("strokes", codes, width * height);
  for (const c of codes) {
    if (c > STROKE_BOUNDARY) throw new Error(`unknown stroke code ${c}`);
  }
  return withScratchDir((dir) => {
    const strokesPath = path.join(dir, "strokes.png");
    fs.writeFileSync(strokesPath, encodeGrayPng({ width, height, depth: 8, pixels: codes }));
    const args = ["targets", "--strokes", strokesPath, "--out", path.join(dir, "tg")];
    if (opts.edges && opts.edges.length) {
      const edgesPath = path.join(dir, "b_edges.skf");
      writeEdgesSkf(edgesPath, opts.edges);
      args.push("--edges", edgesPath);
    }
    if (opts.bgValue !== undefined) args.push("--bg-value", String(opts.bgValue));
    if (opts.borderBoundary) args.push("--border-boundary");
    runCli(args);
    return readTargetsDir(path.join(dir, "tg"), width, height);
  });
}

/** Load a persisted targets directory into typed arrays. */
export function readTargetsDir(dir: string, width: number, height: number): SupervisionTargets {
  const sidecar = JSON.parse(fs.readFileSync(path.join(dir, "targets.json"), "utf-8"));
  const [flowX, flowY] = splitFlow(path.join(dir, "v_star.skf"), width, height);
  return {
    width,
    height,
    distTarget: readScalarSkf(path.join(dir, "d_star.skf"), width, height),
    flowX,
    flowY,
    valid: readMaskPng(path.join(dir, "valid.png"), width, height),
    flowValid: readMaskPng(path.join(dir, "flow_valid.png"), width, height),
    lowerBound: readScalarSkf(path.join(dir, "lower_bound.skf"), width, height),
    background: readMaskPng(path.join(dir, "s0.png"), width, height),
    foreground: readMaskPng(path.join(dir, "s1.png"), width, height),
    bgValue: sidecar.bg_value,
  };
}

function writeTargetsDir(dir: string, t: SupervisionTargets): void {
  fs.mkdirSync(dir, { recursive: true });
  const { width: w, height: h } = t;
  writeSkf(path.join(dir, "d_star.skf"), [h, w], t.distTarget);
  writeSkf(path.join(dir, "v_star.skf"), [2, h, w], joinFlow(t.flowX, t.flowY));
  writeSkf(path.join(dir, "lower_bound.skf"), [h, w], t.lowerBound);
  for (const [name, mask] of [
    ["valid.png", t.valid],
    ["flow_valid.png", t.flowValid],
    ["s0.png", t.background],
    ["s1.png", t.foreground],
  ] as const) {
    fs.writeFileSync(path.join(dir, name), encodeGrayPng({ width: w, height: h, depth: 8, pixels: mask }));
  }
  const sidecar = { format_version: 1, bg_value: t.bgValue, provenance: {} };
  fs.writeFileSync(path.join(dir, "targets.json"), JSON.stringify(sidecar, null, 2) + "\n");
}

/**
 * Total partial-annotation loss with gradients for the predicted
 * distance map and flow field; gradients are ready for injection into an
 * external autodiff graph.
 */
export function sketchposeLoss(
  dist: ScalarField,
  flow: VectorField,
  targets: SupervisionTargets,
  opts: { weights?: LossWeights; mode?: "theorem" | "paper" } = {},
): LossResult {
  const { width, height } = targets;
  checkSize("dist", dist.values, width * height);
  checkSize("flow.vx", flow.vx, width * height);
  checkSize("flow.vy", flow.vy, width * height);
  return withScratchDir((dir) => {
    const tgDir = path.join(dir, "tg");
    writeTargetsDir(tgDir, targets);
    const dPath = path.join(dir, "d.skf");
    const vPath = path.join(dir, "v.skf");
    writeSkf(dPath, [height, width], dist.values);
    writeSkf(vPath, [2, height, width], joinFlow(flow.vx, flow.vy));
    const args = [
      "loss",
      "--pred-dist", dPath,
      "--pred-flow", vPath,
      "--targets", tgDir,
      "--grad-out", path.join(dir, "gr"),
    ];
    if (opts.mode) args.push("--ineq-mode", opts.mode);
    if (opts.weights) {
      const wPath = path.join(dir, "weights.json");
      const defaults = {
        boundary: 10, distance: 2, flow_mse: 2, flow_norm: 2, flow_euler: 1, distance_ineq: 2,
      };
      fs.writeFileSync(wPath, JSON.stringify({ ...defaults, ...opts.weights }));
      args.push("--weights", wPath);
    }
    const report = runCli(args);
    const [gx, gy] = splitFlow(path.join(dir, "gr", "grad_v.skf"), width, height);
    return {
      value: report.total,
      terms: report.terms,
      gradDist: readScalarSkf(path.join(dir, "gr", "grad_d.skf"), width, height),
      gradFlowX: gx,
      gradFlowY: gy,
    };
  });
}

/** Instance labels from a predicted distance map and flow field. */
export function reconstruct(
  dist: ScalarField,
  flow: VectorField,
  params: ReconstructParams = {},
): LabelField {
  const { width, height } = dist;
  checkSize("dist", dist.values, width * height);
  checkSize("flow.vx", flow.vx, width * height);
  checkSize("flow.vy", flow.vy, width * height);
  return withScratchDir((dir) => {
    const dPath = path.join(dir, "d.skf");
    const vPath = path.join(dir, "v.skf");
    writeSkf(dPath, [height, width], dist.values);
    writeSkf(vPath, [2, height, width], joinFlow(flow.vx, flow.vy));
    const out = path.join(dir, "labels.png");
    const args = ["reconstruct", "--dist", dPath, "--flow", vPath, "--out", out];
    if (params.dt !== undefined) args.push("--dt", String(params.dt));
    if (params.steps !== undefined) args.push("--steps", String(params.steps));
    if (params.fgThreshold !== undefined) args.push("--fg-thresh", String(params.fgThreshold));
    if (params.clusterRadius !== undefined) args.push("--cluster-radius", String(params.clusterRadius));
    if (params.minSize !== undefined) args.push("--min-size", String(params.minSize));
    runCli(args);
    const img = decodeGrayPng(fs.readFileSync(out));
    return { width: img.width, height: img.height, labels: img.pixels as Uint16Array };
  });
}

/** Instance-matching metrics of a predicted labeling against ground truth. */
export function matchMetrics(pred: LabelField, gt: LabelField, tau = 0.5): MetricsReport {
  checkSize("pred", pred.labels, pred.width * pred.height);
  checkSize("gt", gt.labels, gt.width * gt.height);
  return withScratchDir((dir) => {
    const predPath = path.join(dir, "pred.png");
    const gtPath = path.join(dir, "gt.png");
    fs.writeFileSync(predPath, encodeGrayPng({ width: pred.width, height: pred.height, depth: 16, pixels: pred.labels }));
    fs.writeFileSync(gtPath, encodeGrayPng({ width: gt.width, height: gt.height, depth: 16, pixels: gt.labels }));
    const report = runCli(["eval", "--pred", predPath, "--gt", gtPath, "--tau", String(tau)]);
    const { tool, version, subcommand, parameters, ...metrics } = report;
    return metrics as MetricsReport;
  });
}
