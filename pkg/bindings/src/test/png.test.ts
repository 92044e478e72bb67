import assert from "node:assert/strict";
import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { test } from "node:test";

import { decodeGrayPng, encodeGrayPng } from "../png.js";

const GOLDEN = path.join(path.dirname(fileURLToPath(import.meta.url)), "..", "..", "golden");

test("round-trips 8-bit grayscale", () => {
  const pixels = new Uint8Array([0, 1, 2, 3, 255, 128]);
  const back = decodeGrayPng(encodeGrayPng({ width: 3, height: 2, depth: 8, pixels }));
  assert.equal(back.depth, 8);
  assert.deepEqual(Array.from(back.pixels), Array.from(pixels));
});

test("round-trips 16-bit grayscale", () => {
  const pixels = new Uint16Array([0, 40000, 65535, 7, 256, 1]);
  const back = decodeGrayPng(encodeGrayPng({ width: 2, height: 3, depth: 16, pixels }));
  assert.equal(back.depth, 16);
  assert.deepEqual(Array.from(back.pixels), Array.from(pixels));
});

test("decodes externally written label PNGs (filtered scanlines)", () => {
  // gt.png is written by Pillow, which picks per-row filters
  const img = decodeGrayPng(fs.readFileSync(path.join(GOLDEN, "gt.png")));
  assert.equal(img.width, 64);
  assert.equal(img.height, 64);
  assert.equal(img.depth, 16);
  const labels = new Set(img.pixels);
  assert.ok(labels.has(0) && labels.has(1) && labels.has(4));
});

test("decodes externally written stroke PNGs", () => {
  const img = decodeGrayPng(fs.readFileSync(path.join(GOLDEN, "sp", "strokes.png")));
  assert.equal(img.depth, 8);
  for (const v of img.pixels) assert.ok(v <= 3);
});

test("rejects non-grayscale and junk", () => {
  assert.throws(() => decodeGrayPng(Buffer.from("definitely not a png")), /not a PNG/);
});
