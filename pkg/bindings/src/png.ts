// Minimal grayscale PNG codec: 8-bit (stroke/mask rasters) and 16-bit
// (label fields), colortype 0, no interlace. The decoder reconstructs all
// five scanline filters so externally written files (e.g. by Pillow)
// parse correctly; the encoder always emits filter 0.

import * as zlib from "node:zlib";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(...parts: Buffer[]): number {
  let c = 0xffffffff;
  for (const part of parts) {
    for (let i = 0; i < part.length; i++) c = CRC_TABLE[(c ^ part[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, body: Buffer): Buffer {
  const head = Buffer.alloc(4);
  head.writeUInt32BE(body.length, 0);
  const typeBuf = Buffer.from(type, "ascii");
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(typeBuf, body), 0);
  return Buffer.concat([head, typeBuf, body, crc]);
}

export interface GrayImage {
  width: number;
  height: number;
  depth: 8 | 16;
  pixels: Uint8Array | Uint16Array;
}

export function encodeGrayPng(img: GrayImage): Buffer {
  const { width, height, depth, pixels } = img;
  if (pixels.length !== width * height) throw new Error("pixel count does not match dimensions");
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr.writeUInt8(depth, 8); // bit depth
  ihdr.writeUInt8(0, 9); // colortype: grayscale
  const bpp = depth / 8;
  const raw = Buffer.alloc(height * (1 + width * bpp));
  let o = 0;
  for (let y = 0; y < height; y++) {
    raw[o++] = 0; // filter: none
    for (let x = 0; x < width; x++) {
      const v = pixels[y * width + x];
      if (depth === 16) {
        raw[o++] = (v >> 8) & 0xff;
        raw[o++] = v & 0xff;
      } else {
        raw[o++] = v & 0xff;
      }
    }
  }
  const idat = zlib.deflateSync(raw);
  return Buffer.concat([SIGNATURE, chunk("IHDR", ihdr), chunk("IDAT", idat), chunk("IEND", Buffer.alloc(0))]);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

export function decodeGrayPng(buf: Buffer): GrayImage {
  if (!buf.subarray(0, 8).equals(SIGNATURE)) throw new Error("not a PNG file");
  let pos = 8;
  let width = 0;
  let height = 0;
  let depth = 0;
  let colortype = -1;
  const idat: Buffer[] = [];
  while (pos < buf.length) {
    const len = buf.readUInt32BE(pos);
    const type = buf.subarray(pos + 4, pos + 8).toString("ascii");
    const body = buf.subarray(pos + 8, pos + 8 + len);
    if (type === "IHDR") {
      width = body.readUInt32BE(0);
      height = body.readUInt32BE(4);
      depth = body.readUInt8(8);
      colortype = body.readUInt8(9);
      if (body.readUInt8(12) !== 0) throw new Error("interlaced PNG unsupported");
    } else if (type === "IDAT") {
      idat.push(Buffer.from(body));
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (colortype !== 0) throw new Error(`expected grayscale PNG, got colortype ${colortype}`);
  if (depth !== 8 && depth !== 16) throw new Error(`unsupported bit depth ${depth}`);
  const raw = zlib.inflateSync(Buffer.concat(idat));
  const bpp = depth / 8;
  const stride = width * bpp;
  const out = depth === 16 ? new Uint16Array(width * height) : new Uint8Array(width * height);
  const prev = Buffer.alloc(stride);
  const line = Buffer.alloc(stride);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    raw.copy(line, 0, y * (stride + 1) + 1, (y + 1) * (stride + 1));
    for (let i = 0; i < stride; i++) {
      const a = i >= bpp ? line[i - bpp] : 0;
      const b = prev[i];
      const c = i >= bpp ? prev[i - bpp] : 0;
      switch (filter) {
        case 0:
          break;
        case 1:
          line[i] = (line[i] + a) & 0xff;
          break;
        case 2:
          line[i] = (line[i] + b) & 0xff;
          break;
        case 3:
          line[i] = (line[i] + ((a + b) >> 1)) & 0xff;
          break;
        case 4:
          line[i] = (line[i] + paeth(a, b, c)) & 0xff;
          break;
        default:
          throw new Error(`unknown scanline filter ${filter}`);
      }
    }
    for (let x = 0; x < width; x++) {
      out[y * width + x] = depth === 16 ? (line[2 * x] << 8) | line[2 * x + 1] : line[x];
    }
    line.copy(prev);
  }
  return { width, height, depth: depth as 8 | 16, pixels: out };
}
