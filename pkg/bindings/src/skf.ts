// SKF array container: magic "SKF1", dtype-code byte (1=f32, 2=f64, 3=u8,
// 4=u16, 5=i32), rank byte, rank little-endian u32 dims (outermost first),
// row-major little-endian payload.

export type SkfData =
  | Float32Array
  | Float64Array
  | Uint8Array
  | Uint16Array
  | Int32Array;

export interface SkfArray<T extends SkfData = SkfData> {
  dtype: 1 | 2 | 3 | 4 | 5;
  shape: number[];
  data: T;
}

const MAGIC = Buffer.from("SKF1", "ascii");
const MAX_ELEMS = 2 ** 31;

const CTORS: Record<number, { new (b: ArrayBuffer): SkfData; BYTES_PER_ELEMENT: number }> = {
  1: Float32Array,
  2: Float64Array,
  3: Uint8Array,
  4: Uint16Array,
  5: Int32Array,
};

export function dtypeOf(data: SkfData): 1 | 2 | 3 | 4 | 5 {
  if (data instanceof Float32Array) return 1;
  if (data instanceof Float64Array) return 2;
  if (data instanceof Uint8Array) return 3;
  if (data instanceof Uint16Array) return 4;
  if (data instanceof Int32Array) return 5;
  throw new Error("unsupported typed array for SKF");
}

export function encodeSkf(arr: SkfArray): Buffer {
  const { dtype, shape, data } = arr;
  const n = shape.reduce((a, b) => a * b, 1);
  if (n !== data.length) {
    throw new Error(`shape ${shape.join("x")} does not match ${data.length} elements`);
  }
  if (shape.length < 1 || shape.length > 8) throw new Error(`rank ${shape.length} unsupported`);
  if (n > MAX_ELEMS) throw new Error("element count exceeds the container limit");
  const header = Buffer.alloc(6 + 4 * shape.length);
  MAGIC.copy(header, 0);
  header.writeUInt8(dtype, 4);
  header.writeUInt8(shape.length, 5);
  shape.forEach((d, i) => header.writeUInt32LE(d, 6 + 4 * i));
  // typed arrays are little-endian on every platform Node supports
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  return Buffer.concat([header, payload]);
}

export function decodeSkf(buf: Buffer): SkfArray {
  if (buf.length < 6) throw new Error("file shorter than the fixed header");
  if (!buf.subarray(0, 4).equals(MAGIC)) throw new Error(`bad magic ${buf.subarray(0, 4)}`);
  const dtype = buf.readUInt8(4) as SkfArray["dtype"];
  const rank = buf.readUInt8(5);
  const ctor = CTORS[dtype];
  if (!ctor) throw new Error(`unknown dtype code ${dtype}`);
  if (rank < 1 || rank > 8) throw new Error(`rank ${rank} outside supported range`);
  const dimEnd = 6 + 4 * rank;
  if (buf.length < dimEnd) throw new Error("file ends inside the dimension list");
  const shape: number[] = [];
  for (let i = 0; i < rank; i++) shape.push(buf.readUInt32LE(6 + 4 * i));
  const n = shape.reduce((a, b) => a * b, 1);
  if (n > MAX_ELEMS) throw new Error("element count exceeds the container limit");
  const expected = n * ctor.BYTES_PER_ELEMENT;
  if (buf.length - dimEnd !== expected) {
    throw new Error(`payload holds ${buf.length - dimEnd} bytes, dims require ${expected}`);
  }
  const copy = new ArrayBuffer(expected);
  new Uint8Array(copy).set(buf.subarray(dimEnd));
  return { dtype, shape, data: new ctor(copy) };
}
