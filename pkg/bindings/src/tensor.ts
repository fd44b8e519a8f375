/** Raw float tensor files: magic "CSTK", u32 H/W/C little-endian, then
 * float32 data in plane-major (C, H, W) order. */

import { IoError } from "./errors.js";
import { BufferView, checkView, f32 } from "./buffer.js";

const MAGIC = [0x43, 0x53, 0x54, 0x4b]; // "CSTK"

export function encodeTensor(view: BufferView): Uint8Array {
  checkView(view, "float32", undefined, "tensor");
  let shape = view.shape;
  if (shape.length === 2) {
    shape = [1, shape[0], shape[1]];
  }
  if (shape.length !== 3) {
    throw new IoError("FormatError", `tensor must be (C, H, W) or (H, W), got [${view.shape}]`);
  }
  const [c, h, w] = shape;
  const out = new Uint8Array(16 + 4 * c * h * w);
  out.set(MAGIC, 0);
  const dv = new DataView(out.buffer);
  dv.setUint32(4, h, true);
  dv.setUint32(8, w, true);
  dv.setUint32(12, c, true);
  const data = view.data as Float32Array;
  for (let i = 0; i < data.length; i++) {
    dv.setFloat32(16 + 4 * i, data[i], true);
  }
  return out;
}

export function decodeTensor(bytes: Uint8Array): BufferView {
  if (bytes.length < 16 || MAGIC.some((m, i) => bytes[i] !== m)) {
    throw new IoError("FormatError", "not a tensor file");
  }
  const dv = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const h = dv.getUint32(4, true);
  const w = dv.getUint32(8, true);
  const c = dv.getUint32(12, true);
  const count = c * h * w;
  if (bytes.length !== 16 + 4 * count) {
    throw new IoError("FormatError", `expected ${16 + 4 * count} bytes, found ${bytes.length}`);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = dv.getFloat32(16 + 4 * i, true);
  }
  return f32([c, h, w], data);
}

/** Read a single-plane tensor as an (H, W) matrix view. */
export function decodeMatrix(bytes: Uint8Array): BufferView {
  const t = decodeTensor(bytes);
  if (t.shape[0] !== 1) {
    throw new IoError("FormatError", `expected a single-plane tensor, got C=${t.shape[0]}`);
  }
  return f32([t.shape[1], t.shape[2]], t.data as Float32Array);
}
