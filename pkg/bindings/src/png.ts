/** Minimal 8-bit PNG codec for the toolkit's wire formats.
 *
 * Decodes non-interlaced gray / RGB / palette / RGBA images with any scanline
 * filter; encodes with filter 0. Palette images decode to their raw indices.
 */

import { deflateSync, inflateSync } from "node:zlib";
import { IoError } from "./errors.js";

const SIGNATURE = Uint8Array.from([137, 80, 78, 71, 13, 10, 26, 10]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(...parts: Uint8Array[]): number {
  let c = 0xffffffff;
  for (const part of parts) {
    for (let i = 0; i < part.length; i++) {
      c = CRC_TABLE[(c ^ part[i]) & 0xff] ^ (c >>> 8);
    }
  }
  return (c ^ 0xffffffff) >>> 0;
}

export const enum ColorType {
  Gray = 0,
  Rgb = 2,
  Palette = 3,
  Rgba = 6,
}

const CHANNELS: Record<number, number> = { 0: 1, 2: 3, 3: 1, 6: 4 };

export interface Png {
  width: number;
  height: number;
  colorType: ColorType;
  /** Interleaved samples; palette images carry indices (1 byte per pixel). */
  data: Uint8Array;
  /** RGB triples for palette images. */
  palette?: Uint8Array;
}

function chunk(type: string, body: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + body.length);
  const dv = new DataView(out.buffer);
  dv.setUint32(0, body.length);
  const typeBytes = new TextEncoder().encode(type);
  out.set(typeBytes, 4);
  out.set(body, 8);
  dv.setUint32(8 + body.length, crc32(typeBytes, body));
  return out;
}

export function encodePng(png: Png): Uint8Array {
  const channels = CHANNELS[png.colorType];
  if (channels === undefined) {
    throw new IoError("FormatError", `unsupported color type ${png.colorType}`);
  }
  if (png.data.length !== png.width * png.height * channels) {
    throw new IoError("FormatError", "pixel payload does not match extent");
  }
  const ihdr = new Uint8Array(13);
  const dv = new DataView(ihdr.buffer);
  dv.setUint32(0, png.width);
  dv.setUint32(4, png.height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = png.colorType;

  const stride = png.width * channels;
  const raw = new Uint8Array((stride + 1) * png.height);
  for (let y = 0; y < png.height; y++) {
    raw[y * (stride + 1)] = 0; // filter: none
    raw.set(png.data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }

  const parts = [SIGNATURE, chunk("IHDR", ihdr)];
  if (png.colorType === ColorType.Palette) {
    if (!png.palette) {
      throw new IoError("FormatError", "palette images need palette entries");
    }
    parts.push(chunk("PLTE", png.palette));
  }
  parts.push(chunk("IDAT", new Uint8Array(deflateSync(raw))));
  parts.push(chunk("IEND", new Uint8Array(0)));

  const total = parts.reduce((a, p) => a + p.length, 0);
  const out = new Uint8Array(total);
  let off = 0;
  for (const part of parts) {
    out.set(part, off);
    off += part.length;
  }
  return out;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(bytes: Uint8Array): Png {
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== SIGNATURE[i]) {
      throw new IoError("FormatError", "not a PNG file");
    }
  }
  let width = 0;
  let height = 0;
  let colorType = -1;
  let palette: Uint8Array | undefined;
  const idat: Uint8Array[] = [];

  let off = 8;
  while (off + 8 <= bytes.length) {
    const dv = new DataView(bytes.buffer, bytes.byteOffset + off);
    const len = dv.getUint32(0);
    const type = new TextDecoder().decode(bytes.subarray(off + 4, off + 8));
    const body = bytes.subarray(off + 8, off + 8 + len);
    if (type === "IHDR") {
      const hd = new DataView(bytes.buffer, bytes.byteOffset + off + 8);
      width = hd.getUint32(0);
      height = hd.getUint32(4);
      const bitDepth = body[8];
      colorType = body[9];
      if (bitDepth !== 8) {
        throw new IoError("FormatError", `unsupported bit depth ${bitDepth}`);
      }
      if (!(colorType in CHANNELS)) {
        throw new IoError("FormatError", `unsupported color type ${colorType}`);
      }
      if (body[12] !== 0) {
        throw new IoError("FormatError", "interlaced PNGs are unsupported");
      }
    } else if (type === "PLTE") {
      palette = body.slice();
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    off += 12 + len;
  }
  if (colorType < 0) {
    throw new IoError("FormatError", "missing IHDR");
  }

  const compressed = new Uint8Array(idat.reduce((a, p) => a + p.length, 0));
  let pos = 0;
  for (const part of idat) {
    compressed.set(part, pos);
    pos += part.length;
  }
  const raw = new Uint8Array(inflateSync(compressed));

  const channels = CHANNELS[colorType];
  const stride = width * channels;
  if (raw.length !== (stride + 1) * height) {
    throw new IoError("FormatError", "scanline payload has the wrong size");
  }
  const out = new Uint8Array(stride * height);
  const bpp = channels; // bytes per pixel at depth 8
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const line = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const cur = out.subarray(y * stride, (y + 1) * stride);
    const prev = y > 0 ? out.subarray((y - 1) * stride, y * stride) : null;
    for (let x = 0; x < stride; x++) {
      const a = x >= bpp ? cur[x - bpp] : 0;
      const b = prev ? prev[x] : 0;
      const c = prev && x >= bpp ? prev[x - bpp] : 0;
      let v = line[x];
      switch (filter) {
        case 0:
          break;
        case 1:
          v = (v + a) & 0xff;
          break;
        case 2:
          v = (v + b) & 0xff;
          break;
        case 3:
          v = (v + ((a + b) >> 1)) & 0xff;
          break;
        case 4:
          v = (v + paeth(a, b, c)) & 0xff;
          break;
        default:
          throw new IoError("FormatError", `unknown scanline filter ${filter}`);
      }
      cur[x] = v;
    }
  }
  return { width, height, colorType, data: out, palette };
}
