/** Shared test helpers: deterministic PRNG and fixture views. */

import { execFile } from "node:child_process";
import { promisify } from "node:util";
import { BufferView, f32, u8 } from "../src/buffer.js";

export const execFileAsync = promisify(execFile);

/** mulberry32: small deterministic PRNG for fixture data. */
export function prng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomImage(seed: number, h: number, w: number, c = 3): BufferView {
  const rand = prng(seed);
  const data = new Uint8Array(h * w * c);
  for (let i = 0; i < data.length; i++) {
    data[i] = Math.floor(rand() * 256);
  }
  return u8([h, w, c], data);
}

export function randomMatrix(seed: number, rows: number, cols: number): BufferView {
  const rand = prng(seed);
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    data[i] = Math.fround(rand() * 2 - 1);
  }
  return f32([rows, cols], data);
}

/** An IUV pose map where every pixel belongs to one part with a UV ramp. */
export function rampPose(h: number, w: number, part = 1): BufferView {
  const data = new Uint8Array(h * w * 3);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      const i = (y * w + x) * 3;
      data[i] = part;
      data[i + 1] = Math.round((x / (w - 1)) * 255);
      data[i + 2] = Math.round((y / (h - 1)) * 255);
    }
  }
  return u8([h, w, 3], data);
}

export function goodRecord(overrides: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    id: "r0",
    width: 640,
    height: 800,
    person_boxes: [[100, 50, 300, 700, 0.95]],
    face_boxes: [[220, 60, 80, 90, 0.9]],
    keypoints: Array.from({ length: 10 }, (_, i) => ({
      name: `j${i}`,
      x: 200 + i,
      y: 100 + 40 * i,
      score: 0.8,
    })),
    person_mask_area: 120000,
    other_instance_overlap_area: 1000,
    clothing_pixel_area: 60000,
    caption: "a person standing outdoors",
    clip_similarity: 0.31,
    ...overrides,
  };
}

export function expectBytesEqual(a: Uint8Array | Float32Array, b: Uint8Array | Float32Array) {
  if (a.length !== b.length) {
    throw new Error(`length mismatch: ${a.length} vs ${b.length}`);
  }
  for (let i = 0; i < a.length; i++) {
    if (!Object.is(a[i], b[i]) && a[i] !== b[i]) {
      throw new Error(`payload differs at index ${i}: ${a[i]} vs ${b[i]}`);
    }
  }
}
