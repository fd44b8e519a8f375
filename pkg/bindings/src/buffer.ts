/** Contiguous row-major array views shared across the binding boundary. */

import { BoundaryError } from "./errors.js";

export type DType = "float32" | "uint8";

export interface BufferView {
  dtype: DType;
  /** Row-major extent, outermost first. */
  shape: readonly number[];
  data: Float32Array | Uint8Array;
  /** Element strides; when present they must describe the packed row-major layout. */
  strides?: readonly number[];
}

export function product(shape: readonly number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function rowMajorStrides(shape: readonly number[]): number[] {
  const strides = new Array<number>(shape.length);
  let acc = 1;
  for (let i = shape.length - 1; i >= 0; i--) {
    strides[i] = acc;
    acc *= shape[i];
  }
  return strides;
}

/** Validate a view against the boundary contract; never copies or coerces. */
export function checkView(view: BufferView, dtype: DType, rank?: number, label = "buffer"): void {
  if (view.dtype !== dtype) {
    throw new BoundaryError(`${label}: expected dtype ${dtype}, got ${view.dtype}`);
  }
  const ctor = dtype === "float32" ? Float32Array : Uint8Array;
  if (!(view.data instanceof ctor)) {
    throw new BoundaryError(`${label}: payload does not match declared dtype ${dtype}`);
  }
  if (rank !== undefined && view.shape.length !== rank) {
    throw new BoundaryError(`${label}: expected rank ${rank}, got shape [${view.shape}]`);
  }
  if (view.shape.some((d) => !Number.isInteger(d) || d < 0)) {
    throw new BoundaryError(`${label}: bad shape [${view.shape}]`);
  }
  if (product(view.shape) !== view.data.length) {
    throw new BoundaryError(
      `${label}: shape [${view.shape}] implies ${product(view.shape)} elements, payload has ${view.data.length}`,
    );
  }
  if (view.strides !== undefined) {
    const expect = rowMajorStrides(view.shape);
    if (
      view.strides.length !== expect.length ||
      view.strides.some((s, i) => s !== expect[i])
    ) {
      throw new BoundaryError(
        `${label}: non-contiguous strides [${view.strides}]; row-major contiguous layout required`,
      );
    }
  }
}

export function f32(shape: readonly number[], data: Float32Array): BufferView {
  return { dtype: "float32", shape, data };
}

export function u8(shape: readonly number[], data: Uint8Array): BufferView {
  return { dtype: "uint8", shape, data };
}
