/** In-process bindings for the warpkit toolkit.
 *
 * Every operation round-trips through the CLI and its file formats, so
 * results are identical to batch runs: masks and 8-bit images bit-exact,
 * float tensors byte-for-byte from the same files.
 */

import { readFile, writeFile } from "node:fs/promises";
import { join } from "node:path";
import { BufferView, checkView, f32, u8 } from "./buffer.js";
import { BoundaryError } from "./errors.js";
import { ColorType, decodePng, encodePng, Png } from "./png.js";
import { runCli, withScratchDir } from "./runner.js";
import { decodeMatrix, decodeTensor, encodeTensor } from "./tensor.js";

export { BufferView, DType, f32, u8 } from "./buffer.js";
export { BindingError, BoundaryError, DataError, IoError, UsageError } from "./errors.js";
export { decodePng, encodePng, Png } from "./png.js";
export { decodeTensor, encodeTensor } from "./tensor.js";

/** Matches the core library version. */
export const version = "0.1.0";

export interface Keypoint {
  name: string;
  x: number;
  y: number;
  score?: number;
}

// Ten-label palette mirroring the toolkit's segmentation PNG convention.
const SEG_PALETTE = Uint8Array.from(
  [
    [0, 0, 0], [255, 0, 0], [255, 170, 0], [255, 255, 0], [0, 255, 0],
    [0, 255, 255], [0, 85, 255], [170, 0, 255], [255, 0, 170], [128, 128, 128],
  ].flat(),
);

function imageToPng(view: BufferView, label: string): Uint8Array {
  checkView(view, "uint8", 3, label);
  const [h, w, c] = view.shape;
  const type =
    c === 1 ? ColorType.Gray : c === 3 ? ColorType.Rgb : c === 4 ? ColorType.Rgba : undefined;
  if (type === undefined) {
    throw new BoundaryError(`${label}: channels must be 1, 3, or 4, got ${c}`);
  }
  return encodePng({ width: w, height: h, colorType: type, data: view.data as Uint8Array });
}

function pngToImage(png: Png): BufferView {
  if (png.colorType === ColorType.Palette) {
    throw new BoundaryError("palette PNGs decode to labels, not images");
  }
  const c = png.colorType === ColorType.Gray ? 1 : png.colorType === ColorType.Rgb ? 3 : 4;
  return u8([png.height, png.width, c], png.data);
}

function maskToPng(view: BufferView, label: string): Uint8Array {
  checkView(view, "uint8", 2, label);
  const data = view.data as Uint8Array;
  const bytes = new Uint8Array(data.length);
  for (let i = 0; i < data.length; i++) {
    if (data[i] > 1) {
      throw new BoundaryError(`${label}: mask values must be 0 or 1`);
    }
    bytes[i] = data[i] ? 255 : 0;
  }
  const [h, w] = view.shape;
  return encodePng({ width: w, height: h, colorType: ColorType.Gray, data: bytes });
}

function pngToMask(png: Png): BufferView {
  const out = new Uint8Array(png.data.length);
  for (let i = 0; i < png.data.length; i++) {
    out[i] = png.data[i] > 127 ? 1 : 0;
  }
  return u8([png.height, png.width], out);
}

function segToPng(view: BufferView, label: string): Uint8Array {
  checkView(view, "uint8", 2, label);
  const data = view.data as Uint8Array;
  for (let i = 0; i < data.length; i++) {
    if (data[i] > 9) {
      throw new BoundaryError(`${label}: segmentation labels must lie in 0..9`);
    }
  }
  const [h, w] = view.shape;
  return encodePng({
    width: w,
    height: h,
    colorType: ColorType.Palette,
    data,
    palette: SEG_PALETTE,
  });
}

function keypointJson(kps: Keypoint[]): string {
  return JSON.stringify({
    keypoints: kps.map((k) => ({ name: k.name, x: k.x, y: k.y, score: k.score ?? 1.0 })),
  });
}

async function readImage(path: string): Promise<BufferView> {
  return pngToImage(decodePng(new Uint8Array(await readFile(path))));
}

async function readMask(path: string): Promise<BufferView> {
  return pngToMask(decodePng(new Uint8Array(await readFile(path))));
}

async function readTensorFile(path: string): Promise<BufferView> {
  return decodeTensor(new Uint8Array(await readFile(path)));
}

async function readMatrixFile(path: string): Promise<BufferView> {
  return decodeMatrix(new Uint8Array(await readFile(path)));
}

export interface WarpDenseOptions {
  atlasRes?: number;
  holeFill?: number;
  visThreshold?: number;
}

/** Repose source pixels through dense UV correspondences. Images and pose
 * maps are uint8 (H, W, 3); pose maps use the IUV byte encoding. */
export async function warpDense(
  src: BufferView,
  srcPose: BufferView,
  tgtPose: BufferView,
  opts: WarpDenseOptions = {},
): Promise<{ tex: BufferView; vis: BufferView }> {
  const srcPng = imageToPng(src, "src");
  const srcPosePng = imageToPng(srcPose, "srcPose");
  const tgtPosePng = imageToPng(tgtPose, "tgtPose");
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "src.png"), srcPng);
    await writeFile(join(dir, "src_pose.png"), srcPosePng);
    await writeFile(join(dir, "tgt_pose.png"), tgtPosePng);
    const args = [
      "warp-dense",
      "--src", join(dir, "src.png"),
      "--src-pose", join(dir, "src_pose.png"),
      "--tgt-pose", join(dir, "tgt_pose.png"),
      "--tex-out", join(dir, "tex.png"),
      "--mask-out", join(dir, "vis.png"),
    ];
    if (opts.atlasRes !== undefined) args.push("--atlas-res", String(opts.atlasRes));
    if (opts.holeFill !== undefined) args.push("--hole-fill", String(opts.holeFill));
    if (opts.visThreshold !== undefined) args.push("--vis-threshold", String(opts.visThreshold));
    await runCli(args);
    return {
      tex: await readImage(join(dir, "tex.png")),
      vis: await readMask(join(dir, "vis.png")),
    };
  });
}

/** Scatter a source into its per-part UV atlas; returns a float32 tensor of
 * shape (4, 24*R, R): three color planes plus the fill-weight plane, parts
 * stacked along the height axis. */
export async function buildUvAtlas(
  src: BufferView,
  srcPose: BufferView,
  opts: { atlasRes?: number; holeFill?: number } = {},
): Promise<BufferView> {
  const srcPng = imageToPng(src, "src");
  const posePng = imageToPng(srcPose, "srcPose");
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "src.png"), srcPng);
    await writeFile(join(dir, "pose.png"), posePng);
    const args = [
      "warp-dense",
      "--src", join(dir, "src.png"),
      "--src-pose", join(dir, "pose.png"),
      "--tgt-pose", join(dir, "pose.png"),
      "--tex-out", join(dir, "tex.png"),
      "--mask-out", join(dir, "vis.png"),
      "--atlas-out", join(dir, "atlas.cstk"),
      "--hole-fill", String(opts.holeFill ?? 0),
    ];
    if (opts.atlasRes !== undefined) args.push("--atlas-res", String(opts.atlasRes));
    await runCli(args);
    return readTensorFile(join(dir, "atlas.cstk"));
  });
}

export interface WarpGarmentOptions {
  outWidth?: number;
  outHeight?: number;
  confidenceFloor?: number;
}

/** Perspective-warp a canonical garment onto the body via named landmarks. */
export async function warpGarment(
  garment: BufferView,
  garmentMask: BufferView,
  garmentLandmarks: Keypoint[],
  bodyKps: Keypoint[],
  opts: WarpGarmentOptions = {},
): Promise<{ tex: BufferView; vis: BufferView }> {
  const garmentPng = imageToPng(garment, "garment");
  const maskPng = maskToPng(garmentMask, "garmentMask");
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "garment.png"), garmentPng);
    await writeFile(join(dir, "mask.png"), maskPng);
    await writeFile(join(dir, "landmarks.json"), keypointJson(garmentLandmarks));
    await writeFile(join(dir, "body.json"), keypointJson(bodyKps));
    const args = [
      "warp-sparse",
      "--garment", join(dir, "garment.png"),
      "--garment-mask", join(dir, "mask.png"),
      "--garment-landmarks", join(dir, "landmarks.json"),
      "--body-kps", join(dir, "body.json"),
      "--tex-out", join(dir, "tex.png"),
      "--mask-out", join(dir, "vis.png"),
    ];
    if (opts.outWidth !== undefined) args.push("--out-width", String(opts.outWidth));
    if (opts.outHeight !== undefined) args.push("--out-height", String(opts.outHeight));
    if (opts.confidenceFloor !== undefined) {
      args.push("--confidence-floor", String(opts.confidenceFloor));
    }
    await runCli(args);
    return {
      tex: await readImage(join(dir, "tex.png")),
      vis: await readMask(join(dir, "vis.png")),
    };
  });
}

/** Estimate the least-squares homography between matched point lists.
 * Returns the 3x3 matrix as 9 row-major numbers. */
export async function estimateHomography(
  srcPts: ReadonlyArray<readonly [number, number]>,
  dstPts: ReadonlyArray<readonly [number, number]>,
): Promise<number[]> {
  if (srcPts.length !== dstPts.length) {
    throw new BoundaryError("point lists must have equal length");
  }
  // The estimator is reached through warp-sparse; a 2x2 stand-in garment
  // satisfies the image inputs without affecting the estimate.
  const stub = encodePng({
    width: 2,
    height: 2,
    colorType: ColorType.Gray,
    data: Uint8Array.from([255, 255, 255, 255]),
  });
  const names = srcPts.map((_, i) => `p${i}`);
  const srcKps = names.map((name, i) => ({ name, x: srcPts[i][0], y: srcPts[i][1] }));
  const dstKps = names.map((name, i) => ({ name, x: dstPts[i][0], y: dstPts[i][1] }));
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "stub.png"), stub);
    await writeFile(join(dir, "src.json"), keypointJson(srcKps));
    await writeFile(join(dir, "dst.json"), keypointJson(dstKps));
    await runCli([
      "warp-sparse",
      "--garment", join(dir, "stub.png"),
      "--garment-mask", join(dir, "stub.png"),
      "--garment-landmarks", join(dir, "src.json"),
      "--body-kps", join(dir, "dst.json"),
      "--tex-out", join(dir, "tex.png"),
      "--mask-out", join(dir, "vis.png"),
      "--homography-out", join(dir, "h.json"),
    ]);
    return JSON.parse(await readFile(join(dir, "h.json"), "utf8")) as number[];
  });
}

/** Zero out the union of the source- and target-pose bounding boxes. */
export async function extractBackground(
  img: BufferView,
  srcKps: Keypoint[],
  tgtKps: Keypoint[] = [],
  opts: { margin?: number; confidenceFloor?: number } = {},
): Promise<BufferView> {
  const imgPng = imageToPng(img, "img");
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "img.png"), imgPng);
    await writeFile(join(dir, "src.json"), keypointJson(srcKps));
    const args = [
      "bg-extract",
      "--image", join(dir, "img.png"),
      "--src-kps", join(dir, "src.json"),
      "--out", join(dir, "bg.png"),
    ];
    if (tgtKps.length > 0) {
      await writeFile(join(dir, "tgt.json"), keypointJson(tgtKps));
      args.push("--tgt-kps", join(dir, "tgt.json"));
    }
    if (opts.margin !== undefined) args.push("--margin", String(opts.margin));
    if (opts.confidenceFloor !== undefined) {
      args.push("--confidence-floor", String(opts.confidenceFloor));
    }
    await runCli(args);
    return readImage(join(dir, "bg.png"));
  });
}

/** Stack [texture; pose; background] float planes into the (9, H, W) tensor.
 * Inputs are float32 (3, H, W) views in [0, 1]; tex=null packs zero planes. */
export async function packCondition(
  tex: BufferView | null,
  poseImg: BufferView,
  bg: BufferView,
): Promise<BufferView> {
  checkView(poseImg, "float32", 3, "poseImg");
  checkView(bg, "float32", 3, "bg");
  if (tex !== null) checkView(tex, "float32", 3, "tex");
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "pose.cstk"), encodeTensor(poseImg));
    await writeFile(join(dir, "bg.cstk"), encodeTensor(bg));
    const args = [
      "pack", "--float-io",
      "--pose-img", join(dir, "pose.cstk"),
      "--bg", join(dir, "bg.cstk"),
      "--out", join(dir, "stack.cstk"),
    ];
    if (tex === null) {
      args.push("--zero-tex");
    } else {
      await writeFile(join(dir, "tex.cstk"), encodeTensor(tex));
      args.push("--tex", join(dir, "tex.cstk"));
    }
    await runCli(args);
    return readTensorFile(join(dir, "stack.cstk"));
  });
}

/** Replace masked garment pixels with a flat fill (default neutral gray). */
export async function removeGarment(
  img: BufferView,
  mask: BufferView,
  opts: { fill?: number } = {},
): Promise<BufferView> {
  const imgPng = imageToPng(img, "img");
  const maskPng = maskToPng(mask, "mask");
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "img.png"), imgPng);
    await writeFile(join(dir, "mask.png"), maskPng);
    const args = [
      "remove-garment",
      "--image", join(dir, "img.png"),
      "--mask", join(dir, "mask.png"),
      "--out", join(dir, "out.png"),
    ];
    if (opts.fill !== undefined) args.push("--fill", String(opts.fill));
    await runCli(args);
    return readImage(join(dir, "out.png"));
  });
}

/** Scramble part orientations, deterministically in the seed. `seg` is a
 * uint8 (H, W) label grid with ids 0..9. */
export async function augmentParts(
  img: BufferView,
  seg: BufferView,
  seed: number,
  opts: { jitterDeg?: number } = {},
): Promise<BufferView> {
  const imgPng = imageToPng(img, "img");
  const segPng = segToPng(seg, "seg");
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "img.png"), imgPng);
    await writeFile(join(dir, "seg.png"), segPng);
    const args = [
      "augment",
      "--image", join(dir, "img.png"),
      "--seg", join(dir, "seg.png"),
      "--seed", String(seed),
      "--out", join(dir, "out.png"),
    ];
    if (opts.jitterDeg !== undefined) args.push("--jitter-deg", String(opts.jitterDeg));
    await runCli(args);
    return readImage(join(dir, "out.png"));
  });
}

/** Row-softmax attention over float32 matrices: returns output and map. */
export async function crossAttention(
  q: BufferView,
  k: BufferView,
  v: BufferView,
  opts: { scale?: number } = {},
): Promise<{ output: BufferView; map: BufferView }> {
  checkView(q, "float32", 2, "q");
  checkView(k, "float32", 2, "k");
  checkView(v, "float32", 2, "v");
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "q.cstk"), encodeTensor(q));
    await writeFile(join(dir, "k.cstk"), encodeTensor(k));
    await writeFile(join(dir, "v.cstk"), encodeTensor(v));
    const args = [
      "attn",
      "--q", join(dir, "q.cstk"),
      "--k", join(dir, "k.cstk"),
      "--v", join(dir, "v.cstk"),
      "--out", join(dir, "out.cstk"),
      "--map-out", join(dir, "map.cstk"),
    ];
    if (opts.scale !== undefined) args.push("--scale", String(opts.scale));
    await runCli(args);
    return {
      output: await readMatrixFile(join(dir, "out.cstk")),
      map: await readMatrixFile(join(dir, "map.cstk")),
    };
  });
}

export interface LossBreakdown {
  l_sd: number;
  l_b: number;
  l_e: number;
  total: number;
  lambda1: number;
  lambda2: number;
}

interface LossCall {
  attn?: BufferView;
  mask?: BufferView;
  gradOut?: boolean;
  eps?: BufferView;
  epsHat?: BufferView;
  lsd?: number;
  lb?: number;
  le?: number;
  regionNormalized?: boolean;
  lambda1?: number;
  lambda2?: number;
}

async function runLoss(call: LossCall): Promise<{ breakdown: LossBreakdown; grad?: BufferView }> {
  return withScratchDir(async (dir) => {
    const args = ["loss"];
    if (call.attn && call.mask) {
      checkView(call.attn, "float32", 2, "attn");
      await writeFile(join(dir, "attn.cstk"), encodeTensor(call.attn));
      await writeFile(join(dir, "mask.png"), maskToPng(call.mask, "mask"));
      args.push("--attn", join(dir, "attn.cstk"), "--mask", join(dir, "mask.png"));
    }
    if (call.gradOut) args.push("--grad-out", join(dir, "grad.cstk"));
    if (call.eps && call.epsHat) {
      checkView(call.eps, "float32", undefined, "eps");
      checkView(call.epsHat, "float32", undefined, "epsHat");
      await writeFile(join(dir, "eps.cstk"), encodeTensor(call.eps));
      await writeFile(join(dir, "eps_hat.cstk"), encodeTensor(call.epsHat));
      args.push("--eps", join(dir, "eps.cstk"), "--eps-hat", join(dir, "eps_hat.cstk"));
    }
    if (call.lsd !== undefined) args.push("--lsd", String(call.lsd));
    if (call.lb !== undefined) args.push("--lb", String(call.lb));
    if (call.le !== undefined) args.push("--le", String(call.le));
    if (call.lambda1 !== undefined) args.push("--lambda1", String(call.lambda1));
    if (call.lambda2 !== undefined) args.push("--lambda2", String(call.lambda2));
    if (call.regionNormalized === false) args.push("--no-region-normalized");
    const { stdout } = await runCli(args);
    const breakdown = JSON.parse(stdout) as LossBreakdown;
    if (call.gradOut) {
      return { breakdown, grad: await readMatrixFile(join(dir, "grad.cstk")) };
    }
    return { breakdown };
  });
}

/** Attention-localization penalty for one (map, mask) pair. */
export async function localizationLoss(
  attn: BufferView,
  mask: BufferView,
  opts: { regionNormalized?: boolean } = {},
): Promise<number> {
  const { breakdown } = await runLoss({ attn, mask, ...opts });
  return breakdown.l_e;
}

/** Analytic gradient of the localization penalty, same extent as the map. */
export async function localizationLossGrad(
  attn: BufferView,
  mask: BufferView,
  opts: { regionNormalized?: boolean } = {},
): Promise<BufferView> {
  const { grad } = await runLoss({ attn, mask, gradOut: true, ...opts });
  return grad!;
}

/** Mean squared difference between noise tensors. */
export async function noiseMse(eps: BufferView, epsHat: BufferView): Promise<number> {
  const { breakdown } = await runLoss({ eps, epsHat });
  return breakdown.l_sd;
}

/** Combine the loss terms: l_sd + lambda1*l_b + lambda2*l_e. */
export async function totalLoss(
  lSd: number,
  lB: number,
  lE: number,
  opts: { lambda1?: number; lambda2?: number } = {},
): Promise<LossBreakdown> {
  const { breakdown } = await runLoss({ lsd: lSd, lb: lB, le: lE, ...opts });
  return breakdown;
}

export interface CurationThresholds {
  minResolution?: number;
  personScore?: number;
  faceScore?: number;
  minKeypoints?: number;
  keypointScore?: number;
  maxOcclusion?: number;
  minClothing?: number;
  minClip?: number;
}

export interface RecordVerdict {
  accepted: boolean;
  failReasons: string[];
}

/** Apply the seven curation criteria to one annotation record. */
export async function evaluateRecord(
  record: object,
  thresholds: CurationThresholds = {},
): Promise<RecordVerdict> {
  return withScratchDir(async (dir) => {
    await writeFile(join(dir, "in.jsonl"), JSON.stringify(record) + "\n");
    const args = [
      "curate",
      "--input", join(dir, "in.jsonl"),
      "--output", join(dir, "out.jsonl"),
      "--stats", join(dir, "stats.json"),
    ];
    const flags: Record<keyof CurationThresholds, string> = {
      minResolution: "--min-resolution",
      personScore: "--person-score",
      faceScore: "--face-score",
      minKeypoints: "--min-keypoints",
      keypointScore: "--keypoint-score",
      maxOcclusion: "--max-occlusion",
      minClothing: "--min-clothing",
      minClip: "--min-clip",
    };
    for (const [key, flag] of Object.entries(flags) as [keyof CurationThresholds, string][]) {
      const value = thresholds[key];
      if (value !== undefined) args.push(flag, String(value));
    }
    await runCli(args);
    const stats = JSON.parse(await readFile(join(dir, "stats.json"), "utf8"));
    return {
      accepted: stats.accepted === 1,
      failReasons: Object.keys(stats.fail_counts ?? {}),
    };
  });
}
