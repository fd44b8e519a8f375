"""Batch command-line front end.

Exit codes: 0 success, 2 argument errors, 3 data errors (shape mismatches,
degenerate geometry, bad records), 4 I/O and file-format errors. With
``--json-errors`` failures are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import attention, conditioning, curation, dense_warp, io, sparse_warp
from .errors import CoreError, FormatError
from .imaging import Image, KeypointSet

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--json-errors", action="store_true",
        help="report failures as a JSON object on stderr",
    )

    parser = argparse.ArgumentParser(
        prog="warpkit",
        description="Pose-guided texture warping, conditioning assembly, losses, and curation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("warp-dense", parents=[common],
                       help="repose source pixels through dense UV correspondences")
    p.add_argument("--src", required=True)
    p.add_argument("--src-pose", required=True)
    p.add_argument("--tgt-pose", required=True)
    p.add_argument("--tex-out", required=True)
    p.add_argument("--mask-out", required=True)
    p.add_argument("--atlas-res", type=int, default=dense_warp.DEFAULT_ATLAS_RES)
    p.add_argument("--hole-fill", type=int, default=dense_warp.DEFAULT_HOLE_FILL_ITERS)
    p.add_argument("--vis-threshold", type=float, default=dense_warp.DEFAULT_VIS_THRESHOLD)
    p.add_argument("--atlas-out", help="also dump the filled atlas as a (4, P*R, R) tensor")

    p = sub.add_parser("warp-sparse", parents=[common],
                       help="warp a canonical garment onto the torso via matched keypoints")
    p.add_argument("--garment", required=True)
    p.add_argument("--garment-mask", required=True)
    p.add_argument("--garment-landmarks", required=True)
    p.add_argument("--body-kps", required=True)
    p.add_argument("--tex-out", required=True)
    p.add_argument("--mask-out", required=True)
    p.add_argument("--out-width", type=int)
    p.add_argument("--out-height", type=int)
    p.add_argument("--confidence-floor", type=float, default=sparse_warp.DEFAULT_CONFIDENCE_FLOOR)
    p.add_argument("--homography-out", help="dump the estimated 3x3 as a row-major JSON array")

    p = sub.add_parser("bg-extract", parents=[common],
                       help="zero out source and target pose regions")
    p.add_argument("--image", required=True)
    p.add_argument("--src-kps", required=True)
    p.add_argument("--tgt-kps")
    p.add_argument("--out", required=True)
    p.add_argument("--margin", type=float, default=conditioning.DEFAULT_BOX_MARGIN)
    p.add_argument("--confidence-floor", type=float, default=conditioning.DEFAULT_KP_FLOOR)

    p = sub.add_parser("render-pose", parents=[common],
                       help="raster a pose: IUV map passthrough or an 18-joint skeleton")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--kps")
    src.add_argument("--pose")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--confidence-floor", type=float, default=conditioning.DEFAULT_KP_FLOOR)
    p.add_argument("--thickness", type=float, default=3.0)

    p = sub.add_parser("pack", parents=[common],
                       help="assemble the 9-channel conditioning stack")
    p.add_argument("--tex", help="texture input; omit with --zero-tex for full edits")
    p.add_argument("--zero-tex", action="store_true")
    p.add_argument("--pose-img", required=True)
    p.add_argument("--bg", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--float-io", action="store_true",
                   help="read inputs as raw float tensors instead of 8-bit PNGs")

    p = sub.add_parser("remove-garment", parents=[common],
                       help="replace masked garment pixels with a flat fill")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fill", type=float, default=conditioning.GARMENT_FILL)

    p = sub.add_parser("augment", parents=[common],
                       help="scramble part orientations, deterministically in --seed")
    p.add_argument("--image", required=True)
    p.add_argument("--seg", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jitter-deg", type=float, default=conditioning.DEFAULT_JITTER_DEG)

    p = sub.add_parser("attn", parents=[common],
                       help="cross-attention over tensor files")
    p.add_argument("--q", required=True)
    p.add_argument("--k", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--map-out", required=True)
    p.add_argument("--scale", type=float, default=None,
                   help="logit scale; default 1/sqrt(d), use 1.0 for the raw product")

    p = sub.add_parser("loss", parents=[common],
                       help="loss breakdown from attention maps, masks, and noise tensors")
    p.add_argument("--attn", help="attention map tensor for the warped-texture term")
    p.add_argument("--mask", help="visibility mask PNG for the warped-texture term")
    p.add_argument("--q")
    p.add_argument("--k")
    p.add_argument("--v")
    p.add_argument("--scale", type=float, default=None,
                   help="attention scale when the map is computed from --q/--k/--v")
    p.add_argument("--part-attn", action="append", default=[],
                   help="attention map for one part term (repeatable)")
    p.add_argument("--part-mask", action="append", default=[],
                   help="segmentation mask paired with --part-attn (repeatable)")
    p.add_argument("--eps", help="ground-truth noise tensor")
    p.add_argument("--eps-hat", help="predicted noise tensor")
    p.add_argument("--lsd", type=float, help="override the denoising term")
    p.add_argument("--lb", type=float, help="override the part term")
    p.add_argument("--le", type=float, help="override the warped-texture term")
    p.add_argument("--grad-out", help="write the gradient of the warped-texture term")
    p.add_argument("--lambda1", type=float, default=attention.DEFAULT_LAMBDA1)
    p.add_argument("--lambda2", type=float, default=attention.DEFAULT_LAMBDA2)
    p.add_argument("--region-normalized", action=argparse.BooleanOptionalAction, default=True)

    p = sub.add_parser("curate", parents=[common],
                       help="filter a JSONL manifest of annotation records")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--stats", help="write stats JSON here instead of stdout")
    p.add_argument("--min-resolution", type=int, default=512)
    p.add_argument("--person-score", type=float, default=0.5)
    p.add_argument("--face-score", type=float, default=0.5)
    p.add_argument("--min-keypoints", type=int, default=8)
    p.add_argument("--keypoint-score", type=float, default=0.3)
    p.add_argument("--max-occlusion", type=float, default=0.05)
    p.add_argument("--min-clothing", type=float, default=0.1)
    p.add_argument("--min-clip", type=float, default=0.2)

    return parser


def _cmd_warp_dense(args) -> int:
    src = io.load_image(args.src)
    src_pose = io.load_densepose(args.src_pose)
    tgt_pose = io.load_densepose(args.tgt_pose)
    atlas = dense_warp.build_uv_atlas(src, src_pose, args.atlas_res)
    atlas = dense_warp.fill_atlas_holes(atlas, args.hole_fill)
    tex, vis = dense_warp.warp_dense(atlas, tgt_pose, args.vis_threshold)
    io.save_image(args.tex_out, tex)
    io.save_mask(args.mask_out, vis)
    if args.atlas_out:
        p, r = atlas.part_count, atlas.resolution
        stacked = np.concatenate(
            [np.moveaxis(atlas.colors, 3, 1), atlas.weights[:, None, :, :]], axis=1
        )  # (P, 4, R, R)
        io.write_tensor(args.atlas_out, np.moveaxis(stacked, 1, 0).reshape(4, p * r, r))
    return EXIT_OK


def _cmd_warp_sparse(args) -> int:
    garment = io.load_image(args.garment)
    mask = io.load_mask(args.garment_mask)
    landmarks = io.load_keypoints(args.garment_landmarks)
    body = io.load_keypoints(args.body_kps)
    out_w = args.out_width or garment.width
    out_h = args.out_height or garment.height
    tex, vis = sparse_warp.warp_garment(
        garment, mask, landmarks, body, out_w, out_h, args.confidence_floor
    )
    io.save_image(args.tex_out, tex)
    io.save_mask(args.mask_out, vis)
    if args.homography_out:
        src, dst, _ = sparse_warp.match_landmarks(landmarks, body, args.confidence_floor)
        h = sparse_warp.estimate_homography(src, dst)
        with open(args.homography_out, "w") as f:
            json.dump([float(v) for v in h.matrix.ravel()], f)
            f.write("\n")
    return EXIT_OK


def _cmd_bg_extract(args) -> int:
    img = io.load_image(args.image)
    src_kps = io.load_keypoints(args.src_kps)
    tgt_kps = io.load_keypoints(args.tgt_kps) if args.tgt_kps else None
    bg = conditioning.extract_background(
        img, src_kps, tgt_kps or KeypointSet([]), args.margin, args.confidence_floor
    )
    io.save_image(args.out, bg)
    return EXIT_OK


def _cmd_render_pose(args) -> int:
    if args.pose:
        if args.width or args.height:
            print("--width/--height apply only to the keypoint variant", file=sys.stderr)
            return EXIT_USAGE
        img = conditioning.render_pose_map(io.load_densepose(args.pose))
    else:
        if not (args.width and args.height):
            print("render-pose --kps requires --width and --height", file=sys.stderr)
            return EXIT_USAGE
        img = conditioning.render_pose_keypoints(
            io.load_keypoints(args.kps), args.width, args.height,
            args.confidence_floor, args.thickness,
        )
    io.save_image(args.out, img)
    return EXIT_OK


def _load_plane_image(path: str, float_io: bool) -> Image:
    if float_io:
        arr = io.read_tensor(path)
        if arr.shape[0] != 3:
            raise FormatError(f"{path}: float image tensors must have C=3")
        return Image(np.moveaxis(arr, 0, 2))
    return io.load_image(path)


def _cmd_pack(args) -> int:
    if bool(args.tex) == args.zero_tex:
        print("pack needs exactly one of --tex or --zero-tex", file=sys.stderr)
        return EXIT_USAGE
    pose_img = _load_plane_image(args.pose_img, args.float_io)
    bg = _load_plane_image(args.bg, args.float_io)
    tex = None if args.zero_tex else _load_plane_image(args.tex, args.float_io)
    stack = conditioning.pack_condition(tex, pose_img, bg)
    io.write_tensor(args.out, stack.data)
    return EXIT_OK


def _cmd_remove_garment(args) -> int:
    img = io.load_image(args.image)
    mask = io.load_mask(args.mask)
    io.save_image(args.out, conditioning.remove_garment(img, mask, args.fill))
    return EXIT_OK


def _cmd_augment(args) -> int:
    img = io.load_image(args.image)
    seg = conditioning.PartSegmentation(io.load_segmentation(args.seg))
    out = conditioning.augment_parts(img, seg, args.seed, args.jitter_deg)
    io.save_image(args.out, out)
    return EXIT_OK


def _cmd_attn(args) -> int:
    q = io.read_matrix(args.q)
    k = io.read_matrix(args.k)
    v = io.read_matrix(args.v)
    out, attn_map = attention.cross_attention(q, k, v, args.scale)
    io.write_tensor(args.out, out.astype(np.float32))
    io.write_tensor(args.map_out, attn_map.astype(np.float32))
    return EXIT_OK


def _cmd_loss(args) -> int:
    if len(args.part_attn) != len(args.part_mask):
        print("--part-attn and --part-mask must be paired", file=sys.stderr)
        return EXIT_USAGE

    attn_map = None
    if args.attn:
        attn_map = io.read_matrix(args.attn)
    elif args.q and args.k and args.v:
        _, attn_map = attention.cross_attention(
            io.read_matrix(args.q), io.read_matrix(args.k), io.read_matrix(args.v), args.scale
        )

    l_e = args.le if args.le is not None else 0.0
    mask_arr = None
    if attn_map is not None and args.mask:
        if args.le is not None:
            print("--le conflicts with --attn/--mask inputs", file=sys.stderr)
            return EXIT_USAGE
        mask_arr = io.load_mask(args.mask).data
        l_e = attention.localization_loss(attn_map, mask_arr, args.region_normalized)

    l_b = args.lb if args.lb is not None else 0.0
    if args.part_attn:
        if args.lb is not None:
            print("--lb conflicts with --part-attn/--part-mask inputs", file=sys.stderr)
            return EXIT_USAGE
        l_b = sum(
            attention.localization_loss(
                io.read_matrix(a), io.load_mask(m).data, args.region_normalized
            )
            for a, m in zip(args.part_attn, args.part_mask)
        )

    l_sd = args.lsd if args.lsd is not None else 0.0
    if args.eps and args.eps_hat:
        if args.lsd is not None:
            print("--lsd conflicts with --eps/--eps-hat inputs", file=sys.stderr)
            return EXIT_USAGE
        l_sd = attention.noise_mse(io.read_tensor(args.eps), io.read_tensor(args.eps_hat))

    if args.grad_out:
        if attn_map is None or mask_arr is None:
            print("--grad-out needs --attn/--mask (or --q/--k/--v with --mask)", file=sys.stderr)
            return EXIT_USAGE
        grad = attention.localization_loss_grad(attn_map, mask_arr, args.region_normalized)
        io.write_tensor(args.grad_out, grad.astype(np.float32))

    breakdown = attention.total_loss(l_sd, l_b, l_e, args.lambda1, args.lambda2)
    json.dump(breakdown.to_dict(), sys.stdout)
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_curate(args) -> int:
    cfg = curation.CurationConfig(
        min_resolution=args.min_resolution,
        person_score=args.person_score,
        face_score=args.face_score,
        min_keypoints=args.min_keypoints,
        keypoint_score=args.keypoint_score,
        max_occlusion=args.max_occlusion,
        min_clothing=args.min_clothing,
        min_clip=args.min_clip,
    )
    stats = curation.CurationStats()
    with open(args.input, "r") as fin, open(args.output, "w") as fout:
        for line in curation.curate_stream(fin, cfg, stats):
            fout.write(line + "\n")
    payload = json.dumps(stats.to_dict(), indent=2) + "\n"
    if args.stats:
        with open(args.stats, "w") as f:
            f.write(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


_COMMANDS = {
    "warp-dense": _cmd_warp_dense,
    "warp-sparse": _cmd_warp_sparse,
    "bg-extract": _cmd_bg_extract,
    "render-pose": _cmd_render_pose,
    "pack": _cmd_pack,
    "remove-garment": _cmd_remove_garment,
    "augment": _cmd_augment,
    "attn": _cmd_attn,
    "loss": _cmd_loss,
    "curate": _cmd_curate,
}


def _report(exc: Exception, code: str, json_errors: bool) -> None:
    if json_errors:
        print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
    else:
        print(f"warpkit: {code}: {exc}", file=sys.stderr)


def run_cli(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FormatError as exc:
        _report(exc, exc.code, args.json_errors)
        return EXIT_IO
    except CoreError as exc:
        _report(exc, exc.code, args.json_errors)
        return EXIT_DATA
    except OSError as exc:
        _report(exc, "IOError", args.json_errors)
        return EXIT_IO
    except ValueError as exc:
        _report(exc, "ValueError", args.json_errors)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())
