"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them live).
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest

from warpkit import io
from warpkit.attention import (
    cross_attention,
    localization_loss,
    localization_loss_grad,
    total_loss,
)
from warpkit.cli import run_cli
from warpkit.curation import CurationConfig, curate_manifest
from warpkit.dense_warp import build_uv_atlas, fill_atlas_holes, warp_dense
from warpkit.imaging import Image, KeypointSet, Mask
from warpkit.sparse_warp import Homography, estimate_homography

from fixtures import (
    mask_pose,
    random_identity_fixture,
    roundtrip_pose_pair,
    smooth_image,
    torso_keypoints,
)
from test_attention import fd_grad
from test_cli import garment_files
from test_curation import golden_fixture, tighten
from test_sparse_warp import UNIT_SQUARE, up_to_scale_diff


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def test_identity_dense_warp():
    with criterion("identity dense warp (10 fixtures, 256^2, R=128)"):
        for trial in range(10):
            rng = np.random.default_rng(1000 + trial)
            img, pose = random_identity_fixture(rng, size=256, atlas_res=128)
            start = time.perf_counter()
            atlas = build_uv_atlas(img, pose, 128)
            tex, vis = warp_dense(atlas, pose)
            elapsed = time.perf_counter() - start
            fg = pose.parts > 0
            on = vis.data == 1
            assert on.sum() >= 0.99 * fg.sum(), f"trial {trial}: coverage too low"
            err = np.abs(tex.data[on] - img.data[on]).max()
            assert err <= 2 / 255, f"trial {trial}: max error {err}"
            assert elapsed < 1.0, f"trial {trial}: took {elapsed:.3f}s"


def test_dense_round_trip_psnr():
    with criterion("dense round-trip PSNR >= 30 dB"):
        psnrs = []
        for trial in range(5):
            rng = np.random.default_rng(2000 + trial)
            img = smooth_image(rng, 256)
            pose_a, pose_b = roundtrip_pose_pair(rng, size=256)
            atlas_ab = fill_atlas_holes(build_uv_atlas(img, pose_a, 128), 2)
            tex_b, vis_b = warp_dense(atlas_ab, pose_b)
            atlas_ba = fill_atlas_holes(
                build_uv_atlas(tex_b, mask_pose(pose_b, vis_b), 128), 2
            )
            tex_a, vis_a = warp_dense(atlas_ba, pose_a)
            both = (vis_a.data == 1) & (pose_a.parts > 0)
            assert both.any()
            mse = float(np.mean((tex_a.data[both] - img.data[both]) ** 2))
            psnr = 10 * np.log10(1.0 / mse) if mse > 0 else np.inf
            psnrs.append(psnr)
            assert psnr >= 30.0, f"trial {trial}: PSNR {psnr:.2f} dB"


def test_homography_recovery():
    with criterion("homography recovery (noiseless 1e-9; noisy RMSE <= 1px over 100 trials)"):
        # Noiseless 4-point.
        h_gt4 = np.array([[2.0, 0.0, 1.0], [0.0, 1.0, 2.0], [0.0, 0.0, 1.0]])
        dst4 = Homography(h_gt4).apply(UNIT_SQUARE)
        h4 = estimate_homography(UNIT_SQUARE, dst4)
        assert up_to_scale_diff(h4.matrix, h_gt4) <= 1e-9

        # Noiseless 8-point.
        src8 = np.array(
            [[0, 0], [200, 0], [0, 260], [200, 260], [100, 0], [0, 130], [200, 130], [100, 260]],
            dtype=np.float64,
        )
        h_gt8 = np.array([[1.1, 0.05, 20.0], [-0.03, 0.95, 40.0], [1e-4, 5e-5, 1.0]])
        dst8 = Homography(h_gt8).apply(src8)
        h8 = estimate_homography(src8, dst8)
        assert up_to_scale_diff(h8.matrix / h8.matrix[2, 2], h_gt8) <= 1e-9

        # 0.5 px Gaussian noise, 100 seeded trials.
        clean = Homography(h_gt8).apply(src8)
        for seed in range(100):
            rng = np.random.default_rng(3000 + seed)
            noisy = clean + rng.normal(0.0, 0.5, clean.shape)
            h = estimate_homography(src8, noisy)
            rmse = np.sqrt(np.mean(np.sum((h.apply(src8) - clean) ** 2, axis=1)))
            assert rmse <= 1.0, f"seed {seed}: RMSE {rmse:.3f}px"


def test_localization_loss_suite():
    with criterion("localization loss suite (values, 50-pair FD gradient, additivity)"):
        rng = np.random.default_rng(4000)
        m = (rng.random((5, 5)) < 0.5).astype(np.uint8)
        assert localization_loss(np.full((5, 5), 0.42), m) == pytest.approx(0.0, abs=1e-12)
        assert localization_loss(m.astype(float), m) == pytest.approx(-1.0)

        for trial in range(50):
            trng = np.random.default_rng(4100 + trial)
            a = trng.random((4, 5)) + 0.05
            mm = (trng.random((4, 5)) < trng.uniform(0.2, 0.8)).astype(np.uint8)
            ana = localization_loss_grad(a, mm)
            num = fd_grad(a, mm)
            denom = max(np.abs(num).max(), 1e-12)
            assert np.abs(ana - num).max() / denom <= 1e-5, f"trial {trial}"

        # Additivity over parts is exact: accumulating the combined term in one
        # pass equals summing the individually computed part losses.
        maps = [rng.random((6, 6)) for _ in range(5)]
        masks = [(rng.random((6, 6)) < 0.5).astype(np.uint8) for _ in range(5)]
        parts = [localization_loss(a, m) for a, m in zip(maps, masks)]
        total = 0.0
        for a, m in zip(maps, masks):
            total += localization_loss(a, m)
        assert total == sum(parts)


def test_attention_suite():
    with criterion("attention suite (row-stochastic, exact K/V permutation, 2x2 case)"):
        rng = np.random.default_rng(5000)
        for _ in range(10):
            q = rng.standard_normal((6, 4)) * 5
            k = rng.standard_normal((9, 4)) * 5
            v = rng.standard_normal((9, 3))
            out, attn = cross_attention(q, k, v)
            np.testing.assert_allclose(attn.sum(axis=1), 1.0, atol=1e-6)
            perm = rng.permutation(9)
            out_p, attn_p = cross_attention(q, k[perm], v[perm])
            np.testing.assert_array_equal(out, out_p)
            np.testing.assert_array_equal(attn[:, perm], attn_p)

        out, attn = cross_attention(
            np.array([[1.0, 0.0]]),
            np.array([[1.0, 0.0], [0.0, 1.0]]),
            np.array([[1.0, 0.0], [0.0, 1.0]]),
            scale=1.0,
        )
        np.testing.assert_allclose(attn, [[0.7311, 0.2689]], atol=1e-4)
        np.testing.assert_allclose(out, [[0.7311, 0.2689]], atol=1e-4)


def test_loss_constants():
    with criterion("loss constants (lambda1=1e-3, lambda2=2.5e-4, 0.49875 case)"):
        b = total_loss(0.5, -1.0, -1.0)
        assert b.lambda1 == 1e-3
        assert b.lambda2 == 2.5e-4
        assert b.total == pytest.approx(0.49875, abs=1e-12)
        assert total_loss(1.0, 0.0, 0.0).total == 1.0


def test_curation_golden_suite():
    with criterion("curation golden suite (exact verdicts, histogram, monotonicity)"):
        cfg = CurationConfig()
        assert cfg.min_resolution == 512
        assert cfg.min_clip == 0.2

        cases = golden_fixture()
        lines = [json.dumps(p) for p, _ in cases]
        accepted, stats = curate_manifest(lines)
        assert [json.loads(l)["id"] for l in accepted] == [
            p["id"] for p, r in cases if r is None
        ]
        expected_counts = {}
        for _, reason in cases:
            if reason is not None:
                expected_counts[reason] = expected_counts.get(reason, 0) + 1
        assert stats.fail_counts == expected_counts

        rng = np.random.default_rng(6000)
        base_ids = {json.loads(l)["id"] for l in accepted}
        for _ in range(20):
            tight_cfg = tighten(cfg, rng)
            tight_accept, _ = curate_manifest(lines, tight_cfg)
            assert {json.loads(l)["id"] for l in tight_accept} <= base_ids


def test_conditioning_round_trip_and_determinism():
    with criterion("conditioning (pack/slice bit-exact, zero-texture, augment determinism)"):
        from warpkit.conditioning import PartSegmentation, augment_parts, pack_condition

        rng = np.random.default_rng(7000)
        tex = Image(rng.random((12, 10, 3)).astype(np.float32))
        pose = Image(rng.random((12, 10, 3)).astype(np.float32))
        bg = Image(rng.random((12, 10, 3)).astype(np.float32))
        stack = pack_condition(tex, pose, bg)
        np.testing.assert_array_equal(stack.tex().data, tex.data)
        np.testing.assert_array_equal(stack.pose().data, pose.data)
        np.testing.assert_array_equal(stack.bg().data, bg.data)

        zero_stack = pack_condition(None, pose, bg)
        assert (zero_stack.data[0:3] == 0).all()

        for trial in range(10):
            trng = np.random.default_rng(7100 + trial)
            img = Image(trng.random((24, 24, 3)).astype(np.float32))
            labels = np.zeros((24, 24), dtype=np.uint8)
            n_parts = int(trng.integers(1, 4))
            for part in range(n_parts):
                y0 = int(trng.integers(0, 12))
                x0 = int(trng.integers(0, 12))
                labels[y0:y0 + int(trng.integers(4, 10)), x0:x0 + int(trng.integers(4, 10))] = (
                    part + 1
                )
            seg = PartSegmentation(labels)
            seed = int(trng.integers(0, 2**31))
            a = augment_parts(img, seg, seed)
            b = augment_parts(img, seg, seed)
            assert (a.data == b.data).all(), f"trial {trial}"


def test_full_cli_smoke(tmp_path):
    with criterion("full CLI smoke (every subcommand < 10 s total)"):
        start = time.perf_counter()
        rng = np.random.default_rng(8000)

        img, pose = random_identity_fixture(rng, size=64, atlas_res=128)
        io.save_image(tmp_path / "src.png", img)
        io.save_densepose(tmp_path / "pose.png", pose)
        assert run_cli([
            "warp-dense", "--src", str(tmp_path / "src.png"),
            "--src-pose", str(tmp_path / "pose.png"), "--tgt-pose", str(tmp_path / "pose.png"),
            "--tex-out", str(tmp_path / "tex.png"), "--mask-out", str(tmp_path / "vis.png"),
        ]) == 0

        g, m, lm, _, _ = garment_files(tmp_path)
        assert run_cli([
            "warp-sparse", "--garment", str(g), "--garment-mask", str(m),
            "--garment-landmarks", str(lm), "--body-kps", str(lm),
            "--tex-out", str(tmp_path / "gtex.png"), "--mask-out", str(tmp_path / "gvis.png"),
        ]) == 0

        io.save_image(tmp_path / "scene.png", Image(np.full((256, 256, 3), 0.8, np.float32)))
        io.save_keypoints(tmp_path / "kps.json", torso_keypoints())
        assert run_cli([
            "bg-extract", "--image", str(tmp_path / "scene.png"),
            "--src-kps", str(tmp_path / "kps.json"), "--out", str(tmp_path / "bg.png"),
        ]) == 0

        assert run_cli([
            "render-pose", "--kps", str(tmp_path / "kps.json"),
            "--out", str(tmp_path / "skel.png"), "--width", "256", "--height", "256",
        ]) == 0

        io.save_image(tmp_path / "p256.png", Image(rng.random((256, 256, 3)).astype(np.float32)))
        assert run_cli([
            "pack", "--tex", str(tmp_path / "skel.png"), "--pose-img", str(tmp_path / "skel.png"),
            "--bg", str(tmp_path / "p256.png"), "--out", str(tmp_path / "stack.cstk"),
        ]) == 0

        io.save_mask(tmp_path / "gm.png", Mask((rng.random((256, 256)) < 0.3).astype(np.uint8)))
        assert run_cli([
            "remove-garment", "--image", str(tmp_path / "scene.png"),
            "--mask", str(tmp_path / "gm.png"), "--out", str(tmp_path / "nogarment.png"),
        ]) == 0

        labels = np.zeros((64, 64), dtype=np.uint8)
        labels[8:30, 8:30] = 4
        io.save_segmentation(tmp_path / "seg.png", labels)
        io.save_image(tmp_path / "img64.png", Image(rng.random((64, 64, 3)).astype(np.float32)))
        assert run_cli([
            "augment", "--image", str(tmp_path / "img64.png"), "--seg", str(tmp_path / "seg.png"),
            "--seed", "3", "--out", str(tmp_path / "aug.png"),
        ]) == 0

        io.write_tensor(tmp_path / "q.cstk", rng.standard_normal((4, 3)).astype(np.float32))
        io.write_tensor(tmp_path / "k.cstk", rng.standard_normal((6, 3)).astype(np.float32))
        io.write_tensor(tmp_path / "v.cstk", rng.standard_normal((6, 2)).astype(np.float32))
        assert run_cli([
            "attn", "--q", str(tmp_path / "q.cstk"), "--k", str(tmp_path / "k.cstk"),
            "--v", str(tmp_path / "v.cstk"), "--out", str(tmp_path / "attn_out.cstk"),
            "--map-out", str(tmp_path / "attn_map.cstk"),
        ]) == 0

        io.save_mask(tmp_path / "lmask.png", Mask((rng.random((4, 6)) < 0.5).astype(np.uint8)))
        assert run_cli([
            "loss", "--attn", str(tmp_path / "attn_map.cstk"),
            "--mask", str(tmp_path / "lmask.png"), "--lsd", "0.1",
        ]) == 0

        manifest = tmp_path / "manifest.jsonl"
        manifest.write_text("\n".join(json.dumps(p) for p, _ in golden_fixture()) + "\n")
        assert run_cli([
            "curate", "--input", str(manifest), "--output", str(tmp_path / "accepted.jsonl"),
            "--stats", str(tmp_path / "stats.json"),
        ]) == 0

        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"CLI smoke took {elapsed:.2f}s"
