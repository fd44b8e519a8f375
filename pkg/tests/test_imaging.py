import numpy as np
import pytest

from warpkit.errors import EmptyImage, FormatError, InvalidCoordinate, ShapeMismatch
from warpkit import io
from warpkit.imaging import (
    DensePoseMap,
    Image,
    Keypoint,
    KeypointSet,
    Mask,
    bilinear_sample,
    resize_pad,
    unpad,
)


class TestContainers:
    def test_image_rejects_bad_channels(self):
        with pytest.raises(ShapeMismatch):
            Image(np.zeros((4, 4, 2), dtype=np.float32))

    def test_image_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Image(np.full((2, 2, 3), 1.5, dtype=np.float32))

    def test_mask_rejects_non_binary(self):
        with pytest.raises(ValueError):
            Mask(np.array([[0, 2]], dtype=np.uint8))

    def test_densepose_normalizes_background_uv(self):
        pose = DensePoseMap(
            parts=np.array([[0, 1]], dtype=np.uint8),
            u=np.array([[0.7, 0.3]], dtype=np.float32),
            v=np.array([[0.2, 2.0]], dtype=np.float32),
        )
        assert pose.u[0, 0] == 0.0 and pose.v[0, 0] == 0.0
        assert pose.v[0, 1] == 1.0  # clamped

    def test_keypoint_names_unique(self):
        with pytest.raises(ValueError):
            KeypointSet([Keypoint("a", 0, 0), Keypoint("a", 1, 1)])

    def test_keypoint_rejects_nan(self):
        with pytest.raises(InvalidCoordinate):
            Keypoint("a", float("nan"), 0)


class TestBilinearSample:
    def test_integer_coords_are_exact(self):
        rng = np.random.default_rng(0)
        img = Image(rng.random((5, 7, 3)).astype(np.float32))
        for x, y in [(2, 3), (0, 0), (6, 4)]:
            np.testing.assert_allclose(bilinear_sample(img, x, y), img.data[y, x], atol=1e-7)

    def test_midpoint_between_zero_and_one(self):
        img = Image(np.array([[[0.0], [1.0]]], dtype=np.float32))
        assert bilinear_sample(img, 0.5, 0.0)[0] == pytest.approx(0.5)

    def test_hand_evaluated_quarter_point(self):
        # 2x2 image with columns 0.0 / 1.0: value depends only on x, so
        # (0.25, 0.5) -> 0.25 by the bilinear formula.
        img = Image(np.array([[[0.0], [1.0]], [[0.0], [1.0]]], dtype=np.float32))
        assert bilinear_sample(img, 0.25, 0.5)[0] == pytest.approx(0.25)

    def test_nan_coordinate_rejected(self):
        img = Image.zeros(2, 2, 1)
        with pytest.raises(InvalidCoordinate):
            bilinear_sample(img, float("nan"), 0.0)

    def test_clamps_to_edge(self):
        img = Image(np.arange(4, dtype=np.float32).reshape(2, 2, 1) / 4.0)
        np.testing.assert_allclose(bilinear_sample(img, -3.0, -3.0), img.data[0, 0])
        np.testing.assert_allclose(bilinear_sample(img, 9.0, 9.0), img.data[1, 1])

    def test_empty_image_rejected(self):
        with pytest.raises(EmptyImage):
            bilinear_sample(Image(np.zeros((0, 4, 3), dtype=np.float32)), 0, 0)

    def test_convex_combination_of_neighbors(self):
        rng = np.random.default_rng(1)
        img = Image(rng.random((6, 6, 1)).astype(np.float32))
        for _ in range(50):
            x = float(rng.uniform(0, 5))
            y = float(rng.uniform(0, 5))
            x0, y0 = int(x), int(y)
            neigh = img.data[y0:y0 + 2, x0:x0 + 2, 0]
            val = bilinear_sample(img, x, y)[0]
            assert neigh.min() - 1e-7 <= val <= neigh.max() + 1e-7


class TestResizePad:
    def test_portrait_pads_left_right_with_white(self):
        img = Image.zeros(1024, 512, 3)
        out, place = resize_pad(img, 256, fill=1.0)
        assert out.data.shape == (256, 256, 3)
        assert (place.content_w, place.content_h) == (128, 256)
        assert (place.x0, place.y0) == (64, 0)
        assert (out.data[:, :64] == 1.0).all() and (out.data[:, 192:] == 1.0).all()
        assert (out.data[:, 64:192] == 0.0).all()

    def test_square_needs_no_padding(self):
        out, place = resize_pad(Image.zeros(300, 300, 3), 256)
        assert out.data.shape == (256, 256, 3)
        assert (place.x0, place.y0, place.content_w, place.content_h) == (0, 0, 256, 256)

    def test_centered_split(self):
        out, place = resize_pad(Image.zeros(400, 300, 3), 256)
        assert (place.content_w, place.content_h) == (192, 256)
        assert (place.x0, place.y0) == (32, 0)

    def test_empty_image_rejected(self):
        with pytest.raises(EmptyImage):
            resize_pad(Image(np.zeros((0, 3, 3), dtype=np.float32)), 256)

    def test_output_extent_and_unpad_dims(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            w = int(rng.integers(3, 90))
            h = int(rng.integers(3, 90))
            target = int(rng.integers(8, 128))
            img = Image(rng.random((h, w, 3)).astype(np.float32))
            out, place = resize_pad(img, target)
            assert out.data.shape == (target, target, 3)
            restored = unpad(out, place)
            assert (restored.height, restored.width) == (h, w)


class TestFileFormats:
    def test_image_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        img = Image(np.rint(rng.random((9, 7, 3)) * 255).astype(np.float32) / 255.0)
        path = tmp_path / "img.png"
        io.save_image(path, img)
        np.testing.assert_array_equal(io.load_image(path).data, img.data)

    def test_gray_and_rgba_round_trip(self, tmp_path):
        for c in (1, 4):
            img = Image(np.full((4, 5, c), 128 / 255.0, dtype=np.float32))
            path = tmp_path / f"img{c}.png"
            io.save_image(path, img)
            loaded = io.load_image(path)
            assert loaded.channels == c
            np.testing.assert_array_equal(loaded.data, img.data)

    def test_mask_round_trip(self, tmp_path):
        mask = Mask(np.eye(6, dtype=np.uint8))
        path = tmp_path / "m.png"
        io.save_mask(path, mask)
        np.testing.assert_array_equal(io.load_mask(path).data, mask.data)

    def test_densepose_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        parts = rng.integers(0, 25, (8, 8)).astype(np.uint8)
        # Quantize UV to the file lattice so the round trip is exact.
        u = rng.integers(0, 256, (8, 8)).astype(np.float32) / 255.0
        v = rng.integers(0, 256, (8, 8)).astype(np.float32) / 255.0
        pose = DensePoseMap(parts=parts, u=u, v=v)
        path = tmp_path / "pose.png"
        io.save_densepose(path, pose)
        loaded = io.load_densepose(path)
        np.testing.assert_array_equal(loaded.parts, pose.parts)
        np.testing.assert_array_equal(loaded.u, pose.u)
        np.testing.assert_array_equal(loaded.v, pose.v)

    def test_keypoints_round_trip(self, tmp_path):
        kps = KeypointSet([Keypoint("left_shoulder", 10.5, -3.0, 0.8), Keypoint("nose", 0, 0)])
        path = tmp_path / "kps.json"
        io.save_keypoints(path, kps)
        loaded = io.load_keypoints(path)
        assert loaded.get("left_shoulder").x == 10.5
        assert loaded.get("left_shoulder").score == 0.8
        assert loaded.get("nose").score == 1.0

    def test_keypoints_bad_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"points": []}')
        with pytest.raises(FormatError):
            io.load_keypoints(path)

    def test_tensor_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        arr = rng.standard_normal((3, 6, 4)).astype(np.float32)
        path = tmp_path / "t.cstk"
        io.write_tensor(path, arr)
        np.testing.assert_array_equal(io.read_tensor(path), arr)

    def test_tensor_matrix_round_trip(self, tmp_path):
        arr = np.arange(12, dtype=np.float32).reshape(3, 4)
        path = tmp_path / "m.cstk"
        io.write_tensor(path, arr)
        np.testing.assert_array_equal(io.read_matrix(path), arr)

    def test_tensor_bad_magic(self, tmp_path):
        path = tmp_path / "bad.cstk"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(FormatError):
            io.read_tensor(path)

    def test_tensor_truncated(self, tmp_path):
        path = tmp_path / "short.cstk"
        io.write_tensor(path, np.zeros((1, 4, 4), dtype=np.float32))
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(FormatError):
            io.read_tensor(path)

    def test_segmentation_round_trip(self, tmp_path):
        labels = np.array([[0, 4, 9], [1, 0, 6]], dtype=np.uint8)
        path = tmp_path / "seg.png"
        io.save_segmentation(path, labels)
        np.testing.assert_array_equal(io.load_segmentation(path), labels)
