"""File formats: 8-bit PNG for images/masks/poses, JSON keypoints, raw float tensors.

Tensor files use a 16-byte header (magic ``CSTK``, then little-endian u32
height, width, channels) followed by float32 data in plane-major (C, H, W)
order. Matrices are stored with C=1.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import FormatError
from .imaging import DensePoseMap, Image, Keypoint, KeypointSet, Mask

TENSOR_MAGIC = b"CSTK"

# Fixed display palette for part-segmentation PNGs (label ids 0-9).
SEG_PALETTE = [
    (0, 0, 0), (255, 0, 0), (255, 170, 0), (255, 255, 0), (0, 255, 0),
    (0, 255, 255), (0, 85, 255), (170, 0, 255), (255, 0, 170), (128, 128, 128),
]

_PIL_MODES = {1: "L", 3: "RGB", 4: "RGBA"}


def load_image(path) -> Image:
    """Load an 8-bit PNG as a normalized float image."""
    with PILImage.open(path) as pil:
        if pil.mode not in ("L", "RGB", "RGBA"):
            pil = pil.convert("RGB")
        arr = np.asarray(pil, dtype=np.float32) / 255.0
    return Image(arr)


def save_image(path, img: Image) -> None:
    arr = np.rint(img.data * 255.0).astype(np.uint8)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    PILImage.fromarray(arr, mode=_PIL_MODES[img.channels]).save(path, format="PNG")


def load_mask(path) -> Mask:
    with PILImage.open(path) as pil:
        arr = np.asarray(pil.convert("L"))
    return Mask((arr > 127).astype(np.uint8))


def save_mask(path, mask: Mask) -> None:
    PILImage.fromarray(mask.data * np.uint8(255), mode="L").save(path, format="PNG")


def load_densepose(path) -> DensePoseMap:
    """Decode the IUV PNG encoding: R = part index, G = u*255, B = v*255."""
    with PILImage.open(path) as pil:
        arr = np.asarray(pil.convert("RGB"))
    return DensePoseMap(
        parts=arr[:, :, 0],
        u=arr[:, :, 1].astype(np.float32) / 255.0,
        v=arr[:, :, 2].astype(np.float32) / 255.0,
    )


def save_densepose(path, pose: DensePoseMap) -> None:
    arr = np.stack(
        [
            pose.parts,
            np.rint(pose.u * 255.0).astype(np.uint8),
            np.rint(pose.v * 255.0).astype(np.uint8),
        ],
        axis=2,
    )
    PILImage.fromarray(arr, mode="RGB").save(path, format="PNG")


def load_keypoints(path) -> KeypointSet:
    try:
        payload = json.loads(Path(path).read_text())
        kps = [
            Keypoint(
                name=str(k["name"]),
                x=float(k["x"]),
                y=float(k["y"]),
                score=float(k.get("score", 1.0)),
            )
            for k in payload["keypoints"]
        ]
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad keypoint file {path}: {exc}") from exc
    return KeypointSet(kps)


def save_keypoints(path, kps: KeypointSet) -> None:
    payload = {
        "keypoints": [
            {"name": k.name, "x": k.x, "y": k.y, "score": k.score} for k in kps.keypoints
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_label_embeds(path) -> dict[str, np.ndarray]:
    """Load a label-embedding table: JSON map of part name to float array."""
    try:
        payload = json.loads(Path(path).read_text())
        return {str(k): np.asarray(v, dtype=np.float32) for k, v in payload.items()}
    except (TypeError, ValueError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad label-embedding table {path}: {exc}") from exc


def load_segmentation(path) -> np.ndarray:
    """Load a part-segmentation PNG; palette indices (or gray values) are label ids."""
    with PILImage.open(path) as pil:
        if pil.mode not in ("P", "L"):
            raise FormatError(f"segmentation PNG must be indexed or gray, got mode {pil.mode}")
        arr = np.asarray(pil, dtype=np.uint8)
    if arr.max(initial=0) > 9:
        raise FormatError("segmentation labels must lie in 0..9")
    return arr


def save_segmentation(path, labels: np.ndarray) -> None:
    pil = PILImage.fromarray(labels.astype(np.uint8), mode="P")
    flat = []
    for rgb in SEG_PALETTE:
        flat.extend(rgb)
    pil.putpalette(flat)
    # Pin 8-bit indices; Pillow would otherwise pack small palettes at 4 bits.
    pil.save(path, format="PNG", bits=8)


def write_tensor(path, arr: np.ndarray) -> None:
    """Write a (C, H, W) or (H, W) float array in the raw tensor format."""
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise FormatError(f"tensor must be (C, H, W), got shape {arr.shape}")
    c, h, w = arr.shape
    with open(path, "wb") as f:
        f.write(TENSOR_MAGIC)
        f.write(struct.pack("<III", h, w, c))
        f.write(np.ascontiguousarray(arr).tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a raw tensor file back as (C, H, W) float32."""
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != TENSOR_MAGIC:
        raise FormatError(f"{path} is not a tensor file")
    h, w, c = struct.unpack("<III", blob[4:16])
    expect = 16 + 4 * h * w * c
    if len(blob) != expect:
        raise FormatError(f"{path}: expected {expect} bytes, found {len(blob)}")
    return np.frombuffer(blob[16:], dtype="<f4").reshape(c, h, w).copy()


def read_matrix(path) -> np.ndarray:
    """Read a tensor file holding a single plane as an (H, W) matrix."""
    arr = read_tensor(path)
    if arr.shape[0] != 1:
        raise FormatError(f"{path}: expected a single-plane tensor, got C={arr.shape[0]}")
    return arr[0]
