"""Automated curation filter for large noisy image pools, evaluated over
manifests of precomputed detector/parser/caption annotations.

Input manifests are JSONL, one annotation record per line. Records that a
criterion cannot certify (missing annotations) fail conservatively.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import RecordError
from .imaging import Keypoint, KeypointSet

CRITERIA = (
    "resolution",
    "person_count",
    "head",
    "pose",
    "occlusion",
    "clothing",
    "clip_similarity",
)


@dataclass
class BoxDet:
    """Detection box (x, y, w, h, score), clamped to the image bounds."""

    x: float
    y: float
    w: float
    h: float
    score: float

    def clamped(self, img_w: float, img_h: float) -> "BoxDet":
        x0 = min(max(self.x, 0.0), img_w)
        y0 = min(max(self.y, 0.0), img_h)
        x1 = min(max(self.x + self.w, 0.0), img_w)
        y1 = min(max(self.y + self.h, 0.0), img_h)
        return BoxDet(x0, y0, x1 - x0, y1 - y0, self.score)

    def intersects(self, other: "BoxDet") -> bool:
        return (
            self.x < other.x + other.w
            and other.x < self.x + self.w
            and self.y < other.y + other.h
            and other.y < self.y + self.h
        )


@dataclass
class AnnotationRecord:
    """One curation candidate. Absent annotations stay None and later fail the
    criterion that needs them."""

    id: str
    width: int | None = None
    height: int | None = None
    person_boxes: list[BoxDet] | None = None
    face_boxes: list[BoxDet] | None = None
    keypoints: KeypointSet | None = None
    person_mask_area: float | None = None
    other_instance_overlap_area: float | None = None
    clothing_pixel_area: float | None = None
    caption: str | None = None
    clip_similarity: float | None = None

    @classmethod
    def from_dict(cls, payload: dict) -> "AnnotationRecord":
        if not isinstance(payload, dict) or "id" not in payload:
            raise RecordError("record must be an object with an 'id'")
        try:
            width = payload.get("width")
            height = payload.get("height")
            rec = cls(
                id=str(payload["id"]),
                width=None if width is None else int(width),
                height=None if height is None else int(height),
                caption=payload.get("caption"),
            )
            for key in ("person_boxes", "face_boxes"):
                raw = payload.get(key)
                if raw is not None:
                    boxes = [BoxDet(*(float(v) for v in b)) for b in raw]
                    if rec.width is not None and rec.height is not None:
                        boxes = [b.clamped(rec.width, rec.height) for b in boxes]
                    setattr(rec, key, boxes)
            if payload.get("keypoints") is not None:
                rec.keypoints = KeypointSet(
                    [
                        Keypoint(str(k["name"]), float(k["x"]), float(k["y"]),
                                 float(k.get("score", 1.0)))
                        for k in payload["keypoints"]
                    ]
                )
            for key in ("person_mask_area", "other_instance_overlap_area",
                        "clothing_pixel_area"):
                val = payload.get(key)
                if val is not None:
                    val = float(val)
                    if val < 0:
                        raise RecordError(f"{key} must be >= 0")
                    setattr(rec, key, val)
            sim = payload.get("clip_similarity")
            if sim is not None:
                sim = float(sim)
                if not -1.0 <= sim <= 1.0:
                    raise RecordError("clip_similarity must lie in [-1, 1]")
                rec.clip_similarity = sim
        except RecordError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise RecordError(f"malformed record {payload.get('id')!r}: {exc}") from exc
        return rec


@dataclass
class CurationConfig:
    """Filter thresholds. All are exposed so pipelines can tighten them; the
    occlusion and clothing-coverage ratios are deliberate quantifications of
    qualitative criteria."""

    min_resolution: int = 512
    person_score: float = 0.5
    face_score: float = 0.5
    min_keypoints: int = 8
    keypoint_score: float = 0.3
    max_occlusion: float = 0.05
    min_clothing: float = 0.1
    min_clip: float = 0.2


@dataclass
class CriterionReport:
    id: str
    verdicts: dict[str, str]
    accepted: bool
    fail_reasons: list[str]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "verdicts": self.verdicts,
            "accepted": self.accepted,
            "fail_reasons": self.fail_reasons,
        }


def evaluate_record(rec: AnnotationRecord, cfg: CurationConfig | None = None) -> CriterionReport:
    """Apply the seven acceptance criteria to one record."""
    cfg = cfg or CurationConfig()
    verdicts: dict[str, str] = {}
    reasons: list[str] = []

    def fail(criterion: str, reason: str | None = None):
        verdicts[criterion] = "fail"
        reasons.append(reason or criterion)

    def missing(criterion: str, fld: str):
        verdicts[criterion] = "indeterminate"
        reasons.append(f"missing:{fld}")

    # 1: both sides of the image at least the minimum resolution.
    if rec.width is None or rec.height is None:
        missing("resolution", "width" if rec.width is None else "height")
    elif min(rec.width, rec.height) >= cfg.min_resolution:
        verdicts["resolution"] = "pass"
    else:
        fail("resolution")

    # 2: exactly one confident person detection.
    persons = None
    if rec.person_boxes is None:
        missing("person_count", "person_boxes")
    else:
        persons = [b for b in rec.person_boxes if b.score >= cfg.person_score]
        if len(persons) == 1:
            verdicts["person_count"] = "pass"
        else:
            fail("person_count")

    # 3: a confident face box intersecting a confident person box.
    if rec.face_boxes is None:
        missing("head", "face_boxes")
    else:
        faces = [b for b in rec.face_boxes if b.score >= cfg.face_score]
        candidates = persons if persons else []
        if any(f.intersects(p) for f in faces for p in candidates):
            verdicts["head"] = "pass"
        else:
            fail("head")

    # 4: enough confident joints for the pose to count as detected.
    if rec.keypoints is None:
        missing("pose", "keypoints")
    elif len(rec.keypoints.above(cfg.keypoint_score)) >= cfg.min_keypoints:
        verdicts["pose"] = "pass"
    else:
        fail("pose")

    # 5: overlap with other instances stays below the occlusion budget.
    if rec.person_mask_area is None or rec.other_instance_overlap_area is None:
        missing(
            "occlusion",
            "person_mask_area" if rec.person_mask_area is None else "other_instance_overlap_area",
        )
    elif rec.person_mask_area <= 0:
        fail("occlusion")
    elif rec.other_instance_overlap_area / rec.person_mask_area <= cfg.max_occlusion:
        verdicts["occlusion"] = "pass"
    else:
        fail("occlusion")

    # 6: clothing covers an adequate share of the person.
    if rec.person_mask_area is None or rec.clothing_pixel_area is None:
        missing(
            "clothing",
            "person_mask_area" if rec.person_mask_area is None else "clothing_pixel_area",
        )
    elif rec.person_mask_area <= 0:
        fail("clothing")
    elif rec.clothing_pixel_area / rec.person_mask_area >= cfg.min_clothing:
        verdicts["clothing"] = "pass"
    else:
        fail("clothing")

    # 7: image-text similarity strictly above the floor.
    if rec.clip_similarity is None:
        missing("clip_similarity", "clip_similarity")
    elif rec.clip_similarity > cfg.min_clip:
        verdicts["clip_similarity"] = "pass"
    else:
        fail("clip_similarity")

    accepted = all(verdicts[c] == "pass" for c in CRITERIA)
    return CriterionReport(id=rec.id, verdicts=verdicts, accepted=accepted, fail_reasons=reasons)


@dataclass
class CurationStats:
    total: int = 0
    accepted: int = 0
    malformed: int = 0
    fail_counts: dict[str, int] = field(default_factory=dict)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "accepted": self.accepted,
            "malformed": self.malformed,
            "acceptance_rate": self.acceptance_rate,
            "fail_counts": dict(sorted(self.fail_counts.items())),
        }


def curate_stream(
    lines: Iterable[str], cfg: CurationConfig | None = None, stats: CurationStats | None = None
) -> Iterator[str]:
    """Filter a JSONL manifest, yielding accepted lines in input order.

    Unparseable lines count as malformed and never abort the stream. Pass a
    CurationStats to collect per-reason counts while streaming.
    """
    cfg = cfg or CurationConfig()
    stats = stats if stats is not None else CurationStats()
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        stats.total += 1
        try:
            rec = AnnotationRecord.from_dict(json.loads(line))
            report = evaluate_record(rec, cfg)
        except (json.JSONDecodeError, RecordError):
            stats.malformed += 1
            stats.fail_counts["malformed"] = stats.fail_counts.get("malformed", 0) + 1
            continue
        if report.accepted:
            stats.accepted += 1
            yield line
        else:
            for reason in report.fail_reasons:
                stats.fail_counts[reason] = stats.fail_counts.get(reason, 0) + 1


def curate_manifest(
    lines: Iterable[str], cfg: CurationConfig | None = None
) -> tuple[list[str], CurationStats]:
    """Non-streaming convenience wrapper around curate_stream."""
    stats = CurationStats()
    accepted = list(curate_stream(lines, cfg, stats))
    return accepted, stats
