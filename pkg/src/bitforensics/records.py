"""Detection records: boxes, per-image detections, per-bit image sets.

All types are immutable values, safe to share between workers.  Boxes use
the normalized center-size convention (fractions of image width/height) so
distance thresholds are image-size independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from .taxonomy import DamageClass, LocationClass

VIEW_TOP = "top"
VIEW_SIDE = "side"

ClassLabel = Union[LocationClass, DamageClass]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: center (cx, cy) and size (w, h), all in [0, 1]."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.cx <= 1.0):
            raise ValueError(f"cx out of range [0, 1]: {self.cx}")
        if not (0.0 <= self.cy <= 1.0):
            raise ValueError(f"cy out of range [0, 1]: {self.cy}")
        if not (0.0 < self.w <= 1.0):
            raise ValueError(f"w out of range (0, 1]: {self.w}")
        if not (0.0 < self.h <= 1.0):
            raise ValueError(f"h out of range (0, 1]: {self.h}")

    @property
    def x0(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def x1(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def y0(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def y1(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    """One detector output: box, class label, confidence score."""

    box: BoundingBox
    label: ClassLabel
    confidence: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of range [0, 1]: {self.confidence}")


@dataclass(frozen=True)
class ImageRecord:
    """Detections of one stream (location or damage) for one image."""

    image_id: str
    view: str
    detections: tuple[Detection, ...] = ()
    side_index: int | None = None

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be nonempty")
        if self.view not in (VIEW_TOP, VIEW_SIDE):
            raise ValueError(f"view must be {VIEW_TOP!r} or {VIEW_SIDE!r}: {self.view!r}")
        if self.view == VIEW_SIDE:
            if self.side_index is None or self.side_index < 1:
                raise ValueError("side views need side_index >= 1")
        elif self.side_index is not None:
            raise ValueError("top views carry no side_index")
        object.__setattr__(self, "detections", tuple(self.detections))


def _check_stream(images: Sequence[ImageRecord], stream: str) -> tuple[ImageRecord, ...]:
    ids = [rec.image_id for rec in images]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate image_id in {stream} stream")
    if sum(1 for rec in images if rec.view == VIEW_TOP) > 1:
        raise ValueError(f"more than one top view in {stream} stream")
    return tuple(images)


@dataclass(frozen=True)
class BitDetections:
    """Both detection streams for one drill bit, paired image by image.

    Ground-truth streams are optional; loaders fill them with empty
    records when no annotation files are available.
    """

    bit_id: str
    num_main_blades: int = 7
    location_images: tuple[ImageRecord, ...] = ()
    damage_images: tuple[ImageRecord, ...] = ()
    gt_location_images: tuple[ImageRecord, ...] = field(default=(), repr=False)
    gt_damage_images: tuple[ImageRecord, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not self.bit_id:
            raise ValueError("bit_id must be nonempty")
        if self.num_main_blades < 1:
            raise ValueError("num_main_blades must be positive")
        object.__setattr__(
            self, "location_images", _check_stream(self.location_images, "location")
        )
        object.__setattr__(
            self, "damage_images", _check_stream(self.damage_images, "damage")
        )
        loc_ids = [rec.image_id for rec in self.location_images]
        dmg_ids = [rec.image_id for rec in self.damage_images]
        if loc_ids != dmg_ids:
            raise ValueError("location and damage streams must pair by image_id")
        for name in ("gt_location_images", "gt_damage_images"):
            stream = getattr(self, name)
            if stream:
                object.__setattr__(self, name, _check_stream(stream, name))
                if [rec.image_id for rec in getattr(self, name)] != loc_ids:
                    raise ValueError(f"{name} must pair with the detection streams")

    @property
    def image_ids(self) -> tuple[str, ...]:
        return tuple(rec.image_id for rec in self.location_images)

    def image_pairs(self):
        """Yield (image_id, location record, damage record) per image."""
        for loc, dmg in zip(self.location_images, self.damage_images):
            yield loc.image_id, loc, dmg
