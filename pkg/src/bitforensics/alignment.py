"""Fuse the location and damage detection streams of one image.

The two detectors run independently, so a located cutter must be paired
with the damage box drawn over the same cutter.  For every location
detection, candidates are the damage detections whose box center lies
strictly closer than ``tau`` (default 0.05, in normalized image units);
the candidate with the highest confidence wins.  A location detection with
no candidate stays unmatched: a detected cutter of unknown condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .records import BitDetections, BoundingBox, Detection
from .taxonomy import DamageClass, LocationClass


@dataclass(frozen=True)
class AlignmentConfig:
    """Pairing threshold; distances equal to ``tau`` do not match."""

    tau: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"tau out of range (0, 1): {self.tau}")


@dataclass(frozen=True)
class AlignedCutter:
    """A located cutter together with its paired damage, if any."""

    location: LocationClass
    location_conf: float
    damage: DamageClass | None = None
    damage_conf: float | None = None
    center_distance: float | None = None

    def __post_init__(self):
        unmatched = self.damage is None
        if unmatched != (self.damage_conf is None) or unmatched != (
            self.center_distance is None
        ):
            raise ValueError("damage, damage_conf and center_distance must be set together")

    @property
    def matched(self) -> bool:
        return self.damage is not None

    def to_dict(self) -> dict:
        return {
            "location": self.location.code,
            "location_conf": self.location_conf,
            "damage": self.damage.code if self.damage else None,
            "damage_conf": self.damage_conf,
            "center_distance": self.center_distance,
        }


def center_distance(a: BoundingBox, b: BoundingBox) -> float:
    """Euclidean distance between two box centers, in normalized units."""
    return math.hypot(a.cx - b.cx, a.cy - b.cy)


def align_image(
    location_dets: Sequence[Detection],
    damage_dets: Sequence[Detection],
    config: AlignmentConfig = AlignmentConfig(),
) -> list[AlignedCutter]:
    """Pair each location detection with its best damage detection.

    Returns one :class:`AlignedCutter` per location detection, in input
    order.  Matching is independent per cutter, so one damage detection
    may serve several overlapping location detections.  Ties on equal
    confidence break toward the smaller center distance, then the
    lexicographically smaller damage-class code, making the result
    independent of the damage list's ordering.
    """
    aligned = []
    for loc in location_dets:
        candidates = []
        for dmg in damage_dets:
            distance = center_distance(loc.box, dmg.box)
            if distance < config.tau:
                candidates.append((-dmg.confidence, distance, dmg.label.code, dmg))
        if candidates:
            _, distance, _, best = min(candidates, key=lambda c: c[:3])
            aligned.append(
                AlignedCutter(
                    location=loc.label,
                    location_conf=loc.confidence,
                    damage=best.label,
                    damage_conf=best.confidence,
                    center_distance=distance,
                )
            )
        else:
            aligned.append(AlignedCutter(location=loc.label, location_conf=loc.confidence))
    return aligned


def align_bit(
    bit: BitDetections, config: AlignmentConfig = AlignmentConfig()
) -> list[tuple[str, list[AlignedCutter]]]:
    """Align every image of a bit; returns (image_id, cutters) pairs."""
    return [
        (image_id, align_image(loc.detections, dmg.detections, config))
        for image_id, loc, dmg in bit.image_pairs()
    ]
