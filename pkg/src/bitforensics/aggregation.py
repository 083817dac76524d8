"""Per-bit damage profiles and the main-damage importance policy.

Aligned cutters from all images of a bit collapse into a count matrix over
(location, damage).  The main damage at a location follows an importance
order (fractures first, then missing cutters, thermal wear, smooth wear),
except that a strict majority of a less important damage class overrides
the order.  Green cutters mean "no damage" and never take part.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .alignment import AlignedCutter
from .taxonomy import DamageClass, LocationClass

#: Damage importance ranks, 1 = most important.  ``NO_RINGOUT_TOP`` is a
#: top-view observation, not cutter damage, and never becomes a main damage.
DAMAGE_RANK: dict[DamageClass, int] = {
    DamageClass.NORMAL_FRACTURE: 1,
    DamageClass.TANGENTIAL_FRACTURE: 1,
    DamageClass.GREEN_WITH_TF_LINE: 1,
    DamageClass.MISSING: 2,
    DamageClass.RINGOUT_TOP: 2,
    DamageClass.SHOULDER_RO_DAMAGE: 2,
    DamageClass.LOW_THERMAL: 3,
    DamageClass.MEDIUM_THERMAL: 3,
    DamageClass.SMOOTH_WEAR: 4,
    DamageClass.GREEN: 5,
    DamageClass.NO_RINGOUT_TOP: 5,
}

#: Radial regions whose main damage feeds diagnosis features.
PROFILE_LOCATIONS: tuple[LocationClass, ...] = (
    LocationClass.CORE,
    LocationClass.NOSE,
    LocationClass.SHOULDER,
    LocationClass.GAUGE,
)


class TopRingout(Enum):
    """What the bit's top view showed, if a top view exists at all."""

    RO = "RO"
    NO_RO = "no_ro"
    ABSENT = "absent"


@dataclass(frozen=True)
class BitDamageProfile:
    """Count matrix of matched cutters plus the unmatched tally for one bit."""

    bit_id: str
    counts: Mapping[tuple[LocationClass, DamageClass], int]
    total_detected: int
    unmatched: int
    top_ringout: TopRingout = TopRingout.ABSENT
    num_main_blades: int = 7

    def __post_init__(self):
        counts = {k: v for k, v in dict(self.counts).items() if v}
        object.__setattr__(self, "counts", counts)
        if any(v < 0 for v in counts.values()):
            raise ValueError("counts must be non-negative")
        if self.unmatched < 0:
            raise ValueError("unmatched must be non-negative")
        if sum(counts.values()) + self.unmatched != self.total_detected:
            raise ValueError("matched counts plus unmatched must equal total_detected")
        if self.num_main_blades < 1:
            raise ValueError("num_main_blades must be positive")

    @classmethod
    def from_counts(
        cls,
        counts: Mapping[tuple[LocationClass, DamageClass], int],
        *,
        bit_id: str = "bit",
        unmatched: int = 0,
        top_ringout: TopRingout = TopRingout.ABSENT,
        num_main_blades: int = 7,
    ) -> "BitDamageProfile":
        """Build a profile from a count map, deriving the total."""
        total = sum(counts.values()) + unmatched
        return cls(
            bit_id=bit_id,
            counts=counts,
            total_detected=total,
            unmatched=unmatched,
            top_ringout=top_ringout,
            num_main_blades=num_main_blades,
        )

    def count(self, location: LocationClass, damage: DamageClass) -> int:
        return self.counts.get((location, damage), 0)

    def thermal(self, location: LocationClass) -> int:
        """Thermally worn cutters (low + medium) at ``location``."""
        return self.count(location, DamageClass.LOW_THERMAL) + self.count(
            location, DamageClass.MEDIUM_THERMAL
        )

    def heavy(self, location: LocationClass) -> int:
        """Missing / heavily damaged cutters at ``location``."""
        return self.count(location, DamageClass.MISSING)

    def damage_total(self, damage: DamageClass) -> int:
        return sum(v for (_, d), v in self.counts.items() if d is damage)

    def location_total(self, location: LocationClass) -> int:
        return sum(v for (l, _), v in self.counts.items() if l is location)

    def location_damages(self, location: LocationClass) -> Counter:
        """Multiset of matched damages observed at ``location``."""
        return Counter(
            {d: v for (l, d), v in self.counts.items() if l is location and v > 0}
        )

    def to_dict(self) -> dict:
        return {
            "bit_id": self.bit_id,
            "num_main_blades": self.num_main_blades,
            "counts": {
                f"{l.code}/{d.code}": v
                for (l, d), v in sorted(
                    self.counts.items(), key=lambda kv: (kv[0][0].code, kv[0][1].code)
                )
            },
            "total_detected": self.total_detected,
            "unmatched": self.unmatched,
            "top_ringout": self.top_ringout.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BitDamageProfile":
        counts = {}
        for key, value in data["counts"].items():
            loc_code, dmg_code = key.split("/", 1)
            counts[(LocationClass(loc_code), DamageClass(dmg_code))] = int(value)
        return cls(
            bit_id=data["bit_id"],
            counts=counts,
            total_detected=int(data["total_detected"]),
            unmatched=int(data["unmatched"]),
            top_ringout=TopRingout(data["top_ringout"]),
            num_main_blades=int(data.get("num_main_blades", 7)),
        )


def build_profile(
    aligned: Iterable[tuple[str, Iterable[AlignedCutter]]],
    bit_id: str,
    num_main_blades: int = 7,
) -> BitDamageProfile:
    """Accumulate aligned cutters from all of a bit's images into a profile.

    Unmatched cutters count toward ``total_detected`` but into no damage
    cell.  The top-view tri-state is RO as soon as any top-located cutter
    paired with a ringout, no_ro when only no-ringout was seen, absent
    otherwise.
    """
    counts: Counter = Counter()
    unmatched = 0
    total = 0
    saw_ro = False
    saw_no_ro = False
    for _image_id, cutters in aligned:
        for cutter in cutters:
            total += 1
            if cutter.damage is None:
                unmatched += 1
                continue
            counts[(cutter.location, cutter.damage)] += 1
            if cutter.location is LocationClass.TOP:
                if cutter.damage is DamageClass.RINGOUT_TOP:
                    saw_ro = True
                elif cutter.damage is DamageClass.NO_RINGOUT_TOP:
                    saw_no_ro = True
    if saw_ro:
        top = TopRingout.RO
    elif saw_no_ro:
        top = TopRingout.NO_RO
    else:
        top = TopRingout.ABSENT
    return BitDamageProfile(
        bit_id=bit_id,
        counts=dict(counts),
        total_detected=total,
        unmatched=unmatched,
        top_ringout=top,
        num_main_blades=num_main_blades,
    )


def main_damage(damages: Iterable[DamageClass]) -> DamageClass | None:
    """Pick the main damage of a location from its observed damage multiset.

    The most important rank present wins, unless a single less important
    class holds a strict majority of the non-green cutters.  Returns GREEN
    when only green cutters were seen and None for an empty multiset.
    Rank-tied classes break toward the higher count, then the smaller code.
    """
    counts = Counter(d for d in damages if d is not DamageClass.NO_RINGOUT_TOP)
    if not counts:
        return None
    non_green = Counter({d: c for d, c in counts.items() if d is not DamageClass.GREEN})
    if not non_green:
        return DamageClass.GREEN
    best_rank = min(DAMAGE_RANK[d] for d in non_green)
    base = sum(non_green.values())
    for damage, count in non_green.items():
        if DAMAGE_RANK[damage] > best_rank and 2 * count > base:
            return damage
    top_classes = [d for d in non_green if DAMAGE_RANK[d] == best_rank]
    return min(top_classes, key=lambda d: (-non_green[d], d.code))


@dataclass(frozen=True)
class MainDamageSummary:
    """Main damage per radial region; None where no cutter was observed."""

    bit_id: str
    core: DamageClass | None = None
    nose: DamageClass | None = None
    shoulder: DamageClass | None = None
    gauge: DamageClass | None = None

    _FIELD_BY_LOCATION = {
        LocationClass.CORE: "core",
        LocationClass.NOSE: "nose",
        LocationClass.SHOULDER: "shoulder",
        LocationClass.GAUGE: "gauge",
    }

    def at(self, location: LocationClass) -> DamageClass | None:
        return getattr(self, self._FIELD_BY_LOCATION[location])

    def to_dict(self) -> dict:
        return {
            name: (damage.code if damage else None)
            for name, damage in (
                ("core", self.core),
                ("nose", self.nose),
                ("shoulder", self.shoulder),
                ("gauge", self.gauge),
            )
        }


def summarize_bit(profile: BitDamageProfile) -> MainDamageSummary:
    """Apply the main-damage policy per region over the whole-bit multiset."""
    picks = {}
    for location in PROFILE_LOCATIONS:
        multiset = profile.location_damages(location)
        picks[MainDamageSummary._FIELD_BY_LOCATION[location]] = main_damage(
            multiset.elements()
        )
    return MainDamageSummary(bit_id=profile.bit_id, **picks)
