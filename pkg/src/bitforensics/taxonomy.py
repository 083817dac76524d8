"""Class taxonomies shared by every stage of the pipeline.

Three vocabularies: where a cutter sits on the bit profile, what kind of
damage it shows, and which drilling dysfunction a whole bit is diagnosed
with.  String codes are the on-disk form used by detection files and cause
CSVs; they parse case-sensitively and round-trip exactly.
"""

from __future__ import annotations

from enum import Enum

from .errors import UnknownClassError


class LocationClass(Enum):
    """Cutter position classes emitted by the location detector."""

    CORE = "C"
    NOSE = "N"
    SHOULDER = "Sh"
    GAUGE = "G"
    TOP = "top"
    SHOULDER_RO = "Shoulder_RO"

    @property
    def code(self) -> str:
        return self.value


class DamageClass(Enum):
    """Cutter damage classes emitted by the damage detector."""

    GREEN = "G_G"
    LOW_THERMAL = "L_Th"
    MEDIUM_THERMAL = "M_Th"
    MISSING = "H"
    SMOOTH_WEAR = "L_SW"
    NORMAL_FRACTURE = "NF"
    NO_RINGOUT_TOP = "no_ro"
    RINGOUT_TOP = "RO"
    SHOULDER_RO_DAMAGE = "Shoulder_RO"
    TANGENTIAL_FRACTURE = "TF"
    GREEN_WITH_TF_LINE = "G_TF"

    @property
    def code(self) -> str:
        return self.value


class FailureCause(Enum):
    """Bit-level failure causes; ``GREEN`` means no cause was identified."""

    SMOOTH_WEAR = "smooth_wear"
    THERMAL_WEAR = "thermal_wear"
    CORE_OUT = "core_out"
    HARD_FORMATION_TRANSITION = "hard_ft"
    SOFT_FORMATION_TRANSITION = "soft_ft"
    STICK_SLIP = "stick_slip"
    AXIAL = "axial"
    WHIRL = "whirl"
    GREEN = "green"

    @property
    def code(self) -> str:
        return self.value


_KINDS: dict[str, type[Enum]] = {
    "location": LocationClass,
    "damage": DamageClass,
    "cause": FailureCause,
}

#: Column order of cause-label CSV files (after the leading bit_id column).
CAUSE_CSV_ORDER: tuple[FailureCause, ...] = (
    FailureCause.SMOOTH_WEAR,
    FailureCause.THERMAL_WEAR,
    FailureCause.CORE_OUT,
    FailureCause.HARD_FORMATION_TRANSITION,
    FailureCause.SOFT_FORMATION_TRANSITION,
    FailureCause.STICK_SLIP,
    FailureCause.AXIAL,
    FailureCause.WHIRL,
    FailureCause.GREEN,
)


def class_codes(kind: str) -> tuple[str, ...]:
    """Valid string codes for ``kind`` in ("location", "damage", "cause")."""
    try:
        enum_cls = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown taxonomy kind {kind!r}") from None
    return tuple(member.value for member in enum_cls)


def parse_class(code: str, kind: str):
    """Return the ``kind`` class member whose code equals ``code`` exactly.

    Raises :class:`UnknownClassError` for codes outside the taxonomy; the
    match is case-sensitive ("g_g" is not a damage class).
    """
    try:
        enum_cls = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown taxonomy kind {kind!r}") from None
    try:
        return enum_cls(code)
    except ValueError:
        raise UnknownClassError(code, kind, class_codes(kind)) from None
