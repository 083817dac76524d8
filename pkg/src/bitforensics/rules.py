"""Rule-based failure-cause identification over bit damage profiles.

Ten predicates inspect the damage profile: three wear rules (green, smooth
wear, thermal wear), four ringout rules (top-view ringout, core out, nose
ringout, shoulder ringout) and three fracture/dysfunction rules (stick-slip,
axial, whirl).  Every fired predicate except the top-view helper maps to one
failure cause; a green bit suppresses all other causes.  Each evaluation
records a trace entry with the counts that drove the decision, so a
diagnosis can always be explained.

All thresholds live in :class:`RuleConfig`; the defaults are the
field-calibrated values for 7-blade bits.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

from sklearn.base import BaseEstimator

from .aggregation import BitDamageProfile, TopRingout
from .taxonomy import DamageClass, FailureCause, LocationClass

_CORE = LocationClass.CORE
_NOSE = LocationClass.NOSE
_SHOULDER = LocationClass.SHOULDER
_GAUGE = LocationClass.GAUGE


@dataclass(frozen=True)
class RuleConfig:
    """Thresholds of the rule engine.

    green_fraction: a bit is green when more than this share of all
        detected cutters is green.
    nose_missing_min / shoulder_missing_min: missing-cutter count above
        which a nose/shoulder ringout is called directly.
    unmissing_max: a bit with fewer unmissing cutters than this is so
        eroded that a nose ringout is assumed.
    coreout_missing_min: missing core cutters above this mean core out.
    stickslip_core_count: exact count of damaged core cutters that points
        at stick-slip (when no ringout/core-out explains them).
    heavy_damage_min: missing-cutter floor for the top-view-confirmed
        ringout rules.
    nose_shoulder_thermal_ratio: nose medium-thermal count must exceed
        this multiple of the shoulder count to indicate axial load.
    shoulder_green_fraction: shoulder green share above which nose
        medium-thermal wear is attributed to axial load.
    """

    green_fraction: float = 0.80
    nose_missing_min: int = 5
    shoulder_missing_min: int = 5
    unmissing_max: int = 10
    coreout_missing_min: int = 1
    stickslip_core_count: int = 2
    heavy_damage_min: int = 2
    nose_shoulder_thermal_ratio: float = 1.5
    shoulder_green_fraction: float = 0.75

    def __post_init__(self):
        if not (0.0 < self.green_fraction <= 1.0):
            raise ValueError("green_fraction must be in (0, 1]")
        if not (0.0 < self.shoulder_green_fraction <= 1.0):
            raise ValueError("shoulder_green_fraction must be in (0, 1]")
        if self.nose_shoulder_thermal_ratio <= 1.0:
            raise ValueError("nose_shoulder_thermal_ratio must exceed 1")
        for name in (
            "nose_missing_min",
            "shoulder_missing_min",
            "unmissing_max",
            "coreout_missing_min",
            "stickslip_core_count",
            "heavy_damage_min",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class RuleFiring:
    """One evaluated predicate with the counts that witnessed the outcome."""

    rule: str
    fired: bool
    witness: Mapping[str, object]

    def to_dict(self) -> dict:
        return {"rule": self.rule, "fired": self.fired, "witness": dict(self.witness)}


@dataclass(frozen=True)
class CauseSet:
    """Multi-label diagnosis plus the full predicate trace behind it."""

    causes: frozenset[FailureCause]
    trace: tuple[RuleFiring, ...]

    def __post_init__(self):
        object.__setattr__(self, "causes", frozenset(self.causes))
        object.__setattr__(self, "trace", tuple(self.trace))
        if FailureCause.GREEN in self.causes and len(self.causes) > 1:
            raise ValueError("a green diagnosis excludes every other cause")

    @property
    def cause_codes(self) -> list[str]:
        return sorted(c.code for c in self.causes)

    def to_dict(self) -> dict:
        return {
            "causes": self.cause_codes,
            "trace": [entry.to_dict() for entry in self.trace],
        }


# ---------------------------------------------------------------------------
# predicates


def _total_heavy(profile: BitDamageProfile) -> int:
    return profile.damage_total(DamageClass.MISSING)


def _total_thermal(profile: BitDamageProfile) -> int:
    return profile.damage_total(DamageClass.LOW_THERMAL) + profile.damage_total(
        DamageClass.MEDIUM_THERMAL
    )


def _is_green(profile, cfg) -> RuleFiring:
    green = profile.damage_total(DamageClass.GREEN)
    fired = green > cfg.green_fraction * profile.total_detected
    return RuleFiring(
        "isGreen",
        fired,
        {
            "green": green,
            "total_detected": profile.total_detected,
            "green_fraction": cfg.green_fraction,
        },
    )


def _is_smooth_wear(profile, cfg) -> RuleFiring:
    smooth = profile.damage_total(DamageClass.SMOOTH_WEAR)
    thermal = _total_thermal(profile)
    return RuleFiring(
        "isSmoothWear", smooth > thermal, {"smooth": smooth, "thermal": thermal}
    )


def _is_thermal_wear(profile, cfg) -> RuleFiring:
    shoulder_thermal = profile.thermal(_SHOULDER)
    total_thermal = _total_thermal(profile)
    blades = profile.num_main_blades
    fired = shoulder_thermal > blades or total_thermal > 2 * blades
    return RuleFiring(
        "isThermalWear",
        fired,
        {
            "shoulder_thermal": shoulder_thermal,
            "total_thermal": total_thermal,
            "num_main_blades": blades,
        },
    )


def _is_ringout(profile, cfg) -> RuleFiring:
    fired = profile.top_ringout is TopRingout.RO
    return RuleFiring("isRingout", fired, {"top_view": profile.top_ringout.value})


def _is_coreout(profile, cfg) -> RuleFiring:
    heavy_core = profile.heavy(_CORE)
    return RuleFiring(
        "isCoreout",
        heavy_core > cfg.coreout_missing_min,
        {"heavy_core": heavy_core, "threshold": cfg.coreout_missing_min},
    )


def _shoulder_ro_pair(profile) -> int:
    return profile.count(LocationClass.SHOULDER_RO, DamageClass.SHOULDER_RO_DAMAGE)


def _is_nose_ringout(profile, cfg, ringout: bool, coreout: bool) -> RuleFiring:
    heavy_nose = profile.heavy(_NOSE)
    heavy_shoulder = profile.heavy(_SHOULDER)
    unmissing = profile.total_detected - _total_heavy(profile)
    ro_pair = _shoulder_ro_pair(profile)
    confirmed = (
        ringout
        and heavy_nose > heavy_shoulder
        and not coreout
        and heavy_nose > cfg.heavy_damage_min
    )
    fired = (
        heavy_nose > cfg.nose_missing_min
        or unmissing < cfg.unmissing_max
        or ro_pair >= 1
        or confirmed
    )
    return RuleFiring(
        "isNoseRingout",
        fired,
        {
            "heavy_nose": heavy_nose,
            "heavy_shoulder": heavy_shoulder,
            "unmissing": unmissing,
            "shoulder_ro_pairs": ro_pair,
            "top_ringout": ringout,
        },
    )


def _is_shoulder_ringout(profile, cfg, ringout: bool, coreout: bool) -> RuleFiring:
    heavy_nose = profile.heavy(_NOSE)
    heavy_shoulder = profile.heavy(_SHOULDER)
    ro_pair = _shoulder_ro_pair(profile)
    confirmed = (
        ringout
        and heavy_shoulder > heavy_nose
        and not coreout
        and heavy_shoulder > cfg.heavy_damage_min
    )
    fired = heavy_shoulder > cfg.shoulder_missing_min or ro_pair >= 1 or confirmed
    return RuleFiring(
        "isShoulderRingout",
        fired,
        {
            "heavy_shoulder": heavy_shoulder,
            "heavy_nose": heavy_nose,
            "shoulder_ro_pairs": ro_pair,
            "top_ringout": ringout,
        },
    )


def _is_stickslip(profile, cfg, nose_ringout: bool, coreout: bool) -> RuleFiring:
    heavy_core = profile.heavy(_CORE)
    core_damaged = heavy_core + profile.count(_CORE, DamageClass.MEDIUM_THERMAL)
    fired = (
        not nose_ringout
        and not coreout
        and (heavy_core == cfg.stickslip_core_count or core_damaged == cfg.stickslip_core_count)
    )
    return RuleFiring(
        "isStickSlip",
        fired,
        {
            "heavy_core": heavy_core,
            "core_heavy_or_medium_thermal": core_damaged,
            "target_count": cfg.stickslip_core_count,
        },
    )


def _is_axial(profile, cfg, nose_ringout: bool, coreout: bool) -> RuleFiring:
    heavy_total = _total_heavy(profile)
    normal_fractures = profile.damage_total(DamageClass.NORMAL_FRACTURE)
    nose_medium_thermal = profile.count(_NOSE, DamageClass.MEDIUM_THERMAL)
    shoulder_medium_thermal = profile.count(_SHOULDER, DamageClass.MEDIUM_THERMAL)
    shoulder_total = profile.location_total(_SHOULDER)
    shoulder_green = profile.count(_SHOULDER, DamageClass.GREEN)
    green_share = shoulder_green / shoulder_total if shoulder_total else 0.0
    fired = (
        (heavy_total >= 1 and not nose_ringout and not coreout)
        or normal_fractures >= 1
        or (nose_medium_thermal >= 1 and green_share >= cfg.shoulder_green_fraction)
        or nose_medium_thermal > cfg.nose_shoulder_thermal_ratio * shoulder_medium_thermal
    )
    return RuleFiring(
        "isAxial",
        fired,
        {
            "heavy_total": heavy_total,
            "normal_fractures": normal_fractures,
            "nose_medium_thermal": nose_medium_thermal,
            "shoulder_medium_thermal": shoulder_medium_thermal,
            "shoulder_green_share": green_share,
        },
    )


def _is_whirl(profile, cfg, shoulder_ringout: bool) -> RuleFiring:
    heavy_gauge = profile.heavy(_GAUGE)
    heavy_shoulder = profile.heavy(_SHOULDER)
    nose_tf = profile.count(_NOSE, DamageClass.TANGENTIAL_FRACTURE) + profile.count(
        _NOSE, DamageClass.GREEN_WITH_TF_LINE
    )
    fired = (
        heavy_gauge >= 1
        or (heavy_shoulder >= 1 and not shoulder_ringout)
        or nose_tf >= 1
    )
    return RuleFiring(
        "isWhirl",
        fired,
        {
            "heavy_gauge": heavy_gauge,
            "heavy_shoulder": heavy_shoulder,
            "nose_tangential_fractures": nose_tf,
            "shoulder_ringout": shoulder_ringout,
        },
    )


# ---------------------------------------------------------------------------
# public operations


def wear_predicates(
    profile: BitDamageProfile, config: RuleConfig = RuleConfig()
) -> dict[str, bool]:
    """Evaluate the wear rules: green, smooth wear, thermal wear."""
    return {
        "is_green": _is_green(profile, config).fired,
        "is_smooth_wear": _is_smooth_wear(profile, config).fired,
        "is_thermal_wear": _is_thermal_wear(profile, config).fired,
    }


def ringout_predicates(
    profile: BitDamageProfile, config: RuleConfig = RuleConfig()
) -> dict[str, bool]:
    """Evaluate the ringout rules; nose and shoulder reuse top view + core out."""
    ringout = _is_ringout(profile, config).fired
    coreout = _is_coreout(profile, config).fired
    return {
        "is_ringout": ringout,
        "is_coreout": coreout,
        "is_nose_ringout": _is_nose_ringout(profile, config, ringout, coreout).fired,
        "is_shoulder_ringout": _is_shoulder_ringout(profile, config, ringout, coreout).fired,
    }


def fracture_predicates(
    profile: BitDamageProfile,
    config: RuleConfig = RuleConfig(),
    ringouts: Mapping[str, bool] | None = None,
) -> dict[str, bool]:
    """Evaluate stick-slip, axial and whirl, gated by the ringout outcomes."""
    if ringouts is None:
        ringouts = ringout_predicates(profile, config)
    nose_ringout = ringouts["is_nose_ringout"]
    coreout = ringouts["is_coreout"]
    return {
        "is_stickslip": _is_stickslip(profile, config, nose_ringout, coreout).fired,
        "is_axial": _is_axial(profile, config, nose_ringout, coreout).fired,
        "is_whirl": _is_whirl(profile, config, ringouts["is_shoulder_ringout"]).fired,
    }


_CAUSE_BY_RULE: tuple[tuple[str, FailureCause], ...] = (
    ("isSmoothWear", FailureCause.SMOOTH_WEAR),
    ("isThermalWear", FailureCause.THERMAL_WEAR),
    ("isCoreout", FailureCause.CORE_OUT),
    ("isNoseRingout", FailureCause.HARD_FORMATION_TRANSITION),
    ("isShoulderRingout", FailureCause.SOFT_FORMATION_TRANSITION),
    ("isStickSlip", FailureCause.STICK_SLIP),
    ("isAxial", FailureCause.AXIAL),
    ("isWhirl", FailureCause.WHIRL),
)


def classify(profile: BitDamageProfile, config: RuleConfig = RuleConfig()) -> CauseSet:
    """Diagnose one bit: evaluate all rules, map fired rules to causes.

    The trace always holds every predicate, fired or not.  A green bit
    yields {GREEN} alone, whatever else fired; otherwise each fired rule
    contributes its cause and an empty result means no rule fired.
    """
    green = _is_green(profile, config)
    smooth = _is_smooth_wear(profile, config)
    thermal = _is_thermal_wear(profile, config)
    ringout = _is_ringout(profile, config)
    coreout = _is_coreout(profile, config)
    nose_ringout = _is_nose_ringout(profile, config, ringout.fired, coreout.fired)
    shoulder_ringout = _is_shoulder_ringout(profile, config, ringout.fired, coreout.fired)
    stickslip = _is_stickslip(profile, config, nose_ringout.fired, coreout.fired)
    axial = _is_axial(profile, config, nose_ringout.fired, coreout.fired)
    whirl = _is_whirl(profile, config, shoulder_ringout.fired)

    trace = (
        green,
        smooth,
        thermal,
        ringout,
        coreout,
        nose_ringout,
        shoulder_ringout,
        stickslip,
        axial,
        whirl,
    )
    if green.fired:
        return CauseSet(causes=frozenset({FailureCause.GREEN}), trace=trace)
    fired_by_rule = {entry.rule: entry.fired for entry in trace}
    causes = {cause for rule, cause in _CAUSE_BY_RULE if fired_by_rule[rule]}
    return CauseSet(causes=frozenset(causes), trace=trace)


class RuleBasedCauseIdentifier(BaseEstimator):
    """Estimator facade over the rule engine.

    Stateless: :meth:`fit` only validates the configuration, so the
    identifier drops into pipelines next to the tree/forest baselines.
    ``predict`` maps damage profiles to frozen cause sets; ``explain``
    returns the full :class:`CauseSet` with its trace.
    """

    def __init__(
        self,
        green_fraction: float = 0.80,
        nose_missing_min: int = 5,
        shoulder_missing_min: int = 5,
        unmissing_max: int = 10,
        coreout_missing_min: int = 1,
        stickslip_core_count: int = 2,
        heavy_damage_min: int = 2,
        nose_shoulder_thermal_ratio: float = 1.5,
        shoulder_green_fraction: float = 0.75,
    ):
        self.green_fraction = green_fraction
        self.nose_missing_min = nose_missing_min
        self.shoulder_missing_min = shoulder_missing_min
        self.unmissing_max = unmissing_max
        self.coreout_missing_min = coreout_missing_min
        self.stickslip_core_count = stickslip_core_count
        self.heavy_damage_min = heavy_damage_min
        self.nose_shoulder_thermal_ratio = nose_shoulder_thermal_ratio
        self.shoulder_green_fraction = shoulder_green_fraction

    def rule_config(self) -> RuleConfig:
        return RuleConfig(**self.get_params())

    def fit(self, X=None, y=None) -> "RuleBasedCauseIdentifier":
        self.config_ = self.rule_config()
        return self

    def explain(self, profile: BitDamageProfile) -> CauseSet:
        return classify(profile, self.rule_config())

    def predict(self, profiles: Iterable[BitDamageProfile]) -> list[frozenset[FailureCause]]:
        config = self.rule_config()
        return [classify(profile, config).causes for profile in profiles]


def rule_config_to_dict(config: RuleConfig) -> dict:
    return asdict(config)
