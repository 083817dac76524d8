import pytest
from hypothesis import given, settings, strategies as st

from bitforensics.aggregation import BitDamageProfile, TopRingout
from bitforensics.rules import (
    RuleBasedCauseIdentifier,
    RuleConfig,
    classify,
    fracture_predicates,
    ringout_predicates,
    wear_predicates,
)
from bitforensics.taxonomy import DamageClass as D
from bitforensics.taxonomy import FailureCause as F
from bitforensics.taxonomy import LocationClass as L

from synth import CELL_CONTAINMENT_FIXTURES, CELL_FIXTURES

ALL_RULES = (
    "isGreen",
    "isSmoothWear",
    "isThermalWear",
    "isRingout",
    "isCoreout",
    "isNoseRingout",
    "isShoulderRingout",
    "isStickSlip",
    "isAxial",
    "isWhirl",
)

NO_RINGOUTS = {
    "is_ringout": False,
    "is_coreout": False,
    "is_nose_ringout": False,
    "is_shoulder_ringout": False,
}


def prof(counts, **kwargs):
    return BitDamageProfile.from_counts(counts, **kwargs)


def pad(counts, greens, filler=0):
    """Counts plus spread green padding and optional neutral low-thermal."""
    merged = dict(counts)
    locs = (L.CORE, L.NOSE, L.SHOULDER, L.GAUGE)
    for i in range(greens):
        key = (locs[i % 4], D.GREEN)
        merged[key] = merged.get(key, 0) + 1
    if filler:
        key = (L.CORE, D.LOW_THERMAL)
        merged[key] = merged.get(key, 0) + filler
    return merged


def causes_of(profile, config=RuleConfig()):
    return {c for c in classify(profile, config).causes}


# ---------------------------------------------------------------------------
# wear predicates


def test_is_green_fires_above_fraction():
    profile = prof({(L.NOSE, D.GREEN): 9, (L.NOSE, D.LOW_THERMAL): 1})
    assert wear_predicates(profile)["is_green"] is True


def test_is_green_boundary_is_strict():
    profile = prof({(L.NOSE, D.GREEN): 8, (L.NOSE, D.LOW_THERMAL): 2})
    assert wear_predicates(profile)["is_green"] is False  # 0.8 is not > 0.8


def test_is_green_counts_unmatched_in_total():
    fired = prof({(L.NOSE, D.GREEN): 9, (L.NOSE, D.LOW_THERMAL): 1})
    assert wear_predicates(fired)["is_green"] is True  # 9 of 10
    quiet = prof({(L.NOSE, D.GREEN): 9, (L.NOSE, D.LOW_THERMAL): 1}, unmatched=2)
    assert wear_predicates(quiet)["is_green"] is False  # 9 of 12 once unmatched count


def test_is_smooth_wear_compares_to_thermal():
    smooth = prof({(L.GAUGE, D.SMOOTH_WEAR): 3, (L.NOSE, D.LOW_THERMAL): 2})
    assert wear_predicates(smooth)["is_smooth_wear"] is True
    tied = prof({(L.GAUGE, D.SMOOTH_WEAR): 2, (L.NOSE, D.MEDIUM_THERMAL): 2})
    assert wear_predicates(tied)["is_smooth_wear"] is False


def test_is_thermal_wear_shoulder_clause():
    profile = prof({(L.SHOULDER, D.LOW_THERMAL): 8})
    assert wear_predicates(profile)["is_thermal_wear"] is True  # 8 > 7 blades
    profile = prof({(L.SHOULDER, D.LOW_THERMAL): 7})
    assert wear_predicates(profile)["is_thermal_wear"] is False


def test_is_thermal_wear_total_clause_scales_with_blades():
    profile = prof({(L.NOSE, D.LOW_THERMAL): 15})
    assert wear_predicates(profile)["is_thermal_wear"] is True  # 15 > 14
    five_blades = prof({(L.NOSE, D.LOW_THERMAL): 11}, num_main_blades=5)
    assert wear_predicates(five_blades)["is_thermal_wear"] is True  # 11 > 10


# ---------------------------------------------------------------------------
# ringout predicates


def test_is_ringout_from_top_view():
    assert ringout_predicates(prof({}, top_ringout=TopRingout.RO))["is_ringout"] is True
    assert ringout_predicates(prof({}, top_ringout=TopRingout.NO_RO))["is_ringout"] is False


def test_is_coreout_threshold():
    assert ringout_predicates(prof({(L.CORE, D.MISSING): 2}))["is_coreout"] is True
    assert ringout_predicates(prof({(L.CORE, D.MISSING): 1}))["is_coreout"] is False


def test_is_nose_ringout_missing_clause():
    profile = prof(pad({(L.NOSE, D.MISSING): 6}, 10))
    assert ringout_predicates(profile)["is_nose_ringout"] is True  # 6 > 5
    profile = prof(pad({(L.NOSE, D.MISSING): 5}, 10))
    assert ringout_predicates(profile)["is_nose_ringout"] is False


def test_is_nose_ringout_low_unmissing_clause():
    profile = prof({(L.NOSE, D.GREEN): 9})  # 9 unmissing < 10
    assert ringout_predicates(profile)["is_nose_ringout"] is True
    profile = prof({(L.NOSE, D.GREEN): 10})
    assert ringout_predicates(profile)["is_nose_ringout"] is False


def test_shoulder_ro_pairing_fires_both_ringouts():
    profile = prof(pad({(L.SHOULDER_RO, D.SHOULDER_RO_DAMAGE): 1}, 10))
    flags = ringout_predicates(profile)
    assert flags["is_nose_ringout"] is True
    assert flags["is_shoulder_ringout"] is True


def test_is_shoulder_ringout_compound_clause():
    profile = prof(
        pad({(L.SHOULDER, D.MISSING): 3, (L.NOSE, D.MISSING): 1}, 10),
        top_ringout=TopRingout.RO,
    )
    assert ringout_predicates(profile)["is_shoulder_ringout"] is True
    # same counts without the top-view ringout
    quiet = prof(pad({(L.SHOULDER, D.MISSING): 3, (L.NOSE, D.MISSING): 1}, 10))
    assert ringout_predicates(quiet)["is_shoulder_ringout"] is False


def test_compound_clauses_blocked_by_coreout():
    profile = prof(
        pad({(L.NOSE, D.MISSING): 4, (L.CORE, D.MISSING): 2}, 12),
        top_ringout=TopRingout.RO,
    )
    flags = ringout_predicates(profile)
    assert flags["is_coreout"] is True
    assert flags["is_nose_ringout"] is False


# ---------------------------------------------------------------------------
# fracture predicates


def test_stickslip_on_missing_core_count():
    profile = prof(pad({(L.CORE, D.MISSING): 2}, 10))
    flags = fracture_predicates(profile, ringouts=dict(NO_RINGOUTS))
    assert flags["is_stickslip"] is True


def test_stickslip_counts_medium_thermal_core():
    profile = prof(pad({(L.CORE, D.MEDIUM_THERMAL): 2}, 10))
    assert fracture_predicates(profile)["is_stickslip"] is True
    profile = prof(pad({(L.CORE, D.MEDIUM_THERMAL): 3}, 10))
    assert fracture_predicates(profile)["is_stickslip"] is False  # equals, not at-least


def test_stickslip_blocked_by_coreout_or_nose_ringout():
    profile = prof(pad({(L.CORE, D.MISSING): 2}, 10))
    assert fracture_predicates(profile)["is_stickslip"] is False  # coreout fires at 2
    ringouts = dict(NO_RINGOUTS, is_nose_ringout=True)
    assert fracture_predicates(profile, ringouts=ringouts)["is_stickslip"] is False


def test_axial_on_any_missing_without_ringout():
    profile = prof(pad({(L.GAUGE, D.MISSING): 1}, 12))
    assert fracture_predicates(profile)["is_axial"] is True
    ringouts = dict(NO_RINGOUTS, is_nose_ringout=True)
    assert fracture_predicates(profile, ringouts=ringouts)["is_axial"] is False


def test_axial_on_normal_fracture_is_unconditional():
    profile = prof(pad({(L.SHOULDER, D.NORMAL_FRACTURE): 1}, 12))
    ringouts = dict(NO_RINGOUTS, is_nose_ringout=True, is_coreout=True)
    assert fracture_predicates(profile, ringouts=ringouts)["is_axial"] is True


def test_axial_thermal_ratio_clause():
    profile = prof({(L.NOSE, D.MEDIUM_THERMAL): 4, (L.SHOULDER, D.MEDIUM_THERMAL): 2})
    assert fracture_predicates(profile)["is_axial"] is True  # 4 > 3.0
    profile = prof({(L.NOSE, D.MEDIUM_THERMAL): 3, (L.SHOULDER, D.MEDIUM_THERMAL): 2})
    assert fracture_predicates(profile)["is_axial"] is False  # 3 not > 3.0


def test_axial_green_shoulder_clause():
    profile = prof({(L.NOSE, D.MEDIUM_THERMAL): 1, (L.SHOULDER, D.GREEN): 3,
                    (L.SHOULDER, D.MEDIUM_THERMAL): 1})
    assert fracture_predicates(profile)["is_axial"] is True  # 3/4 green shoulder
    profile = prof({(L.NOSE, D.MEDIUM_THERMAL): 1, (L.SHOULDER, D.GREEN): 2,
                    (L.SHOULDER, D.MEDIUM_THERMAL): 2})
    assert fracture_predicates(profile)["is_axial"] is False


def test_whirl_clauses():
    assert fracture_predicates(prof({(L.GAUGE, D.MISSING): 1}))["is_whirl"] is True
    assert fracture_predicates(prof({(L.NOSE, D.TANGENTIAL_FRACTURE): 1}))["is_whirl"] is True
    assert fracture_predicates(prof({(L.NOSE, D.GREEN_WITH_TF_LINE): 1}))["is_whirl"] is True
    # shoulder missing indicates whirl only without a shoulder ringout
    shoulder = prof({(L.SHOULDER, D.MISSING): 1})
    assert fracture_predicates(shoulder, ringouts=dict(NO_RINGOUTS))["is_whirl"] is True
    ringouts = dict(NO_RINGOUTS, is_shoulder_ringout=True)
    assert fracture_predicates(shoulder, ringouts=ringouts)["is_whirl"] is False


# ---------------------------------------------------------------------------
# classify


def test_classify_green_suppresses_everything():
    profile = prof({(L.NOSE, D.GREEN): 9, (L.GAUGE, D.MISSING): 1})
    result = classify(profile)
    assert result.causes == {F.GREEN}
    assert len(result.trace) == len(ALL_RULES)


def test_classify_composes_thermal_and_nose_ringout():
    profile = prof({(L.SHOULDER, D.LOW_THERMAL): 8, (L.NOSE, D.MISSING): 6})
    assert causes_of(profile) == {F.THERMAL_WEAR, F.HARD_FORMATION_TRANSITION}


def test_classify_smooth_wear_dominant_with_whirl():
    profile = prof(pad({(L.SHOULDER, D.SMOOTH_WEAR): 5,
                        (L.NOSE, D.TANGENTIAL_FRACTURE): 1}, 6))
    assert causes_of(profile) == {F.SMOOTH_WEAR, F.WHIRL}


def test_classify_heavy_gauge_also_fires_axial():
    # a missing gauge cutter triggers whirl, and the axial missing-cutter
    # clause fires along with it whenever no ringout explains the loss
    profile = prof(pad({(L.SHOULDER, D.SMOOTH_WEAR): 5, (L.GAUGE, D.MISSING): 1}, 6))
    assert causes_of(profile) == {F.SMOOTH_WEAR, F.WHIRL, F.AXIAL}


def test_trace_is_exhaustive_and_ordered():
    result = classify(prof({}))
    assert tuple(e.rule for e in result.trace) == ALL_RULES
    assert all(not e.fired for e in result.trace if e.rule != "isNoseRingout")
    # the empty bit trips the too-few-unmissing-cutters clause
    assert result.trace[5].rule == "isNoseRingout" and result.trace[5].fired


def test_trace_witness_counts():
    profile = prof({(L.GAUGE, D.MISSING): 1})
    whirl = [e for e in classify(profile).trace if e.rule == "isWhirl"][0]
    assert whirl.fired and whirl.witness["heavy_gauge"] == 1


def test_empty_cause_set_when_nothing_fires():
    profile = prof(pad({}, 8, filler=4))  # 12 cutters, 8 green, 4 low thermal
    assert causes_of(profile) == set()


# ---------------------------------------------------------------------------
# cause-table cell fixtures


@pytest.mark.parametrize("name,profile,expected", CELL_FIXTURES, ids=[c[0] for c in CELL_FIXTURES])
def test_cause_table_cells_exact(name, profile, expected):
    assert causes_of(profile) == {expected}


@pytest.mark.parametrize(
    "name,profile,expected",
    CELL_CONTAINMENT_FIXTURES,
    ids=[c[0] for c in CELL_CONTAINMENT_FIXTURES],
)
def test_cause_table_cells_contained(name, profile, expected):
    assert expected in causes_of(profile)


# ---------------------------------------------------------------------------
# config and estimator


def test_rule_config_validation():
    with pytest.raises(ValueError):
        RuleConfig(green_fraction=0.0)
    with pytest.raises(ValueError):
        RuleConfig(nose_shoulder_thermal_ratio=1.0)
    with pytest.raises(ValueError):
        RuleConfig(unmissing_max=0)


def test_thresholds_are_configurable():
    profile = prof({(L.NOSE, D.GREEN): 7, (L.NOSE, D.LOW_THERMAL): 3})
    assert causes_of(profile, RuleConfig(green_fraction=0.5)) == {F.GREEN}


def test_identifier_estimator_api():
    ident = RuleBasedCauseIdentifier(green_fraction=0.5)
    params = ident.get_params()
    assert params["green_fraction"] == 0.5
    assert params["unmissing_max"] == 10
    ident.set_params(unmissing_max=3)
    assert ident.rule_config().unmissing_max == 3
    profile = prof({(L.NOSE, D.GREEN): 7, (L.NOSE, D.LOW_THERMAL): 3})
    assert ident.fit().predict([profile]) == [frozenset({F.GREEN})]
    explained = ident.explain(profile)
    assert explained.causes == {F.GREEN}
    assert len(explained.trace) == len(ALL_RULES)


# ---------------------------------------------------------------------------
# properties


_locations = st.sampled_from([L.CORE, L.NOSE, L.SHOULDER, L.GAUGE])
_damages = st.sampled_from(list(D))


@st.composite
def _profiles(draw):
    n = draw(st.integers(0, 12))
    counts = {}
    for _ in range(n):
        key = (draw(_locations), draw(_damages))
        counts[key] = counts.get(key, 0) + draw(st.integers(1, 4))
    return prof(counts, unmatched=draw(st.integers(0, 3)),
                top_ringout=draw(st.sampled_from(list(TopRingout))))


@settings(max_examples=150, deadline=None)
@given(_profiles())
def test_classify_trace_always_complete(profile):
    result = classify(profile)
    assert tuple(e.rule for e in result.trace) == ALL_RULES
    if F.GREEN in result.causes:
        assert result.causes == {F.GREEN}


@settings(max_examples=100, deadline=None)
@given(_profiles(), st.integers(1, 5))
def test_adding_green_cutters_never_adds_causes(profile, extra):
    # Two clauses are deliberately green-sensitive: the too-few-unmissing
    # nose-ringout gate and the green-shoulder axial clause.  Outside of
    # them, extra green cutters can only turn the whole bit green.
    unmissing = profile.total_detected - profile.damage_total(D.MISSING)
    if unmissing < 10 or profile.count(L.NOSE, D.MEDIUM_THERMAL) >= 1:
        return
    before = causes_of(profile)
    counts = dict(profile.counts)
    key = (L.NOSE, D.GREEN)
    counts[key] = counts.get(key, 0) + extra
    grown = BitDamageProfile.from_counts(
        counts,
        unmatched=profile.unmatched,
        top_ringout=profile.top_ringout,
        num_main_blades=profile.num_main_blades,
    )
    after = causes_of(grown)
    assert after == before or after == {F.GREEN}


def test_green_cutters_can_release_the_nose_ringout_gate():
    # 2 medium-thermal core cutters with few unmissing cutters: the bit
    # reads as a nose ringout, which keeps stick-slip quiet.
    sparse = prof({(L.CORE, D.MEDIUM_THERMAL): 2, (L.NOSE, D.GREEN): 3})
    assert causes_of(sparse) == {F.HARD_FORMATION_TRANSITION}
    # more green cutters lift it over the unmissing bar and stick-slip fires
    dense = prof({(L.CORE, D.MEDIUM_THERMAL): 2, (L.NOSE, D.GREEN): 8})
    assert causes_of(dense) == {F.STICK_SLIP}


def test_green_shoulder_cutters_can_arm_the_axial_clause():
    base = {(L.NOSE, D.MEDIUM_THERMAL): 1, (L.SHOULDER, D.MEDIUM_THERMAL): 1,
            (L.CORE, D.LOW_THERMAL): 8}
    quiet = prof({**base, (L.SHOULDER, D.GREEN): 2})  # shoulder 2/4 green
    assert F.AXIAL not in causes_of(quiet)
    armed = prof({**base, (L.SHOULDER, D.GREEN): 6})  # shoulder 6/8 green
    assert F.AXIAL in causes_of(armed)


@settings(max_examples=100, deadline=None)
@given(_profiles())
def test_heavy_gauge_cutter_forces_whirl_unless_green(profile):
    counts = dict(profile.counts)
    key = (L.GAUGE, D.MISSING)
    counts[key] = counts.get(key, 0) + 1
    grown = BitDamageProfile.from_counts(
        counts,
        unmatched=profile.unmatched,
        top_ringout=profile.top_ringout,
        num_main_blades=profile.num_main_blades,
    )
    causes = causes_of(grown)
    assert F.WHIRL in causes or causes == {F.GREEN}


@settings(max_examples=50, deadline=None)
@given(_profiles(), st.integers(1, 40))
def test_green_threshold_strict_for_any_total(profile, greens):
    # exactly 80% green never fires the green rule
    non_green = {k: v for k, v in profile.counts.items() if k[1] is not D.GREEN}
    non_green_total = sum(non_green.values())
    if non_green_total == 0:
        return
    counts = dict(non_green)
    counts[(L.NOSE, D.GREEN)] = 4 * non_green_total
    exact = BitDamageProfile.from_counts(counts)
    assert wear_predicates(exact)["is_green"] is False
