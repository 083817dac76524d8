"""Drill-bit forensics: from cutter detections to failure-cause diagnoses.

The pipeline is detector-agnostic: any object detector that emits
normalized boxes with class labels and confidences can feed it.  Stages:

1. ingest     - detection line files, bit manifests, cause-label CSVs
2. alignment  - pair each located cutter with its damage detection
3. aggregation- per-bit damage profile and main-damage summary
4. rules      - rule-based multi-label failure-cause identification
5. baseline   - decision-tree / random-forest cause classifiers
6. metrics    - detection (IoU, AP, mAP, confusion) and cause metrics
"""

__version__ = "0.1.0"

from .aggregation import (
    DAMAGE_RANK,
    BitDamageProfile,
    MainDamageSummary,
    TopRingout,
    build_profile,
    main_damage,
    summarize_bit,
)
from .alignment import AlignedCutter, AlignmentConfig, align_bit, align_image, center_distance
from .baseline import (
    FEATURE_NAMES,
    TARGET_CAUSES,
    DecisionTreeCauseClassifier,
    RandomForestCauseClassifier,
    build_features,
    causes_to_targets,
    fit_tree,
    gini,
    leave_one_out_predictions,
    load_model,
    save_model,
    targets_to_causes,
)
from .cause_metrics import (
    DEFAULT_EVAL_CAUSES,
    MultiLabelReport,
    PipelineTally,
    multilabel_report,
    pipeline_tally,
)
from .detection_metrics import (
    average_precision,
    collect_class_matches,
    detection_confusion,
    evaluate_detections,
    iou,
    map_at,
    map_range,
    match,
)
from .errors import BitForensicsError
from .ingest import (
    BitManifest,
    CauseLabelRecord,
    format_cause_labels,
    format_detection_lines,
    load_bit,
    load_bit_file,
    load_dataset,
    load_manifest,
    parse_cause_labels,
    parse_detection_lines,
)
from .pipeline import BitDiagnosis, diagnose_bit, diagnose_dataset, profile_bit
from .records import BitDetections, BoundingBox, Detection, ImageRecord
from .rules import (
    CauseSet,
    RuleBasedCauseIdentifier,
    RuleConfig,
    classify,
    fracture_predicates,
    ringout_predicates,
    wear_predicates,
)
from .taxonomy import DamageClass, FailureCause, LocationClass, parse_class

__all__ = [
    "__version__",
    "AlignedCutter",
    "AlignmentConfig",
    "BitDamageProfile",
    "BitDetections",
    "BitDiagnosis",
    "BitForensicsError",
    "BitManifest",
    "BoundingBox",
    "CauseLabelRecord",
    "CauseSet",
    "DAMAGE_RANK",
    "DamageClass",
    "DecisionTreeCauseClassifier",
    "DEFAULT_EVAL_CAUSES",
    "Detection",
    "FailureCause",
    "FEATURE_NAMES",
    "ImageRecord",
    "LocationClass",
    "MainDamageSummary",
    "MultiLabelReport",
    "PipelineTally",
    "RandomForestCauseClassifier",
    "RuleBasedCauseIdentifier",
    "RuleConfig",
    "TARGET_CAUSES",
    "TopRingout",
    "align_bit",
    "align_image",
    "average_precision",
    "build_features",
    "build_profile",
    "causes_to_targets",
    "center_distance",
    "classify",
    "collect_class_matches",
    "detection_confusion",
    "diagnose_bit",
    "diagnose_dataset",
    "evaluate_detections",
    "fit_tree",
    "format_cause_labels",
    "format_detection_lines",
    "fracture_predicates",
    "gini",
    "iou",
    "leave_one_out_predictions",
    "load_bit",
    "load_bit_file",
    "load_dataset",
    "load_manifest",
    "load_model",
    "main_damage",
    "map_at",
    "map_range",
    "match",
    "multilabel_report",
    "parse_cause_labels",
    "parse_class",
    "parse_detection_lines",
    "pipeline_tally",
    "profile_bit",
    "ringout_predicates",
    "save_model",
    "summarize_bit",
    "targets_to_causes",
    "wear_predicates",
]
