"""Command-line front end.

Subcommands wire the pipeline stages together: ``align`` dumps aligned
cutters per image, ``diagnose`` runs detections through the rule engine,
``fit``/``predict`` drive the tree/forest baselines, ``eval-det`` scores
detections against ground truth, ``eval-cause`` and ``tally`` score cause
predictions.  Reports are JSON or CSV and always embed the effective
configuration, so a report can be traced back to its flags.  Exit codes:
0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .alignment import AlignmentConfig, align_bit
from .baseline import (
    DecisionTreeCauseClassifier,
    RandomForestCauseClassifier,
    build_features,
    causes_to_targets,
    dump_model,
    leave_one_out_predictions,
    load_model,
    targets_to_causes,
)
from .cause_metrics import (
    ALL_EVAL_CAUSES,
    DEFAULT_EVAL_CAUSES,
    multilabel_report,
    pipeline_tally,
)
from .detection_metrics import evaluate_detections
from .errors import BitForensicsError, LengthMismatchError
from .ingest import (
    CauseLabelRecord,
    format_cause_labels,
    load_bit_file,
    load_dataset,
    parse_cause_labels_file,
)
from .pipeline import diagnose_dataset, summarize_dataset
from .rules import RuleConfig, rule_config_to_dict

SCHEMA_VERSION = 1

_USAGE_EXIT = 1
_DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(_USAGE_EXIT)


def _add_rule_flags(parser: argparse.ArgumentParser) -> None:
    for field in dataclasses.fields(RuleConfig):
        parser.add_argument(
            f"--{field.name.replace('_', '-')}",
            type=type(field.default),
            default=field.default,
            help=f"rule threshold (default {field.default})",
        )


def _rule_config(args) -> RuleConfig:
    kwargs = {f.name: getattr(args, f.name) for f in dataclasses.fields(RuleConfig)}
    return RuleConfig(**kwargs)


def _add_tau_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--tau", type=float, default=0.05, help="alignment center-distance threshold"
    )


def _write_text(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_json(payload: dict, out: str | None) -> None:
    _write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def _csv_report(header: list[str], rows: list[list], config: dict) -> str:
    lines = [
        f"# schema_version={SCHEMA_VERSION}",
        "# config=" + json.dumps(config, sort_keys=True),
        ",".join(header),
    ]
    lines.extend(",".join(str(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def _load_bits(args) -> list:
    if getattr(args, "manifest", None):
        return [load_bit_file(args.manifest)]
    return load_dataset(args.dataset)


def _dataset_flags(parser, manifest_too: bool) -> None:
    if manifest_too:
        group = parser.add_mutually_exclusive_group(required=True)
        group.add_argument("--manifest", help="one bit manifest JSON")
        group.add_argument("--dataset", help="directory of bit manifests")
    else:
        parser.add_argument("--dataset", required=True, help="directory of bit manifests")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_align(args) -> int:
    config = AlignmentConfig(tau=args.tau)
    bits = _load_bits(args)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "align",
        "config": {"tau": config.tau},
        "bits": [
            {
                "bit_id": bit.bit_id,
                "images": [
                    {
                        "image_id": image_id,
                        "cutters": [c.to_dict() for c in cutters],
                    }
                    for image_id, cutters in align_bit(bit, config)
                ],
            }
            for bit in bits
        ],
    }
    _write_json(payload, args.out)
    return 0


def _explain_lines(diagnosis) -> list[str]:
    lines = [f"bit {diagnosis.bit_id}: causes = {', '.join(diagnosis.result.cause_codes) or '(none)'}"]
    for entry in diagnosis.result.trace:
        status = "FIRED" if entry.fired else "quiet"
        witness = ", ".join(f"{k}={v}" for k, v in entry.witness.items())
        lines.append(f"  {entry.rule:<18} {status:<5} [{witness}]")
    return lines


def _cmd_diagnose(args) -> int:
    alignment = AlignmentConfig(tau=args.tau)
    rules = _rule_config(args)
    bits = _load_bits(args)
    diagnoses = diagnose_dataset(bits, alignment, rules)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "diagnose",
        "config": {"tau": alignment.tau, "rules": rule_config_to_dict(rules)},
        "bits": [d.to_dict() for d in diagnoses],
    }
    if args.pred_out:
        records = [
            CauseLabelRecord(bit_id=d.bit_id, causes=frozenset(d.result.causes))
            for d in diagnoses
        ]
        Path(args.pred_out).write_text(format_cause_labels(records), encoding="utf-8")
    if args.explain:
        for diagnosis in diagnoses:
            print("\n".join(_explain_lines(diagnosis)))
        if args.out:
            _write_json(payload, args.out)
    else:
        _write_json(payload, args.out)
    return 0


def _features_and_ids(bits, tau: float) -> tuple[list[str], list[list[int]]]:
    summaries = summarize_dataset(bits, AlignmentConfig(tau=tau))
    return [s.bit_id for s in summaries], [build_features(s) for s in summaries]


def _cmd_fit(args) -> int:
    bits = load_dataset(args.dataset)
    labels = {r.bit_id: r.causes for r in parse_cause_labels_file(args.labels)}
    bit_ids, X = _features_and_ids(bits, args.tau)
    missing = [b for b in bit_ids if b not in labels]
    if missing:
        raise LengthMismatchError(f"no cause labels for bits: {', '.join(missing)}")
    Y = [causes_to_targets(labels[b]) for b in bit_ids]
    if args.model == "dt":
        model = DecisionTreeCauseClassifier(
            max_depth=args.max_depth, min_samples_split=args.min_samples_split
        )
    else:
        try:
            max_features = int(args.max_features)
        except ValueError:
            max_features = args.max_features
        model = RandomForestCauseClassifier(
            n_estimators=args.n_trees,
            bootstrap=not args.no_bootstrap,
            max_features=max_features,
            random_state=args.seed,
            max_depth=args.max_depth,
            min_samples_split=args.min_samples_split,
        )
    model.fit(X, Y)
    Path(args.out).write_text(dump_model(model) + "\n", encoding="utf-8")
    if args.loo_pred:
        loo = leave_one_out_predictions(model, X, Y)
        records = [
            CauseLabelRecord(bit_id=b, causes=targets_to_causes(row))
            for b, row in zip(bit_ids, loo)
        ]
        Path(args.loo_pred).write_text(format_cause_labels(records), encoding="utf-8")
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    bits = load_dataset(args.dataset)
    bit_ids, X = _features_and_ids(bits, args.tau)
    records = [
        CauseLabelRecord(bit_id=b, causes=causes)
        for b, causes in zip(bit_ids, model.predict_causes(X))
    ]
    _write_text(format_cause_labels(records), args.out)
    return 0


def _cmd_eval_det(args) -> int:
    bits = load_dataset(args.dataset)
    image_pairs = []
    for bit in bits:
        if args.stream == "location":
            streams = zip(bit.location_images, bit.gt_location_images)
        else:
            streams = zip(bit.damage_images, bit.gt_damage_images)
        for pred_rec, gt_rec in streams:
            image_pairs.append((list(pred_rec.detections), list(gt_rec.detections)))
    labels = _labels_in_use(image_pairs)
    rows = evaluate_detections(
        image_pairs, labels, conf_threshold=args.conf_thr, interpolation=args.ap_interp
    )
    config = {
        "stream": args.stream,
        "conf_thr": args.conf_thr,
        "ap_interp": args.ap_interp,
    }
    header = ["class", "labels", "precision", "recall", "map50", "map50_95"]
    table = [
        [r.label_code, r.n_gt, f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.ap50:.6f}", f"{r.ap50_95:.6f}"]
        for r in rows
    ]
    if args.format == "csv":
        _write_text(_csv_report(header, table, config), args.out)
    else:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": "eval-det",
            "config": config,
            "classes": [dataclasses.asdict(r) for r in rows],
        }
        _write_json(payload, args.out)
    return 0


def _labels_in_use(image_pairs):
    seen = set()
    for preds, gts in image_pairs:
        seen.update(d.label for d in preds)
        seen.update(d.label for d in gts)
    if not seen:
        return []
    enum_cls = type(next(iter(seen)))
    return [label for label in enum_cls if label in seen]


def _aligned_cause_sets(args) -> tuple[list[str], list[frozenset], list[frozenset]]:
    pred = {r.bit_id: r.causes for r in parse_cause_labels_file(args.pred)}
    truth = {r.bit_id: r.causes for r in parse_cause_labels_file(args.truth)}
    if set(pred) != set(truth):
        only_pred = sorted(set(pred) - set(truth))
        only_truth = sorted(set(truth) - set(pred))
        raise LengthMismatchError(
            f"bit_id mismatch between files; only in pred: {only_pred}, only in truth: {only_truth}"
        )
    bit_ids = sorted(pred)
    return bit_ids, [pred[b] for b in bit_ids], [truth[b] for b in bit_ids]


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.6f}"


def _cmd_eval_cause(args) -> int:
    _, pred, truth = _aligned_cause_sets(args)
    causes = ALL_EVAL_CAUSES if args.include_stickslip else DEFAULT_EVAL_CAUSES
    report = multilabel_report(pred, truth, causes)
    config = {"include_stickslip": args.include_stickslip}
    if args.format == "csv":
        header = ["cause", "accuracy", "precision", "recall", "f1"]
        table = [
            [m.cause.code, f"{m.accuracy:.6f}", f"{m.precision:.6f}", f"{m.recall:.6f}", _fmt(m.f1)]
            for m in report.per_cause
        ]
        table.append(
            [
                "macro_average",
                f"{report.macro_accuracy:.6f}",
                f"{report.macro_precision:.6f}",
                f"{report.macro_recall:.6f}",
                _fmt(report.macro_f1),
            ]
        )
        _write_text(_csv_report(header, table, config), args.out)
    else:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": "eval-cause",
            "config": config,
            "report": report.to_dict(),
        }
        _write_json(payload, args.out)
    return 0


def _cmd_tally(args) -> int:
    bit_ids, pred, truth = _aligned_cause_sets(args)
    tally = pipeline_tally(pred, truth, bit_ids)
    if args.format == "csv":
        header = ["bit_id", "existing", "detected", "correct", "false"]
        table = [
            [
                row.bit_id,
                ";".join(sorted(c.code for c in row.existing)),
                ";".join(sorted(c.code for c in row.detected)),
                row.n_correct,
                row.n_false,
            ]
            for row in tally.rows
        ]
        table.append(
            ["total", tally.total_existing, "", tally.correctly_detected, tally.falsely_detected]
        )
        _write_text(_csv_report(header, table, {}), args.out)
    else:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": "tally",
            "config": {},
            "tally": tally.to_dict(),
        }
        _write_json(payload, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bitforensics", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("align", help="dump aligned cutters per image")
    _dataset_flags(p, manifest_too=True)
    _add_tau_flag(p)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(handler=_cmd_align)

    p = sub.add_parser("diagnose", help="rule-based failure-cause diagnosis")
    _dataset_flags(p, manifest_too=True)
    _add_tau_flag(p)
    _add_rule_flags(p)
    p.add_argument("--explain", action="store_true", help="print the rule trace as text")
    p.add_argument("--pred-out", help="also write predicted causes as CSV")
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(handler=_cmd_diagnose)

    p = sub.add_parser("fit", help="train a decision-tree or random-forest baseline")
    _dataset_flags(p, manifest_too=False)
    p.add_argument("--labels", required=True, help="cause-label CSV")
    p.add_argument("--model", choices=("dt", "rf"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-split", type=int, default=2)
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--max-features", default="sqrt", help="'sqrt', 'all' or an integer")
    _add_tau_flag(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--loo-pred", help="write leave-one-out predictions as CSV")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("predict", help="predict causes with a fitted model")
    p.add_argument("--model", required=True, help="model JSON from fit")
    _dataset_flags(p, manifest_too=False)
    _add_tau_flag(p)
    p.add_argument("--out", help="cause CSV output (default stdout)")
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("eval-det", help="detection metrics against ground truth")
    _dataset_flags(p, manifest_too=False)
    p.add_argument("--stream", choices=("location", "damage"), required=True)
    p.add_argument("--conf-thr", type=float, default=0.25)
    p.add_argument("--ap-interp", choices=("continuous", "11point"), default="continuous")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(handler=_cmd_eval_det)

    p = sub.add_parser("eval-cause", help="multi-label cause metrics")
    p.add_argument("--pred", required=True, help="predicted cause CSV")
    p.add_argument("--truth", required=True, help="ground-truth cause CSV")
    p.add_argument("--include-stickslip", action="store_true")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(handler=_cmd_eval_cause)

    p = sub.add_parser("tally", help="per-bit detected vs existing causes")
    p.add_argument("--pred", required=True, help="predicted cause CSV")
    p.add_argument("--truth", required=True, help="ground-truth cause CSV")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(handler=_cmd_tally)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else _USAGE_EXIT
    try:
        return args.handler(args)
    except BitForensicsError as exc:
        print(f"bitforensics: error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except OSError as exc:
        print(f"bitforensics: error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except ValueError as exc:
        print(f"bitforensics: error: {exc}", file=sys.stderr)
        return _DATA_EXIT


def main(argv=None) -> int:
    code = run(argv)
    if argv is None:
        sys.exit(code)
    return code
