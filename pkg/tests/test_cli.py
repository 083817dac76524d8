import json

import pytest

from bitforensics.cli import main
from bitforensics.ingest import parse_cause_labels
from bitforensics.taxonomy import FailureCause as F

from synth import REFERENCE_TRUTH, write_bit
from bitforensics.taxonomy import DamageClass as D
from bitforensics.taxonomy import LocationClass as L


def _read_json(path):
    return json.loads(path.read_text())


# ---------------------------------------------------------------------------
# exit codes


def test_usage_errors_exit_one(capsys):
    assert main(["diagnose"]) == 1  # missing input flags
    assert main(["no-such-command"]) == 1
    assert main([]) == 1
    capsys.readouterr()


def test_data_errors_exit_two(tmp_path, capsys):
    assert main(["diagnose", "--manifest", str(tmp_path / "missing.json")]) == 2
    err = capsys.readouterr().err
    assert "missing.json" in err


def test_version_exits_zero(capsys):
    assert main(["--version"]) == 0
    capsys.readouterr()


# ---------------------------------------------------------------------------
# align


def test_align_reports_threshold_in_metadata(tmp_path, capsys):
    manifest = write_bit(tmp_path, "b1", [(L.NOSE, D.GREEN)], with_gt=False)
    out = tmp_path / "aligned.json"
    code = main(["align", "--manifest", str(manifest), "--tau", "0.2", "--out", str(out)])
    assert code == 0
    payload = _read_json(out)
    assert payload["config"]["tau"] == 0.2
    assert payload["schema_version"] == 1
    cutters = payload["bits"][0]["images"][0]["cutters"]
    assert cutters[0]["location"] == "N"
    assert cutters[0]["damage"] == "G_G"
    assert cutters[0]["center_distance"] < 0.2


def test_align_to_stdout(tmp_path, capsys):
    manifest = write_bit(tmp_path, "b1", [(L.NOSE, D.GREEN)], with_gt=False)
    assert main(["align", "--manifest", str(manifest)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["command"] == "align"


# ---------------------------------------------------------------------------
# diagnose


def test_diagnose_writes_causes_and_trace(reference_dataset, tmp_path):
    dataset_dir, _ = reference_dataset
    out = tmp_path / "diag.json"
    pred_csv = tmp_path / "pred.csv"
    code = main([
        "diagnose", "--dataset", str(dataset_dir),
        "--out", str(out), "--pred-out", str(pred_csv),
    ])
    assert code == 0
    payload = _read_json(out)
    assert [b["bit_id"] for b in payload["bits"]] == sorted(REFERENCE_TRUTH)
    for entry in payload["bits"]:
        expected = sorted(c.code for c in REFERENCE_TRUTH[entry["bit_id"]])
        assert entry["causes"] == expected
        assert len(entry["trace"]) == 10
        assert {"rule", "fired", "witness"} <= set(entry["trace"][0])
    records = parse_cause_labels(pred_csv.read_text())
    assert {r.bit_id: r.causes for r in records} == REFERENCE_TRUTH


def test_diagnose_is_byte_identical_across_runs(reference_dataset, tmp_path):
    dataset_dir, _ = reference_dataset
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["diagnose", "--dataset", str(dataset_dir), "--out", str(a)]) == 0
    assert main(["diagnose", "--dataset", str(dataset_dir), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_diagnose_explain_prints_rule_trace(reference_dataset, capsys):
    dataset_dir, _ = reference_dataset
    manifest = dataset_dir / "20.json"
    assert main(["diagnose", "--manifest", str(manifest), "--explain"]) == 0
    text = capsys.readouterr().out
    assert "bit 20" in text
    assert "isThermalWear" in text and "FIRED" in text
    assert "shoulder_thermal=8" in text


def test_diagnose_threshold_flags_are_honored(reference_dataset, tmp_path, capsys):
    dataset_dir, _ = reference_dataset
    manifest = dataset_dir / "20.json"
    out = tmp_path / "custom.json"
    # raising the shoulder-thermal bar via a bigger blade count suppresses the call
    code = main([
        "diagnose", "--manifest", str(manifest), "--green-fraction", "0.3",
        "--out", str(out),
    ])
    assert code == 0
    payload = _read_json(out)
    assert payload["config"]["rules"]["green_fraction"] == 0.3
    [entry] = payload["bits"]
    assert entry["causes"] == ["green"]  # 6/15 green > 0.3


# ---------------------------------------------------------------------------
# fit / predict


def test_fit_predict_round_trip(reference_dataset, tmp_path, capsys):
    dataset_dir, truth_csv = reference_dataset
    model_path = tmp_path / "model.json"
    code = main([
        "fit", "--dataset", str(dataset_dir), "--labels", str(truth_csv),
        "--model", "dt", "--out", str(model_path),
    ])
    assert code == 0
    model_doc = _read_json(model_path)
    assert model_doc["kind"] == "decision_tree"
    assert model_doc["n_features"] == 48

    pred_csv = tmp_path / "pred.csv"
    code = main([
        "predict", "--model", str(model_path), "--dataset", str(dataset_dir),
        "--out", str(pred_csv),
    ])
    assert code == 0
    records = parse_cause_labels(pred_csv.read_text())
    predicted = {r.bit_id: r.causes for r in records}
    assert set(predicted) == set(REFERENCE_TRUTH)
    # bits with a unique main-damage summary reproduce their own labels ...
    for bit_id in ("20", "39", "47", "50", "52", "58"):
        assert predicted[bit_id] == REFERENCE_TRUTH[bit_id], bit_id
    # ... while 15/32/49/57 collapse to one identical feature vector
    # (green core, missing nose, low-thermal shoulder, green gauge), so the
    # tree can only answer their per-cause majority
    collapsed = frozenset({F.THERMAL_WEAR, F.HARD_FORMATION_TRANSITION, F.WHIRL})
    for bit_id in ("15", "32", "49", "57"):
        assert predicted[bit_id] == collapsed, bit_id


def test_fit_rf_deterministic_with_seed(reference_dataset, tmp_path):
    dataset_dir, truth_csv = reference_dataset
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["fit", "--dataset", str(dataset_dir), "--labels", str(truth_csv),
            "--model", "rf", "--n-trees", "10", "--seed", "5"]
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_fit_with_loo_predictions(reference_dataset, tmp_path):
    dataset_dir, truth_csv = reference_dataset
    model_path = tmp_path / "model.json"
    loo_csv = tmp_path / "loo.csv"
    code = main([
        "fit", "--dataset", str(dataset_dir), "--labels", str(truth_csv),
        "--model", "rf", "--n-trees", "5", "--out", str(model_path),
        "--loo-pred", str(loo_csv),
    ])
    assert code == 0
    records = parse_cause_labels(loo_csv.read_text())
    assert len(records) == len(REFERENCE_TRUTH)


def test_fit_missing_labels_is_data_error(reference_dataset, tmp_path, capsys):
    dataset_dir, _ = reference_dataset
    truncated = tmp_path / "some.csv"
    truncated.write_text(
        "bit_id,smooth_wear,thermal_wear,core_out,hard_ft,soft_ft,stick_slip,axial,whirl,green\n"
        "15,0,1,0,1,0,0,0,0,0\n"
    )
    code = main([
        "fit", "--dataset", str(dataset_dir), "--labels", str(truncated),
        "--model", "dt", "--out", str(tmp_path / "m.json"),
    ])
    assert code == 2
    capsys.readouterr()


# ---------------------------------------------------------------------------
# eval-det


def test_eval_det_perfect_scores(reference_dataset, tmp_path):
    dataset_dir, _ = reference_dataset
    out = tmp_path / "det.json"
    code = main([
        "eval-det", "--dataset", str(dataset_dir), "--stream", "damage",
        "--out", str(out),
    ])
    assert code == 0
    payload = _read_json(out)
    all_row = payload["classes"][0]
    assert all_row["label_code"] == "all"
    assert all_row["ap50"] == 1.0
    assert all_row["ap50_95"] == 1.0
    assert all_row["precision"] == 1.0 and all_row["recall"] == 1.0


def test_eval_det_csv_carries_schema_and_config(reference_dataset, tmp_path):
    dataset_dir, _ = reference_dataset
    out = tmp_path / "det.csv"
    code = main([
        "eval-det", "--dataset", str(dataset_dir), "--stream", "location",
        "--format", "csv", "--conf-thr", "0.5", "--out", str(out),
    ])
    assert code == 0
    text = out.read_text()
    assert text.startswith("# schema_version=1\n")
    assert '"conf_thr": 0.5' in text
    assert "class,labels,precision,recall,map50,map50_95" in text


def test_eval_det_without_gt_is_data_error(tmp_path, capsys):
    write_bit(tmp_path, "b1", [(L.NOSE, D.GREEN)], with_gt=False)
    code = main(["eval-det", "--dataset", str(tmp_path), "--stream", "damage"])
    assert code == 2
    capsys.readouterr()


# ---------------------------------------------------------------------------
# eval-cause / tally


def _write_pred_csv(reference_dataset, tmp_path) -> str:
    dataset_dir, _ = reference_dataset
    pred_csv = tmp_path / "pred.csv"
    assert main([
        "diagnose", "--dataset", str(dataset_dir),
        "--pred-out", str(pred_csv), "--out", str(tmp_path / "d.json"),
    ]) == 0
    return str(pred_csv)


def test_eval_cause_report(reference_dataset, tmp_path):
    _, truth_csv = reference_dataset
    pred_csv = _write_pred_csv(reference_dataset, tmp_path)
    out = tmp_path / "cause.json"
    code = main(["eval-cause", "--pred", pred_csv, "--truth", str(truth_csv),
                 "--out", str(out)])
    assert code == 0
    payload = _read_json(out)
    by_cause = {c["cause"]: c for c in payload["report"]["causes"]}
    assert "stick_slip" not in by_cause
    assert by_cause["thermal_wear"]["f1"] == 1.0
    # core_out never occurs: defined-as-zero P/R, undefined F1
    assert by_cause["core_out"]["precision"] == 0.0
    assert by_cause["core_out"]["f1"] is None
    assert payload["report"]["macro"]["f1"] == 1.0


def test_eval_cause_csv_renders_dash_for_undefined_f1(reference_dataset, tmp_path):
    _, truth_csv = reference_dataset
    pred_csv = _write_pred_csv(reference_dataset, tmp_path)
    out = tmp_path / "cause.csv"
    code = main(["eval-cause", "--pred", pred_csv, "--truth", str(truth_csv),
                 "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    core_row = [l for l in lines if l.startswith("core_out,")][0]
    assert core_row.endswith(",-")


def test_eval_cause_include_stickslip_flag(reference_dataset, tmp_path):
    _, truth_csv = reference_dataset
    pred_csv = _write_pred_csv(reference_dataset, tmp_path)
    out = tmp_path / "cause.json"
    code = main(["eval-cause", "--pred", pred_csv, "--truth", str(truth_csv),
                 "--include-stickslip", "--out", str(out)])
    assert code == 0
    payload = _read_json(out)
    assert "stick_slip" in {c["cause"] for c in payload["report"]["causes"]}


def test_eval_cause_bit_mismatch_is_data_error(reference_dataset, tmp_path, capsys):
    _, truth_csv = reference_dataset
    other = tmp_path / "other.csv"
    other.write_text(
        "bit_id,smooth_wear,thermal_wear,core_out,hard_ft,soft_ft,stick_slip,axial,whirl,green\n"
        "unknown,0,1,0,0,0,0,0,0,0\n"
    )
    assert main(["eval-cause", "--pred", str(other), "--truth", str(truth_csv)]) == 2
    capsys.readouterr()


def test_tally_counts_24_planted_causes(reference_dataset, tmp_path):
    _, truth_csv = reference_dataset
    pred_csv = _write_pred_csv(reference_dataset, tmp_path)
    out = tmp_path / "tally.json"
    code = main(["tally", "--pred", pred_csv, "--truth", str(truth_csv),
                 "--out", str(out)])
    assert code == 0
    payload = _read_json(out)
    assert payload["tally"]["total_existing"] == 24
    assert payload["tally"]["correctly_detected"] == 24
    assert payload["tally"]["falsely_detected"] == 0
    assert payload["tally"]["recall"] == 1.0


def test_tally_csv_totals_row(reference_dataset, tmp_path):
    _, truth_csv = reference_dataset
    pred_csv = _write_pred_csv(reference_dataset, tmp_path)
    out = tmp_path / "tally.csv"
    code = main(["tally", "--pred", pred_csv, "--truth", str(truth_csv),
                 "--format", "csv", "--out", str(out)])
    assert code == 0
    last = out.read_text().splitlines()[-1]
    assert last == "total,24,,24,0"
