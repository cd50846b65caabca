"""Report JSON schema, CSV/SVG emission, and summary-table fixtures."""

import json
import xml.etree.ElementTree as ET

import pytest

from veinforge.errors import FormatError
from veinforge.evaluation import RocPoint, Trial, TrialSet
from veinforge.forest import Prediction
from veinforge.report import (
    EvalReport,
    build_report,
    render_summary,
    report_to_json,
    roc_csv,
    roc_svg,
    validate_report,
)


def sample_trialset() -> TrialSet:
    trials = [
        Trial(probe_key="g0", claimed_label="a", is_genuine=True, score=0.9),
        Trial(probe_key="g1", claimed_label="b", is_genuine=True, score=0.7),
        Trial(probe_key="g0", claimed_label="b", is_genuine=False, score=0.2),
        Trial(probe_key="g1", claimed_label="a", is_genuine=False, score=0.1),
    ]
    return TrialSet(trials=trials)


def sample_predictions():
    return [
        Prediction(label="a", confidence=0.9, votes={}),
        Prediction(label="b", confidence=0.7, votes={}),
    ]


def test_build_report_fields():
    report = build_report(sample_trialset(), sample_predictions(), target_fmr=0.05)
    assert report.auc == 1.0
    assert report.eer == 0.0
    assert report.n_genuine == 2
    assert report.n_imposter == 2
    assert report.fmr_at_operating <= 0.05
    assert report.mean_confidence == pytest.approx(0.8)
    assert set(report.per_class_auc) == {"a", "b"}


def test_report_json_round_trip_validates():
    report = build_report(sample_trialset(), sample_predictions(), target_fmr=0.05)
    payload = json.loads(report_to_json(report))
    validate_report(payload)  # must not raise
    assert payload["format"] == "veinforge-eval-report"
    assert payload["version"] == 1
    assert payload["auc"] == report.auc
    assert len(payload["roc"]) == len(report.roc)


def test_validate_report_rejects_missing_and_out_of_range():
    report = build_report(sample_trialset(), sample_predictions(), target_fmr=0.05)
    good = json.loads(report_to_json(report))

    for breakage in (
        lambda p: p.pop("auc"),
        lambda p: p.update(auc=1.5),
        lambda p: p.update(auc=True),
        lambda p: p.update(format="other"),
        lambda p: p.update(version=2),
        lambda p: p.update(n_genuine=0),
        lambda p: p.update(per_class_auc=[1.0]),
        lambda p: p.update(roc=[]),
        lambda p: p["roc"][0].pop("fmr"),
        lambda p: p["roc"].reverse(),
    ):
        payload = json.loads(json.dumps(good))
        breakage(payload)
        with pytest.raises(FormatError):
            validate_report(payload)
    validate_report(good)  # untouched copy still fine


def test_validate_report_rejects_non_monotone_fpr():
    report = build_report(sample_trialset(), sample_predictions(), target_fmr=0.05)
    payload = json.loads(report_to_json(report))
    payload["roc"][0]["fpr"] = 0.9  # curve must start at the smallest fpr
    with pytest.raises(FormatError):
        validate_report(payload)


def test_roc_csv_shape():
    report = build_report(sample_trialset(), sample_predictions(), target_fmr=0.05)
    text = roc_csv(report.roc)
    lines = text.strip().split("\n")
    assert lines[0] == "threshold,fpr,tpr,fmr,fnmr"
    assert len(lines) == 1 + len(report.roc)
    for line, point in zip(lines[1:], report.roc):
        t, fpr, tpr, fmr, fnmr = (float(v) for v in line.split(","))
        assert (t, fpr, tpr, fmr, fnmr) == (
            point.threshold,
            point.fpr,
            point.tpr,
            point.fmr,
            point.fnmr,
        )


def test_roc_svg_is_wellformed_and_selfcontained():
    report = build_report(sample_trialset(), sample_predictions(), target_fmr=0.05)
    text = roc_svg(report.roc)
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    ns = {"s": "http://www.w3.org/2000/svg"}
    polylines = root.findall(".//s:polyline", ns)
    assert len(polylines) == 1
    coords = polylines[0].attrib["points"].split()
    assert len(coords) == len(report.roc)
    assert "href" not in text and "url(" not in text  # nothing external


def test_summary_contains_thresholds_table_fixture():
    report = EvalReport(
        auc=0.99,
        eer=0.02,
        eer_threshold=0.3,
        operating_threshold=0.04,
        fmr_at_operating=0.01,
        fnmr_at_operating=0.0,
        mean_confidence=0.92,
        n_genuine=10,
        n_imposter=90,
        per_class_auc={"c1": 1.0},
        roc=[
            RocPoint(threshold=1.0, tpr=0.0, fpr=0.0, fmr=0.0, fnmr=1.0),
            RocPoint(threshold=0.0, tpr=1.0, fpr=1.0, fmr=1.0, fnmr=0.0),
        ],
    )
    text = render_summary(report)
    assert "threshold" in text and "fmr" in text and "fnmr" in text
    # the operating row renders threshold 0.04, fmr 0.01, fnmr 0.00
    row = [line for line in text.splitlines() if "0.04" in line]
    assert len(row) == 1
    assert "0.01" in row[0]
    assert "0.00" in row[0]
    # mean confidence cell renders with two decimals
    assert "0.92" in text


def test_summary_aligns_columns():
    report = build_report(sample_trialset(), sample_predictions(), target_fmr=0.05)
    text = render_summary(report)
    lines = text.splitlines()
    assert lines[0] == "verification summary"
    auc_line = next(line for line in lines if line.startswith("auc"))
    conf_line = next(line for line in lines if line.startswith("mean confidence"))
    value_col = len("mean confidence") + 2  # widest label plus two spaces
    assert auc_line[:value_col].rstrip() == "auc"
    assert conf_line[:value_col].rstrip() == "mean confidence"
    assert auc_line[value_col] != " "
    assert conf_line[value_col] != " "
