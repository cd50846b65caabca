"""Evaluation report assembly and emission.

The report is a versioned JSON document (format "veinforge-eval-report",
version 1) with fixed field names; validate_report enforces the full shape
so downstream consumers can rely on it. Alongside the JSON the pipeline
emits the ROC as CSV (`threshold,fpr,tpr,fmr,fnmr`, curve order) and as a
small self-contained SVG, plus an aligned plain-text summary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError
from .evaluation import (
    RocPoint,
    TrialSet,
    auc_trapezoid,
    eer,
    mean_confidence,
    operating_threshold,
    per_class_auc,
    roc_curve,
)
from .forest import Prediction

REPORT_FORMAT = "veinforge-eval-report"
REPORT_VERSION = 1


@dataclass
class EvalReport:
    auc: float
    eer: float
    eer_threshold: float
    operating_threshold: float
    fmr_at_operating: float
    fnmr_at_operating: float
    mean_confidence: float
    n_genuine: int
    n_imposter: int
    per_class_auc: dict[str, float] = field(default_factory=dict)
    roc: list[RocPoint] = field(default_factory=list)


def build_report(
    ts: TrialSet, predictions: list[Prediction], target_fmr: float
) -> EvalReport:
    roc = roc_curve(ts)
    eer_value, eer_t = eer(ts)
    op_t, op_fmr, op_fnmr = operating_threshold(ts, target_fmr)
    return EvalReport(
        auc=auc_trapezoid(roc),
        eer=eer_value,
        eer_threshold=eer_t,
        operating_threshold=op_t,
        fmr_at_operating=op_fmr,
        fnmr_at_operating=op_fnmr,
        mean_confidence=mean_confidence(predictions),
        n_genuine=ts.n_genuine,
        n_imposter=ts.n_imposter,
        per_class_auc=per_class_auc(ts),
        roc=roc,
    )


# ---------------------------------------------------------------------------
# JSON


def report_to_json(report: EvalReport) -> str:
    payload = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "auc": report.auc,
        "eer": report.eer,
        "eer_threshold": report.eer_threshold,
        "operating_threshold": report.operating_threshold,
        "fmr_at_operating": report.fmr_at_operating,
        "fnmr_at_operating": report.fnmr_at_operating,
        "mean_confidence": report.mean_confidence,
        "n_genuine": report.n_genuine,
        "n_imposter": report.n_imposter,
        "per_class_auc": dict(sorted(report.per_class_auc.items())),
        "roc": [
            {
                "threshold": p.threshold,
                "fpr": p.fpr,
                "tpr": p.tpr,
                "fmr": p.fmr,
                "fnmr": p.fnmr,
            }
            for p in report.roc
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _require_number(payload: dict, key: str, lo: float | None, hi: float | None):
    if key not in payload:
        raise FormatError(f"report is missing {key!r}")
    value = payload[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"report field {key!r} must be a number, got {value!r}")
    if lo is not None and value < lo:
        raise FormatError(f"report field {key!r} below {lo}: {value}")
    if hi is not None and value > hi:
        raise FormatError(f"report field {key!r} above {hi}: {value}")
    return value


def validate_report(payload) -> None:
    """Raise FormatError unless payload is a complete version-1 report."""
    if not isinstance(payload, dict):
        raise FormatError("report must be a JSON object")
    if payload.get("format") != REPORT_FORMAT:
        raise FormatError(f"not a {REPORT_FORMAT} document")
    if payload.get("version") != REPORT_VERSION:
        raise FormatError(f"unsupported report version {payload.get('version')!r}")
    for key in ("auc", "eer", "fmr_at_operating", "fnmr_at_operating", "mean_confidence"):
        _require_number(payload, key, 0.0, 1.0)
    _require_number(payload, "eer_threshold", 0.0, None)
    _require_number(payload, "operating_threshold", 0.0, None)
    for key in ("n_genuine", "n_imposter"):
        value = payload.get(key)
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise FormatError(f"report field {key!r} must be a positive integer")
    pca = payload.get("per_class_auc")
    if not isinstance(pca, dict):
        raise FormatError("report field 'per_class_auc' must be an object")
    for label, value in pca.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise FormatError(f"per_class_auc[{label!r}] must be a number")
        if not 0.0 <= value <= 1.0:
            raise FormatError(f"per_class_auc[{label!r}] out of [0,1]: {value}")
    roc = payload.get("roc")
    if not isinstance(roc, list) or len(roc) < 2:
        raise FormatError("report field 'roc' must be a list of at least 2 points")
    prev_fpr = None
    prev_t = None
    for i, point in enumerate(roc):
        if not isinstance(point, dict):
            raise FormatError(f"roc[{i}] must be an object")
        for key in ("fpr", "tpr", "fmr", "fnmr"):
            _require_number(point, key, 0.0, 1.0)
        _require_number(point, "threshold", None, None)
        if prev_fpr is not None and point["fpr"] < prev_fpr:
            raise FormatError(f"roc[{i}]: fpr decreases along the curve")
        if prev_t is not None and point["threshold"] >= prev_t:
            raise FormatError(f"roc[{i}]: thresholds must strictly descend")
        prev_fpr = point["fpr"]
        prev_t = point["threshold"]


def load_report(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    validate_report(payload)
    return payload


# ---------------------------------------------------------------------------
# ROC CSV and SVG


def roc_csv(roc: list[RocPoint]) -> str:
    lines = ["threshold,fpr,tpr,fmr,fnmr"]
    for p in roc:
        lines.append(f"{p.threshold!r},{p.fpr!r},{p.tpr!r},{p.fmr!r},{p.fnmr!r}")
    return "\n".join(lines) + "\n"


def roc_svg(roc: list[RocPoint], width: int = 480, height: int = 480) -> str:
    """Hand-written standalone SVG: axes, quarter gridlines, chance diagonal,
    and the ROC polyline. No external renderer or stylesheet."""
    m = 48  # margin around the plot area
    pw, ph = width - 2 * m, height - 2 * m

    def sx(fpr: float) -> float:
        return round(m + fpr * pw, 2)

    def sy(tpr: float) -> float:
        return round(m + (1.0 - tpr) * ph, 2)

    points = " ".join(f"{sx(p.fpr)},{sy(p.tpr)}" for p in roc)
    grid = []
    for i in range(1, 4):
        q = i / 4.0
        grid.append(
            f'<line x1="{sx(q)}" y1="{sy(0)}" x2="{sx(q)}" y2="{sy(1)}" '
            'stroke="#ddd" stroke-width="1"/>'
        )
        grid.append(
            f'<line x1="{sx(0)}" y1="{sy(q)}" x2="{sx(1)}" y2="{sy(q)}" '
            'stroke="#ddd" stroke-width="1"/>'
        )
    labels = []
    for q in (0.0, 0.5, 1.0):
        labels.append(
            f'<text x="{sx(q)}" y="{sy(0) + 18}" font-size="11" '
            f'text-anchor="middle" fill="#444">{q:.1f}</text>'
        )
        labels.append(
            f'<text x="{sx(0) - 8}" y="{sy(q) + 4}" font-size="11" '
            f'text-anchor="end" fill="#444">{q:.1f}</text>'
        )
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        *grid,
        f'<line x1="{sx(0)}" y1="{sy(0)}" x2="{sx(1)}" y2="{sy(1)}" '
        'stroke="#bbb" stroke-width="1" stroke-dasharray="5,4"/>',
        f'<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" '
        'stroke="#222" stroke-width="1"/>',
        f'<polyline points="{points}" fill="none" stroke="#c0392b" stroke-width="2"/>',
        *labels,
        f'<text x="{width / 2}" y="{height - 8}" font-size="12" '
        'text-anchor="middle" fill="#222">false match rate</text>',
        f'<text x="14" y="{height / 2}" font-size="12" text-anchor="middle" '
        f'fill="#222" transform="rotate(-90 14 {height / 2})">true match rate</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# plain-text summary


def render_summary(report: EvalReport) -> str:
    """Aligned text block: headline metrics, the operating point row, and
    per-class AUC."""
    rows = [
        ("trials", f"{report.n_genuine} genuine / {report.n_imposter} imposter"),
        ("auc", f"{report.auc:.4f}"),
        ("eer", f"{report.eer:.4f} (threshold {report.eer_threshold:.2f})"),
        ("mean confidence", f"{report.mean_confidence:.2f}"),
    ]
    label_width = max(len(label) for label, _ in rows)
    lines = ["verification summary", "=" * 20]
    lines += [f"{label:<{label_width}}  {value}" for label, value in rows]

    lines += ["", "operating point", "threshold   fmr    fnmr"]
    lines.append(
        f"{report.operating_threshold:>9.2f}  {report.fmr_at_operating:>5.2f}  "
        f"{report.fnmr_at_operating:>5.2f}"
    )

    if report.per_class_auc:
        lines += ["", "per-class auc"]
        width = max(len(label) for label in report.per_class_auc)
        for label in sorted(report.per_class_auc):
            lines.append(f"{label:<{width}}  {report.per_class_auc[label]:.4f}")
    return "\n".join(lines) + "\n"
