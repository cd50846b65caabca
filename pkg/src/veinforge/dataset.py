"""Dataset manifests, directory layout scanning, validation, and splits.

A manifest is a CSV with header image_path,subject_id,finger_id,session,
sample_index. The verification class of a record is subject plus finger.
Splits are per-class, stratified, and a pure function of (manifest records,
seed): class members are sorted by (session, sample_index, path) first so the
outcome does not depend on row order in the file.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateRecordError,
    FormatError,
    InvalidParamError,
    LayoutMismatchError,
    ParseError,
    UnsplittableClassError,
)
from .imaging import load_grayscale
from .rng import SplitMix64, fnv1a64

MANIFEST_HEADER = ["image_path", "subject_id", "finger_id", "session", "sample_index"]

IMAGE_SUFFIXES = {".pgm", ".png"}

SPLIT_FORMAT = "veinforge-split"
SPLIT_VERSION = 1


@dataclass(frozen=True)
class SampleRecord:
    image_path: str
    subject_id: str
    finger_id: str
    session: int
    sample_index: int

    @property
    def class_id(self) -> str:
        return f"{self.subject_id}/{self.finger_id}"

    @property
    def key(self) -> str:
        return f"{self.subject_id}|{self.finger_id}|{self.session}|{self.sample_index}"


@dataclass
class ExpectedCounts:
    """Declared totals to validate a scanned tree against. Any field may be
    None, which skips its checks."""

    subjects: int | None = None
    fingers: int | None = None
    images_per_finger: int | None = None
    total_images: int | None = None
    width: int | None = None
    height: int | None = None


@dataclass
class Manifest:
    records: list[SampleRecord]
    dataset_name: str = ""
    expected: ExpectedCounts | None = None
    base_dir: Path = field(default_factory=lambda: Path("."))

    def resolve(self, record: SampleRecord) -> Path:
        p = Path(record.image_path)
        return p if p.is_absolute() else self.base_dir / p

    def class_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.class_id, None)
        return sorted(seen)


# Published dataset shapes for the named layouts. The UTFVP and PLUSVein-FV3
# descriptions disagree internally on images per finger (their declared totals
# imply 4 and 5), so only the trustworthy fields are declared for those two
# and the per-finger check is left to the caller.
LAYOUT_EXPECTED = {
    "fv-usm": ExpectedCounts(123, 4, 6, 2952, 640, 480),
    "utfvp": ExpectedCounts(60, 6, None, 1440, 672, 380),
    "plusvein-fv3": ExpectedCounts(60, 6, None, 1800, 736, 192),
}

LAYOUTS = ("fv-usm", "utfvp", "plusvein-fv3", "flat")


# ---------------------------------------------------------------------------
# manifest CSV


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    records: list[SampleRecord] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty manifest") from None
        if header != MANIFEST_HEADER:
            raise ParseError(f"{path}: bad header {header!r}, expected {MANIFEST_HEADER!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            image_path, subject, finger, session_s, index_s = row
            if not image_path or not subject or not finger:
                raise ParseError(f"{path}:{lineno}: empty field")
            try:
                session = int(session_s)
                sample_index = int(index_s)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: session and sample_index must be integers") from None
            rec = SampleRecord(image_path, subject, finger, session, sample_index)
            if rec.key in seen:
                raise DuplicateRecordError(f"{path}:{lineno}: duplicate record {rec.key}")
            seen.add(rec.key)
            records.append(rec)
    return Manifest(records, base_dir=path.parent)


def save_manifest(path: str | Path, manifest: Manifest) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for r in manifest.records:
            writer.writerow([r.image_path, r.subject_id, r.finger_id, r.session, r.sample_index])


# ---------------------------------------------------------------------------
# layout scanning


def _image_files(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def _scan_nested(root: Path) -> list[SampleRecord]:
    """<root>/<subject>/<finger>/<images>; sample indices follow sorted name
    order within each finger, sessions are folded to 1."""
    records = []
    subjects = sorted(d for d in root.iterdir() if d.is_dir())
    if not subjects:
        raise LayoutMismatchError(f"{root}: no subject directories")
    for subj in subjects:
        fingers = sorted(d for d in subj.iterdir() if d.is_dir())
        if not fingers:
            raise LayoutMismatchError(f"{subj}: expected finger subdirectories")
        for finger in fingers:
            files = _image_files(finger)
            if not files:
                raise LayoutMismatchError(f"{finger}: no images")
            for i, f in enumerate(files, start=1):
                records.append(
                    SampleRecord(str(f.relative_to(root)), subj.name, finger.name, 1, i)
                )
    return records


def _scan_flat(root: Path) -> list[SampleRecord]:
    """<root>/<class>/<images>; the directory name is the subject, finger "0"."""
    records = []
    classes = sorted(d for d in root.iterdir() if d.is_dir())
    if not classes:
        raise LayoutMismatchError(f"{root}: no class directories")
    for cls in classes:
        files = _image_files(cls)
        if not files:
            raise LayoutMismatchError(f"{cls}: no images")
        for i, f in enumerate(files, start=1):
            records.append(SampleRecord(str(f.relative_to(root)), cls.name, "0", 1, i))
    return records


def _scan_utfvp(root: Path) -> list[SampleRecord]:
    """<root>/<subject>/<subject>_<finger>_<sample>[_extra].<ext>."""
    records = []
    subjects = sorted(d for d in root.iterdir() if d.is_dir())
    if not subjects:
        raise LayoutMismatchError(f"{root}: no subject directories")
    for subj in subjects:
        files = _image_files(subj)
        if not files:
            raise LayoutMismatchError(f"{subj}: no images")
        for f in files:
            parts = f.stem.split("_")
            if len(parts) < 3 or parts[0] != subj.name:
                raise LayoutMismatchError(
                    f"{f}: expected <subject>_<finger>_<sample> naming under {subj.name}"
                )
            try:
                sample = int(parts[2])
            except ValueError:
                raise LayoutMismatchError(f"{f}: sample index {parts[2]!r} is not an integer") from None
            records.append(SampleRecord(str(f.relative_to(root)), subj.name, parts[1], 1, sample))
    return records


def generate_manifest(root: str | Path, layout: str) -> Manifest:
    """Scan a dataset tree into a manifest with deterministic ordering.

    Layout conventions (documented in the README):
      fv-usm, plusvein-fv3: root/<subject>/<finger>/<images>
      utfvp:                root/<subject>/<subject>_<finger>_<sample>*.png
      flat:                 root/<class>/<images>
    """
    root = Path(root)
    if layout not in LAYOUTS:
        raise InvalidParamError(f"unknown layout {layout!r}, expected one of {LAYOUTS}")
    if not root.is_dir():
        raise FileNotFoundError(str(root))
    if layout == "flat":
        records = _scan_flat(root)
    elif layout == "utfvp":
        records = _scan_utfvp(root)
    else:
        records = _scan_nested(root)
    seen: set[str] = set()
    for r in records:
        if r.key in seen:
            raise DuplicateRecordError(f"duplicate record {r.key} under {root}")
        seen.add(r.key)
    return Manifest(records, dataset_name=layout, expected=LAYOUT_EXPECTED.get(layout), base_dir=root)


# ---------------------------------------------------------------------------
# validation


@dataclass
class Check:
    name: str
    status: str  # pass | fail | skipped
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"check": c.name, "status": c.status, "detail": c.detail}, sort_keys=True)
            for c in self.checks
        ]
        return "\n".join(lines) + "\n"


def _dimension_probe_indices(n: int, sample_size: int = 5) -> list[int]:
    if n <= sample_size:
        return list(range(n))
    return sorted({0, n // 4, n // 2, (3 * n) // 4, n - 1})


def validate_manifest(manifest: Manifest, open_images: bool = True) -> ValidationReport:
    """Compare a manifest against its declared totals.

    Checks run only where the corresponding expectation is declared; the
    arithmetic check flags internally inconsistent declarations instead of
    guessing which number to trust.
    """
    exp = manifest.expected or ExpectedCounts()
    checks: list[Check] = []
    records = manifest.records

    def add(name: str, ok: bool | None, detail: str = ""):
        status = "skipped" if ok is None else ("pass" if ok else "fail")
        checks.append(Check(name, status, detail))

    if exp.total_images is None:
        add("total_records", None, "no declared total")
    else:
        add(
            "total_records",
            len(records) == exp.total_images,
            f"found {len(records)}, declared {exp.total_images}",
        )

    subjects = sorted({r.subject_id for r in records})
    if exp.subjects is None:
        add("subjects", None, "no declared subject count")
    else:
        add("subjects", len(subjects) == exp.subjects, f"found {len(subjects)}, declared {exp.subjects}")

    per_subject: dict[str, set[str]] = {}
    for r in records:
        per_subject.setdefault(r.subject_id, set()).add(r.finger_id)
    if exp.fingers is None:
        add("fingers_per_subject", None, "no declared finger count")
    else:
        bad = {s: len(f) for s, f in per_subject.items() if len(f) != exp.fingers}
        add(
            "fingers_per_subject",
            not bad,
            f"{len(bad)} subject(s) deviate from {exp.fingers}" if bad else f"all {exp.fingers}",
        )

    per_class: dict[str, int] = {}
    for r in records:
        per_class[r.class_id] = per_class.get(r.class_id, 0) + 1
    if exp.images_per_finger is None:
        add("images_per_class", None, "no declared per-finger count")
    else:
        bad_classes = sum(1 for n in per_class.values() if n != exp.images_per_finger)
        add(
            "images_per_class",
            bad_classes == 0,
            f"{bad_classes} class(es) deviate from {exp.images_per_finger}"
            if bad_classes
            else f"all {exp.images_per_finger}",
        )

    if None in (exp.subjects, exp.fingers, exp.images_per_finger, exp.total_images):
        add("declared_arithmetic", None, "incomplete declaration")
    else:
        product = exp.subjects * exp.fingers * exp.images_per_finger
        add(
            "declared_arithmetic",
            product == exp.total_images,
            f"{exp.subjects}*{exp.fingers}*{exp.images_per_finger}={product} vs declared {exp.total_images}",
        )

    if not open_images or exp.width is None or exp.height is None:
        add("image_dimensions", None, "not probed")
    elif not records:
        add("image_dimensions", False, "no records to probe")
    else:
        mismatches = []
        for i in _dimension_probe_indices(len(records)):
            rec = records[i]
            try:
                img = load_grayscale(manifest.resolve(rec))
            except Exception as exc:
                mismatches.append(f"{rec.image_path}: {exc}")
                continue
            if (img.width, img.height) != (exp.width, exp.height):
                mismatches.append(f"{rec.image_path}: {img.width}x{img.height}")
        add(
            "image_dimensions",
            not mismatches,
            "; ".join(mismatches) if mismatches else f"probed {exp.width}x{exp.height}",
        )

    return ValidationReport(checks)


# ---------------------------------------------------------------------------
# splitting


@dataclass
class SplitSpec:
    train_fraction: float = 0.67
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidParamError("train_fraction must lie strictly between 0 and 1")


@dataclass
class Split:
    train: list[str]  # record keys
    test: list[str]
    train_fraction: float
    seed: int


def split(manifest: Manifest, spec: SplitSpec) -> Split:
    """Per-class stratified split.

    Each class's records are sorted by (session, sample_index, path), shuffled
    by SplitMix64 seeded with spec.seed XOR fnv1a64(class_id), and the first
    ceil(train_fraction * n) go to train. A class that cannot keep at least
    one sample on each side is an error, not a silent adjustment.
    """
    by_class: dict[str, list[SampleRecord]] = {}
    for r in manifest.records:
        by_class.setdefault(r.class_id, []).append(r)
    if not by_class:
        raise UnsplittableClassError("manifest has no records")

    train: list[str] = []
    test: list[str] = []
    for class_id in sorted(by_class):
        members = sorted(by_class[class_id], key=lambda r: (r.session, r.sample_index, r.image_path))
        n = len(members)
        if n < 2:
            raise UnsplittableClassError(f"class {class_id} has {n} sample(s), need at least 2")
        order = list(range(n))
        SplitMix64(spec.seed ^ fnv1a64(class_id)).shuffle(order)
        n_train = math.ceil(spec.train_fraction * n)
        if n_train < 1 or n_train >= n:
            raise UnsplittableClassError(
                f"class {class_id}: fraction {spec.train_fraction} leaves no test sample for n={n}"
            )
        for pos in order[:n_train]:
            train.append(members[pos].key)
        for pos in order[n_train:]:
            test.append(members[pos].key)
    return Split(train, test, spec.train_fraction, spec.seed)


def save_split(path: str | Path, s: Split) -> None:
    payload = {
        "format": SPLIT_FORMAT,
        "version": SPLIT_VERSION,
        "seed": s.seed,
        "train_fraction": s.train_fraction,
        "train": s.train,
        "test": s.test,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8")


def load_split(path: str | Path) -> Split:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != SPLIT_FORMAT:
        raise FormatError(f"{path}: not a {SPLIT_FORMAT} file")
    if payload.get("version") != SPLIT_VERSION:
        raise FormatError(f"{path}: unsupported version {payload.get('version')!r}")
    try:
        return Split(
            list(payload["train"]),
            list(payload["test"]),
            float(payload["train_fraction"]),
            int(payload["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed split payload: {exc}") from exc
