"""Batch pipeline stages behind the CLI.

Artifact layout under output.dir:

    synth/                the generated dataset (images + manifest.csv)
    enhanced/             enhanced PGMs + manifest.csv pointing at them
    features.fvf          one vector per manifest record, manifest order
    pca.json              fitted projection, pca-over-* methods only
    split.json            train/test record keys
    model.json            trained forest
    report.json           evaluation report
    roc.csv, roc.svg      curve data and plot

Stages communicate only through these files, so each command can run in a
separate invocation and reruns are byte-identical.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import Config
from .dataset import (
    Manifest,
    SampleRecord,
    SplitSpec,
    load_manifest,
    load_split,
    save_manifest,
    save_split,
    split,
)
from .errors import (
    DimensionMismatchError,
    FormatError,
    InvalidParamError,
    VeinforgeError,
)
from .evaluation import ImposterPolicy, build_trials
from .features import (
    FeatureVector,
    lbp_features,
    load_pca,
    mc_features,
    pca_fit,
    pca_transform,
    read_feature_file,
    save_pca,
    write_feature_file,
)
from .forest import (
    ForestParams,
    load_forest,
    match_score,
    predict,
    save_forest,
    train_forest,
)
from .imaging import (
    ClaheParams,
    GrayImage,
    adjust_contrast_brightness,
    clahe,
    gaussian_filter,
    load_grayscale,
    resize,
    write_pgm,
)
from .report import EvalReport, build_report, load_report, report_to_json, roc_csv, roc_svg
from .synth import generate_dataset

THREADS_ENV = "VEINFORGE_THREADS"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidParamError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


class Paths:
    """Where each stage reads and writes under output.dir."""

    def __init__(self, cfg: Config):
        self.out = cfg.get_path("output.dir")
        self.synth_dir = self.out / "synth"
        self.enhanced_dir = self.out / "enhanced"
        self.enhanced_manifest = self.enhanced_dir / "manifest.csv"
        self.features = self.out / "features.fvf"
        self.pca = self.out / "pca.json"
        self.split = self.out / "split.json"
        self.model = self.out / "model.json"
        self.report = self.out / "report.json"
        self.roc_csv = self.out / "roc.csv"
        self.roc_svg = self.out / "roc.svg"


def _with_context(exc: Exception, context: str) -> Exception:
    try:
        return exc.__class__(f"{context}: {exc}")
    except TypeError:  # exception type with a non-string constructor
        return VeinforgeError(f"{context}: {exc}")


# ---------------------------------------------------------------------------
# synth


def cmd_synth(cfg: Config) -> Manifest:
    paths = Paths(cfg)
    return generate_dataset(
        paths.synth_dir,
        classes=cfg.get_int("synth.classes"),
        samples=cfg.get_int("synth.samples"),
        width=cfg.get_int("synth.width"),
        height=cfg.get_int("synth.height"),
        seed=cfg.get_int("synth.seed"),
    )


# ---------------------------------------------------------------------------
# enhance


def enhance_image(img: GrayImage, cfg: Config) -> GrayImage:
    """adjust -> clahe -> gaussian -> resize, all parameters from config."""
    img = adjust_contrast_brightness(
        img, cfg.get_float("enhance.alpha"), cfg.get_float("enhance.beta")
    )
    img = clahe(
        img,
        ClaheParams(
            grid_cols=cfg.get_int("enhance.grid_cols"),
            grid_rows=cfg.get_int("enhance.grid_rows"),
            clip_limit=cfg.get_float("enhance.clip_limit"),
        ),
    )
    sigma = cfg.get_float("enhance.sigma")
    if sigma > 0:
        ksize = cfg.get_int("enhance.ksize")
        if ksize == 0:
            ksize = 2 * math.ceil(3.0 * sigma) + 1
        img = gaussian_filter(img, sigma, ksize)
    return resize(img, cfg.get_int("enhance.width"), cfg.get_int("enhance.height"))


def _enhanced_rel_path(r: SampleRecord) -> str:
    return f"{r.subject_id}/{r.finger_id}/{r.session}_{r.sample_index}.pgm"


def cmd_enhance(cfg: Config) -> Manifest:
    paths = Paths(cfg)
    manifest = load_manifest(cfg.get_path("dataset.manifest"))

    def process(r: SampleRecord) -> SampleRecord:
        source = manifest.resolve(r)
        try:
            img = load_grayscale(source)
            out_img = enhance_image(img, cfg)
        except (VeinforgeError, OSError) as exc:
            raise _with_context(exc, f"record {r.key} ({source})") from exc
        rel = _enhanced_rel_path(r)
        target = paths.enhanced_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        write_pgm(target, out_img)
        return SampleRecord(rel, r.subject_id, r.finger_id, r.session, r.sample_index)

    workers = thread_count()
    if workers == 1:
        records = [process(r) for r in manifest.records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(process, manifest.records))
    out = Manifest(records=records, dataset_name=manifest.dataset_name, base_dir=paths.enhanced_dir)
    paths.enhanced_dir.mkdir(parents=True, exist_ok=True)
    save_manifest(paths.enhanced_manifest, out)
    return out


# ---------------------------------------------------------------------------
# extract


def _base_method(method: str) -> str:
    if method.startswith("pca-over-"):
        return method[len("pca-over-") :]
    return method


def _extract_one(img: GrayImage, cfg: Config, base: str):
    if base == "lbp":
        return lbp_features(
            img, cfg.get_int("extract.grid_cols"), cfg.get_int("extract.grid_rows")
        )
    if base == "mc":
        return mc_features(
            img,
            sigma=cfg.get_float("extract.mc_sigma"),
            grid_cols=cfg.get_int("extract.mc_grid_cols"),
            grid_rows=cfg.get_int("extract.mc_grid_rows"),
        )
    raise InvalidParamError(f"unknown extract method {base!r}")


def _base_tag(cfg: Config, base: str) -> str:
    if base == "lbp":
        return f"lbp-{cfg.get_int('extract.grid_cols')}x{cfg.get_int('extract.grid_rows')}"
    return (
        f"mc-{cfg.get_float('extract.mc_sigma'):g}"
        f"-{cfg.get_int('extract.mc_grid_cols')}x{cfg.get_int('extract.mc_grid_rows')}"
    )


def cmd_extract(cfg: Config) -> Path:
    paths = Paths(cfg)
    method = cfg.get("extract.method")

    if method.startswith("file:"):
        source = Path(method[len("file:") :])
        manifest = load_manifest(cfg.get_path("dataset.manifest"))
        ff = read_feature_file(source)
        if len(ff.vectors) != len(manifest.records):
            raise DimensionMismatchError(
                f"{source} holds {len(ff.vectors)} vectors for "
                f"{len(manifest.records)} manifest records"
            )
        for vec, rec in zip(ff.vectors, manifest.records):
            if vec.label != rec.class_id:
                raise DimensionMismatchError(
                    f"{source}: record {rec.key} labeled {vec.label!r}, "
                    f"manifest says {rec.class_id!r}"
                )
        paths.out.mkdir(parents=True, exist_ok=True)
        write_feature_file(paths.features, ff.vectors, ff.extractor_tag)
        return paths.features

    base = _base_method(method)
    manifest = load_manifest(paths.enhanced_manifest)

    def extract(r: SampleRecord) -> FeatureVector:
        source = manifest.resolve(r)
        try:
            img = load_grayscale(source)
            values = _extract_one(img, cfg, base)
        except (VeinforgeError, OSError) as exc:
            raise _with_context(exc, f"record {r.key} ({source})") from exc
        return FeatureVector(values, r.class_id, r.key)

    workers = thread_count()
    if workers == 1:
        vectors = [extract(r) for r in manifest.records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vectors = list(pool.map(extract, manifest.records))

    tag = _base_tag(cfg, base)
    if method.startswith("pca-over-"):
        k = cfg.get_int("extract.pca_components")
        model = pca_fit(vectors, k)
        paths.out.mkdir(parents=True, exist_ok=True)
        save_pca(paths.pca, model)
        vectors = [pca_transform(model, v) for v in vectors]
        tag = f"pca{k}-over-{tag}"

    paths.out.mkdir(parents=True, exist_ok=True)
    write_feature_file(paths.features, vectors, tag)
    return paths.features


# ---------------------------------------------------------------------------
# train


def _load_aligned_features(cfg: Config, paths: Paths):
    """Feature file rows joined positionally with manifest records."""
    manifest = load_manifest(cfg.get_path("dataset.manifest"))
    ff = read_feature_file(paths.features)
    if len(ff.vectors) != len(manifest.records):
        raise DimensionMismatchError(
            f"{paths.features} holds {len(ff.vectors)} vectors for "
            f"{len(manifest.records)} manifest records"
        )
    for vec, rec in zip(ff.vectors, manifest.records):
        if vec.label != rec.class_id:
            raise DimensionMismatchError(
                f"{paths.features}: record {rec.key} labeled {vec.label!r}, "
                f"manifest says {rec.class_id!r}"
            )
    return manifest, ff


def cmd_train(cfg: Config):
    paths = Paths(cfg)
    manifest, ff = _load_aligned_features(cfg, paths)

    spec = SplitSpec(
        train_fraction=cfg.get_float("split.fraction"), seed=cfg.get_int("split.seed")
    )
    result = split(manifest, spec)
    save_split(paths.split, result)

    train_keys = set(result.train)
    train_vectors = [
        vec for vec, rec in zip(ff.vectors, manifest.records) if rec.key in train_keys
    ]
    fps = cfg.get_int("forest.features_per_split")
    params = ForestParams(
        n_trees=cfg.get_int("forest.n_trees"),
        max_depth=cfg.get_int("forest.max_depth"),
        min_samples_leaf=cfg.get_int("forest.min_samples_leaf"),
        features_per_split=fps if fps > 0 else None,
        seed=cfg.get_int("forest.seed"),
    )
    forest = train_forest(train_vectors, params)
    save_forest(paths.model, forest)
    return forest, result


# ---------------------------------------------------------------------------
# evaluate


def _test_vectors(cfg: Config, paths: Paths) -> list[FeatureVector]:
    manifest, ff = _load_aligned_features(cfg, paths)
    result = load_split(paths.split)
    by_key = {
        rec.key: vec for vec, rec in zip(ff.vectors, manifest.records)
    }
    probes = []
    for key in result.test:
        if key not in by_key:
            raise FormatError(f"{paths.split}: test key {key!r} is not in the manifest")
        vec = by_key[key]
        probes.append(FeatureVector(vec.values, vec.label, key))
    return probes


def cmd_evaluate(cfg: Config) -> EvalReport:
    paths = Paths(cfg)
    forest = load_forest(paths.model)
    probes = _test_vectors(cfg, paths)

    policy_name = cfg.get("evaluate.policy")
    if policy_name == "all":
        policy = ImposterPolicy(mode="all")
    else:
        policy = ImposterPolicy(
            mode=policy_name,
            k=cfg.get_int("evaluate.imposter_k"),
            seed=cfg.get_int("evaluate.imposter_seed"),
        )
    trials = build_trials(forest, probes, policy)
    predictions = [predict(forest, p) for p in probes]
    report = build_report(trials, predictions, cfg.get_float("evaluate.target_fmr"))

    paths.report.write_text(report_to_json(report), encoding="utf-8")
    paths.roc_csv.write_text(roc_csv(report.roc), encoding="utf-8")
    paths.roc_svg.write_text(roc_svg(report.roc), encoding="utf-8")
    return report


# ---------------------------------------------------------------------------
# verify


def extract_probe(cfg: Config, paths: Paths, image_path: str | Path) -> FeatureVector:
    """Enhance and featurize a single probe image with the configured method."""
    method = cfg.get("extract.method")
    if method.startswith("file:"):
        raise InvalidParamError(
            "verify needs an image extractor; the file: method only passes "
            "precomputed vectors through"
        )
    img = enhance_image(load_grayscale(image_path), cfg)
    base = _base_method(method)
    values = _extract_one(img, cfg, base)
    vector = FeatureVector(values, "", str(image_path))
    if method.startswith("pca-over-"):
        vector = pca_transform(load_pca(paths.pca), vector)
    return vector


def cmd_verify(cfg: Config, probe_path: str | Path, claimed_label: str) -> tuple[bool, str]:
    paths = Paths(cfg)
    forest = load_forest(paths.model)
    vector = extract_probe(cfg, paths, probe_path)

    raw = cfg.get("verify.threshold")
    if raw == "auto":
        threshold = float(load_report(paths.report)["operating_threshold"])
    else:
        try:
            threshold = float(raw)
        except ValueError:
            raise InvalidParamError(
                f"verify.threshold must be a number or 'auto', got {raw!r}"
            ) from None

    score = match_score(forest, vector, claimed_label)
    pred = predict(forest, vector)
    accepted = score >= threshold
    decision = "ACCEPT" if accepted else "REJECT"
    line = (
        f"{decision} score={score:.4f} threshold={threshold:.4f} "
        f"predicted={pred.label} confidence={pred.confidence:.4f}"
    )
    return accepted, line
