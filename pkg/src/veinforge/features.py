"""Handcrafted feature extractors and the binary feature-file format.

Extractors return plain float64 vectors; the pipeline attaches labels when it
writes feature files. The file format (magic FVF1) is little-endian
throughout and stores float32 payloads:

    magic   4 bytes  "FVF1"
    version u8       1
    taglen  u16      UTF-8 byte length of the extractor tag
    tag     taglen bytes
    count   u32      record count
    dim     u32      vector dimension
    records count times:
        labellen u16, label (UTF-8), dim float32 values

No padding anywhere; record order is preserved.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    FormatError,
    InvalidParamError,
    OutOfBoundsError,
)
from .imaging import FloatImage, GrayImage, gaussian_kernel

FVF_MAGIC = b"FVF1"
FVF_VERSION = 1

# clockwise neighborhood starting at the top-left pixel; bit i set when
# neighbor i >= center
LBP_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)]


@dataclass
class FeatureVector:
    values: np.ndarray
    label: str
    source_tag: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise InvalidParamError("feature values must be a 1-D vector")


@dataclass
class FeatureFile:
    extractor_tag: str
    dimension: int
    vectors: list[FeatureVector] = field(default_factory=list)


def _pixel_array(img) -> np.ndarray:
    if isinstance(img, GrayImage):
        return img.pixels
    if isinstance(img, FloatImage):
        return img.values
    return np.asarray(img)


# ---------------------------------------------------------------------------
# LBP


def lbp_code_map(img) -> np.ndarray:
    """8-neighbor LBP codes for every interior pixel, shape (H-2, W-2)."""
    values = _pixel_array(img)
    h, w = values.shape
    if h < 3 or w < 3:
        raise InvalidParamError("LBP needs at least a 3x3 image")
    center = values[1 : h - 1, 1 : w - 1]
    codes = np.zeros((h - 2, w - 2), dtype=np.uint8)
    for bit, (dy, dx) in enumerate(LBP_OFFSETS):
        neighbor = values[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        codes |= (neighbor >= center).astype(np.uint8) << bit
    return codes


def lbp_code(img, x: int, y: int) -> int:
    """LBP code of one interior pixel; (x, y) are column and row."""
    values = _pixel_array(img)
    h, w = values.shape
    if not (1 <= x <= w - 2 and 1 <= y <= h - 2):
        raise OutOfBoundsError(f"({x}, {y}) is not interior to a {w}x{h} image")
    center = values[y, x]
    code = 0
    for bit, (dy, dx) in enumerate(LBP_OFFSETS):
        if values[y + dy, x + dx] >= center:
            code |= 1 << bit
    return code


def _cell_bounds(extent: int, cells: int) -> np.ndarray:
    return (np.arange(cells + 1) * extent) // cells


def _cell_index(extent: int, cells: int) -> np.ndarray:
    """Cell number for each coordinate along one axis."""
    bounds = _cell_bounds(extent, cells)
    return np.searchsorted(bounds[1:-1], np.arange(extent), side="right")


def lbp_features(img, grid_cols: int = 8, grid_rows: int = 8) -> np.ndarray:
    """Concatenated per-cell LBP histograms over the image interior.

    The interior is partitioned into grid_rows x grid_cols cells (row-major);
    each cell contributes a 256-bin histogram normalized to unit sum, so the
    vector dimension is 256 * grid_cols * grid_rows.
    """
    if grid_cols < 1 or grid_rows < 1:
        raise InvalidParamError("grid must be at least 1x1")
    codes = lbp_code_map(img)
    ih, iw = codes.shape
    if iw < grid_cols or ih < grid_rows:
        raise InvalidParamError(
            f"interior {iw}x{ih} cannot hold a {grid_cols}x{grid_rows} cell grid"
        )
    cell_x = _cell_index(iw, grid_cols)
    cell_y = _cell_index(ih, grid_rows)
    cell_of = cell_y[:, None] * grid_cols + cell_x[None, :]
    flat = (cell_of.astype(np.int64) * 256 + codes.astype(np.int64)).ravel()
    n_cells = grid_cols * grid_rows
    hist = np.bincount(flat, minlength=n_cells * 256).reshape(n_cells, 256).astype(np.float64)
    counts = hist.sum(axis=1)
    nonzero = counts > 0
    hist[nonzero] /= counts[nonzero, None]
    return hist.ravel()


# ---------------------------------------------------------------------------
# mean curvature


def _convolve_valid(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable valid-mode convolution; shrinks each axis by kernel-1."""
    tmp = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="valid"), 1, values)
    return np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="valid"), 0, tmp)


def mean_curvature_map(img, sigma: float = 2.0) -> FloatImage:
    """Mean curvature H of the intensity surface after Gaussian smoothing.

        H = ((1+fy^2) fxx - 2 fx fy fxy + (1+fx^2) fyy)
            / (2 (1+fx^2+fy^2)^(3/2))

    Smoothing uses a kernel of radius ceil(3*sigma) in valid mode (no edge
    padding, so planar ramps stay exactly planar wherever the stencil fits);
    derivatives are central differences on the smoothed values. Pixels where
    the combined stencil does not fit inside the image are 0. Dark lines on a
    bright background (intensity valleys) come out with H > 0.
    """
    values = _pixel_array(img).astype(np.float64)
    h, w = values.shape
    if h < 5 or w < 5:
        raise InvalidParamError("mean curvature needs at least a 5x5 image")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise InvalidParamError("sigma must be positive and finite")

    radius = math.ceil(3.0 * sigma)
    out = np.zeros((h, w), dtype=np.float64)
    sw, sh = w - 2 * radius, h - 2 * radius
    if sw < 3 or sh < 3:
        return FloatImage(out)  # nothing computable at this size

    kernel = gaussian_kernel(sigma, 2 * radius + 1)
    s = _convolve_valid(values, kernel)

    fx = (s[1:-1, 2:] - s[1:-1, :-2]) / 2.0
    fy = (s[2:, 1:-1] - s[:-2, 1:-1]) / 2.0
    fxx = s[1:-1, 2:] - 2.0 * s[1:-1, 1:-1] + s[1:-1, :-2]
    fyy = s[2:, 1:-1] - 2.0 * s[1:-1, 1:-1] + s[:-2, 1:-1]
    fxy = (s[2:, 2:] - s[2:, :-2] - s[:-2, 2:] + s[:-2, :-2]) / 4.0

    numer = (1.0 + fy * fy) * fxx - 2.0 * fx * fy * fxy + (1.0 + fx * fx) * fyy
    denom = 2.0 * np.power(1.0 + fx * fx + fy * fy, 1.5)
    out[radius + 1 : h - radius - 1, radius + 1 : w - radius - 1] = numer / denom
    return FloatImage(out)


def cell_fractions(mask: np.ndarray, grid_cols: int, grid_rows: int) -> np.ndarray:
    """Fraction of true pixels per grid cell, row-major."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    if grid_cols < 1 or grid_rows < 1:
        raise InvalidParamError("grid must be at least 1x1")
    if w < grid_cols or h < grid_rows:
        raise InvalidParamError(f"mask {w}x{h} cannot hold a {grid_cols}x{grid_rows} grid")
    cell_x = _cell_index(w, grid_cols)
    cell_y = _cell_index(h, grid_rows)
    cell_of = (cell_y[:, None] * grid_cols + cell_x[None, :]).ravel()
    n_cells = grid_cols * grid_rows
    positives = np.bincount(cell_of, weights=mask.ravel().astype(np.float64), minlength=n_cells)
    totals = np.bincount(cell_of, minlength=n_cells)
    return positives / totals


def mc_features(img, sigma: float = 2.0, grid_cols: int = 16, grid_rows: int = 16) -> np.ndarray:
    """Per-cell fraction of positive-mean-curvature (vein mask) pixels."""
    curvature = mean_curvature_map(img, sigma)
    return cell_fractions(curvature.values > 0.0, grid_cols, grid_rows)


# ---------------------------------------------------------------------------
# PCA


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (k, d), rows orthonormal
    eigenvalues: np.ndarray  # (k,), descending, non-negative


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        mat = np.asarray(vectors, dtype=np.float64)
        if mat.ndim != 2:
            raise InvalidParamError("expected a 2-D sample matrix")
        return mat
    dims = {len(v.values) for v in vectors}
    if len(dims) > 1:
        raise DimensionMismatchError(f"inconsistent vector dimensions {sorted(dims)}")
    return np.stack([v.values for v in vectors]).astype(np.float64)


def pca_fit(vectors, k: int) -> PcaModel:
    """Principal axes of mean-centered data.

    Solved through the SVD of the centered matrix, which is the covariance
    eigendecomposition (eigenvalue = s^2 / (n-1), sample covariance) without
    materializing a d x d matrix. Component signs are pinned: the first
    coordinate with magnitude above 1e-12 is made positive.
    """
    x = _as_matrix(vectors)
    n, d = x.shape
    if n < 2:
        raise InvalidParamError("PCA needs at least 2 samples")
    if not 1 <= k <= min(n - 1, d):
        raise InvalidParamError(f"k must lie in [1, {min(n - 1, d)}], got {k}")
    mean = x.mean(axis=0)
    centered = x - mean
    if float(np.sum(centered * centered)) <= 1e-30:
        raise DegenerateDataError("data has zero variance in every direction")
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eigenvalues = (s[:k] ** 2) / (n - 1)
    components = vt[:k].copy()
    for row in components:
        idx = np.argmax(np.abs(row) > 1e-12)
        if row[idx] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, eigenvalues=eigenvalues)


def pca_transform(model: PcaModel, vector: FeatureVector) -> FeatureVector:
    if len(vector.values) != len(model.mean):
        raise DimensionMismatchError(
            f"vector has dimension {len(vector.values)}, model expects {len(model.mean)}"
        )
    projected = model.components @ (vector.values - model.mean)
    return FeatureVector(projected, vector.label, vector.source_tag)


PCA_FORMAT = "veinforge-pca"
PCA_VERSION = 1


def save_pca(path: str | Path, model: PcaModel) -> None:
    payload = {
        "format": PCA_FORMAT,
        "version": PCA_VERSION,
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "eigenvalues": model.eigenvalues.tolist(),
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_pca(path: str | Path) -> PcaModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != PCA_FORMAT:
        raise FormatError(f"{path}: not a {PCA_FORMAT} document")
    if payload.get("version") != PCA_VERSION:
        raise FormatError(f"{path}: unsupported version {payload.get('version')!r}")
    try:
        mean = np.array(payload["mean"], dtype=np.float64)
        components = np.array(payload["components"], dtype=np.float64)
        eigenvalues = np.array(payload["eigenvalues"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed payload: {exc}") from exc
    if components.ndim != 2 or components.shape[1] != mean.shape[0]:
        raise FormatError(f"{path}: component matrix disagrees with mean dimension")
    if eigenvalues.shape != (components.shape[0],):
        raise FormatError(f"{path}: eigenvalue count disagrees with components")
    return PcaModel(mean=mean, components=components, eigenvalues=eigenvalues)


# ---------------------------------------------------------------------------
# feature file I/O


def write_feature_file(path: str | Path, vectors: list[FeatureVector], extractor_tag: str) -> None:
    """Serialize vectors to the FVF1 layout. Values are narrowed to float32;
    that narrowing is the format's contract, not an accident."""
    tag_bytes = extractor_tag.encode("utf-8")
    if len(tag_bytes) > 0xFFFF:
        raise InvalidParamError("extractor tag longer than 65535 bytes")
    if len(vectors) > 0xFFFFFFFF:
        raise InvalidParamError("too many records for a u32 count")
    dimension = len(vectors[0].values) if vectors else 0
    parts = [struct.pack("<4sBH", FVF_MAGIC, FVF_VERSION, len(tag_bytes)), tag_bytes]
    parts.append(struct.pack("<II", len(vectors), dimension))
    for v in vectors:
        if len(v.values) != dimension:
            raise DimensionMismatchError(
                f"record {v.label!r} has dimension {len(v.values)}, file holds {dimension}"
            )
        label_bytes = v.label.encode("utf-8")
        if len(label_bytes) > 0xFFFF:
            raise InvalidParamError(f"label longer than 65535 bytes: {v.label[:40]!r}...")
        parts.append(struct.pack("<H", len(label_bytes)))
        parts.append(label_bytes)
        parts.append(np.asarray(v.values, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_feature_file(path: str | Path) -> FeatureFile:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    data = path.read_bytes()

    def take(n: int, offset: int) -> tuple[bytes, int]:
        if offset + n > len(data):
            raise FormatError(f"{path}: truncated at byte {offset}")
        return data[offset : offset + n], offset + n

    head, pos = take(7, 0)
    magic, version, taglen = struct.unpack("<4sBH", head)
    if magic != FVF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FVF_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    tag_raw, pos = take(taglen, pos)
    counts_raw, pos = take(8, pos)
    count, dimension = struct.unpack("<II", counts_raw)
    vectors: list[FeatureVector] = []
    tag = tag_raw.decode("utf-8")
    for _ in range(count):
        ll_raw, pos = take(2, pos)
        (label_len,) = struct.unpack("<H", ll_raw)
        label_raw, pos = take(label_len, pos)
        values_raw, pos = take(4 * dimension, pos)
        values = np.frombuffer(values_raw, dtype="<f4").astype(np.float64)
        vectors.append(FeatureVector(values, label_raw.decode("utf-8"), tag))
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing byte(s)")
    return FeatureFile(extractor_tag=tag, dimension=dimension, vectors=vectors)
