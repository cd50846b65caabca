"""Grayscale image containers, PGM I/O, and the enhancement operators.

All pixel math is done in float64 and rounded once, half away from zero, when
an 8-bit result is produced. The operators are pure: the same input always
yields a bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptImageError,
    EmptyHistogramError,
    InvalidParamError,
    UnsupportedFormatError,
)

__all__ = [
    "GrayImage",
    "FloatImage",
    "Histogram",
    "TileLut",
    "ClaheParams",
    "load_grayscale",
    "write_pgm",
    "histogram",
    "adjust_contrast_brightness",
    "clip_histogram",
    "equalize_lut",
    "clahe",
    "gaussian_filter",
    "resize",
    "normalize",
]


def _round_half_away(values: np.ndarray) -> np.ndarray:
    """Round half away from zero (numpy's round() is half-to-even)."""
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


@dataclass
class GrayImage:
    """8-bit single-channel image. pixels is a 2-D uint8 array, row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 2:
            raise InvalidParamError("GrayImage requires a 2-D pixel array")
        if self.pixels.dtype != np.uint8:
            if not (
                np.issubdtype(self.pixels.dtype, np.integer)
                and self.pixels.size > 0
                and 0 <= int(self.pixels.min())
                and int(self.pixels.max()) <= 255
            ) and self.pixels.size > 0:
                raise InvalidParamError("GrayImage pixels must be uint8 or ints in [0, 255]")
            self.pixels = self.pixels.astype(np.uint8)
        if self.width < 1 or self.height < 1:
            raise InvalidParamError("image dimensions must be at least 1x1")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class FloatImage:
    """Float64 image used by normalized and derivative-domain operators."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise InvalidParamError("FloatImage requires a 2-D value array")
        if self.width < 1 or self.height < 1:
            raise InvalidParamError("image dimensions must be at least 1x1")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class Histogram:
    """256-bin intensity histogram. total is always sum(bins)."""

    bins: np.ndarray

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.int64)
        if self.bins.shape != (256,):
            raise InvalidParamError("histogram must have exactly 256 bins")
        if np.any(self.bins < 0):
            raise InvalidParamError("histogram bins must be non-negative")

    @property
    def total(self) -> int:
        return int(self.bins.sum())


@dataclass
class TileLut:
    """Monotone non-decreasing value mapping produced by equalization."""

    mapping: np.ndarray

    def __post_init__(self):
        self.mapping = np.asarray(self.mapping, dtype=np.uint8)
        if self.mapping.shape != (256,):
            raise InvalidParamError("LUT must map exactly 256 values")


@dataclass
class ClaheParams:
    grid_cols: int = 8
    grid_rows: int = 8
    clip_limit: float = 2.0

    def __post_init__(self):
        if self.grid_cols < 1 or self.grid_rows < 1:
            raise InvalidParamError("CLAHE grid must be at least 1x1")
        if not (self.clip_limit > 0.0 and math.isfinite(self.clip_limit)):
            raise InvalidParamError("clip_limit must be positive and finite")


# ---------------------------------------------------------------------------
# PGM / PNG I/O


def _parse_pgm_tokens(data: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens starting at `start`,
    skipping # comments. Returns (tokens, index just past the last token)."""
    tokens: list[int] = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace() and data[j] != ord("#"):
            j += 1
        if j == i:
            raise CorruptImageError("unexpected end of PGM header")
        try:
            tokens.append(int(data[i:j]))
        except ValueError as exc:
            raise CorruptImageError(f"bad PGM header token {data[i:j]!r}") from exc
        i = j
    return tokens, i


def _read_pgm(data: bytes, path: Path) -> GrayImage:
    magic = data[:2]
    try:
        (width, height, maxval), pos = _parse_pgm_tokens(data, 3, 2)
    except CorruptImageError as exc:
        raise CorruptImageError(f"{path}: {exc}") from exc
    if width < 1 or height < 1:
        raise CorruptImageError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        pos += 1
        raster = data[pos : pos + width * height]
        if len(raster) < width * height:
            raise CorruptImageError(f"{path}: truncated P5 raster")
        pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
        return GrayImage(pixels.copy())
    # P2: ASCII samples
    try:
        values, _ = _parse_pgm_tokens(data, width * height, pos)
    except CorruptImageError as exc:
        raise CorruptImageError(f"{path}: truncated P2 raster") from exc
    arr = np.array(values, dtype=np.int64)
    if arr.min() < 0 or arr.max() > 255:
        raise CorruptImageError(f"{path}: P2 sample outside [0, 255]")
    return GrayImage(arr.astype(np.uint8).reshape(height, width))


def _read_png(path: Path) -> GrayImage:
    try:
        from PIL import Image
    except ImportError as exc:
        raise UnsupportedFormatError(
            f"{path}: PNG support requires Pillow (pip install veinforge[png])"
        ) from exc
    with Image.open(path) as im:
        if im.mode != "L":
            raise UnsupportedFormatError(
                f"{path}: only 8-bit grayscale PNG is supported, got mode {im.mode}"
            )
        pixels = np.asarray(im, dtype=np.uint8)
    return GrayImage(pixels)


def load_grayscale(path: str | Path) -> GrayImage:
    """Load a PGM (P2 or P5, maxval 255) or an 8-bit grayscale PNG."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    data = path.read_bytes()
    if data[:2] in (b"P5", b"P2"):
        return _read_pgm(data, path)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _read_png(path)
    if data[:2] in (b"P3", b"P6"):
        raise UnsupportedFormatError(f"{path}: color PPM inputs are rejected")
    raise UnsupportedFormatError(f"{path}: not a PGM or PNG file")


def write_pgm(path: str | Path, img: GrayImage, binary: bool = True) -> None:
    """Write a canonical PGM. Round trip through load_grayscale is bit-exact."""
    path = Path(path)
    if binary:
        header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
        path.write_bytes(header + img.pixels.tobytes())
        return
    lines = [f"P2\n{img.width} {img.height}\n255"]
    for row in img.pixels:
        lines.append(" ".join(str(int(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


# ---------------------------------------------------------------------------
# Point and histogram operators


def histogram(img: GrayImage) -> Histogram:
    return Histogram(np.bincount(img.pixels.ravel(), minlength=256))


def adjust_contrast_brightness(img: GrayImage, alpha: float = 1.0, beta: float = 0.0) -> GrayImage:
    """Per-pixel clamp(round(alpha * p + beta)) into [0, 255]."""
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise InvalidParamError("alpha must be positive and finite")
    if not math.isfinite(beta):
        raise InvalidParamError("beta must be finite")
    out = _round_half_away(alpha * img.pixels.astype(np.float64) + beta)
    return GrayImage(np.clip(out, 0, 255).astype(np.uint8))


def clip_histogram(hist: Histogram, clip_limit_abs: int) -> Histogram:
    """Clip bins at an absolute count and redistribute the excess.

    Single pass: the excess over the limit is shared as floor(excess / 256)
    added to every bin, and the remainder goes one count per bin starting at
    bin 0. Bins may therefore end up to ceil(excess / 256) above the limit;
    total mass is conserved exactly.
    """
    if clip_limit_abs < 1:
        raise InvalidParamError("absolute clip limit must be at least 1")
    bins = np.minimum(hist.bins, clip_limit_abs)
    excess = int(hist.bins.sum() - bins.sum())
    if excess > 0:
        share, remainder = divmod(excess, 256)
        bins = bins + share
        bins[:remainder] += 1
    return Histogram(bins)


def equalize_lut(hist: Histogram) -> TileLut:
    """Equalization lookup: mapping[v] = round(255 * CDF(v))."""
    total = hist.total
    if total == 0:
        raise EmptyHistogramError("cannot equalize an empty histogram")
    cdf = np.cumsum(hist.bins, dtype=np.float64) / float(total)
    mapping = np.floor(255.0 * cdf + 0.5)  # cdf >= 0, plain floor(x+0.5) rounds half up
    return TileLut(mapping.astype(np.uint8))


# ---------------------------------------------------------------------------
# CLAHE


def _tile_centers(tile_size: int, count: int) -> np.ndarray:
    starts = np.arange(count) * tile_size
    return starts + (tile_size - 1) / 2.0


def _axis_blend(coords: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower tile index and fractional weight toward the upper tile for each
    coordinate. Coordinates outside the center span clamp to weight 0 or 1."""
    count = len(centers)
    if count == 1:
        return np.zeros(len(coords), dtype=np.intp), np.zeros(len(coords))
    lo = np.searchsorted(centers, coords, side="right") - 1
    lo = np.clip(lo, 0, count - 2)
    w = (coords - centers[lo]) / (centers[lo + 1] - centers[lo])
    return lo, np.clip(w, 0.0, 1.0)


def clahe(img: GrayImage, params: ClaheParams) -> GrayImage:
    """Contrast-limited adaptive histogram equalization.

    The image is split into grid_cols x grid_rows tiles. Each tile's histogram
    is clipped at max(1, floor(clip_limit * tile_pixels / 256)) counts and
    turned into an equalization LUT; every output pixel bilinearly blends the
    LUT outputs of its four nearest tile centers (clamped at the edges).

    Dimensions that are not exact multiples of the grid are replicate-padded
    on the right/bottom so all tiles hold the same pixel count (uneven integer
    tiles would give equal content different LUTs, breaking the guarantee that
    a constant image stays constant); output is cropped back to the input size.
    """
    w, h = img.width, img.height
    cols, rows = params.grid_cols, params.grid_rows
    if w < cols or h < rows:
        raise InvalidParamError(f"image {w}x{h} smaller than CLAHE grid {cols}x{rows}")

    tile_w = -(-w // cols)  # ceil division
    tile_h = -(-h // rows)
    padded = np.pad(
        img.pixels,
        ((0, tile_h * rows - h), (0, tile_w * cols - w)),
        mode="edge",
    )
    tile_pixels = tile_w * tile_h
    clip_abs = max(1, math.floor(params.clip_limit * tile_pixels / 256.0))

    luts = np.empty((rows, cols, 256), dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            tile = padded[r * tile_h : (r + 1) * tile_h, c * tile_w : (c + 1) * tile_w]
            th = Histogram(np.bincount(tile.ravel(), minlength=256))
            luts[r, c] = equalize_lut(clip_histogram(th, clip_abs)).mapping

    cy = _tile_centers(tile_h, rows)
    cx = _tile_centers(tile_w, cols)
    row_lo, wy = _axis_blend(np.arange(h, dtype=np.float64), cy)
    col_lo, wx = _axis_blend(np.arange(w, dtype=np.float64), cx)

    v = img.pixels
    r0 = row_lo[:, None]
    c0 = col_lo[None, :]
    r1 = np.minimum(r0 + 1, rows - 1)
    c1 = np.minimum(c0 + 1, cols - 1)
    top = (1.0 - wx)[None, :] * luts[r0, c0, v] + wx[None, :] * luts[r0, c1, v]
    bottom = (1.0 - wx)[None, :] * luts[r1, c0, v] + wx[None, :] * luts[r1, c1, v]
    blended = (1.0 - wy)[:, None] * top + wy[:, None] * bottom
    return GrayImage(np.floor(blended + 0.5).astype(np.uint8))


# ---------------------------------------------------------------------------
# Smoothing, resampling, normalization


def gaussian_kernel(sigma: float, ksize: int) -> np.ndarray:
    """1-D Gaussian sampled at integer offsets, normalized to sum 1."""
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise InvalidParamError("sigma must be positive and finite")
    if ksize < 1 or ksize % 2 == 0:
        raise InvalidParamError("ksize must be odd and at least 1")
    radius = ksize // 2
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _convolve_rows(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Row-wise 1-D convolution with edge replication, float64 throughout."""
    radius = len(kernel) // 2
    if radius == 0:
        return values * kernel[0]
    padded = np.pad(values, ((0, 0), (radius, radius)), mode="edge")
    out = np.zeros_like(values, dtype=np.float64)
    width = values.shape[1]
    for i, k in enumerate(kernel):
        out += k * padded[:, i : i + width]
    return out


def smooth_float(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable Gaussian smoothing in the float domain, no rounding."""
    tmp = _convolve_rows(np.asarray(values, dtype=np.float64), kernel)
    return _convolve_rows(tmp.T, kernel).T


def gaussian_filter(img: GrayImage, sigma: float = 1.0, ksize: int = 5) -> GrayImage:
    """Separable Gaussian blur with edge replication. The two passes stay in
    float64 and the result is rounded exactly once."""
    kernel = gaussian_kernel(sigma, ksize)
    out = smooth_float(img.pixels, kernel)
    return GrayImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def resize(img: GrayImage, out_width: int, out_height: int) -> GrayImage:
    """Bilinear resample with half-pixel center alignment.

    Source coordinate of output x is (x + 0.5) * in/out - 0.5, clamped to the
    valid range, so resizing to the same dimensions is an exact copy.
    """
    if out_width < 1 or out_height < 1:
        raise InvalidParamError("target dimensions must be at least 1x1")
    w, h = img.width, img.height

    sx = np.clip((np.arange(out_width, dtype=np.float64) + 0.5) * (w / out_width) - 0.5, 0, w - 1)
    sy = np.clip((np.arange(out_height, dtype=np.float64) + 0.5) * (h / out_height) - 0.5, 0, h - 1)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0

    p = img.pixels.astype(np.float64)
    top = (1.0 - fx)[None, :] * p[y0[:, None], x0[None, :]] + fx[None, :] * p[y0[:, None], x1[None, :]]
    bot = (1.0 - fx)[None, :] * p[y1[:, None], x0[None, :]] + fx[None, :] * p[y1[:, None], x1[None, :]]
    out = (1.0 - fy)[:, None] * top + fy[:, None] * bot
    return GrayImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def normalize(img: GrayImage) -> FloatImage:
    """Map [0, 255] to [0, 1] by dividing by 255."""
    return FloatImage(img.pixels.astype(np.float64) / 255.0)
