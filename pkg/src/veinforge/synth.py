"""Synthetic vein-style dataset generator.

Each class gets a fixed template: 3 to 6 dark meandering curves drawn by a
random walk with momentum across a bright canvas, thickness and depth drawn
per curve. Samples of the class are crops of that template shifted by a few
pixels plus per-pixel Gaussian noise, so within-class variation stays small
against between-class structure.

All randomness is SplitMix64 streams keyed off the dataset seed and stable
identity strings, which makes regeneration byte-identical.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .dataset import Manifest, SampleRecord, save_manifest
from .errors import InvalidParamError
from .imaging import GrayImage, write_pgm
from .rng import SplitMix64, fnv1a64

MARGIN = 6  # padding around the template; also the translation bound
BACKGROUND = 212
NOISE_SIGMA = 6.0


def _disc_offsets(radius: int) -> list[tuple[int, int]]:
    out = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx * dx + dy * dy <= radius * radius:
                out.append((dy, dx))
    return out


def _draw_curve(canvas: np.ndarray, rng: SplitMix64) -> None:
    ch, cw = canvas.shape
    radius = 2 + rng.next_below(2)
    depth = 90 + rng.next_below(50)
    ink = max(0, BACKGROUND - depth)
    offsets = _disc_offsets(radius)

    x = float(rng.next_below(cw))
    y = 0.0
    angle = math.pi / 2 + (rng.next_float() - 0.5) * 0.6
    steps = int(ch * 1.4)
    for _ in range(steps):
        angle += (rng.next_float() - 0.5) * 0.5
        angle = min(max(angle, math.pi / 2 - 0.9), math.pi / 2 + 0.9)
        x += math.cos(angle)
        y += math.sin(angle)
        cx, cy = int(round(x)), int(round(y))
        if cy >= ch:
            break
        for dy, dx in offsets:
            py, px = cy + dy, cx + dx
            if 0 <= py < ch and 0 <= px < cw and canvas[py, px] > ink:
                canvas[py, px] = ink


def class_template(width: int, height: int, seed: int, class_id: str) -> np.ndarray:
    """Padded int16 canvas; crops of it become the class's samples."""
    rng = SplitMix64(seed ^ fnv1a64(class_id))
    canvas = np.full((height + 2 * MARGIN, width + 2 * MARGIN), BACKGROUND, dtype=np.int16)
    n_curves = 3 + rng.next_below(4)
    for _ in range(n_curves):
        _draw_curve(canvas, rng)
    return canvas


def render_sample(
    template: np.ndarray, width: int, height: int, seed: int, sample_id: str
) -> GrayImage:
    rng = SplitMix64(seed ^ fnv1a64(sample_id))
    dx = rng.next_below(2 * MARGIN + 1) - MARGIN
    dy = rng.next_below(2 * MARGIN + 1) - MARGIN
    crop = template[
        MARGIN + dy : MARGIN + dy + height, MARGIN + dx : MARGIN + dx + width
    ].astype(np.float64)
    noise = np.array(
        [rng.next_gauss() for _ in range(height * width)], dtype=np.float64
    ).reshape(height, width)
    noisy = crop + NOISE_SIGMA * noise
    pixels = np.clip(np.floor(noisy + 0.5), 0, 255).astype(np.uint8)
    return GrayImage(pixels=pixels)


def generate_dataset(
    out_dir: str | Path,
    classes: int,
    samples: int,
    width: int,
    height: int,
    seed: int,
) -> Manifest:
    """Write classes x samples PGM images plus manifest.csv under out_dir."""
    if classes < 1 or samples < 1:
        raise InvalidParamError("need at least one class and one sample")
    if width < 16 or height < 16:
        raise InvalidParamError("images smaller than 16x16 carry no usable structure")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = []
    for ci in range(classes):
        subject = f"s{ci:03d}"
        class_id = f"{subject}/f0"
        template = class_template(width, height, seed, class_id)
        class_dir = out_dir / subject / "f0"
        class_dir.mkdir(parents=True, exist_ok=True)
        for si in range(1, samples + 1):
            img = render_sample(template, width, height, seed, f"{class_id}|1|{si}")
            rel = f"{subject}/f0/1_{si}.pgm"
            write_pgm(out_dir / rel, img)
            records.append(
                SampleRecord(
                    image_path=rel,
                    subject_id=subject,
                    finger_id="f0",
                    session=1,
                    sample_index=si,
                )
            )
    manifest = Manifest(records=records, dataset_name="synth", base_dir=out_dir)
    save_manifest(out_dir / "manifest.csv", manifest)
    return manifest
