"""Embedding export: manifest in, FVF1 feature file out.

A pretrained backbone runs with frozen weights over every manifest image.
The embedding is the backbone's final pooled convolutional map, flattened
row-major (channel, row, column). Nothing is trained here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlparse

import numpy as np
import torch
from PIL import Image

from .errors import ImageLoadError, ManifestError, ShapeMismatch, WeightsUnavailable
from .fvf import write_fvf

MODELS = ("vgg16", "resnet50")

# torchvision's documented ImageNet preprocessing
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class ManifestRow:
    image_path: str
    label: str  # subject/finger, the primary pipeline's class id


@dataclass
class ExportJob:
    manifest: Path
    model: str
    out: Path
    size: int = 256
    batch_size: int = 16
    weights: str = "imagenet"  # or "random:<seed>"

    def __post_init__(self):
        self.manifest = Path(self.manifest)
        self.out = Path(self.out)
        if self.model not in MODELS:
            raise ManifestError(f"unknown model {self.model!r}, expected one of {MODELS}")
        if self.size < 32:
            raise ManifestError("input size below 32 collapses the pooled map")
        if self.batch_size < 1:
            raise ManifestError("batch size must be at least 1")


MANIFEST_HEADER = ["image_path", "subject_id", "finger_id", "session", "sample_index"]


def read_manifest(path: Path) -> tuple[list[ManifestRow], Path]:
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ManifestError(f"{path}: unexpected header {header!r}")
        rows = []
        for line in reader:
            if len(line) != len(MANIFEST_HEADER):
                raise ManifestError(f"{path}: malformed row {line!r}")
            rows.append(ManifestRow(image_path=line[0], label=f"{line[1]}/{line[2]}"))
    if not rows:
        raise ManifestError(f"{path}: no records")
    return rows, path.parent


def load_image_tensor(path: Path, size: int) -> torch.Tensor:
    """Grayscale image -> normalized (3, size, size) float32 tensor."""
    try:
        with Image.open(path) as im:
            gray = np.asarray(im.convert("L"), dtype=np.float32)
    except FileNotFoundError as exc:
        raise ImageLoadError(f"image not found: {path}") from exc
    except Exception as exc:  # Pillow raises a zoo of format errors
        raise ImageLoadError(f"cannot read {path}: {exc}") from exc
    x = torch.from_numpy(gray / 255.0).unsqueeze(0).unsqueeze(0)
    x = torch.nn.functional.interpolate(x, size=(size, size), mode="bilinear", align_corners=False)
    x = x.repeat(1, 3, 1, 1)  # replicate gray to RGB, weights stay untouched
    mean = torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(1, 3, 1, 1)
    return ((x - mean) / std).squeeze(0)


def _cached_weight_file(url: str) -> Path:
    name = Path(urlparse(url).path).name
    return Path(torch.hub.get_dir()) / "checkpoints" / name


def _imagenet_weights(model: str):
    """Resolve the weight enum, insisting on a local cache hit: this tool
    never opens network connections, not even through torch.hub."""
    from torchvision.models import ResNet50_Weights, VGG16_Weights

    enum = VGG16_Weights.IMAGENET1K_V1 if model == "vgg16" else ResNet50_Weights.IMAGENET1K_V1
    cache = _cached_weight_file(enum.url)
    if not cache.is_file():
        raise WeightsUnavailable(
            f"no cached ImageNet weights for {model} at {cache}; "
            f"pre-download them or use --weights random:<seed>"
        )
    return enum


def build_backbone(model: str, weights: str) -> tuple[torch.nn.Module, str]:
    """Return (module mapping image batch -> pooled feature map, extractor tag)."""
    import torchvision.models as tvm

    if weights == "imagenet":
        enum = _imagenet_weights(model)
        seedless = True
    elif weights.startswith("random:"):
        try:
            seed = int(weights.split(":", 1)[1])
        except ValueError:
            raise ManifestError(f"bad weights spec {weights!r}, expected random:<integer>") from None
        torch.manual_seed(seed)
        enum = None
        seedless = False
    else:
        raise ManifestError(f"bad weights spec {weights!r}, expected imagenet or random:<seed>")

    if model == "vgg16":
        net = tvm.vgg16(weights=enum)
        backbone: torch.nn.Module = net.features  # ends with the final max-pool
    else:
        net = tvm.resnet50(weights=enum)
        # everything up to (not including) global average pooling
        backbone = torch.nn.Sequential(
            net.conv1, net.bn1, net.relu, net.maxpool,
            net.layer1, net.layer2, net.layer3, net.layer4,
        )
    backbone.eval()
    tag = f"{model}-imagenet" if seedless else f"{model}-random{weights.split(':', 1)[1]}"
    return backbone, tag


def probe_dimension(backbone: torch.nn.Module, size: int) -> int:
    """Read the flattened output size off an actual forward pass rather than
    trusting arithmetic about pooling stages."""
    with torch.inference_mode():
        out = backbone(torch.zeros(1, 3, size, size))
    return int(out.numel())


def export_embeddings(job: ExportJob) -> int:
    """Run the job, write the FVF1 file, return the embedding dimension."""
    torch.set_num_threads(1)  # bitwise-stable reductions across runs
    rows, base_dir = read_manifest(job.manifest)
    backbone, tag = build_backbone(job.model, job.weights)
    dimension = probe_dimension(backbone, job.size)

    out_rows: list[tuple[str, np.ndarray]] = []
    with torch.inference_mode():
        for start in range(0, len(rows), job.batch_size):
            chunk = rows[start : start + job.batch_size]
            batch = torch.stack(
                [load_image_tensor(_resolve(base_dir, r.image_path), job.size) for r in chunk]
            )
            maps = backbone(batch)
            flat = maps.reshape(maps.shape[0], -1).numpy()
            if flat.shape[1] != dimension:
                raise ShapeMismatch(
                    f"batch produced dimension {flat.shape[1]}, probe said {dimension}"
                )
            if not np.isfinite(flat).all():
                raise ShapeMismatch("non-finite values in embedding batch")
            for r, values in zip(chunk, flat):
                out_rows.append((r.label, values))

    job.out.parent.mkdir(parents=True, exist_ok=True)
    write_fvf(job.out, out_rows, tag, dimension)
    return dimension


def _resolve(base_dir: Path, image_path: str) -> Path:
    p = Path(image_path)
    return p if p.is_absolute() else base_dir / p
