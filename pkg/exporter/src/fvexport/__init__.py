"""CNN embedding exporter for the finger-vein verification toolkit.

Runs a frozen VGG16 or ResNet50 backbone over every image in a dataset
manifest and writes the flattened final pooled feature maps as an FVF1
feature file, which the verification pipeline ingests via its
extract.method=file:<path> passthrough.
"""

from .errors import (
    ExportError,
    ImageLoadError,
    ManifestError,
    ShapeMismatch,
    WeightsUnavailable,
)
from .export import (
    ExportJob,
    ManifestRow,
    build_backbone,
    export_embeddings,
    load_image_tensor,
    probe_dimension,
    read_manifest,
)
from .fvf import write_fvf

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportJob",
    "ImageLoadError",
    "ManifestError",
    "ManifestRow",
    "ShapeMismatch",
    "WeightsUnavailable",
    "build_backbone",
    "export_embeddings",
    "load_image_tensor",
    "probe_dimension",
    "read_manifest",
    "write_fvf",
    "__version__",
]
