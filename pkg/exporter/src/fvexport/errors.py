"""Exporter error hierarchy."""


class ExportError(Exception):
    """Base class for everything this package raises on bad input or state."""


class WeightsUnavailable(ExportError):
    """Pretrained weights are not in the local cache and cannot be fetched."""


class ImageLoadError(ExportError):
    """An image referenced by the manifest cannot be read."""


class ShapeMismatch(ExportError):
    """A produced embedding disagrees with the declared dimension."""


class ManifestError(ExportError):
    """The manifest CSV is missing, malformed, or empty."""
