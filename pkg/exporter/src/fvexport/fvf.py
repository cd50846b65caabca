"""FVF1 feature-file writer.

The layout is the verification toolkit's interchange format, re-stated here
so this package stays importable without it. Little-endian throughout:

    magic "FVF1", u8 version (1), u16 tag length, tag bytes (UTF-8),
    u32 record count, u32 dimension,
    then per record: u16 label length, label bytes (UTF-8), dimension f32.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch

MAGIC = b"FVF1"
VERSION = 1


def write_fvf(path: str | Path, rows: list[tuple[str, np.ndarray]], extractor_tag: str, dimension: int) -> None:
    """Write (label, values) rows. Every row must carry exactly `dimension`
    float32 values; anything else is a caller bug surfaced as ShapeMismatch."""
    tag_bytes = extractor_tag.encode("utf-8")
    parts = [struct.pack("<4sBH", MAGIC, VERSION, len(tag_bytes)), tag_bytes]
    parts.append(struct.pack("<II", len(rows), dimension))
    for label, values in rows:
        flat = np.ascontiguousarray(values, dtype="<f4").reshape(-1)
        if flat.shape[0] != dimension:
            raise ShapeMismatch(
                f"record {label!r} produced {flat.shape[0]} values, header declares {dimension}"
            )
        label_bytes = label.encode("utf-8")
        parts.append(struct.pack("<H", len(label_bytes)))
        parts.append(label_bytes)
        parts.append(flat.tobytes())
    Path(path).write_bytes(b"".join(parts))
