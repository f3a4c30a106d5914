"""Raw IQ files: interleaved little-endian float32 (cf32le) with a JSON sidecar.

``frame.cf32`` is paired with ``frame.cf32.json``::

    {"format": "cf32le", "sample_count": n, "sf": 7, "p": 131, "p1": 257,
     "root": 3, "seed": 1}
"""

import json
from pathlib import Path

import numpy as np

from .errors import IQFormatError

FORMAT = "cf32le"


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_iq(path, samples, metadata=None):
    samples = np.asarray(samples).astype(np.complex64)
    meta = dict(metadata or {})
    meta["format"] = FORMAT
    meta["sample_count"] = int(samples.size)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    samples.astype("<c8").tofile(path)
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_iq(path):
    """Load samples (complex64) and sidecar metadata.

    Raises ``IQFormatError`` on a missing or inconsistent sidecar.
    """
    path = Path(path)
    side = sidecar_path(path)
    if not side.is_file():
        raise IQFormatError(f"missing sidecar {side}")
    try:
        meta = json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise IQFormatError(f"bad sidecar JSON at line {exc.lineno}: {exc.msg}") from exc
    if meta.get("format") != FORMAT:
        raise IQFormatError(f"unsupported format {meta.get('format')!r}")
    nbytes = path.stat().st_size
    if nbytes % 8:
        raise IQFormatError(f"{path} size {nbytes} is not a whole number of cf32 samples")
    samples = np.fromfile(path, dtype="<c8")
    if samples.size != meta.get("sample_count"):
        raise IQFormatError(f"sidecar says {meta.get('sample_count')} samples, "
                            f"file holds {samples.size}")
    return samples.astype(np.complex64), meta
