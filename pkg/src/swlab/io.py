"""Binary field snapshots with a JSON sidecar.

Layout (little-endian): magic b"SWLB", u32 version, u32 kind code,
u32 generator count, 4 x u32 dims, f64 spacing, u32 rank of the per-site
shape followed by that many u32 extents, then row-major f64 site data.
"""
import json
import struct
from pathlib import Path

import numpy as np

from .errors import IoError
from .lattice import Lattice4

MAGIC = b"SWLB"
VERSION = 1
KINDS = {"scalar": 0, "spinor": 1, "gauge": 2, "twoform": 3, "twistor": 4}
KIND_NAMES = {v: k for k, v in KINDS.items()}


def save_field(path, data, lattice, kind, generators=0, meta=None):
    path = Path(path)
    data = np.ascontiguousarray(data, dtype="<f8")
    if data.shape[:4] != lattice.dims:
        raise IoError(f"field shape {data.shape} does not match lattice {lattice.dims}")
    extra = data.shape[4:]
    header = MAGIC + struct.pack(
        "<III4Id I", VERSION, KINDS[kind], generators, *lattice.dims, lattice.spacing, len(extra)
    )
    header += struct.pack(f"<{len(extra)}I", *extra)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header + data.tobytes())
        sidecar = {
            "format": "swlab-field",
            "version": VERSION,
            "kind": kind,
            "generators": generators,
            "dims": list(lattice.dims),
            "spacing": lattice.spacing,
            "site_shape": list(extra),
            "meta": meta or {},
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_field(path):
    """Return (array, lattice, info dict)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if raw[:4] != MAGIC:
        raise IoError(f"{path}: not a field snapshot")
    fmt = "<III4Id I"
    size = struct.calcsize(fmt)
    version, kind, gens, d0, d1, d2, d3, h, rank = struct.unpack(fmt, raw[4 : 4 + size])
    if version != VERSION:
        raise IoError(f"{path}: unsupported version {version}")
    off = 4 + size
    extra = struct.unpack(f"<{rank}I", raw[off : off + 4 * rank])
    off += 4 * rank
    dims = (d0, d1, d2, d3)
    count = int(np.prod(dims + extra))
    if len(raw) - off != 8 * count:
        raise IoError(f"{path}: truncated data")
    data = np.frombuffer(raw, dtype="<f8", offset=off, count=count).reshape(dims + extra)
    info = {"kind": KIND_NAMES.get(kind, "unknown"), "generators": gens}
    return data.copy(), Lattice4(dims, h), info
