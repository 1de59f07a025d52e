"""Readers for the files written by `tmds-leak dataset`.

DTCX layout (little-endian): magic "DTCX", u16 version, u16 flags,
u32 rows, u32 cols, f64 fs, f64 fc, 16-byte meta hash, then
rows * cols interleaved (I, Q) float32 values in row-major order.
"""

import json
import struct
from pathlib import Path

import numpy as np

HEADER = struct.Struct("<4sHHIIdd16s")
FLAG_CROPPED = 1


def read_dtcx(path):
    """Returns (header dict, complex64 array of shape (rows, cols))."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, flags, rows, cols, fs, fc, meta_hash = HEADER.unpack_from(raw)
    if magic != b"DTCX":
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = HEADER.size + rows * cols * 8
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    iq = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(rows, cols, 2)
    data = (iq[..., 0] + 1j * iq[..., 1]).astype(np.complex64)
    header = {
        "version": version,
        "cropped": bool(flags & FLAG_CROPPED),
        "rows": rows,
        "cols": cols,
        "fs": fs,
        "fc": fc,
        "meta_hash": meta_hash.hex(),
    }
    return header, data


def read_manifest(path):
    """Returns the manifest records with paths resolved against its directory."""
    path = Path(path)
    records = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        rec["clean_path"] = path.parent / rec["clean_path"]
        rec["capture_path"] = path.parent / rec["capture_path"]
        records.append(rec)
    return records
