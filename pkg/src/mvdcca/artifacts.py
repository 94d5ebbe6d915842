"""Byte-deterministic binary container for named float arrays.

Layout: 8-byte magic, little-endian uint32 format version, uint64 header
length, UTF-8 JSON header (sorted keys) and the raw little-endian array
payloads in header order.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MVDCCA\x00\x01"
FORMAT_VERSION = 1


class ArtifactError(ValueError):
    pass


def write_artifact(path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    names = list(arrays)
    entries = []
    payload = []
    for name in names:
        a = np.ascontiguousarray(arrays[name])
        if a.dtype.kind == "f":
            a = a.astype("<f8")
        elif a.dtype.kind in "iub":
            a = a.astype("<i8")
        else:
            raise ArtifactError(f"unsupported dtype for {name}: {a.dtype}")
        entries.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape)})
        payload.append(a.tobytes())
    header = json.dumps({"kind": kind, "meta": meta, "arrays": entries},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(header)))
        fh.write(header)
        for chunk in payload:
            fh.write(chunk)


def read_artifact(path, kind: str | None = None):
    """Return ``(meta, arrays)``; ``kind`` is checked when given."""
    raw = Path(path).read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise ArtifactError(f"{path}: not an artifact file")
    off = len(MAGIC)
    version, hlen = struct.unpack_from("<IQ", raw, off)
    if version != FORMAT_VERSION:
        raise ArtifactError(f"{path}: unsupported format version {version}")
    off += struct.calcsize("<IQ")
    header = json.loads(raw[off:off + hlen].decode("utf-8"))
    off += hlen
    if kind is not None and header["kind"] != kind:
        raise ArtifactError(f"{path}: expected a {kind!r} artifact, found {header['kind']!r}")
    arrays = {}
    for e in header["arrays"]:
        dt = np.dtype(e["dtype"])
        n = int(np.prod(e["shape"], dtype=np.int64))
        arrays[e["name"]] = np.frombuffer(raw, dtype=dt, count=n, offset=off).reshape(e["shape"]).copy()
        off += n * dt.itemsize
    if off != len(raw):
        raise ArtifactError(f"{path}: trailing or missing bytes")
    return header["meta"], arrays


def config_hash(items: dict) -> str:
    blob = json.dumps(items, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
