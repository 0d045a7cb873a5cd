"""Self-describing artifact containers.

Binary containers share one layout: a 4-byte ASCII magic, a little-endian
uint32 format version, a uint64 header length, a JSON header (which always
embeds the effective config and seed), then raw array blobs in header order.
Matrices are stored as row-major little-endian float32; integer arrays as
little-endian int64.

JSONL artifacts carry the same metadata as a single header line (an object
with a "magic" key) followed by one record per line.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import FormatError

FORMAT_VERSION = 1

MAGIC_STORE = "SCBD"      # ingested corpus store
MAGIC_EMBEDDINGS = "SCEM"  # static embedding table
MAGIC_LM = "SCLM"          # bidirectional language model
MAGIC_DETECTOR = "SCDT"    # bug-pattern classifier
MAGIC_INSTANCES = "SCIN"   # extracted instances (JSONL)
MAGIC_DATASET = "SCDS"     # labeled mutated dataset (JSONL)
MAGIC_WARNINGS = "SCWR"    # per-instance detection warnings (JSONL)

_DTYPES = {"f4": "<f4", "i8": "<i8"}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_container(path, magic: str, header: dict, arrays: dict[str, np.ndarray],
                    version: int = FORMAT_VERSION) -> None:
    """Write a binary container; float arrays are downcast to float32."""
    manifest = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        tag = "i8" if np.issubdtype(arr.dtype, np.integer) else "f4"
        data = np.ascontiguousarray(arr, dtype=_DTYPES[tag])
        manifest.append({"name": name, "dtype": tag, "shape": list(arr.shape)})
        blobs.append(data.tobytes())
    full_header = dict(header)
    full_header["arrays"] = manifest
    hbytes = _dumps(full_header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic.encode("ascii"))
        fh.write(struct.pack("<I", version))
        fh.write(struct.pack("<Q", len(hbytes)))
        fh.write(hbytes)
        for blob in blobs:
            fh.write(blob)


def read_container(path, magic: str) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a container written by ``write_container``; floats come back as f8."""
    path = Path(path)
    with open(path, "rb") as fh:
        got = fh.read(4)
        if got != magic.encode("ascii"):
            raise FormatError(f"{path}: expected magic {magic!r}, found {got!r}")
        version = struct.unpack("<I", fh.read(4))[0]
        if version > FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported format version {version}")
        hlen = struct.unpack("<Q", fh.read(8))[0]
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for entry in header.get("arrays", []):
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * np.dtype(_DTYPES[entry["dtype"]]).itemsize)
            arr = np.frombuffer(raw, dtype=_DTYPES[entry["dtype"]]).reshape(shape)
            if entry["dtype"] == "f4":
                arr = arr.astype(np.float64)
            else:
                arr = arr.astype(np.int64)
            arrays[entry["name"]] = arr
    return header, arrays


def jsonl_header(magic: str, config: dict, seed: int | None,
                 version: int = FORMAT_VERSION, **extra) -> dict:
    header = {"magic": magic, "version": version, "seed": seed, "config": config}
    header.update(extra)
    return header


def write_jsonl(path, header: dict | None, records: Iterable[dict]) -> int:
    """Write a JSONL artifact; returns the number of records written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(_dumps(header) + "\n")
        for rec in records:
            fh.write(_dumps(rec) + "\n")
            n += 1
    return n


def iter_jsonl(path) -> Iterator[tuple[int, dict | None]]:
    """Yield (line_number, parsed-or-None) for every nonempty line."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                yield lineno, None
                continue
            yield lineno, obj if isinstance(obj, dict) else None


def read_jsonl(path, magic: str | None = None) -> tuple[dict | None, list[dict], int]:
    """Read a JSONL artifact.

    Returns (header, records, skipped). The header is None for headerless
    files; when ``magic`` is given a present header must match it.
    """
    header = None
    records: list[dict] = []
    skipped = 0
    first = True
    for _, obj in iter_jsonl(path):
        if obj is None:
            skipped += 1
            first = False
            continue
        if first and "magic" in obj:
            header = obj
            if magic is not None and obj.get("magic") != magic:
                raise FormatError(f"{path}: expected magic {magic!r}, found {obj.get('magic')!r}")
            first = False
            continue
        first = False
        records.append(obj)
    return header, records, skipped
