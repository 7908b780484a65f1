"""RKV1 tensor container.

Layout::

    b"RKV1" | u64 little-endian header length | UTF-8 JSON header | raw tensor data

The header maps every tensor name to ``{"dtype": "f32"|"f64", "shape": [...],
"byte_offset": n}`` with offsets counted from the first byte after the header, plus a
reserved ``"__metadata__"`` object of string values. Tensors are written little-endian
in sorted-name order and the header is dumped with sorted keys, so the same tensors
always encode to the same bytes.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
from loguru import logger

from retainkv.exceptions import DataError, ShapeError

MAGIC = b"RKV1"
METADATA_KEY = "__metadata__"

_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


def _dtype_code(arr: np.ndarray) -> str:
    if arr.dtype == np.float32:
        return "f32"
    if arr.dtype == np.float64:
        return "f64"
    raise ShapeError(f"unsupported tensor dtype {arr.dtype}")


def encode_tensors(tensors: dict[str, np.ndarray], metadata: dict[str, str] | None = None) -> bytes:
    if METADATA_KEY in tensors:
        raise DataError(f"{METADATA_KEY!r} is reserved")
    header: dict[str, object] = {METADATA_KEY: dict(sorted((metadata or {}).items()))}
    chunks: list[bytes] = []
    offset = 0
    for name in sorted(tensors):
        arr = np.asarray(tensors[name])
        code = _dtype_code(arr)
        raw = np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()
        header[name] = {"dtype": code, "shape": list(arr.shape), "byte_offset": offset}
        chunks.append(raw)
        offset += len(raw)
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(header_bytes)) + header_bytes + b"".join(chunks)


def decode_tensors(blob: bytes) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Inverse of :func:`encode_tensors`.

    Raises:
        DataError: On a bad magic number, a truncated file or a malformed header.
    """
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise DataError("not an RKV1 container")
    (header_len,) = struct.unpack("<Q", blob[4:12])
    data_start = 12 + header_len
    if data_start > len(blob):
        raise DataError("truncated RKV1 header")
    try:
        header = json.loads(blob[12:data_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataError(f"malformed RKV1 header: {e}") from e
    if not isinstance(header, dict):
        raise DataError("RKV1 header must be a JSON object")
    metadata = {str(k): str(v) for k, v in header.pop(METADATA_KEY, {}).items()}
    tensors: dict[str, np.ndarray] = {}
    for name, entry in header.items():
        try:
            dt = _DTYPES[entry["dtype"]]
            shape = tuple(int(s) for s in entry["shape"])
            start = data_start + int(entry["byte_offset"])
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"bad header entry for {name!r}: {entry!r}") from e
        count = int(np.prod(shape, dtype=np.int64))
        end = start + count * dt.itemsize
        if end > len(blob):
            raise DataError(f"tensor {name!r} runs past the end of the container")
        arr = np.frombuffer(blob, dtype=dt, count=count, offset=start).reshape(shape)
        tensors[name] = arr.astype(dt.newbyteorder("="), copy=True)
    return tensors, metadata


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray], metadata: dict[str, str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensors(tensors, metadata))
    logger.info(f"Wrote {len(tensors)} tensors to {path}")
    return path


def load_tensors(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"tensor file {path} does not exist")
    return decode_tensors(path.read_bytes())


def tensors_hash(tensors: dict[str, np.ndarray]) -> str:
    return hashlib.sha256(encode_tensors(tensors)).hexdigest()
