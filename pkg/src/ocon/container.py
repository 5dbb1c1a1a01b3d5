"""Versioned binary container used by matrix and checkpoint files.

Layout (all integers little-endian)::

    magic      8 bytes   b"OCONBIN\\0"
    kind      16 bytes   ASCII tag, NUL padded (e.g. "feature_matrix")
    version    1 byte
    header    u32 length + UTF-8 JSON metadata (includes the array index)
    payload    raw array bytes, C order, little-endian dtypes
    crc32      u32 over everything above

Round-trips are bit-exact for float64 payloads.  Truncation or corruption
raises CorruptPayload; a version byte newer than the reader raises
VersionMismatch.
"""

import json
import struct
import zlib

import numpy as np

from .errors import CorruptPayload, VersionMismatch

MAGIC = b"OCONBIN\x00"
_KIND_LEN = 16


def write_container(path, kind, version, meta, arrays):
    """Write metadata plus named arrays to ``path``.

    ``meta`` must be JSON-serializable; ``arrays`` is an ordered mapping of
    name -> ndarray.  Dtypes are preserved (stored little-endian).
    """
    index = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = le.tobytes()
        index.append({
            "name": name,
            "dtype": arr.dtype.str.lstrip("<>=|"),
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
        chunks.append(raw)
        offset += len(raw)

    header = json.dumps({"meta": meta, "arrays": index}, sort_keys=True).encode()
    kind_b = kind.encode().ljust(_KIND_LEN, b"\x00")
    if len(kind_b) != _KIND_LEN:
        raise ValueError(f"container kind too long: {kind!r}")

    body = b"".join([
        MAGIC, kind_b, struct.pack("<B", version),
        struct.pack("<I", len(header)), header, *chunks,
    ])
    crc = zlib.crc32(body) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", crc))


def read_container(path, kind, max_version):
    """Read and validate a container, returning ``(version, meta, arrays)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    min_len = len(MAGIC) + _KIND_LEN + 1 + 4 + 4
    if len(blob) < min_len or blob[: len(MAGIC)] != MAGIC:
        raise CorruptPayload(f"{path}: not a container file")
    body, crc_raw = blob[:-4], blob[-4:]
    if zlib.crc32(body) & 0xFFFFFFFF != struct.unpack("<I", crc_raw)[0]:
        raise CorruptPayload(f"{path}: checksum mismatch")

    pos = len(MAGIC)
    found_kind = body[pos: pos + _KIND_LEN].rstrip(b"\x00").decode()
    pos += _KIND_LEN
    if found_kind != kind:
        raise CorruptPayload(f"{path}: expected kind {kind!r}, found {found_kind!r}")
    version = body[pos]
    pos += 1
    if version > max_version:
        raise VersionMismatch(f"{path}: version {version} > supported {max_version}")
    (header_len,) = struct.unpack_from("<I", body, pos)
    pos += 4
    try:
        header = json.loads(body[pos: pos + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise CorruptPayload(f"{path}: bad header ({err})") from err
    pos += header_len

    arrays = {}
    for entry in header["arrays"]:
        start = pos + entry["offset"]
        end = start + entry["nbytes"]
        if end > len(body):
            raise CorruptPayload(f"{path}: array {entry['name']!r} truncated")
        dtype = np.dtype(entry["dtype"]).newbyteorder("<")
        arr = np.frombuffer(body[start:end], dtype=dtype)
        arrays[entry["name"]] = arr.reshape(entry["shape"]).astype(dtype.newbyteorder("="))
    return version, header["meta"], arrays
