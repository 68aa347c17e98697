"""Binary checkpoint format.

Layout (all little-endian)::

    b"SFD1" | u32 version | u32 count | entries... | u32 crc32(entries)

and each entry is ``u32 name_len | name (UTF-8) | u32 rank | u64 extents[rank] |
f64 payload[prod(extents)]``. Non-float metadata (counters, rng state, config
text) is stored as float64 arrays; see ``pack_text`` and ``pack_u64``.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import CheckpointError, DependencyError

MAGIC = b"SFD1"
VERSION = 1


def dumps(entries: dict[str, np.ndarray]) -> bytes:
    body = bytearray()
    for name, arr in entries.items():
        a = np.asarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        body += struct.pack("<I", len(raw)) + raw
        body += struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
        body += np.ascontiguousarray(a).tobytes()
    head = MAGIC + struct.pack("<II", VERSION, len(entries))
    return head + bytes(body) + struct.pack("<I", zlib.crc32(body))


def loads(blob: bytes) -> dict[str, np.ndarray]:
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise CheckpointError("not an SFD1 checkpoint")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    body = blob[12:-4]
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(body) != crc:
        raise CheckpointError("checkpoint CRC mismatch")
    out: dict[str, np.ndarray] = {}
    pos = 0
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<I", body, pos)
            name = body[pos + 4:pos + 4 + n].decode("utf-8")
            pos += 4 + n
            (rank,) = struct.unpack_from("<I", body, pos)
            shape = struct.unpack_from(f"<{rank}Q", body, pos + 4)
            pos += 4 + 8 * rank
            size = int(np.prod(shape, dtype=np.int64)) * 8
            if pos + size > len(body):
                raise CheckpointError(f"entry {name!r} runs past end of file")
            out[name] = np.frombuffer(body, dtype="<f8", count=size // 8, offset=pos).reshape(shape).astype(np.float64)
            pos += size
    except struct.error as exc:
        raise CheckpointError(f"truncated checkpoint: {exc}") from None
    if pos != len(body):
        raise CheckpointError("trailing bytes after last entry")
    return out


def save(path: str | Path, entries: dict[str, np.ndarray]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps(entries))
    tmp.replace(path)


def load(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise DependencyError(f"checkpoint not found: {path}")
    return loads(path.read_bytes())


def pack_text(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-8"), dtype=np.uint8).astype(np.float64)


def unpack_text(arr: np.ndarray) -> str:
    return np.asarray(arr).astype(np.uint8).tobytes().decode("utf-8")


def pack_u64(*values: int) -> np.ndarray:
    """Each u64 as two exact 32-bit halves (hi, lo)."""
    out = []
    for v in values:
        v &= 0xFFFFFFFFFFFFFFFF
        out += [float(v >> 32), float(v & 0xFFFFFFFF)]
    return np.array(out)


def unpack_u64(arr: np.ndarray) -> tuple[int, ...]:
    a = np.asarray(arr).astype(np.int64).tolist()
    return tuple((a[i] << 32) | a[i + 1] for i in range(0, len(a), 2))


def with_prefix(prefix: str, entries: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {f"{prefix}{k}": v for k, v in entries.items()}


def strip_prefix(prefix: str, entries: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k[len(prefix):]: v for k, v in entries.items() if k.startswith(prefix)}
