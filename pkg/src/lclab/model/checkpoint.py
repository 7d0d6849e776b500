"""Checkpoint container and its binary file format.

File layout (little-endian):

    bytes 0..3    magic "LCMP"
    bytes 4..7    u32 version = 1
    bytes 8..15   u64 header_length
    next          UTF-8 JSON header:
                    {"config": {...},
                     "tensors": [{"name", "dtype": "f32", "shape",
                                  "byte_offset", "byte_length"}, ...]}
    payloads      raw float32 data at the declared absolute offsets

Offsets are absolute file positions. Save/load round-trips bit-exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    BadMagicError,
    LayoutError,
    TruncatedFileError,
    VersionError,
)
from .config import ModelConfig, expected_tensor_shapes

MAGIC = b"LCMP"
VERSION = 1


@dataclass
class Checkpoint:
    """Named-tensor container plus model hyperparameters.

    Treated as immutable after creation; compression passes return new
    checkpoints instead of mutating, so forward() can run concurrently
    on a shared instance.
    """

    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def validate(self) -> None:
        expected = expected_tensor_shapes(self.config)
        missing = set(expected) - set(self.tensors)
        if missing:
            raise LayoutError(f"checkpoint missing tensors: {sorted(missing)}")
        extra = set(self.tensors) - set(expected)
        if extra:
            raise LayoutError(f"checkpoint has unexpected tensors: {sorted(extra)}")
        for name, shape in expected.items():
            t = self.tensors[name]
            if tuple(t.shape) != shape:
                raise LayoutError(
                    f"tensor {name}: shape {tuple(t.shape)}, expected {shape}"
                )
            if t.dtype != np.float32:
                raise LayoutError(f"tensor {name}: dtype {t.dtype}, expected float32")
            if not np.all(np.isfinite(t)):
                raise LayoutError(f"tensor {name} contains non-finite values")

    def replace_tensors(self, new: dict[str, np.ndarray]) -> "Checkpoint":
        """Copy of this checkpoint with some tensors substituted."""
        tensors = dict(self.tensors)
        tensors.update(new)
        return Checkpoint(config=self.config, tensors=tensors)

    def equals(self, other: "Checkpoint") -> bool:
        if self.config != other.config or set(self.tensors) != set(other.tensors):
            return False
        return all(
            np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors
        )


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    ckpt.validate()
    names = sorted(ckpt.tensors)
    directory = []
    # Offsets are filled in after the header length is known.
    payload_sizes = [ckpt.tensors[n].nbytes for n in names]

    def build_header(base_offset: int) -> bytes:
        offset = base_offset
        directory.clear()
        for name, size in zip(names, payload_sizes):
            directory.append(
                {
                    "name": name,
                    "dtype": "f32",
                    "shape": list(ckpt.tensors[name].shape),
                    "byte_offset": offset,
                    "byte_length": size,
                }
            )
            offset += size
        header = {"config": ckpt.config.to_dict(), "tensors": directory}
        return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")

    # Header length depends on the offsets it contains; iterate to a fixpoint.
    header_bytes = build_header(0)
    for _ in range(4):
        base = 16 + len(header_bytes)
        new_header = build_header(base)
        if len(new_header) == len(header_bytes):
            header_bytes = new_header
            break
        header_bytes = new_header
    else:
        raise LayoutError("header length failed to converge")

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for name in names:
            fh.write(np.ascontiguousarray(ckpt.tensors[name], dtype="<f4").tobytes())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16:
        raise TruncatedFileError("file shorter than the fixed header")
    if blob[:4] != MAGIC:
        raise BadMagicError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise VersionError(f"unsupported version {version}, expected {VERSION}")
    (header_len,) = struct.unpack_from("<Q", blob, 8)
    if 16 + header_len > len(blob):
        raise TruncatedFileError("declared header extends past end of file")
    try:
        header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise LayoutError(f"header is not valid JSON: {exc}") from None
    if not isinstance(header, dict) or "config" not in header or "tensors" not in header:
        raise LayoutError("header missing 'config' or 'tensors'")
    config = ModelConfig.from_dict(header["config"])

    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        name = entry.get("name")
        if not isinstance(name, str) or name in tensors:
            raise LayoutError(f"bad or duplicate tensor name: {name!r}")
        if entry.get("dtype") != "f32":
            raise LayoutError(f"tensor {name}: unsupported dtype {entry.get('dtype')!r}")
        shape = tuple(entry.get("shape", ()))
        offset = entry.get("byte_offset")
        length = entry.get("byte_length")
        if not all(isinstance(v, int) and v >= 0 for v in (offset, length)):
            raise LayoutError(f"tensor {name}: bad offset/length")
        if any(not isinstance(d, int) or d < 1 for d in shape):
            raise LayoutError(f"tensor {name}: bad shape {shape}")
        numel = int(np.prod(shape))
        if numel * 4 != length:
            raise LayoutError(
                f"tensor {name}: shape {shape} needs {numel * 4} bytes, "
                f"directory declares {length}"
            )
        if offset < 16 + header_len or offset + length > len(blob):
            raise TruncatedFileError(
                f"tensor {name}: payload [{offset}, {offset + length}) "
                f"outside file of {len(blob)} bytes"
            )
        data = np.frombuffer(blob, dtype="<f4", count=numel, offset=offset)
        tensors[name] = data.reshape(shape).astype(np.float32)

    ckpt = Checkpoint(config=config, tensors=tensors)
    ckpt.validate()
    return ckpt
