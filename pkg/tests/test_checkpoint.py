import json
import struct

import numpy as np
import pytest

from lclab.errors import (
    BadMagicError,
    LayoutError,
    TruncatedFileError,
    VersionError,
)
from lclab.model import (
    Checkpoint,
    ModelConfig,
    gen_toy_model,
    load_checkpoint,
    save_checkpoint,
)


@pytest.fixture(scope="module")
def small_ckpt():
    cfg = ModelConfig(
        n_layers=2, d_model=32, n_heads=2, d_head=16, d_ff=48,
        vocab_size=256, max_context=512,
    )
    return gen_toy_model(cfg, seed=3)


def test_round_trip_bit_exact(tmp_path, small_ckpt):
    path = tmp_path / "m.lcmp"
    save_checkpoint(small_ckpt, path)
    loaded = load_checkpoint(path)
    assert loaded.equals(small_ckpt)


def test_save_is_byte_deterministic(tmp_path, small_ckpt):
    p1, p2 = tmp_path / "a.lcmp", tmp_path / "b.lcmp"
    save_checkpoint(small_ckpt, p1)
    save_checkpoint(small_ckpt, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_file_layout(tmp_path, small_ckpt):
    path = tmp_path / "m.lcmp"
    save_checkpoint(small_ckpt, path)
    blob = path.read_bytes()
    assert blob[:4] == b"LCMP"
    assert struct.unpack_from("<I", blob, 4)[0] == 1
    (header_len,) = struct.unpack_from("<Q", blob, 8)
    header = json.loads(blob[16 : 16 + header_len])
    assert set(header) == {"config", "tensors"}
    names = [e["name"] for e in header["tensors"]]
    assert names == sorted(names)
    # offsets are absolute and payloads tile the rest of the file
    offset = 16 + header_len
    for entry in header["tensors"]:
        assert entry["byte_offset"] == offset
        offset += entry["byte_length"]
    assert offset == len(blob)
    first = header["tensors"][0]
    raw = np.frombuffer(
        blob, "<f4", count=first["byte_length"] // 4, offset=first["byte_offset"]
    ).reshape(first["shape"])
    assert np.array_equal(raw, small_ckpt.tensors[first["name"]])


def test_bad_magic(tmp_path, small_ckpt):
    path = tmp_path / "m.lcmp"
    save_checkpoint(small_ckpt, path)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"NOPE"
    path.write_bytes(bytes(blob))
    with pytest.raises(BadMagicError):
        load_checkpoint(path)


def test_bad_version(tmp_path, small_ckpt):
    path = tmp_path / "m.lcmp"
    save_checkpoint(small_ckpt, path)
    blob = bytearray(path.read_bytes())
    struct.pack_into("<I", blob, 4, 99)
    path.write_bytes(bytes(blob))
    with pytest.raises(VersionError):
        load_checkpoint(path)


def test_truncated_payload(tmp_path, small_ckpt):
    path = tmp_path / "m.lcmp"
    save_checkpoint(small_ckpt, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 100])
    with pytest.raises(TruncatedFileError):
        load_checkpoint(path)


def test_truncated_header(tmp_path, small_ckpt):
    path = tmp_path / "m.lcmp"
    save_checkpoint(small_ckpt, path)
    path.write_bytes(path.read_bytes()[:20])
    with pytest.raises(TruncatedFileError):
        load_checkpoint(path)


def test_corrupt_header_json(tmp_path, small_ckpt):
    path = tmp_path / "m.lcmp"
    save_checkpoint(small_ckpt, path)
    blob = bytearray(path.read_bytes())
    blob[16] = ord("x")
    path.write_bytes(bytes(blob))
    with pytest.raises(LayoutError):
        load_checkpoint(path)


def test_validate_rejects_missing_tensor(small_ckpt):
    tensors = dict(small_ckpt.tensors)
    tensors.pop("lm_head")
    with pytest.raises(LayoutError):
        Checkpoint(config=small_ckpt.config, tensors=tensors).validate()


def test_validate_rejects_bad_shape(small_ckpt):
    bad = small_ckpt.replace_tensors(
        {"lm_head": np.zeros((3, 3), dtype=np.float32)}
    )
    with pytest.raises(LayoutError):
        bad.validate()


def test_validate_rejects_nan(small_ckpt):
    t = small_ckpt.tensors["lm_head"].copy()
    t[0, 0] = np.nan
    with pytest.raises(LayoutError):
        small_ckpt.replace_tensors({"lm_head": t}).validate()


def test_replace_tensors_does_not_mutate(small_ckpt):
    before = small_ckpt.tensors["lm_head"].copy()
    new = small_ckpt.replace_tensors(
        {"lm_head": np.zeros_like(small_ckpt.tensors["lm_head"])}
    )
    assert np.array_equal(small_ckpt.tensors["lm_head"], before)
    assert not new.equals(small_ckpt)
