"""
Tests for the binary checkpoint format
"""

import struct

import numpy as np
import pytest

from exceptions import BadMagic, IoFailure, Truncated, VersionMismatch
from services.checkpoint_service import CheckpointService
from services.network_service import NetworkService


@pytest.fixture(scope="module")
def checkpoint():
    return CheckpointService.from_network(NetworkService.build_fser_network(seed=3), epoch=12)


def test_header_layout(checkpoint):
    raw = CheckpointService.encode(checkpoint)
    assert raw[:4] == b"FSER"
    assert struct.unpack("<III", raw[4:16])[:2] == (1, 12)


def test_save_load_save_is_byte_identical(checkpoint, tmp_path):
    first = tmp_path / "a.ckpt"
    second = tmp_path / "b.ckpt"
    CheckpointService.save_checkpoint(checkpoint, first)
    loaded = CheckpointService.load_checkpoint(first)
    CheckpointService.save_checkpoint(loaded, second)
    assert first.read_bytes() == second.read_bytes()
    assert loaded.epoch == 12
    assert loaded.layers == checkpoint.layers
    assert all(np.array_equal(a, b) for a, b in zip(loaded.tensors, checkpoint.tensors))
    assert not list(tmp_path.glob("*.tmp"))


def test_loaded_network_predicts_identically(checkpoint, rng):
    original = CheckpointService.to_network(checkpoint)
    restored = CheckpointService.to_network(CheckpointService.decode(CheckpointService.encode(checkpoint)))
    x = rng.uniform(0, 1, (3, 3, 64, 64))
    np.testing.assert_array_equal(restored.predict_proba(x), original.predict_proba(x))
    assert restored.parameter_count() == 2619464
    assert restored.rng_state() == original.rng_state()


def test_bad_magic(checkpoint):
    raw = CheckpointService.encode(checkpoint)
    with pytest.raises(BadMagic):
        CheckpointService.decode(b"NOPE" + raw[4:], "model.ckpt")
    with pytest.raises(BadMagic):
        CheckpointService.decode(b"")


def test_version_mismatch(checkpoint):
    raw = CheckpointService.encode(checkpoint)
    with pytest.raises(VersionMismatch):
        CheckpointService.decode(raw[:4] + struct.pack("<I", 2) + raw[8:])


def test_truncated(checkpoint):
    raw = CheckpointService.encode(checkpoint)
    for cut in (6, 40, len(raw) - 1):
        with pytest.raises(Truncated):
            CheckpointService.decode(raw[:cut])


def test_trailing_bytes(checkpoint):
    raw = CheckpointService.encode(checkpoint)
    with pytest.raises(Truncated):
        CheckpointService.decode(raw + b"\x00")


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        CheckpointService.load_checkpoint(tmp_path / "absent.ckpt")


def test_unknown_layer_kind(checkpoint):
    raw = bytearray(CheckpointService.encode(checkpoint))
    state_length = struct.unpack("<I", raw[12:16])[0]
    first_kind = 16 + state_length + 4
    raw[first_kind] = 99
    with pytest.raises(BadMagic) as excinfo:
        CheckpointService.decode(bytes(raw), "model.ckpt")
    assert f"offset {first_kind}" in str(excinfo.value)


def test_failed_save_leaves_no_temp_file(checkpoint, tmp_path):
    target = tmp_path / "model.ckpt"
    target.mkdir()
    (target / "occupied").write_text("x")
    with pytest.raises(IoFailure):
        CheckpointService.save_checkpoint(checkpoint, target)
    assert not list(tmp_path.glob("*.tmp"))
