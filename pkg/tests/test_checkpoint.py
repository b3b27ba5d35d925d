"""Tests for the binary checkpoint format."""

import json
import struct

import numpy as np
import pytest

from core.exceptions import CheckpointError
from model.network import EncoderStack, IFMMINNetwork, PretrainNetwork
from storage.checkpoint import (
    FORMAT_VERSION,
    Checkpoint,
    checkpoint_from_module,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)


def _sample() -> Checkpoint:
    rng = np.random.default_rng(0)
    return Checkpoint(
        parameters={
            "enc_a.w_ih": rng.standard_normal((3, 8)),
            "enc_a.bias": rng.standard_normal(8),
            "classifier.fc3.bias": np.array([np.pi, -0.0, 1e-300, -1e300]),
        },
        config_fingerprint="ab" * 32,
        frozen={"enc_a.bias"},
        metadata={"stage": "pretrain", "fold": 0},
    )


def _rewrite_header(blob: bytes, **changes) -> bytes:
    (length,) = struct.unpack_from("<Q", blob)
    header = json.loads(blob[8 : 8 + length])
    header.update(changes)
    encoded = json.dumps(header).encode()
    return struct.pack("<Q", len(encoded)) + encoded + blob[8 + length :]


def test_round_trip_is_bitwise():
    ckpt = _sample()
    restored = decode_checkpoint(encode_checkpoint(ckpt))
    assert list(restored.parameters) == list(ckpt.parameters)
    for name, values in ckpt.parameters.items():
        assert restored.parameters[name].tobytes() == values.tobytes()
        assert restored.parameters[name].shape == values.shape
    assert restored.frozen == {"enc_a.bias"}
    assert restored.metadata == {"stage": "pretrain", "fold": 0}
    assert restored.config_fingerprint == "ab" * 32


def test_save_and_load(tmp_path):
    path = save_checkpoint(_sample(), tmp_path / "nested" / "model.ckpt")
    ckpt, warnings = load_checkpoint(path, expected_fingerprint="ab" * 32)
    assert warnings == []
    assert ckpt.parameters["enc_a.w_ih"].shape == (3, 8)
    assert not list(path.parent.glob("*.tmp"))


def test_fingerprint_mismatch_is_a_warning(tmp_path):
    path = save_checkpoint(_sample(), tmp_path / "model.ckpt")
    _, warnings = load_checkpoint(path, expected_fingerprint="cd" * 32)
    assert len(warnings) == 1 and "abababababab" in warnings[0]


@pytest.mark.parametrize("keep", [0, 5, 20, -1, -8])
def test_truncated_file_is_an_error(tmp_path, keep):
    blob = encode_checkpoint(_sample())
    path = tmp_path / "cut.ckpt"
    path.write_bytes(blob[:keep])
    with pytest.raises(CheckpointError, match="cut.ckpt"):
        load_checkpoint(path)


def test_trailing_bytes_are_an_error():
    with pytest.raises(CheckpointError, match="trailing"):
        decode_checkpoint(encode_checkpoint(_sample()) + b"\x00" * 8)


def test_version_mismatch():
    blob = _rewrite_header(encode_checkpoint(_sample()), format_version=FORMAT_VERSION + 1)
    with pytest.raises(CheckpointError, match="version"):
        decode_checkpoint(blob)


def test_corrupt_header():
    blob = struct.pack("<Q", 4) + b"{{{{"
    with pytest.raises(CheckpointError, match="corrupt"):
        decode_checkpoint(blob)


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError, match="missing.ckpt"):
        load_checkpoint(tmp_path / "missing.ckpt")


def test_network_round_trip(tiny_config, tmp_path):
    m = tiny_config.model
    net = PretrainNetwork(m, 0.5, np.random.default_rng(0))
    path = save_checkpoint(checkpoint_from_module(net, "fp"), tmp_path / "pretrain.ckpt")
    fresh = PretrainNetwork(m, 0.5, np.random.default_rng(99))
    fresh.load_state(load_checkpoint(path)[0].parameters)
    original, loaded = net.state(), fresh.state()
    assert all(original[k].tobytes() == loaded[k].tobytes() for k in original)


def test_frozen_flags_recorded(tiny_config):
    m = tiny_config.model
    net = IFMMINNetwork(m, tiny_config.train, EncoderStack(m, 0.5, np.random.default_rng(0)), np.random.default_rng(1))
    ckpt = decode_checkpoint(encode_checkpoint(checkpoint_from_module(net, "fp")))
    assert "teacher.enc_a.w_ih" in ckpt.frozen
    assert not any(name.startswith("student.") for name in ckpt.frozen)


def test_load_state_rejects_missing_parameter(tiny_config):
    net = PretrainNetwork(tiny_config.model, 0.5, np.random.default_rng(0))
    state = net.state()
    state.pop("enc_t.proj.weight")
    with pytest.raises(CheckpointError, match="enc_t.proj.weight"):
        net.load_state(state)
