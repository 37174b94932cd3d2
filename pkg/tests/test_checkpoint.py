"""Tests for checkpoint save and load."""

import dataclasses

import pytest
import torch

from midiforge.checkpoint import FORMAT, load_checkpoint, save_checkpoint
from midiforge.encoders import ToyEncoder
from midiforge.errors import CheckpointError, IncompatibleVersion, ShapeMismatch
from midiforge.model import DecoderModel
from midiforge.training import TrainState


@pytest.fixture
def saved(tiny_config, vocab, tmp_path):
    model = DecoderModel(tiny_config, seed=4)
    encoder = ToyEncoder(dim=tiny_config.encoder_dim, buckets=128, seed=4)
    state = TrainState(step=12, base_lr=1e-4, warmup_steps=2, total_steps=50, seed=4)
    optimizer = torch.optim.Adam(model.parameters())
    path = str(tmp_path / "model.pt")
    save_checkpoint(path, model, vocab, state, encoder, optimizer, mode="finetune")
    return path, model, encoder, state


class TestCheckpoint:
    def test_roundtrip(self, saved, vocab):
        path, model, encoder, state = saved
        ckpt = load_checkpoint(path)
        assert ckpt.config == model.config
        assert ckpt.vocab == vocab
        assert ckpt.train_state == state
        assert ckpt.mode == "finetune"
        assert ckpt.optimizer_state is not None
        for (name, a), b in zip(model.state_dict().items(), ckpt.model.state_dict().values()):
            assert torch.equal(a, b), name

    def test_encoder_restored(self, saved):
        path, _, encoder, _ = saved
        restored = load_checkpoint(path).build_encoder()
        assert isinstance(restored, ToyEncoder)
        assert restored.buckets == 128
        text = "A piece in G major."
        assert torch.allclose(restored.encode(text).matrix, encoder.encode(text).matrix)

    def test_vocab_size_check(self, saved, vocab):
        path = saved[0]
        with pytest.raises(ShapeMismatch):
            load_checkpoint(path, expected_vocab_size=len(vocab) + 1)

    def test_version_mismatch(self, saved, tmp_path):
        payload = torch.load(saved[0], weights_only=True)
        payload["version"] = 99
        path = str(tmp_path / "future.pt")
        torch.save(payload, path)
        with pytest.raises(IncompatibleVersion):
            load_checkpoint(path)

    def test_shape_mismatch(self, saved, tmp_path):
        payload = torch.load(saved[0], weights_only=True)
        payload["config"]["model_dim"] = 48
        path = str(tmp_path / "wrong.pt")
        torch.save(payload, path)
        with pytest.raises(ShapeMismatch):
            load_checkpoint(path)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.pt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(str(path))
        torch.save({"format": "other"}, str(path))
        with pytest.raises(CheckpointError):
            load_checkpoint(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(str(tmp_path / "nope.pt"))

    def test_format_marker(self, saved):
        assert torch.load(saved[0], weights_only=True)["format"] == FORMAT
