"""Versioned checkpoints: config, vocabulary, decoder, encoder and optimizer state."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any

import torch

from midiforge.config import EncoderConfig, EncoderKind, ModelConfig
from midiforge.encoders import TextEncoder, ToyEncoder, build_encoder
from midiforge.errors import (
    CheckpointError,
    ConfigError,
    IncompatibleVersion,
    ShapeMismatch,
    VocabularyError,
)
from midiforge.model import DecoderModel
from midiforge.remi import Vocabulary, vocabulary_from_dict
from midiforge.training import TrainState

logger = logging.getLogger(__name__)

FORMAT = "midiforge-checkpoint"
VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: Vocabulary
    model: DecoderModel
    train_state: TrainState
    encoder_kind: str = EncoderKind.TOY
    encoder_state: dict[str, Any] | None = None
    encoder_buckets: int = 4096
    optimizer_state: dict[str, Any] | None = None
    mode: str = "pretrain"

    def build_encoder(self, embeddings: str = "") -> TextEncoder:
        """The encoder the model was trained with; precomputed ones need their file."""
        if self.encoder_kind == EncoderKind.PRECOMPUTED:
            return build_encoder(
                EncoderConfig(kind=EncoderKind.PRECOMPUTED, embeddings=embeddings), self.config.encoder_dim
            )
        encoder = ToyEncoder(dim=self.config.encoder_dim, buckets=self.encoder_buckets)
        if self.encoder_state is not None:
            encoder.load_state_dict(self.encoder_state)
        encoder.eval()
        return encoder


def save_checkpoint(
    path: str,
    model: DecoderModel,
    vocab: Vocabulary,
    train_state: TrainState,
    encoder: TextEncoder,
    optimizer: torch.optim.Optimizer | None = None,
    mode: str = "pretrain",
) -> None:
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "config": dataclasses.asdict(model.config),
        "vocab": vocab.to_dict(),
        "model": model.state_dict(),
        "train_state": train_state.to_dict(),
        "mode": mode,
        "encoder": {
            "kind": EncoderKind.TOY if isinstance(encoder, ToyEncoder) else EncoderKind.PRECOMPUTED,
            "buckets": getattr(encoder, "buckets", 0),
            "state": encoder.state_dict() if isinstance(encoder, ToyEncoder) else None,
        },
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
    }
    torch.save(payload, path)
    logger.debug("saved checkpoint at step %d to %s", train_state.step, path)


def load_checkpoint(path: str, expected_vocab_size: int | None = None) -> Checkpoint:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError as e:
        raise CheckpointError(f"checkpoint not found: {path}") from e
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or payload.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a midiforge checkpoint")
    if payload.get("version") != VERSION:
        raise IncompatibleVersion(f"checkpoint version {payload.get('version')} (expected {VERSION})")

    try:
        config = ModelConfig(**payload["config"])
        vocab = vocabulary_from_dict(payload["vocab"])
    except (KeyError, TypeError, ConfigError, VocabularyError) as e:
        raise CheckpointError(f"corrupt checkpoint header in {path}: {e}") from e
    if config.vocab_size != len(vocab):
        raise ShapeMismatch(f"model vocab_size {config.vocab_size} != vocabulary size {len(vocab)}")
    if expected_vocab_size is not None and expected_vocab_size != config.vocab_size:
        raise ShapeMismatch(
            f"checkpoint vocab_size {config.vocab_size} != expected {expected_vocab_size}"
        )

    model = DecoderModel(config)
    state = payload["model"]
    dtype = next(iter(state.values())).dtype if state else torch.float32
    model.to(dtype)
    try:
        model.load_state_dict(state)
    except RuntimeError as e:
        raise ShapeMismatch(f"parameters do not fit the saved config: {e}") from e

    encoder = payload.get("encoder") or {}
    return Checkpoint(
        config=config,
        vocab=vocab,
        model=model,
        train_state=TrainState.from_dict(payload.get("train_state") or {}),
        encoder_kind=encoder.get("kind", EncoderKind.TOY),
        encoder_state=encoder.get("state"),
        encoder_buckets=encoder.get("buckets") or 4096,
        optimizer_state=payload.get("optimizer"),
        mode=payload.get("mode", "pretrain"),
    )
