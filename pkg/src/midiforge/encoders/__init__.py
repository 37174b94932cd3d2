"""Text encoders producing caption embeddings."""

from __future__ import annotations

from midiforge.config import EncoderConfig, EncoderKind
from midiforge.encoders.interface import CaptionEmbedding, TextEncoder, encode_text, pad_embeddings
from midiforge.encoders.precomputed import PrecomputedEncoder
from midiforge.encoders.toy import ToyEncoder
from midiforge.errors import ConfigError

__all__ = [
    "CaptionEmbedding", "TextEncoder", "ToyEncoder", "PrecomputedEncoder",
    "encode_text", "pad_embeddings", "build_encoder",
]


def build_encoder(config: EncoderConfig, dim: int, seed: int = 0) -> TextEncoder:
    if config.kind == EncoderKind.PRECOMPUTED:
        if not config.embeddings:
            raise ConfigError("the precomputed encoder needs an embeddings file")
        encoder = PrecomputedEncoder(config.embeddings)
        if encoder.dim != dim:
            raise ConfigError(f"embedding dimension {encoder.dim} does not match encoder-dim {dim}")
        return encoder
    return ToyEncoder(dim=dim, buckets=config.buckets, seed=seed)
