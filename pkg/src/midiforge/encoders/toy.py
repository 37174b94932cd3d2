"""Trainable toy text encoder: hashed word pieces, one self-attention layer."""

from __future__ import annotations

import hashlib
import re

import torch
from torch import nn

from midiforge.encoders.interface import CaptionEmbedding, TextEncoder
from midiforge.errors import EmptyInput

_WORD_PIECE = re.compile(r"\w+|[^\w\s]")


def word_pieces(text: str) -> list[str]:
    """Lowercased words and single punctuation marks."""
    return _WORD_PIECE.findall(text.lower())


class ToyEncoder(nn.Module, TextEncoder):
    def __init__(self, dim: int = 64, buckets: int = 4096, max_pieces: int = 128, seed: int = 0):
        super().__init__()
        self._dim = dim
        self.buckets = buckets
        self.max_pieces = max_pieces
        self.embedding = nn.Embedding(buckets, dim)
        self.attention = nn.MultiheadAttention(dim, num_heads=1, batch_first=True)
        self.norm = nn.LayerNorm(dim)
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for name, param in self.named_parameters():
                if param.dim() > 1:
                    param.copy_(torch.randn(param.shape, generator=gen) * 0.02)
                elif not name.startswith("norm"):
                    param.zero_()

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def trainable(self) -> bool:
        return True

    def piece_ids(self, text: str) -> torch.Tensor:
        pieces = word_pieces(text)[: self.max_pieces]
        if not pieces:
            raise EmptyInput(f"caption has no word pieces: {text!r}")
        ids = [
            int.from_bytes(hashlib.sha256(p.encode("utf-8")).digest()[:4], "little") % self.buckets
            for p in pieces
        ]
        return torch.tensor(ids, dtype=torch.long)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        x = self.embedding(ids).unsqueeze(0)
        attended, _ = self.attention(x, x, x, need_weights=False)
        return self.norm(x + attended).squeeze(0)

    def encode(self, text: str) -> CaptionEmbedding:
        return CaptionEmbedding.full(self(self.piece_ids(text)))
