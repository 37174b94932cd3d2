"""Text encoder interface (abstract base) and the embedding it produces."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import torch

from midiforge.captions import Caption
from midiforge.errors import EmptyInput


@dataclass
class CaptionEmbedding:
    """n x d caption features with a length-n validity mask."""
    matrix: torch.Tensor
    mask: torch.Tensor

    def __post_init__(self) -> None:
        if self.matrix.dim() != 2 or self.matrix.shape[0] < 1:
            raise ValueError(f"embedding must be a non-empty n x d matrix, got {tuple(self.matrix.shape)}")
        if self.mask.shape != self.matrix.shape[:1]:
            raise ValueError("mask length must match the embedding rows")

    @property
    def length(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def full(cls, matrix: torch.Tensor) -> CaptionEmbedding:
        return cls(matrix, torch.ones(matrix.shape[0], dtype=torch.bool))


class TextEncoder(ABC):
    """Maps caption text to an n x d embedding."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Feature dimension d of every embedding."""

    @property
    @abstractmethod
    def trainable(self) -> bool:
        """Whether the encoder has parameters an optimizer may update."""

    @abstractmethod
    def encode(self, text: str) -> CaptionEmbedding:
        """Embed one caption. Raises MissingEmbedding when it cannot."""


def encode_text(encoder: TextEncoder, caption: Caption | str) -> CaptionEmbedding:
    text = caption.text if isinstance(caption, Caption) else caption
    if not text.strip():
        raise EmptyInput("caption is empty")
    return encoder.encode(text)


def pad_embeddings(
    embeddings: list[CaptionEmbedding], dtype: torch.dtype | None = None
) -> tuple[torch.Tensor, torch.Tensor]:
    """Stack into (batch, n_max, d) features and a (batch, n_max) mask."""
    n_max = max(e.length for e in embeddings)
    dim = embeddings[0].dim
    dtype = dtype or embeddings[0].matrix.dtype
    feats = torch.zeros(len(embeddings), n_max, dim, dtype=dtype)
    mask = torch.zeros(len(embeddings), n_max, dtype=torch.bool)
    for i, e in enumerate(embeddings):
        feats[i, : e.length] = e.matrix.to(dtype)
        mask[i, : e.length] = e.mask
    return feats, mask
