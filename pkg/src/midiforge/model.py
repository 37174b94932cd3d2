"""Autoregressive transformer decoder with cross-attention over caption features."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from midiforge.config import ModelConfig
from midiforge.errors import ConfigError, ContextOverflow

__all__ = ["ModelConfig", "DecoderModel", "parameter_count", "sequence_loss", "causal_mask"]


def parameter_count(config: ModelConfig, vocab_size: int | None = None) -> int:
    """Closed-form parameter count.

    Per layer: self-attention Q,K,V,O with biases; cross-attention Q,O over
    model_dim and K,V over encoder_dim, all with biases; two feed-forward
    matrices with biases; three layer norms. Then a final layer norm, the
    token embedding and a bias-free output projection. The text encoder is
    not counted.
    """
    d = config.model_dim
    f = config.feedforward_dim
    e = config.encoder_dim
    v = vocab_size if vocab_size is not None else config.vocab_size
    self_attention = 4 * (d * d + d)
    cross_attention = 2 * (d * d + d) + 2 * (e * d + d)
    feedforward = d * f + f + f * d + d
    norms = 3 * 2 * d
    per_layer = self_attention + cross_attention + feedforward + norms
    return config.layers * per_layer + 2 * d + v * d + d * v


def sinusoidal_table(length: int, dim: int) -> Tensor:
    pos = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(-math.log(10000.0) * torch.arange(0, dim, 2, dtype=torch.float64) / dim)
    table = torch.zeros(length, dim, dtype=torch.float64)
    table[:, 0::2] = torch.sin(pos * div)
    table[:, 1::2] = torch.cos(pos * div)[:, : dim // 2]
    return table.float()


def causal_mask(length: int) -> Tensor:
    """(length, length) bool, True where attention is allowed."""
    return torch.ones(length, length, dtype=torch.bool).tril()


class MultiHeadAttention(nn.Module):
    def __init__(self, dim: int, heads: int, kv_dim: int | None = None, dropout: float = 0.0):
        super().__init__()
        kv_dim = kv_dim or dim
        self.heads = heads
        self.head_dim = dim // heads
        self.scaling = self.head_dim ** -0.5
        self.dropout = dropout
        self.query = nn.Linear(dim, dim)
        self.key = nn.Linear(kv_dim, dim)
        self.value = nn.Linear(kv_dim, dim)
        self.out = nn.Linear(dim, dim)

    def _split(self, x: Tensor) -> Tensor:
        # [bz, len, h * d] -> [bz, h, len, d]
        bz, length, _ = x.shape
        return x.view(bz, length, self.heads, self.head_dim).permute(0, 2, 1, 3)

    def forward(self, x: Tensor, memory: Tensor, mask: Tensor) -> Tensor:
        """mask broadcasts to [bz, h, len_q, len_k]; True marks visible keys."""
        q = self._split(self.query(x))
        k = self._split(self.key(memory))
        v = self._split(self.value(memory))
        weights = torch.matmul(q, k.transpose(-1, -2)) * self.scaling
        weights = weights.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(weights, dim=-1)
        weights = F.dropout(weights, p=self.dropout, training=self.training)
        out = torch.matmul(weights, v)
        bz, _, length, _ = out.shape
        return self.out(out.permute(0, 2, 1, 3).reshape(bz, length, -1))


class DecoderLayer(nn.Module):
    """Pre-norm block: causal self-attention, cross-attention, feed-forward."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        d = config.model_dim
        self.self_norm = nn.LayerNorm(d)
        self.self_attention = MultiHeadAttention(d, config.heads, dropout=config.dropout)
        self.cross_norm = nn.LayerNorm(d)
        self.cross_attention = MultiHeadAttention(d, config.heads, config.encoder_dim, config.dropout)
        self.ff_norm = nn.LayerNorm(d)
        self.ff_in = nn.Linear(d, config.feedforward_dim)
        self.ff_out = nn.Linear(config.feedforward_dim, d)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x: Tensor, memory: Tensor, self_mask: Tensor, memory_mask: Tensor) -> Tensor:
        h = self.self_norm(x)
        x = x + self.dropout(self.self_attention(h, h, self_mask))
        x = x + self.dropout(self.cross_attention(self.cross_norm(x), memory, memory_mask))
        x = x + self.dropout(self.ff_out(F.gelu(self.ff_in(self.ff_norm(x)))))
        return x


class DecoderModel(nn.Module):
    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        if config.vocab_size < 1:
            raise ConfigError("DecoderModel needs a positive vocab_size")
        self.config = config
        self.token_embedding = nn.Embedding(config.vocab_size, config.model_dim)
        self.register_buffer(
            "positions", sinusoidal_table(config.context_length, config.model_dim), persistent=False
        )
        self.layers = nn.ModuleList(DecoderLayer(config) for _ in range(config.layers))
        self.final_norm = nn.LayerNorm(config.model_dim)
        self.output = nn.Linear(config.model_dim, config.vocab_size, bias=False)
        self.reset_parameters(seed)
        count = sum(p.numel() for p in self.parameters())
        assert count == parameter_count(config), (count, parameter_count(config))

    def reset_parameters(self, seed: int = 0) -> None:
        """normal(0, 0.02) matrices, zero biases, unit layer-norm gains."""
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for name, param in self.named_parameters():
                if param.dim() > 1:
                    param.copy_(torch.randn(param.shape, generator=gen, dtype=param.dtype) * 0.02)
                elif name.endswith("bias"):
                    param.zero_()
                else:
                    param.fill_(1.0)

    def forward(self, tokens: Tensor, memory: Tensor, memory_mask: Tensor | None = None) -> Tensor:
        """tokens [bz, len] ids, memory [bz, n, encoder_dim] -> logits [bz, len, vocab]."""
        if tokens.dim() == 1:
            tokens = tokens.unsqueeze(0)
        if memory.dim() == 2:
            memory = memory.unsqueeze(0)
        length = tokens.shape[1]
        if length > self.config.context_length:
            raise ContextOverflow(
                f"sequence of {length} tokens exceeds context length {self.config.context_length}"
            )
        if memory_mask is None:
            memory_mask = torch.ones(memory.shape[:2], dtype=torch.bool, device=memory.device)
        dtype = self.token_embedding.weight.dtype
        x = self.token_embedding(tokens) + self.positions[:length].to(dtype)
        memory = memory.to(dtype)
        self_mask = causal_mask(length).to(tokens.device)[None, None]
        cross_mask = memory_mask[:, None, None, :]
        for layer in self.layers:
            x = layer(x, memory, self_mask, cross_mask)
        return self.output(self.final_norm(x))


def sequence_loss(logits: Tensor, targets: Tensor, pad_id: int = 0, reduction: str = "mean") -> Tensor:
    """Cross-entropy of next-token targets; PAD targets are excluded."""
    return F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), targets.reshape(-1), ignore_index=pad_id, reduction=reduction
    )
