"""Autoregressive sampling from the decoder."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import torch

from midiforge.encoders import CaptionEmbedding
from midiforge.errors import ContextOverflow
from midiforge.model import DecoderModel
from midiforge.remi import TokenSequence, Vocabulary

logger = logging.getLogger(__name__)

GREEDY_TEMPERATURE = 1e-6


@dataclass
class SamplingParams:
    max_tokens: int = 256
    temperature: float = 1.0
    top_k: int = 40
    seed: int = 0


def next_token_distribution(logits: torch.Tensor, temperature: float, top_k: int) -> torch.Tensor:
    """Temperature-scaled softmax restricted to the top_k logits (top_k <= 0 keeps all).

    Exactly top_k tokens survive; ties at the cutoff go to the lower token id.
    """
    logits = logits.double() / temperature
    if 0 < top_k < logits.shape[-1]:
        keep = torch.argsort(-logits, stable=True)[:top_k]
        mask = torch.ones_like(logits, dtype=torch.bool)
        mask[keep] = False
        logits = logits.masked_fill(mask, float("-inf"))
    return torch.softmax(logits, dim=-1)


@torch.no_grad()
def generate(
    model: DecoderModel,
    embedding: CaptionEmbedding,
    vocab: Vocabulary,
    params: SamplingParams | None = None,
) -> TokenSequence:
    """Sample from BOS until EOS or max_tokens; the full prefix is recomputed each step."""
    params = params or SamplingParams()
    if params.max_tokens > model.config.context_length:
        raise ContextOverflow(
            f"max_tokens {params.max_tokens} exceeds context length {model.config.context_length}"
        )
    model.eval()
    gen = torch.Generator().manual_seed(params.seed)
    memory = embedding.matrix.unsqueeze(0)
    memory_mask = embedding.mask.unsqueeze(0)
    ids = [vocab.bos_id]
    while len(ids) < params.max_tokens:
        logits = model(torch.tensor([ids], dtype=torch.long), memory, memory_mask)[0, -1]
        if params.temperature <= GREEDY_TEMPERATURE:
            token = int(torch.argmax(logits))
        else:
            probs = next_token_distribution(logits, params.temperature, params.top_k)
            token = int(torch.multinomial(probs, 1, generator=gen))
        ids.append(token)
        if token == vocab.eos_id:
            break
    logger.debug("generated %d tokens", len(ids))
    return TokenSequence(ids=ids, truncated=ids[-1] != vocab.eos_id)
