"""Tests for sampling."""

import pytest
import torch

from midiforge.encoders import CaptionEmbedding
from midiforge.errors import ContextOverflow
from midiforge.generation import SamplingParams, generate, next_token_distribution
from midiforge.model import DecoderModel
from midiforge.remi import decode


@pytest.fixture
def model(tiny_config):
    return DecoderModel(tiny_config, seed=3)


@pytest.fixture
def embedding(tiny_config):
    return CaptionEmbedding.full(torch.randn(4, tiny_config.encoder_dim, generator=torch.Generator().manual_seed(0)))


class TestDistribution:
    def test_top_k_one_is_argmax(self):
        logits = torch.tensor([0.1, 2.0, -1.0, 1.5])
        probs = next_token_distribution(logits, temperature=1.0, top_k=1)
        assert probs.tolist() == [0.0, 1.0, 0.0, 0.0]

    def test_top_k_support(self):
        logits = torch.randn(50, generator=torch.Generator().manual_seed(1))
        probs = next_token_distribution(logits, temperature=0.7, top_k=5)
        assert int((probs > 0).sum()) == 5
        assert float(probs.sum()) == pytest.approx(1.0)

    def test_top_k_ties_go_to_lower_ids(self):
        logits = torch.tensor([1.0, 3.0, 2.0, 2.0, 2.0, 0.5])
        probs = next_token_distribution(logits, temperature=1.0, top_k=3)
        assert (probs > 0).tolist() == [False, True, True, True, False, False]
        assert float(probs.sum()) == pytest.approx(1.0)

    def test_top_k_all_equal(self):
        probs = next_token_distribution(torch.zeros(8), temperature=1.0, top_k=2)
        assert probs.tolist() == [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]

    def test_zero_top_k_keeps_all(self):
        probs = next_token_distribution(torch.zeros(10), temperature=2.0, top_k=0)
        assert torch.allclose(probs, torch.full((10,), 0.1, dtype=probs.dtype))


class TestGenerate:
    def test_seeded(self, model, embedding, vocab):
        params = SamplingParams(max_tokens=20, seed=5)
        a = generate(model, embedding, vocab, params)
        b = generate(model, embedding, vocab, params)
        assert a.ids == b.ids
        assert a.ids[0] == vocab.bos_id
        assert len(a) <= 20

    def test_greedy_ignores_seed(self, model, embedding, vocab):
        a = generate(model, embedding, vocab, SamplingParams(max_tokens=10, temperature=0.0, seed=1))
        b = generate(model, embedding, vocab, SamplingParams(max_tokens=10, temperature=0.0, seed=2))
        assert a.ids == b.ids

    def test_truncated_without_eos(self, model, embedding, vocab):
        seq = generate(model, embedding, vocab, SamplingParams(max_tokens=8, seed=0))
        assert seq.truncated == (seq.ids[-1] != vocab.eos_id)
        assert seq.ids.count(vocab.eos_id) <= 1

    def test_output_always_decodes(self, model, embedding, vocab):
        for seed in range(5):
            seq = generate(model, embedding, vocab, SamplingParams(max_tokens=30, seed=seed))
            result = decode(seq, vocab)
            assert result.violations >= 0

    def test_context_overflow(self, model, embedding, vocab, tiny_config):
        with pytest.raises(ContextOverflow):
            generate(model, embedding, vocab, SamplingParams(max_tokens=tiny_config.context_length + 1))
