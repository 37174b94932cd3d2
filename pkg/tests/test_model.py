"""Tests for the decoder model."""

import dataclasses
import math

import pytest
import torch

from midiforge.config import ModelConfig
from midiforge.errors import ConfigError, ContextOverflow
from midiforge.model import DecoderModel, causal_mask, parameter_count, sequence_loss


def _inputs(config, batch=2, length=6, memory_len=3, seed=0):
    gen = torch.Generator().manual_seed(seed)
    tokens = torch.randint(4, config.vocab_size, (batch, length), generator=gen)
    memory = torch.randn(batch, memory_len, config.encoder_dim, generator=gen)
    return tokens, memory


class TestParameterCount:
    @pytest.mark.parametrize("overrides", [
        {},
        {"layers": 3},
        {"encoder_dim": 24},
        {"heads": 4, "model_dim": 48, "feedforward_dim": 96},
    ])
    def test_matches_module(self, tiny_config, overrides):
        config = dataclasses.replace(tiny_config, **overrides)
        model = DecoderModel(config)
        assert sum(p.numel() for p in model.parameters()) == parameter_count(config)

    def test_full_scale(self):
        assert parameter_count(ModelConfig.full_scale(), vocab_size=450) == 170_824_704


class TestForward:
    def test_shape(self, tiny_config):
        model = DecoderModel(tiny_config)
        tokens, memory = _inputs(tiny_config)
        assert model(tokens, memory).shape == (2, 6, tiny_config.vocab_size)

    def test_causal(self, tiny_config):
        model = DecoderModel(tiny_config).eval()
        tokens, memory = _inputs(tiny_config)
        changed = tokens.clone()
        changed[:, -1] = (changed[:, -1] + 1) % tiny_config.vocab_size
        a, b = model(tokens, memory), model(changed, memory)
        assert torch.allclose(a[:, :-1], b[:, :-1], atol=1e-6)
        assert not torch.allclose(a[:, -1], b[:, -1])

    def test_suffix_edits_leave_prefix_exact(self, tiny_config):
        model = DecoderModel(tiny_config, seed=3).double().eval()
        tokens, memory = _inputs(tiny_config, batch=2, length=10, seed=3)
        memory = memory.double()
        gen = torch.Generator().manual_seed(4)
        with torch.no_grad():
            base = model(tokens, memory)
            for start in range(1, 10):
                changed = tokens.clone()
                changed[:, start:] = torch.randint(4, tiny_config.vocab_size, (2, 10 - start), generator=gen)
                out = model(changed, memory)
                assert torch.equal(out[:, :start], base[:, :start]), start

    def test_memory_mask_hides_padding(self, tiny_config):
        model = DecoderModel(tiny_config).eval()
        tokens, memory = _inputs(tiny_config, batch=1)
        padded = torch.cat([memory, torch.randn(1, 2, tiny_config.encoder_dim) * 50], dim=1)
        mask = torch.tensor([[True, True, True, False, False]])
        assert torch.allclose(model(tokens, memory), model(tokens, padded, mask), atol=1e-5)

    def test_caption_changes_output(self, tiny_config):
        model = DecoderModel(tiny_config).eval()
        tokens, memory = _inputs(tiny_config, batch=1)
        assert not torch.allclose(model(tokens, memory), model(tokens, memory + 1.0))

    def test_context_overflow(self, tiny_config):
        model = DecoderModel(tiny_config)
        tokens, memory = _inputs(tiny_config, length=tiny_config.context_length + 1)
        with pytest.raises(ContextOverflow):
            model(tokens, memory)

    def test_needs_vocabulary(self, tiny_config):
        with pytest.raises(ConfigError):
            DecoderModel(dataclasses.replace(tiny_config, vocab_size=0))

    def test_seeded_init(self, tiny_config):
        a, b, c = DecoderModel(tiny_config, seed=1), DecoderModel(tiny_config, seed=1), DecoderModel(tiny_config, seed=2)
        for (name, pa), pb, pc in zip(a.named_parameters(), b.parameters(), c.parameters()):
            assert torch.equal(pa, pb)
            if pa.dim() > 1:
                assert not torch.equal(pa, pc), name

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            ModelConfig(heads=3, model_dim=64)
        with pytest.raises(ConfigError):
            ModelConfig(dropout=1.0)


class TestLoss:
    def test_pad_targets_ignored(self):
        logits = torch.randn(1, 3, 10)
        targets = torch.tensor([[5, 6, 0]])
        full = sequence_loss(logits[:, :2], targets[:, :2])
        assert torch.allclose(sequence_loss(logits, targets), full)

    def test_uniform_logits(self, vocab):
        size = len(vocab)
        targets = torch.randint(4, size, (3, 7), generator=torch.Generator().manual_seed(0))
        logits = torch.zeros(3, 7, size, dtype=torch.float64)
        assert sequence_loss(logits, targets).item() == pytest.approx(math.log(size), rel=1e-12)

    def test_matches_direct_formula(self):
        gen = torch.Generator().manual_seed(3)
        logits = torch.randn(2, 5, 9, generator=gen, dtype=torch.float64) * 3
        targets = torch.randint(1, 9, (2, 5), generator=gen)
        targets[1, 3:] = 0
        terms = []
        for b in range(2):
            for t in range(5):
                target = targets[b, t].item()
                if target == 0:
                    continue
                row = logits[b, t].tolist()
                terms.append(math.log(sum(math.exp(x) for x in row)) - row[target])
        assert sequence_loss(logits, targets).item() == pytest.approx(sum(terms) / len(terms), rel=1e-12)
        total = sequence_loss(logits, targets, reduction="sum").item()
        assert total == pytest.approx(sum(terms), rel=1e-12)

    def test_gradients_scale_with_loss(self, tiny_config):
        tokens, memory = _inputs(tiny_config, batch=2, length=5)
        targets = torch.roll(tokens, -1, dims=1)
        grads = []
        for scale in (1.0, 3.0):
            model = DecoderModel(tiny_config).double()
            (scale * sequence_loss(model(tokens, memory.double()), targets)).backward()
            grads.append({name: p.grad.clone() for name, p in model.named_parameters()})
        for name, grad in grads[0].items():
            assert torch.allclose(grads[1][name], 3.0 * grad, rtol=1e-12, atol=1e-15), name

    def test_gradients(self, tiny_config):
        model = DecoderModel(tiny_config).double().eval()
        tokens, memory = _inputs(tiny_config, batch=1, length=4, memory_len=2)
        targets = torch.roll(tokens, -1, dims=1)
        memory = memory.double().requires_grad_(True)
        assert torch.autograd.gradcheck(
            lambda m: sequence_loss(model(tokens, m), targets), (memory,), eps=1e-6, atol=1e-5
        )

    def test_parameter_gradients_match_finite_differences(self, tiny_config):
        model = DecoderModel(tiny_config, seed=5).double().eval()
        gen = torch.Generator().manual_seed(5)
        with torch.no_grad():
            # Nonzero biases and gains so their gradients are exercised away from init.
            for param in model.parameters():
                if param.dim() == 1:
                    param.add_(torch.randn(param.shape, generator=gen, dtype=param.dtype) * 0.1)
        tokens, memory = _inputs(tiny_config, batch=2, length=5, memory_len=3)
        memory = memory.double()
        targets = torch.roll(tokens, -1, dims=1)

        def loss() -> float:
            return sequence_loss(model(tokens, memory), targets).item()

        model.zero_grad()
        sequence_loss(model(tokens, memory), targets).backward()
        eps = 1e-5
        for name, param in model.named_parameters():
            flat = param.data.view(-1)
            grad = param.grad.view(-1)
            if name == "token_embedding.weight":
                # Rows of tokens that never appear have exactly zero gradient.
                dim = param.shape[1]
                rows = sorted(set(tokens.view(-1).tolist()))
                pool = torch.tensor([r * dim + c for r in rows for c in range(dim)])
                coords = pool[torch.randperm(len(pool), generator=gen)[:20]]
            else:
                coords = torch.randperm(flat.numel(), generator=gen)[:20]
            assert len(coords) >= min(20, flat.numel())
            for i in coords.tolist():
                original = flat[i].item()
                with torch.no_grad():
                    flat[i] = original + eps
                    up = loss()
                    flat[i] = original - eps
                    down = loss()
                    flat[i] = original
                numeric = (up - down) / (2 * eps)
                analytic = grad[i].item()
                error = abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-5)
                assert error < 1e-4, (name, i, numeric, analytic)


def test_causal_mask():
    assert causal_mask(3).tolist() == [[True, False, False], [True, True, False], [True, True, True]]
