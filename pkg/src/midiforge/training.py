"""Training: data pipeline, cosine schedule, Adam steps with accumulation."""

from __future__ import annotations

import json
import logging
import math
import os
import random
from dataclasses import asdict, dataclass
from typing import Callable

import torch
from torch import Tensor

from midiforge.captions import Caption, omit_sentences, plan_omission
from midiforge.config import TrainMode
from midiforge.corpus import read_manifest
from midiforge.encoders import CaptionEmbedding, TextEncoder, encode_text, pad_embeddings
from midiforge.errors import MidiParseError
from midiforge.midi import extract_notes, read_midi, score_meta
from midiforge.model import DecoderModel, sequence_loss
from midiforge.remi import Vocabulary, encode
from midiforge.utils import derive_seed, read_jsonl, resolve_path

logger = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


def cosine_lr(step: int, base_lr: float, warmup_steps: int, total_steps: int) -> float:
    """Linear warm-up to base_lr, then cosine decay to 0 at total_steps."""
    step = min(max(step, 0), total_steps)
    if warmup_steps and step <= warmup_steps:
        return base_lr * step / warmup_steps
    if total_steps <= warmup_steps:
        return base_lr
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass
class TrainState:
    """Schedule position. Adam moments live in the optimizer state."""
    step: int = 0
    base_lr: float = 1e-4
    warmup_steps: int = 20
    total_steps: int = 200
    seed: int = 0

    def lr(self, step: int | None = None) -> float:
        return cosine_lr(self.step if step is None else step, self.base_lr, self.warmup_steps, self.total_steps)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainState:
        return cls(**{k: d[k] for k in ("step", "base_lr", "warmup_steps", "total_steps", "seed") if k in d})


@dataclass
class TrainingExample:
    tokens: list[int]
    caption: str


@dataclass
class StepResult:
    step: int
    loss: float
    lr: float
    captions: int = 0
    omitted: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


# --- Data pipeline ---

def load_examples(manifest_path: str, vocab: Vocabulary, context_length: int) -> list[TrainingExample]:
    """Manifest records -> first context_length+1 tokens of each piece with its caption.

    Unreadable MIDI files are skipped with a warning.
    """
    base = os.path.dirname(os.path.abspath(manifest_path))
    examples = []
    for rec in read_manifest(manifest_path):
        path = resolve_path(rec["midi_path"], base)
        try:
            midi = read_midi(path)
        except (OSError, MidiParseError) as e:
            logger.warning("skipping %s: %s", path, e)
            continue
        seq = encode(extract_notes(midi), score_meta(midi), vocab, context_length=context_length + 1)
        examples.append(TrainingExample(tokens=seq.ids, caption=rec["caption"]))
    logger.info("loaded %d training pieces from %s", len(examples), manifest_path)
    return examples


def make_batch(sequences: list[list[int]], pad_id: int) -> tuple[Tensor, Tensor]:
    """Inputs are each sequence minus its last token; targets are shifted by one."""
    length = max(len(s) for s in sequences) - 1
    inputs = torch.full((len(sequences), length), pad_id, dtype=torch.long)
    targets = torch.full((len(sequences), length), pad_id, dtype=torch.long)
    for i, s in enumerate(sequences):
        inputs[i, : len(s) - 1] = torch.tensor(s[:-1], dtype=torch.long)
        targets[i, : len(s) - 1] = torch.tensor(s[1:], dtype=torch.long)
    return inputs, targets


# --- Trainer ---

class Trainer:
    """Owns the decoder, the text encoder, Adam and the schedule state."""

    def __init__(
        self,
        model: DecoderModel,
        encoder: TextEncoder,
        vocab: Vocabulary,
        state: TrainState,
        mode: str = TrainMode.PRETRAIN,
        batch_size: int = 4,
        accumulation_steps: int = 4,
        train_encoder: bool = False,
    ):
        self.model = model
        self.encoder = encoder
        self.vocab = vocab
        self.state = state
        self.mode = mode
        self.batch_size = batch_size
        self.accumulation_steps = accumulation_steps
        self.train_encoder = train_encoder and encoder.trainable
        params = list(model.parameters())
        if self.train_encoder:
            params += list(encoder.parameters())
        self.optimizer = torch.optim.Adam(params, lr=0.0, betas=ADAM_BETAS, eps=ADAM_EPS)
        self._frozen_cache: dict[str, CaptionEmbedding] = {}

    def embed(self, caption: str) -> CaptionEmbedding:
        if self.train_encoder:
            return encode_text(self.encoder, caption)
        cached = self._frozen_cache.get(caption)
        if cached is None:
            with torch.no_grad():
                emb = encode_text(self.encoder, caption)
            cached = CaptionEmbedding(emb.matrix.detach(), emb.mask)
            self._frozen_cache[caption] = cached
        return cached

    def _micro_loss_sum(self, examples: list[TrainingExample]) -> Tensor:
        inputs, targets = make_batch([ex.tokens for ex in examples], self.vocab.pad_id)
        dtype = self.model.token_embedding.weight.dtype
        memory, memory_mask = pad_embeddings([self.embed(ex.caption) for ex in examples], dtype=dtype)
        logits = self.model(inputs, memory, memory_mask)
        return sequence_loss(logits, targets, self.vocab.pad_id, reduction="sum")

    def train_step(self, micro_batches: list[list[TrainingExample]]) -> StepResult:
        """One optimizer update over k micro-batches.

        Each micro-batch's summed loss is divided by the token count of the
        whole step, so k micro-batches update exactly like their concatenation.
        """
        if not micro_batches or not any(micro_batches):
            raise ValueError("train_step needs at least one example")
        self.state.step += 1
        lr = self.state.lr()
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        self.model.train()
        self.optimizer.zero_grad()
        total_tokens = sum(
            sum(len(ex.tokens) - 1 for ex in mb) for mb in micro_batches if mb
        )
        loss_total = 0.0
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(derive_seed(self.state.seed, "dropout", self.state.step))
            for mb in micro_batches:
                if not mb:
                    continue
                loss_sum = self._micro_loss_sum(mb)
                (loss_sum / total_tokens).backward()
                loss_total += loss_sum.item()
        self.optimizer.step()
        return StepResult(step=self.state.step, loss=loss_total / total_tokens, lr=lr)

    def draw_step(self, examples: list[TrainingExample], step: int) -> tuple[list[list[TrainingExample]], int, int]:
        """Micro-batches for a step, drawn from the step's own seed.

        Finetune mode applies sentence omission per caption. Returns the
        micro-batches, the caption count and how many drew omission.
        """
        rng = random.Random(derive_seed(self.state.seed, "batch", step))
        micro_batches = []
        captions = omitted = 0
        for a in range(self.accumulation_steps):
            batch = []
            for b in range(self.batch_size):
                ex = examples[rng.randrange(len(examples))]
                if self.mode == TrainMode.FINETUNE:
                    seed = derive_seed(self.state.seed, "omit", step, a * self.batch_size + b)
                    caption = Caption.from_text(ex.caption)
                    captions += 1
                    if plan_omission(len(caption.sentences), seed) is not None:
                        omitted += 1
                    ex = TrainingExample(ex.tokens, omit_sentences(caption, seed).text)
                batch.append(ex)
            micro_batches.append(batch)
        return micro_batches, captions, omitted

    def fit(
        self,
        examples: list[TrainingExample],
        until_step: int,
        log_path: str | None = None,
        on_step: Callable[[StepResult], None] | None = None,
    ) -> list[StepResult]:
        """Train until state.step == until_step, logging one JSON line per step."""
        if not examples:
            raise ValueError("no training examples")
        results = []
        log = open(log_path, "a", encoding="utf-8") if log_path else None
        try:
            while self.state.step < until_step:
                micro_batches, captions, omitted = self.draw_step(examples, self.state.step + 1)
                result = self.train_step(micro_batches)
                result.captions, result.omitted = captions, omitted
                results.append(result)
                if log:
                    log.write(json.dumps(result.to_dict(), separators=(",", ":")) + "\n")
                    log.flush()
                if on_step:
                    on_step(result)
                logger.debug("step %d loss %.4f lr %.3g", result.step, result.loss, result.lr)
        finally:
            if log:
                log.close()
        return results


def read_loss_log(path: str) -> list[StepResult]:
    return [StepResult(**rec) for rec in read_jsonl(path)]
