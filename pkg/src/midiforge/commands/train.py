"""midiforge train - pretrain or finetune the decoder on a caption manifest."""

from __future__ import annotations

import dataclasses
import os

import click

from midiforge.checkpoint import load_checkpoint, save_checkpoint
from midiforge.cli import EXIT_CHECKPOINT, EXIT_EMBEDDING, ForgeContext, pass_ctx
from midiforge.config import EncoderKind, TrainMode
from midiforge.encoders import PrecomputedEncoder, build_encoder
from midiforge.errors import CheckpointError, ConfigError, EncoderError, MissingEmbedding
from midiforge.model import DecoderModel
from midiforge.training import Trainer, TrainState, load_examples


@click.command("train")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False), help="Checkpoint to write")
@click.option("--mode", type=click.Choice(TrainMode.ALL), default=None, help="Default: training.mode")
@click.option("--steps", type=click.IntRange(1), default=None,
              help="Stop at this optimizer step (default: training.total-steps)")
@click.option("--resume", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Continue from a checkpoint")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Precomputed caption embeddings (switches to the precomputed encoder)")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None,
              help="Loss log (default: <out>.loss.jsonl)")
@click.option("--lr", type=float, default=None, help="Base learning rate (default: by mode)")
@click.option("--vocab", "vocab_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Vocabulary file (default: from config)")
@pass_ctx
def train(ctx: ForgeContext, manifest: str, out: str, mode: str | None, steps: int | None,
          resume: str | None, embeddings: str | None, log_path: str | None, lr: float | None,
          vocab_path: str | None) -> None:
    """Train with cross-entropy, Adam and a warm-up cosine schedule."""
    cfg = ctx.config
    training = dataclasses.replace(
        cfg.training,
        mode=mode or cfg.training.mode,
        learning_rate=cfg.training.learning_rate if lr is None else lr,
    )
    seed = ctx.seed
    encoder_cfg = cfg.encoder
    if embeddings:
        encoder_cfg = dataclasses.replace(encoder_cfg, kind=EncoderKind.PRECOMPUTED, embeddings=embeddings)

    optimizer_state = None
    try:
        if resume:
            try:
                ckpt = load_checkpoint(resume)
            except CheckpointError as e:
                ctx.fail(str(e), EXIT_CHECKPOINT)
            model, vocabulary = ckpt.model, ckpt.vocab
            encoder = ckpt.build_encoder(encoder_cfg.embeddings)
            if ckpt.mode == training.mode:
                state = ckpt.train_state
                optimizer_state = ckpt.optimizer_state
            else:
                # A mode switch starts a fresh schedule on the trained weights.
                state = TrainState(0, training.base_lr, training.warmup_steps, training.total_steps, seed)
        else:
            vocabulary = ctx.vocabulary(vocab_path)
            model_cfg = dataclasses.replace(cfg.model, vocab_size=len(vocabulary))
            model = DecoderModel(model_cfg, seed=seed)
            encoder = build_encoder(encoder_cfg, model_cfg.encoder_dim, seed=seed)
            state = TrainState(0, training.base_lr, training.warmup_steps, training.total_steps, seed)
    except (ConfigError, EncoderError) as e:
        ctx.fail(str(e), EXIT_EMBEDDING)

    try:
        examples = load_examples(manifest, vocabulary, model.config.context_length)
    except ValueError as e:
        ctx.fail(str(e))
    if not examples:
        ctx.fail(f"no readable pieces in {manifest}")
    if isinstance(encoder, PrecomputedEncoder):
        missing = sorted({ex.caption for ex in examples if ex.caption not in encoder})
        if missing:
            ctx.fail(f"{len(missing)} captions have no embedding, e.g. {missing[0]!r}", EXIT_EMBEDDING)

    trainer = Trainer(
        model, encoder, vocabulary, state,
        mode=training.mode,
        batch_size=training.batch_size,
        accumulation_steps=training.accumulation_steps,
        train_encoder=training.train_encoder,
    )
    if optimizer_state:
        trainer.optimizer.load_state_dict(optimizer_state)

    log_path = log_path or f"{out}.loss.jsonl"
    if not resume and os.path.exists(log_path):
        os.remove(log_path)
    until = steps or training.total_steps
    try:
        results = trainer.fit(examples, until, log_path=log_path)
    except MissingEmbedding as e:
        ctx.fail(str(e), EXIT_EMBEDDING)

    save_checkpoint(out, model, vocabulary, state, encoder, trainer.optimizer, mode=training.mode)
    if ctx.json_output:
        ctx.output({
            "checkpoint": out,
            "log": log_path,
            "step": state.step,
            "first_loss": results[0].loss if results else None,
            "last_loss": results[-1].loss if results else None,
        })
        return
    if results:
        ctx.info(f"steps {results[0].step}-{results[-1].step} loss {results[0].loss:.4f} -> {results[-1].loss:.4f}")
    ctx.info(f"Wrote {out} at step {state.step}")
