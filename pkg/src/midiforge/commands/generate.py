"""midiforge generate - sample a MIDI file from a caption."""

from __future__ import annotations

import click

from midiforge.checkpoint import load_checkpoint
from midiforge.cli import EXIT_CHECKPOINT, EXIT_EMBEDDING, ForgeContext, pass_ctx
from midiforge.config import resolve_seed
from midiforge.encoders import encode_text
from midiforge.errors import CheckpointError, ConfigError, ContextOverflow, EmptyInput, EncoderError
from midiforge.generation import SamplingParams, generate as sample
from midiforge.midi import notes_to_midi, save_midi, tick_to_seconds
from midiforge.remi import decode


@click.command("generate")
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--caption", "-c", required=True, help="Caption text")
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False), help="MIDI file to write")
@click.option("--max-tokens", type=click.IntRange(2), default=None, help="Default: sampling.max-tokens")
@click.option("--temperature", type=click.FloatRange(0.0), default=None, help="0 samples greedily")
@click.option("--top-k", type=click.IntRange(0), default=None, help="0 keeps every token")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Embedding file for checkpoints trained on precomputed embeddings")
@pass_ctx
def generate(ctx: ForgeContext, checkpoint: str, caption: str, out: str, max_tokens: int | None,
             temperature: float | None, top_k: int | None, embeddings: str | None) -> None:
    """Encode the caption, sample tokens and write them as MIDI."""
    sampling = ctx.config.sampling
    try:
        seed = resolve_seed(ctx.seed_option, ctx.config, default=sampling.seed)
    except ConfigError as e:
        ctx.fail(str(e))
    try:
        ckpt = load_checkpoint(checkpoint)
    except CheckpointError as e:
        ctx.fail(str(e), EXIT_CHECKPOINT)
    try:
        embedding = encode_text(ckpt.build_encoder(embeddings or ""), caption)
    except (ConfigError, EncoderError) as e:
        ctx.fail(str(e), EXIT_EMBEDDING)
    except EmptyInput as e:
        ctx.fail(str(e))

    if max_tokens is None:
        max_tokens = min(sampling.max_tokens, ckpt.config.context_length)
    params = SamplingParams(
        max_tokens=max_tokens,
        temperature=sampling.temperature if temperature is None else temperature,
        top_k=sampling.top_k if top_k is None else top_k,
        seed=seed,
    )
    try:
        tokens = sample(ckpt.model, embedding, ckpt.vocab, params)
    except ContextOverflow as e:
        ctx.fail(str(e))

    result = decode(tokens.ids, ckpt.vocab)
    midi = notes_to_midi(result.notes, result.meta)
    save_midi(midi, out)
    end = max((n.onset + n.duration for n in result.notes), default=0)
    summary = {
        "out": out,
        "tokens": len(tokens),
        "truncated": tokens.truncated,
        "notes": len(result.notes),
        "violations": result.violations,
        "duration_seconds": round(tick_to_seconds(midi, end), 3),
    }
    if ctx.json_output:
        ctx.output(summary)
        return
    ctx.info(
        f"tokens: {summary['tokens']} violations: {summary['violations']} "
        f"duration: {summary['duration_seconds']:.2f}s"
    )
