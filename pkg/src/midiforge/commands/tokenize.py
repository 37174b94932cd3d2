"""midiforge tokenize / detokenize - MIDI to token text and back."""

from __future__ import annotations

import click

from midiforge.cli import EXIT_PARSE, ForgeContext, pass_ctx
from midiforge.errors import MidiParseError
from midiforge.midi import extract_notes, notes_to_midi, read_midi, save_midi, score_meta
from midiforge.remi import decode, encode, text_to_tokens, tokens_to_text


@click.command("tokenize")
@click.argument("midi_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--vocab", "vocab_path", type=click.Path(exists=True, dir_okay=False),
              help="Vocabulary file (default: from config)")
@click.option("--out", "-o", type=click.File("w"), default="-", help="Token file (default: stdout)")
@click.option("--context-length", type=int, default=None, help="Keep only the first N tokens")
@pass_ctx
def tokenize(ctx: ForgeContext, midi_path: str, vocab_path: str | None, out, context_length: int | None) -> None:
    """Encode a MIDI file as REMI+ tokens, one per line."""
    vocabulary = ctx.vocabulary(vocab_path)
    try:
        midi = read_midi(midi_path)
    except (OSError, MidiParseError) as e:
        ctx.fail(f"cannot parse {midi_path}: {e}", EXIT_PARSE)
    seq = encode(extract_notes(midi), score_meta(midi), vocabulary, context_length)
    out.write(tokens_to_text(seq.ids, vocabulary))
    ctx.info(f"tokens: {len(seq)} unk: {seq.unknown_count}" + (" (truncated)" if seq.truncated else ""))


@click.command("detokenize")
@click.argument("tokens_file", type=click.File("r"))
@click.option("--vocab", "vocab_path", type=click.Path(exists=True, dir_okay=False),
              help="Vocabulary file (default: from config)")
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False), help="MIDI file to write")
@pass_ctx
def detokenize(ctx: ForgeContext, tokens_file, vocab_path: str | None, out: str) -> None:
    """Decode a token file back into a MIDI file."""
    vocabulary = ctx.vocabulary(vocab_path)
    result = decode(text_to_tokens(tokens_file.read(), vocabulary), vocabulary)
    save_midi(notes_to_midi(result.notes, result.meta), out)
    ctx.info(f"notes: {len(result.notes)} violations: {result.violations} unk: {result.unknown_count}")
