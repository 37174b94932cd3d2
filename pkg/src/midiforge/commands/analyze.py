"""midiforge analyze - print the objective attributes of a MIDI file."""

from __future__ import annotations

import click

from midiforge.attributes import analyze as analyze_file
from midiforge.cli import EXIT_PARSE, ForgeContext, pass_ctx
from midiforge.errors import MidiParseError
from midiforge.midi import read_midi


@click.command("analyze")
@click.argument("midi_path", type=click.Path(exists=True, dir_okay=False))
@pass_ctx
def analyze(ctx: ForgeContext, midi_path: str) -> None:
    """Tempo, time signature, key and instruments of a MIDI file."""
    try:
        midi = read_midi(midi_path)
    except (OSError, MidiParseError) as e:
        ctx.fail(f"cannot parse {midi_path}: {e}", EXIT_PARSE)
    attrs = analyze_file(midi).to_dict()
    if ctx.json_output:
        ctx.output(attrs)
        return
    click.echo(f"bpm: {attrs['bpm']}")
    click.echo(f"time_signature: {attrs['time_signature']}")
    click.echo(f"key: {attrs['key']}")
    click.echo(f"instruments: {', '.join(attrs['instruments'])}")
