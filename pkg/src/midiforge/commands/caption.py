"""midiforge caption - pseudo-caption a directory of MIDI files."""

from __future__ import annotations

import logging
import os

import click

from midiforge.attributes import analyze
from midiforge.captions import render_pseudo_caption
from midiforge.cli import ForgeContext, pass_ctx
from midiforge.corpus import manifest_record
from midiforge.errors import MidiParseError
from midiforge.midi import read_midi
from midiforge.utils import derive_seed, midi_files, write_jsonl

logger = logging.getLogger(__name__)


@click.command("caption")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False), help="Manifest to write")
@click.option("--template", "template_id", type=click.IntRange(0, 9), default=None,
              help="Template id (default: drawn per file from the seed)")
@pass_ctx
def caption(ctx: ForgeContext, directory: str, out: str, template_id: int | None) -> None:
    """Extract attributes from MIDI files and write a caption manifest."""
    seed = ctx.seed
    base = os.path.dirname(os.path.abspath(out))
    records = []
    for path in midi_files(directory):
        try:
            attrs = analyze(read_midi(str(path)))
        except (OSError, MidiParseError) as e:
            logger.warning("skipping %s: %s", path, e)
            continue
        text = render_pseudo_caption(attrs, template_id, derive_seed(seed, path.name)).text
        records.append(manifest_record(os.path.relpath(path.resolve(), base), text, attrs))
    write_jsonl(out, records)
    ctx.info(f"Captioned {len(records)} files into {out}")
