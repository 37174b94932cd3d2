"""midiforge evaluate - objective metrics for generated MIDI against references."""

from __future__ import annotations

import logging

import click

from midiforge.cli import EXIT_NO_PAIRS, ForgeContext, pass_ctx
from midiforge.errors import MidiParseError
from midiforge.metrics import EvaluationPair, FileMetrics, MetricsReport, evaluate_corpus, load_clap_scores
from midiforge.midi import read_midi
from midiforge.utils import midi_files

logger = logging.getLogger(__name__)


@click.command("evaluate")
@click.option("--generated", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory of generated MIDI files")
@click.option("--reference", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory of reference MIDI files with matching names")
@click.option("--clap", "clap_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSONL of externally computed {file_id, score} CLAP scores")
@click.option("--out", "-o", type=click.Path(dir_okay=False), default=None, help="Report file (default: stdout)")
@pass_ctx
def evaluate(ctx: ForgeContext, generated: str, reference: str, clap_path: str | None, out: str | None) -> None:
    """Pair files by name and report compression ratio, tempo bins and key agreement."""
    references = {path.stem: path for path in midi_files(reference)}
    pairs: list[EvaluationPair] = []
    failed: list[FileMetrics] = []
    matched = 0
    for path in midi_files(generated):
        ref_path = references.get(path.stem)
        if ref_path is None:
            logger.warning("no reference for %s", path.name)
            continue
        matched += 1
        try:
            pairs.append(EvaluationPair(path.stem, read_midi(str(path)), read_midi(str(ref_path))))
        except (OSError, MidiParseError) as e:
            logger.warning("cannot read pair %s: %s", path.stem, e)
            failed.append(FileMetrics(file_id=path.stem, errors=[str(e)]))
    if not matched:
        ctx.fail(f"no generated file in {generated} has a reference in {reference}", EXIT_NO_PAIRS)

    clap = load_clap_scores(clap_path) if clap_path else None
    report = evaluate_corpus(pairs, clap) if pairs else MetricsReport()
    report.files.extend(failed)
    report.files.sort(key=lambda f: f.file_id)

    text = report.to_json()
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
        ctx.info(f"Evaluated {len(report.files)} files into {out}")
    else:
        click.echo(text)
