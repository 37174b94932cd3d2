"""midiforge make-corpus - write a seeded synthetic training corpus."""

from __future__ import annotations

import click

from midiforge.cli import ForgeContext, pass_ctx
from midiforge.corpus import SyntheticCorpusSpec, make_corpus as write_corpus


@click.command("make-corpus")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--count", "-n", type=click.IntRange(1), default=50, help="Number of pieces")
@click.option("--seed", type=int, default=None, help="Corpus seed (default: the global seed)")
@click.option("--template", "template_id", type=click.IntRange(0, 9), default=None,
              help="Caption template id (default: drawn per piece)")
@pass_ctx
def make_corpus(ctx: ForgeContext, out_dir: str, count: int, seed: int | None, template_id: int | None) -> None:
    """Generate in-key pieces with matching pseudo captions and a manifest."""
    if seed is None:
        seed = ctx.seed
    spec = SyntheticCorpusSpec(count=count, seed=seed, template_id=template_id)
    records = write_corpus(out_dir, spec)
    ctx.info(f"Wrote {len(records)} pieces to {out_dir}")
