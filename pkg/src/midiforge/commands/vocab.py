"""midiforge vocab - write the token vocabulary file."""

from __future__ import annotations

import click

from midiforge.cli import ForgeContext, pass_ctx


@click.command("vocab")
@click.argument("out", type=click.Path(dir_okay=False))
@pass_ctx
def vocab(ctx: ForgeContext, out: str) -> None:
    """Write the vocabulary the current config describes."""
    vocabulary = ctx.vocabulary()
    vocabulary.save(out)
    ctx.info(f"Wrote {len(vocabulary)} tokens to {out}")
