"""midiforge init-config - write a default config.yaml."""

from __future__ import annotations

import os

import click

from midiforge.cli import ForgeContext, pass_ctx
from midiforge.config import render_config


@click.command("init-config")
@click.argument("path", type=click.Path(dir_okay=False), default="config.yaml")
@click.option("--force", is_flag=True, help="Overwrite an existing file")
@pass_ctx
def init_config(ctx: ForgeContext, path: str, force: bool) -> None:
    """Write the default configuration with full-scale values noted inline."""
    if os.path.exists(path) and not force:
        ctx.fail(f"{path} already exists (use --force to overwrite)")
    with open(path, "w", encoding="utf-8") as f:
        f.write(render_config())
    ctx.info(f"Wrote {path}")
