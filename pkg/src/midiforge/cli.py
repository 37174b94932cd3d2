"""Click CLI root and global flags for midiforge.

Exit codes:
    0  success
    1  usage, configuration or other error
    2  MIDI parse error
    3  vocabulary error
    4  missing embeddings
    5  checkpoint error
    6  no evaluation pairs
"""

from __future__ import annotations

import json
import logging
import os
import sys
from typing import NoReturn

import click

from midiforge import __version__
from midiforge.config import ForgeConfig, resolve_seed
from midiforge.errors import ConfigError, VocabularyError
from midiforge.remi import Vocabulary, build_vocabulary, load_vocabulary

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_VOCAB = 3
EXIT_EMBEDDING = 4
EXIT_CHECKPOINT = 5
EXIT_NO_PAIRS = 6

LOG_ENV = "MIDIFORGE_LOG"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Send midiforge logs to stderr at -v, -q, $MIDIFORGE_LOG or INFO."""
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = logging.getLevelName(os.environ.get(LOG_ENV, "INFO").upper())
        if not isinstance(level, int):
            level = logging.INFO
    logger = logging.getLogger("midiforge")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False


class ForgeContext:
    """Shared context for all commands."""

    def __init__(self) -> None:
        self.config_path: str | None = None
        self.seed_option: int | None = None
        self.json_output: bool = False
        self.verbose: bool = False
        self.quiet: bool = False
        self._config: ForgeConfig | None = None

    @property
    def config(self) -> ForgeConfig:
        """Loaded once per invocation; a bad file exits 1."""
        if self._config is None:
            try:
                self._config = ForgeConfig.load(self.config_path)
            except ConfigError as e:
                self.fail(str(e))
        return self._config

    @property
    def seed(self) -> int:
        try:
            return resolve_seed(self.seed_option, self.config)
        except ConfigError as e:
            self.fail(str(e))

    def vocabulary(self, path: str | None = None) -> Vocabulary:
        """The vocabulary file at path, or the one the config describes."""
        try:
            if path:
                return load_vocabulary(path)
            return build_vocabulary(self.config.vocabulary)
        except VocabularyError as e:
            self.fail(str(e), EXIT_VOCAB)

    def fail(self, message: str, code: int = EXIT_ERROR) -> NoReturn:
        click.echo(f"Error: {message}", err=True)
        sys.exit(code)

    def info(self, message: str) -> None:
        """Summary line on stderr unless --quiet."""
        if not self.quiet:
            click.echo(message, err=True)

    def output(self, data: dict | list) -> None:
        click.echo(json.dumps(data, indent=2, default=str))


pass_ctx = click.make_pass_decorator(ForgeContext, ensure=True)


@click.group(invoke_without_command=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), envvar="MIDIFORGE_CONFIG",
              help="Path to config.yaml")
@click.option("--seed", type=int, default=None, help="Seed for every stochastic step")
@click.option("--json", "json_output", is_flag=True, help="Output as JSON")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.option("--quiet", "-q", is_flag=True, help="Warnings and errors only")
@click.version_option(__version__, prog_name="midiforge")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None, seed: int | None,
        json_output: bool, verbose: bool, quiet: bool) -> None:
    """midiforge - text-to-MIDI toolkit"""
    fctx = ctx.ensure_object(ForgeContext)
    fctx.config_path = config_path
    fctx.seed_option = seed
    fctx.json_output = json_output
    fctx.verbose = verbose
    fctx.quiet = quiet
    configure_logging(verbose, quiet)

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


# --- Register all commands ---

from midiforge.commands.init_config import init_config
from midiforge.commands.vocab import vocab
from midiforge.commands.tokenize import tokenize, detokenize
from midiforge.commands.analyze import analyze
from midiforge.commands.caption import caption
from midiforge.commands.make_corpus import make_corpus
from midiforge.commands.train import train
from midiforge.commands.generate import generate
from midiforge.commands.evaluate import evaluate

cli.add_command(init_config, "init-config")
cli.add_command(vocab, "vocab")
cli.add_command(tokenize, "tokenize")
cli.add_command(detokenize, "detokenize")
cli.add_command(analyze, "analyze")
cli.add_command(caption, "caption")
cli.add_command(make_corpus, "make-corpus")
cli.add_command(train, "train")
cli.add_command(generate, "generate")
cli.add_command(evaluate, "evaluate")


def main() -> None:
    cli(auto_envvar_prefix="MIDIFORGE")
