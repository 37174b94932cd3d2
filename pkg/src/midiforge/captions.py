"""Pseudo captions from attribute sets, and sentence omission."""

from __future__ import annotations

import random
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import yaml

from midiforge.errors import ConfigError
from midiforge.gm import display_name
from midiforge.models import AttributeSet
from midiforge.utils import oxford_join

PLACEHOLDERS = ("bpm", "time_signature", "key", "instruments")
TEMPLATES_PATH = Path(__file__).with_name("templates.yaml")
OMIT_PROBABILITY = 0.5
OMIT_FRACTION = (0.2, 0.5)

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class CaptionTemplate:
    id: int
    pattern: str

    def render(self, **values: str) -> str:
        return self.pattern.format(**values)


@dataclass
class Caption:
    text: str
    sentences: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def from_text(cls, text: str) -> Caption:
        return cls(text=text, sentences=split_sentences(text))

    def sentence_texts(self) -> list[str]:
        return [self.text[start:end] for start, end in self.sentences]

    def __str__(self) -> str:
        return self.text


def split_sentences(text: str) -> list[tuple[int, int]]:
    """(start, end) spans of sentences ending in ., ! or ? followed by whitespace."""
    start = len(text) - len(text.lstrip())
    end = len(text.rstrip())
    if start >= end:
        return []
    spans = []
    for m in _SENTENCE_BREAK.finditer(text, start, end):
        spans.append((start, m.start()))
        start = m.end()
    spans.append((start, end))
    return spans


def _check_pattern(template_id: int, pattern: str) -> None:
    fields = [name for _, name, _, _ in string.Formatter().parse(pattern) if name is not None]
    for name in PLACEHOLDERS:
        if fields.count(name) != 1:
            raise ConfigError(f"template {template_id} must use {{{name}}} exactly once")
    extra = set(fields) - set(PLACEHOLDERS)
    if extra:
        raise ConfigError(f"template {template_id} has unknown placeholders: {sorted(extra)}")


def load_templates(path: str | Path | None = None) -> tuple[CaptionTemplate, ...]:
    """Load and validate caption templates; ids must run 0..n-1."""
    path = Path(path) if path else TEMPLATES_PATH
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    templates = []
    for i, entry in enumerate(data.get("templates", [])):
        if entry.get("id") != i:
            raise ConfigError(f"template ids must run 0..n-1; entry {i} has id {entry.get('id')!r}")
        pattern = str(entry.get("pattern", ""))
        _check_pattern(i, pattern)
        templates.append(CaptionTemplate(id=i, pattern=pattern))
    if not templates:
        raise ConfigError(f"no templates in {path}")
    return tuple(templates)


@lru_cache(maxsize=1)
def default_templates() -> tuple[CaptionTemplate, ...]:
    return load_templates()


def attribute_values(attrs: AttributeSet) -> dict[str, str]:
    num, den = attrs.time_signature
    instruments = [display_name(name) for name in attrs.instruments]
    return {
        "bpm": str(int(round(attrs.bpm))),
        "time_signature": f"{num}/{den}",
        "key": attrs.key.name,
        "instruments": oxford_join(instruments) or "none",
    }


def render_pseudo_caption(
    attrs: AttributeSet,
    template_id: int | None = None,
    rng_seed: int = 0,
    templates: tuple[CaptionTemplate, ...] | None = None,
) -> Caption:
    """Fill a template with the attributes; without an id the seed picks one."""
    templates = templates or default_templates()
    if template_id is None:
        template_id = random.Random(rng_seed).randrange(len(templates))
    if not 0 <= template_id < len(templates):
        raise ValueError(f"template_id must be in 0..{len(templates) - 1}, got {template_id}")
    return Caption.from_text(templates[template_id].render(**attribute_values(attrs)))


def plan_omission(n: int, rng_seed: int) -> list[int] | None:
    """Sentence indices to drop, or None when the caption is left whole.

    An empty list means omission was drawn but nothing could be cut.
    """
    rng = random.Random(rng_seed)
    if rng.random() >= OMIT_PROBABILITY:
        return None
    fraction = rng.uniform(*OMIT_FRACTION)
    lo, hi = (n + 4) // 5, n // 2
    if hi < 1:
        return []
    k = min(max(int(fraction * n + 0.5), lo), hi)
    return sorted(rng.sample(range(n), k))


def omit_sentences(caption: Caption, rng_seed: int) -> Caption:
    texts = caption.sentence_texts()
    removed = plan_omission(len(texts), rng_seed)
    if not removed:
        return caption
    drop = set(removed)
    return Caption.from_text(" ".join(t for i, t in enumerate(texts) if i not in drop))
