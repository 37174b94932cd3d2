"""Seeded synthetic corpus: in-key pieces, their attributes and pseudo captions."""

from __future__ import annotations

import logging
import os
import random
from dataclasses import dataclass, field
from typing import Any

from midiforge.captions import render_pseudo_caption
from midiforge.gm import instrument_name
from midiforge.midi import notes_to_midi, save_midi
from midiforge.models import AttributeSet, Key, Mode, Note, NoteList, ScoreMeta, sort_notes
from midiforge.utils import derive_seed, read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"

MAJOR_SCALE = (0, 2, 4, 5, 7, 9, 11)
MINOR_SCALE = (0, 2, 3, 5, 7, 8, 10)

# Strings, winds and keyboards that sit well in a classical texture.
DEFAULT_PROGRAMS = (0, 6, 40, 41, 42, 46, 48, 56, 57, 60, 68, 69, 70, 71, 73)


@dataclass
class SyntheticCorpusSpec:
    count: int = 50
    seed: int = 0
    bars: tuple[int, int] = (4, 8)
    tempo_range: tuple[int, int] = (60, 180)
    time_signatures: tuple[tuple[int, int], ...] = ((4, 4), (3, 4), (2, 4), (6, 8))
    programs: tuple[int, ...] = DEFAULT_PROGRAMS
    max_instruments: int = 3
    template_id: int | None = None  # None: each piece draws a template
    ticks_per_quarter: int = 480
    resolution: int = 8


@dataclass
class SyntheticPiece:
    notes: NoteList
    meta: ScoreMeta
    attributes: AttributeSet
    caption: str
    extra: dict[str, Any] = field(default_factory=dict)


def _scale_pitch(key: Key, degree: int, base_octave: int) -> int:
    scale = MAJOR_SCALE if key.mode == Mode.MAJOR else MINOR_SCALE
    octave, step = divmod(degree, 7)
    return base_octave + 12 * octave + key.tonic + scale[step]


def make_piece(spec: SyntheticCorpusSpec, index: int) -> SyntheticPiece:
    """One piece. Melodies lean on the tonic triad; every bar opens with a tonic bass note."""
    rng = random.Random(derive_seed(spec.seed, "piece", index))
    bpm = rng.randint(*spec.tempo_range)
    num, den = rng.choice(spec.time_signatures)
    key = Key(rng.randrange(12), rng.choice((Mode.MAJOR, Mode.MINOR)))
    programs = sorted(rng.sample(spec.programs, rng.randint(1, min(spec.max_instruments, len(spec.programs)))))
    bars = rng.randint(*spec.bars)

    unit = spec.ticks_per_quarter // spec.resolution
    bar_units = num * 4 * spec.resolution // den
    degrees = [0, 2, 4] * 3 + [1, 3, 5, 6]
    notes: list[Note] = []
    for bar in range(bars):
        bar_start = bar * bar_units
        notes.append(Note(
            onset=bar_start * unit,
            duration=bar_units * unit,
            pitch=_scale_pitch(key, 0, 36),
            velocity=rng.randint(60, 90),
            program=programs[0],
        ))
        for voice, program in enumerate(programs):
            pos = 0
            while pos < bar_units:
                length = min(rng.choice((2, 4, 4, 8)), bar_units - pos)
                if rng.random() < 0.85:
                    notes.append(Note(
                        onset=(bar_start + pos) * unit,
                        duration=length * unit,
                        pitch=_scale_pitch(key, rng.choice(degrees), 60 + 12 * (voice % 2) - 12 * (voice // 2)),
                        velocity=rng.randint(60, 100),
                        program=program,
                    ))
                pos += length

    attrs = AttributeSet(
        bpm=float(bpm),
        time_signature=(num, den),
        key=key,
        instruments=[instrument_name(p) for p in programs],
    )
    caption = render_pseudo_caption(attrs, spec.template_id, derive_seed(spec.seed, "caption", index))
    meta = ScoreMeta(spec.ticks_per_quarter, [(0, float(bpm))], [(0, num, den)], key)
    return SyntheticPiece(notes=sort_notes(notes), meta=meta, attributes=attrs, caption=caption.text)


def manifest_record(midi_path: str, caption: str, attrs: AttributeSet | None = None) -> dict[str, Any]:
    rec: dict[str, Any] = {"midi_path": midi_path, "caption": caption}
    if attrs is not None:
        rec["attributes"] = attrs.to_dict()
    return rec


def make_corpus(out_dir: str, spec: SyntheticCorpusSpec) -> list[dict[str, Any]]:
    """Write piece_XXXX.mid files and manifest.jsonl; returns the manifest records."""
    os.makedirs(out_dir, exist_ok=True)
    records = []
    for i in range(spec.count):
        piece = make_piece(spec, i)
        name = f"piece_{i:04d}.mid"
        save_midi(notes_to_midi(piece.notes, piece.meta), os.path.join(out_dir, name))
        records.append(manifest_record(name, piece.caption, piece.attributes))
    write_jsonl(os.path.join(out_dir, MANIFEST_NAME), records)
    logger.info("wrote %d synthetic pieces to %s", len(records), out_dir)
    return records


def read_manifest(path: str) -> list[dict[str, Any]]:
    records = list(read_jsonl(path))
    for line, rec in enumerate(records, 1):
        if "midi_path" not in rec or "caption" not in rec:
            raise ValueError(f"{path}: record {line} needs midi_path and caption")
    return records
