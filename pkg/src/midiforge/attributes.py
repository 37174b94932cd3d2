"""Objective attribute extraction: tempo, time signature, key, instruments."""

from __future__ import annotations

import logging
from typing import Hashable, TypeVar

import numpy as np

from midiforge.errors import EmptyInput
from midiforge.gm import instrument_name
from midiforge.midi import extract_notes
from midiforge.models import (
    DEFAULT_TEMPO_MPQ,
    DEFAULT_TIME_SIGNATURE,
    MAX_BPM,
    AttributeSet,
    Key,
    MidiFile,
    Mode,
    NoteList,
    SetTempo,
    TimeSignature,
)

logger = logging.getLogger(__name__)

# Krumhansl-Kessler key profiles, tonic first.
MAJOR_PROFILE = np.array([6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88])
MINOR_PROFILE = np.array([6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17])

# Fastest tempo analyze reports; SetTempo can encode far faster ones.
ANALYZED_BPM_LIMIT = MAX_BPM - 1

V = TypeVar("V", bound=Hashable)


def _dominant(changes: list[tuple[int, V]], default: V, final_tick: int) -> V:
    """Value held for the most ticks; ties go to the value that appeared first.

    Simultaneous changes are ordered by value and the last one governs. The
    default only holds until the first change.
    """
    segments = sorted(changes, key=lambda c: (c[0], c[1]))
    if not segments or segments[0][0] > 0:
        segments.insert(0, (0, default))
    weights: dict[V, int] = {}
    for i, (tick, value) in enumerate(segments):
        end = segments[i + 1][0] if i + 1 < len(segments) else max(final_tick, tick)
        if end > tick:
            weights[value] = weights.get(value, 0) + (end - tick)
    if not weights:
        return segments[-1][1]
    best, best_weight = default, -1
    for value, weight in weights.items():
        if weight > best_weight:
            best, best_weight = value, weight
    return best


def extract_tempo(midi: MidiFile) -> float:
    """Duration-weighted dominant tempo in bpm; 120 when the file sets none."""
    changes = [
        (ev.tick, ev.kind.microseconds_per_quarter)
        for _, ev in midi.iter_events()
        if isinstance(ev.kind, SetTempo)
    ]
    mpq = _dominant(changes, DEFAULT_TEMPO_MPQ, midi.final_tick)
    return 60_000_000 / mpq


def extract_time_signature(midi: MidiFile) -> tuple[int, int]:
    changes = [
        (ev.tick, (ev.kind.numerator, ev.kind.denominator))
        for _, ev in midi.iter_events()
        if isinstance(ev.kind, TimeSignature)
    ]
    return _dominant(changes, DEFAULT_TIME_SIGNATURE, midi.final_tick)


def pitch_class_histogram(notes: NoteList) -> np.ndarray:
    """Duration-weighted pitch-class totals; drums excluded."""
    hist = np.zeros(12)
    for note in notes:
        if not note.is_drum:
            hist[note.pitch % 12] += note.duration
    return hist


def key_scores(hist: np.ndarray) -> np.ndarray:
    """Pearson correlation with the 24 rotated profiles: majors 0-11, then minors 0-11."""
    profiles = np.stack(
        [np.roll(MAJOR_PROFILE, t) for t in range(12)] + [np.roll(MINOR_PROFILE, t) for t in range(12)]
    )
    x = hist - hist.mean()
    y = profiles - profiles.mean(axis=1, keepdims=True)
    denom = np.sqrt((x * x).sum() * (y * y).sum(axis=1))
    if not np.any(x):
        return np.zeros(24)
    # Rounding keeps exact ties stable against float noise.
    return np.round((y @ x) / denom, 12)


def estimate_key(notes: NoteList) -> Key:
    """Krumhansl-Schmuckler key estimate.

    Ties resolve to major before minor, then to the lowest tonic.
    """
    hist = pitch_class_histogram(notes)
    if not any(not n.is_drum for n in notes):
        raise EmptyInput("key estimation needs at least one pitched note")
    scores = key_scores(hist)
    best = int(np.argmax(scores))
    mode = Mode.MAJOR if best < 12 else Mode.MINOR
    return Key(best % 12, mode, score=float(scores[best]))


def extract_instruments(notes: NoteList) -> list[str]:
    return sorted({instrument_name(n.program, n.is_drum) for n in notes})


def analyze(midi: MidiFile) -> AttributeSet:
    notes = extract_notes(midi)
    try:
        key = estimate_key(notes)
    except EmptyInput:
        logger.warning("no pitched notes; key defaults to C major")
        key = Key(0, Mode.MAJOR, score=0.0)
    bpm = extract_tempo(midi)
    if bpm > ANALYZED_BPM_LIMIT:
        logger.warning("tempo %.1f bpm clamped to %.0f", bpm, ANALYZED_BPM_LIMIT)
        bpm = ANALYZED_BPM_LIMIT
    return AttributeSet(
        bpm=bpm,
        time_signature=extract_time_signature(midi),
        key=key,
        instruments=extract_instruments(notes),
    )
