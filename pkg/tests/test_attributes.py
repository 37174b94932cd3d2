"""Tests for attribute extraction."""

import random

import numpy as np
import pytest

from midiforge.attributes import (
    ANALYZED_BPM_LIMIT, analyze, estimate_key, extract_instruments, extract_tempo, extract_time_signature, key_scores,
    pitch_class_histogram,
)
from midiforge.errors import EmptyInput
from midiforge.models import Key, Mode, Note, NoteOff, NoteOn, SetTempo, TimeSignature

from tests.helpers import make_midi, simple_midi

C_MAJOR_SCALE = (60, 62, 64, 65, 67, 69, 71, 72)


def _notes(pitches_and_lengths):
    notes, onset = [], 0
    for pitch, length in pitches_and_lengths:
        notes.append(Note(onset, length, pitch, 90))
        onset += length
    return notes


class TestTempo:
    def test_dominant_tempo(self):
        midi = make_midi([(0, SetTempo(500_000)), (960, SetTempo(1_000_000)), (1200, NoteOff(0, 60))])
        assert extract_tempo(midi) == pytest.approx(120.0)

    def test_default(self):
        midi = make_midi([(0, NoteOn(0, 60, 100)), (480, NoteOff(0, 60))])
        assert extract_tempo(midi) == pytest.approx(120.0)

    def test_tie_goes_to_first(self):
        midi = make_midi([(0, SetTempo(600_000)), (480, SetTempo(500_000)), (960, NoteOff(0, 60))])
        assert extract_tempo(midi) == pytest.approx(100.0)

    def test_simultaneous_changes_do_not_depend_on_file_order(self):
        a = make_midi([(0, SetTempo(400_000)), (0, SetTempo(600_000)), (960, NoteOff(0, 60))])
        b = make_midi([(0, SetTempo(600_000)), (0, SetTempo(400_000)), (960, NoteOff(0, 60))])
        assert extract_tempo(a) == extract_tempo(b) == pytest.approx(100.0)


class TestTimeSignature:
    def test_from_file(self):
        assert extract_time_signature(simple_midi()) == (3, 4)

    def test_longest_held(self):
        midi = make_midi([(0, TimeSignature(3, 4)), (480, TimeSignature(6, 8)), (4800, NoteOff(0, 60))])
        assert extract_time_signature(midi) == (6, 8)

    def test_default(self):
        assert extract_time_signature(make_midi([(0, NoteOn(0, 60, 100))])) == (4, 4)


class TestKey:
    def test_c_major(self):
        notes = _notes([(p, 480) for p in C_MAJOR_SCALE] + [(60, 960), (64, 960), (67, 960)])
        key = estimate_key(notes)
        assert key == Key(0, Mode.MAJOR)
        assert 0 < key.score <= 1

    def test_a_minor(self):
        notes = _notes([(69, 4), (60, 2), (64, 3), (71, 1), (62, 1), (65, 1), (68, 1)])
        assert estimate_key(notes) == Key(9, Mode.MINOR)

    def test_transposition(self):
        rng = random.Random(4)
        for _ in range(30):
            notes = _notes([(rng.randint(48, 84), rng.randint(1, 1000)) for _ in range(12)])
            key = estimate_key(notes)
            for t in (1, 5, 7):
                moved = [Note(n.onset, n.duration, n.pitch + t, n.velocity) for n in notes]
                assert estimate_key(moved) == key.transpose(t)

    def test_minor_triad_with_equal_durations(self):
        assert estimate_key(_notes([(69, 480), (60, 480), (64, 480)])) == Key(9, Mode.MINOR)

    def test_chromatic_tie_goes_to_c_major(self):
        key = estimate_key(_notes([(p, 480) for p in range(60, 72)]))
        assert key == Key(0, Mode.MAJOR)
        assert key.score == 0

    def test_octave_and_duration_scaling(self):
        rng = random.Random(8)
        for _ in range(30):
            notes = _notes([(rng.randint(48, 84), rng.randint(1, 1000)) for _ in range(12)])
            key = estimate_key(notes)
            shifted = [Note(n.onset, n.duration, n.pitch + 12 * rng.choice((-1, 1)), n.velocity) for n in notes]
            scaled = [Note(n.onset * 3, n.duration * 3, n.pitch, n.velocity) for n in notes]
            assert estimate_key(shifted) == key
            assert estimate_key(scaled) == key

    def test_drums_are_ignored(self):
        notes = _notes([(p, 480) for p in C_MAJOR_SCALE])
        drums = [Note(0, 4800, 61, 100, is_drum=True)]
        assert estimate_key(notes + drums) == estimate_key(notes)
        assert pitch_class_histogram(drums).sum() == 0

    def test_needs_pitched_notes(self):
        with pytest.raises(EmptyInput):
            estimate_key([Note(0, 480, 36, 100, is_drum=True)])
        with pytest.raises(EmptyInput):
            estimate_key([])

    def test_flat_histogram_scores_zero(self):
        assert np.all(key_scores(np.ones(12)) == 0)


class TestAnalyze:
    def test_instruments(self):
        notes = [Note(0, 10, 36, 100, is_drum=True), Note(0, 10, 60, 100, program=40), Note(5, 10, 62, 100, program=40)]
        assert extract_instruments(notes) == ["drums", "violin"]

    def test_simple_piece(self):
        attrs = analyze(simple_midi())
        assert attrs.bpm == pytest.approx(120.0)
        assert attrs.time_signature == (3, 4)
        assert attrs.instruments == ["violin"]

    def test_fast_tempo_is_clamped(self):
        midi = make_midi([(0, SetTempo(50_000)), (0, NoteOn(0, 60, 100)), (480, NoteOff(0, 60))])
        assert extract_tempo(midi) == pytest.approx(1200.0)
        assert analyze(midi).bpm == ANALYZED_BPM_LIMIT

    def test_no_notes_falls_back_to_c_major(self):
        attrs = analyze(make_midi([(0, SetTempo(500_000))]))
        assert attrs.key == Key(0, Mode.MAJOR)
        assert attrs.instruments == []
