"""Tests for the objective evaluation metrics."""

import json

import pytest

from midiforge.corpus import SyntheticCorpusSpec, make_piece
from midiforge.errors import EmptyInput
from midiforge.metrics import (
    METRIC_FIELDS, EvaluationPair, FileMetrics, MetricsReport, evaluate_corpus, evaluate_pair,
    key_metrics, load_clap_scores, tempo_bin, tempo_bin_metrics,
)
from midiforge.midi import notes_to_midi
from midiforge.models import AttributeSet, Key, Mode, Note, ScoreMeta
from midiforge.utils import write_jsonl


def _piece_midi(index, seed=0):
    piece = make_piece(SyntheticCorpusSpec(seed=seed), index)
    return notes_to_midi(piece.notes, piece.meta), piece


class TestTempoBins:
    @pytest.mark.parametrize("bpm,index", [
        (39.9, 0), (40, 1), (59.9, 1), (60, 2), (70, 3), (100, 4), (110, 5), (150, 6), (209.9, 7), (210, 8), (300, 8),
    ])
    def test_bin_index(self, bpm, index):
        assert tempo_bin(bpm) == index

    def test_hit(self):
        assert tempo_bin_metrics(100, 105).hit
        result = tempo_bin_metrics(100, 120)
        assert not result.hit and result.tolerant_hit
        result = tempo_bin_metrics(50, 150)
        assert not result.hit and not result.tolerant_hit

    def test_hit_implies_tolerant_hit(self):
        for a in range(30, 250, 7):
            for b in range(30, 250, 11):
                result = tempo_bin_metrics(a, b)
                assert result.tolerant_hit or not result.hit

    def test_positive_tempos(self):
        with pytest.raises(ValueError):
            tempo_bin_metrics(0, 120)


class TestKeyMetrics:
    def test_exact(self):
        result = key_metrics(Key(7), Key(7))
        assert result.correct and result.correct_dup

    def test_relative(self):
        result = key_metrics(Key(0, Mode.MAJOR), Key(9, Mode.MINOR))
        assert not result.correct and result.correct_dup
        result = key_metrics(Key(9, Mode.MINOR), Key(0, Mode.MAJOR))
        assert not result.correct and result.correct_dup

    def test_parallel_is_wrong(self):
        result = key_metrics(Key(0, Mode.MINOR), Key(0, Mode.MAJOR))
        assert not result.correct and not result.correct_dup


class TestEvaluate:
    def test_identity_corpus(self):
        pairs = []
        for i in range(4):
            midi, _ = _piece_midi(i)
            pairs.append(EvaluationPair(f"p{i}", midi, midi))
        report = evaluate_corpus(pairs)
        agg = report.aggregates
        assert agg["tempo_bin_hit"] == 1.0
        assert agg["tempo_bin_tolerant_hit"] == 1.0
        assert agg["key_correct"] == 1.0
        assert agg["key_correct_dup"] == 1.0
        assert agg["compression_ratio"] == agg["reference_compression_ratio"]
        assert agg["clap_score"] is None

    def test_reference_attributes(self):
        midi, piece = _piece_midi(1)
        result = evaluate_pair(EvaluationPair("x", midi, piece.attributes), clap_score=0.3)
        assert result.tempo_bin_tolerant_hit
        assert result.reference_compression_ratio is None
        assert result.clap_score == 0.3
        assert result.generated_notes == len(piece.notes)

    def test_empty_generated_file(self):
        midi, _ = _piece_midi(0)
        result = evaluate_pair(EvaluationPair("empty", notes_to_midi([]), midi))
        assert result.compression_ratio is None
        assert result.key_correct is None
        assert result.tempo_bin_hit is not None
        assert len(result.errors) == 2

    def test_reference_clipped(self):
        notes = [Note(onset=i * 480, duration=480, pitch=60 + i % 5, velocity=80) for i in range(60)]
        reference = notes_to_midi(notes, ScoreMeta(480, [(0, 120.0)], [(0, 4, 4)]))
        result = evaluate_pair(EvaluationPair("long", reference, reference), reference_seconds=10.0)
        assert result.reference_notes == 20
        assert result.generated_notes == 60

    def test_no_pairs(self):
        with pytest.raises(EmptyInput):
            evaluate_corpus([])

    def test_broken_pair_is_recorded(self):
        midi, _ = _piece_midi(0)
        report = evaluate_corpus([EvaluationPair("ok", midi, midi), EvaluationPair("bad", midi, None)])
        assert [f.file_id for f in report.files] == ["ok", "bad"]
        assert report.files[1].errors
        assert report.files[1].tempo_bin_hit is None
        assert report.aggregates["key_correct"] == 1.0


class TestReport:
    def test_aggregates_are_means(self):
        report = MetricsReport([
            FileMetrics("a", compression_ratio=2.0, tempo_bin_hit=True, key_correct=False),
            FileMetrics("b", compression_ratio=1.0, tempo_bin_hit=False, key_correct=None),
            FileMetrics("c", compression_ratio=None, tempo_bin_hit=True, key_correct=True),
        ])
        agg = report.aggregates
        assert agg["compression_ratio"] == pytest.approx(1.5)
        assert agg["tempo_bin_hit"] == pytest.approx(2 / 3)
        assert agg["key_correct"] == pytest.approx(0.5)
        assert agg["clap_score"] is None

    def test_json_field_order(self):
        report = MetricsReport([FileMetrics("a", compression_ratio=1.0)])
        data = json.loads(report.to_json())
        assert list(data) == ["count", "aggregates", "files"]
        assert list(data["aggregates"]) == list(METRIC_FIELDS)
        assert data["files"][0]["file_id"] == "a"

    def test_load_clap_scores(self, tmp_path):
        path = str(tmp_path / "clap.jsonl")
        write_jsonl(path, [{"file_id": "a", "score": 0.25}, {"file_id": 7, "score": "0.5"}])
        assert load_clap_scores(path) == {"a": 0.25, "7": 0.5}


def test_attribute_reference_roundtrip():
    attrs = AttributeSet.from_dict({"bpm": 90, "time_signature": "3/4", "key": "Bb major", "instruments": ["violin"]})
    assert attrs.key == Key(10, Mode.MAJOR)
    assert AttributeSet.from_dict(attrs.to_dict()) == attrs


# Hand-labelled pairs: generated tempo and triad, reference attributes, then
# the expected tempo_bin_hit, tempo_bin_tolerant_hit, key_correct, key_correct_dup.
LABELLED_PAIRS = [
    ("p01", 120, Key(0, Mode.MAJOR), 125, Key(0, Mode.MAJOR), (True, True, True, True)),
    ("p02", 100, Key(9, Mode.MINOR), 120, Key(0, Mode.MAJOR), (False, True, False, True)),
    ("p03", 80, Key(7, Mode.MAJOR), 80, Key(4, Mode.MINOR), (True, True, False, True)),
    ("p04", 200, Key(2, Mode.MAJOR), 100, Key(2, Mode.MAJOR), (False, False, True, True)),
    ("p05", 65, Key(4, Mode.MINOR), 75, Key(5, Mode.MAJOR), (False, True, False, False)),
    ("p06", 150, Key(6, Mode.MINOR), 150, Key(9, Mode.MAJOR), (True, True, False, True)),
    ("p07", 30, Key(10, Mode.MAJOR), 50, Key(10, Mode.MINOR), (False, True, False, False)),
    ("p08", 220, Key(0, Mode.MINOR), 230, Key(3, Mode.MAJOR), (True, True, False, True)),
    ("p09", 95, Key(2, Mode.MINOR), 89, Key(2, Mode.MINOR), (False, True, True, True)),
    ("p10", 170, Key(7, Mode.MAJOR), 120, Key(7, Mode.MAJOR), (False, False, True, True)),
]


def _triad_midi(bpm, key):
    third = 4 if key.mode == Mode.MAJOR else 3
    notes = [Note(0, 960, 60 + key.tonic + step, 90) for step in (0, third, 7)]
    return notes_to_midi(notes, ScoreMeta(480, [(0, float(bpm))], [(0, 4, 4)]))


class TestLabelledCorpus:
    @pytest.fixture
    def report(self):
        pairs = [
            EvaluationPair(file_id, _triad_midi(bpm, key), AttributeSet(truth_bpm, (4, 4), truth_key, ["piano"]))
            for file_id, bpm, key, truth_bpm, truth_key, _ in LABELLED_PAIRS
        ]
        return evaluate_corpus(pairs)

    def test_per_file(self, report):
        assert [f.file_id for f in report.files] == [row[0] for row in LABELLED_PAIRS]
        for metrics, row in zip(report.files, LABELLED_PAIRS):
            observed = (
                metrics.tempo_bin_hit, metrics.tempo_bin_tolerant_hit, metrics.key_correct, metrics.key_correct_dup,
            )
            assert observed == row[-1], metrics.file_id
            assert metrics.errors == []

    def test_aggregates(self, report):
        aggregates = report.aggregates
        assert aggregates["tempo_bin_hit"] == pytest.approx(0.4)
        assert aggregates["tempo_bin_tolerant_hit"] == pytest.approx(0.8)
        assert aggregates["key_correct"] == pytest.approx(0.4)
        assert aggregates["key_correct_dup"] == pytest.approx(0.8)
        assert aggregates["clap_score"] is None
