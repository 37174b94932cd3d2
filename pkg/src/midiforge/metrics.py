"""Objective evaluation: compression ratio, tempo bins and key agreement."""

from __future__ import annotations

import json
import logging
from bisect import bisect_right
from dataclasses import asdict, dataclass, field
from typing import Any, Union

from midiforge.attributes import analyze, estimate_key, extract_tempo
from midiforge.errors import EmptyInput
from midiforge.midi import clip_to_seconds, extract_notes
from midiforge.models import AttributeSet, Key, MidiFile
from midiforge.patterns import compression_ratio, to_point_set
from midiforge.utils import read_jsonl

logger = logging.getLogger(__name__)

TEMPO_BIN_EDGES = (40, 60, 70, 90, 110, 140, 160, 210)
REFERENCE_SECONDS = 40.0
GRID_RESOLUTION = 8

# Per-file fields averaged into the corpus report, in report order.
METRIC_FIELDS = (
    "compression_ratio",
    "reference_compression_ratio",
    "tempo_bin_hit",
    "tempo_bin_tolerant_hit",
    "key_correct",
    "key_correct_dup",
    "clap_score",
)


def tempo_bin(bpm: float) -> int:
    """Index of the left-closed tempo bin holding bpm; 0 is below 40."""
    return bisect_right(TEMPO_BIN_EDGES, bpm)


@dataclass(frozen=True)
class TempoBinResult:
    hit: bool
    tolerant_hit: bool


@dataclass(frozen=True)
class KeyResult:
    correct: bool
    correct_dup: bool


def tempo_bin_metrics(pred_bpm: float, truth_bpm: float) -> TempoBinResult:
    if pred_bpm <= 0 or truth_bpm <= 0:
        raise ValueError("tempos must be positive")
    distance = abs(tempo_bin(pred_bpm) - tempo_bin(truth_bpm))
    return TempoBinResult(hit=distance == 0, tolerant_hit=distance <= 1)


def key_metrics(pred: Key, truth: Key) -> KeyResult:
    """Exact match, and exact-or-relative match (C major ~ A minor)."""
    correct = pred == truth
    return KeyResult(correct=correct, correct_dup=correct or pred.relative == truth)


@dataclass
class FileMetrics:
    file_id: str
    compression_ratio: float | None = None
    reference_compression_ratio: float | None = None
    tempo_bin_hit: bool | None = None
    tempo_bin_tolerant_hit: bool | None = None
    key_correct: bool | None = None
    key_correct_dup: bool | None = None
    clap_score: float | None = None
    generated_notes: int = 0
    reference_notes: int | None = None
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class EvaluationPair:
    file_id: str
    generated: MidiFile
    reference: Union[MidiFile, AttributeSet]


@dataclass
class MetricsReport:
    files: list[FileMetrics] = field(default_factory=list)

    @property
    def aggregates(self) -> dict[str, float | None]:
        """Mean of each metric over the files where it is defined."""
        out: dict[str, float | None] = {}
        for name in METRIC_FIELDS:
            values = [getattr(f, name) for f in self.files if getattr(f, name) is not None]
            out[name] = sum(float(v) for v in values) / len(values) if values else None
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "count": len(self.files),
            "aggregates": self.aggregates,
            "files": [f.to_dict() for f in self.files],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _point_set_ratio(midi: MidiFile) -> tuple[float | None, int]:
    notes = extract_notes(midi)
    points = to_point_set(notes, midi.ticks_per_quarter, GRID_RESOLUTION)
    return (compression_ratio(points) if points else None), len(notes)


def evaluate_pair(
    pair: EvaluationPair,
    clap_score: float | None = None,
    reference_seconds: float = REFERENCE_SECONDS,
) -> FileMetrics:
    """Every metric for one generated file. A failing metric is None and noted in errors."""
    result = FileMetrics(file_id=pair.file_id, clap_score=clap_score)
    generated = pair.generated

    result.compression_ratio, result.generated_notes = _point_set_ratio(generated)
    if result.compression_ratio is None:
        result.errors.append("compression_ratio: generated file has no pitched notes")

    if isinstance(pair.reference, MidiFile):
        reference = clip_to_seconds(pair.reference, reference_seconds)
        result.reference_compression_ratio, result.reference_notes = _point_set_ratio(reference)
        truth = analyze(reference)
    else:
        truth = pair.reference

    tempo = tempo_bin_metrics(extract_tempo(generated), truth.bpm)
    result.tempo_bin_hit, result.tempo_bin_tolerant_hit = tempo.hit, tempo.tolerant_hit

    try:
        key = key_metrics(estimate_key(extract_notes(generated)), truth.key)
        result.key_correct, result.key_correct_dup = key.correct, key.correct_dup
    except EmptyInput as e:
        result.errors.append(f"key: {e}")
    return result


def evaluate_corpus(
    pairs: list[EvaluationPair],
    clap_scores: dict[str, float] | None = None,
    reference_seconds: float = REFERENCE_SECONDS,
) -> MetricsReport:
    """Per-file metrics in input order. A file that fails outright keeps only its error."""
    if not pairs:
        raise EmptyInput("no evaluation pairs")
    clap_scores = clap_scores or {}
    report = MetricsReport()
    for pair in pairs:
        try:
            metrics = evaluate_pair(pair, clap_scores.get(pair.file_id), reference_seconds)
        except Exception as e:  # one bad file never aborts the corpus
            logger.warning("evaluation failed for %s: %s", pair.file_id, e)
            metrics = FileMetrics(file_id=pair.file_id, errors=[str(e)])
        report.files.append(metrics)
    return report


def load_clap_scores(path: str) -> dict[str, float]:
    """Externally computed {file_id, score} records."""
    return {str(rec["file_id"]): float(rec["score"]) for rec in read_jsonl(path)}
