"""REMI+ tokenization: note lists to token ids and back.

Grammar produced by encode:

    BOS
    per bar:      BAR [TIMESIG when changed]
    per position: POSITION [TEMPO when changed]
    per note:     PROGRAM PITCH VELOCITY DURATION
    EOS           (only when the whole piece fits the context)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence, Union

import yaml

from midiforge.errors import InvalidBinConfig, VocabularyFileError
from midiforge.models import DEFAULT_TIME_SIGNATURE, Note, NoteList, ScoreMeta

logger = logging.getLogger(__name__)

VOCAB_FORMAT = "midiforge-vocabulary"
VOCAB_VERSION = 1


class TokenKind:
    PAD = "PAD"
    BOS = "BOS"
    EOS = "EOS"
    UNK = "UNK"
    BAR = "BAR"
    POSITION = "POSITION"
    PITCH = "PITCH"
    VELOCITY = "VELOCITY"
    DURATION = "DURATION"
    TEMPO = "TEMPO"
    TIMESIG = "TIMESIG"
    PROGRAM = "PROGRAM"

    SPECIALS = (PAD, BOS, EOS, UNK)


DRUMS = "DRUMS"


class Token(NamedTuple):
    kind: str
    value: Any = None

    def __str__(self) -> str:
        if self.value is None:
            return self.kind
        if self.kind == TokenKind.TIMESIG:
            return f"{self.kind}_{self.value[0]}/{self.value[1]}"
        return f"{self.kind}_{self.value}"


def parse_token(text: str) -> Token:
    """Inverse of str(Token): "PITCH_60", "TIMESIG_3/4", "PROGRAM_DRUMS", "BAR"."""
    kind, _, raw = text.strip().partition("_")
    if not raw:
        return Token(kind)
    if kind == TokenKind.TIMESIG:
        num, _, den = raw.partition("/")
        return Token(kind, (int(num), int(den)))
    if kind == TokenKind.PROGRAM and raw == DRUMS:
        return Token(kind, DRUMS)
    return Token(kind, int(raw))


# --- Vocabulary configuration ---

def default_tempo_bins() -> tuple[float, ...]:
    """32 log-spaced representative tempos over 40-250 bpm."""
    return tuple(round(40.0 * (250.0 / 40.0) ** (i / 31), 2) for i in range(32))


def default_duration_bins() -> tuple[int, ...]:
    """64 durations in grid units: 1..8, 10..32 by 2, 36..96 by 4, 104..320 by 8."""
    return (
        tuple(range(1, 9))
        + tuple(range(10, 33, 2))
        + tuple(range(36, 97, 4))
        + tuple(range(104, 321, 8))
    )


DEFAULT_TIME_SIGNATURES = (
    (2, 2), (3, 2), (2, 4), (3, 4), (4, 4), (5, 4), (6, 4), (7, 4), (3, 8), (6, 8), (9, 8), (12, 8),
)


@dataclass(frozen=True)
class VocabConfig:
    position_resolution: int = 8
    velocity_bins: int = 32
    tempo_bins: tuple[float, ...] = field(default_factory=default_tempo_bins)
    duration_bins: tuple[int, ...] = field(default_factory=default_duration_bins)
    time_signatures: tuple[tuple[int, int], ...] = DEFAULT_TIME_SIGNATURES

    def to_dict(self) -> dict[str, Any]:
        return {
            "position_resolution": self.position_resolution,
            "velocity_bins": self.velocity_bins,
            "tempo_bins": list(self.tempo_bins),
            "duration_bins": list(self.duration_bins),
            "time_signatures": [f"{n}/{d}" for n, d in self.time_signatures],
        }

    @classmethod
    def from_dict(cls, d: dict) -> VocabConfig:
        defaults = cls()
        sigs = d.get("time_signatures")
        if sigs is None:
            time_signatures = defaults.time_signatures
        else:
            time_signatures = tuple(_parse_time_signature(s) for s in sigs)
        return cls(
            position_resolution=int(d.get("position_resolution", defaults.position_resolution)),
            velocity_bins=int(d.get("velocity_bins", defaults.velocity_bins)),
            tempo_bins=tuple(float(x) for x in d.get("tempo_bins", defaults.tempo_bins)),
            duration_bins=tuple(int(x) for x in d.get("duration_bins", defaults.duration_bins)),
            time_signatures=time_signatures,
        )


def _parse_time_signature(value: Union[str, Sequence[int]]) -> tuple[int, int]:
    if isinstance(value, str):
        num, _, den = value.partition("/")
        return int(num), int(den)
    num, den = value
    return int(num), int(den)


def _strictly_increasing(values: Sequence[float]) -> bool:
    return all(a < b for a, b in zip(values, values[1:]))


def _validate_config(config: VocabConfig) -> None:
    if config.position_resolution <= 0:
        raise InvalidBinConfig("position_resolution must be positive")
    if not 1 <= config.velocity_bins <= 127:
        raise InvalidBinConfig("velocity_bins must be in 1..127")
    if not config.tempo_bins or not _strictly_increasing(config.tempo_bins):
        raise InvalidBinConfig("tempo_bins must be non-empty and strictly increasing")
    if config.tempo_bins[0] <= 0:
        raise InvalidBinConfig("tempo_bins must be positive")
    if not config.duration_bins or not _strictly_increasing(config.duration_bins):
        raise InvalidBinConfig("duration_bins must be non-empty and strictly increasing")
    if config.duration_bins[0] < 1:
        raise InvalidBinConfig("duration_bins must be at least one grid unit")
    if not config.time_signatures or len(set(config.time_signatures)) != len(config.time_signatures):
        raise InvalidBinConfig("time_signatures must be non-empty and unique")
    for num, den in config.time_signatures:
        if num < 1 or den < 1 or den & (den - 1):
            raise InvalidBinConfig(f"invalid time signature {num}/{den}")
        if (num * 4 * config.position_resolution) % den:
            raise InvalidBinConfig(
                f"{num}/{den} bar is not a whole number of positions at resolution "
                f"{config.position_resolution}"
            )


class Vocabulary:
    """Bijection between tokens and contiguous ids; id 0 is PAD."""

    def __init__(self, config: VocabConfig, tokens: list[Token]):
        self.config = config
        self._tokens = list(tokens)
        self._ids = {tok: i for i, tok in enumerate(self._tokens)}
        n = config.velocity_bins
        if n == 1:
            self.velocity_values: tuple[int, ...] = (64,)
        else:
            self.velocity_values = tuple(round(1 + i * 126 / (n - 1)) for i in range(n))
        self.max_positions = max(self.bar_length(sig) for sig in config.time_signatures)

    def __len__(self) -> int:
        return len(self._tokens)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def __contains__(self, token: Token) -> bool:
        return token in self._ids

    def id(self, token: Token) -> int:
        return self._ids[token]

    def token(self, token_id: int) -> Token:
        return self._tokens[token_id]

    @property
    def tokens(self) -> list[Token]:
        return list(self._tokens)

    @property
    def pad_id(self) -> int:
        return self._ids[Token(TokenKind.PAD)]

    @property
    def bos_id(self) -> int:
        return self._ids[Token(TokenKind.BOS)]

    @property
    def eos_id(self) -> int:
        return self._ids[Token(TokenKind.EOS)]

    @property
    def unk_id(self) -> int:
        return self._ids[Token(TokenKind.UNK)]

    def id_or_unk(self, token: Token) -> int:
        return self._ids.get(token, self.unk_id)

    # --- Bins ---

    def bar_length(self, time_signature: tuple[int, int]) -> int:
        """Bar length in grid positions."""
        num, den = time_signature
        return max(1, num * 4 * self.config.position_resolution // den)

    def velocity_bin(self, velocity: int) -> int:
        values = self.velocity_values
        return min(range(len(values)), key=lambda i: (abs(values[i] - velocity), i))

    def velocity_value(self, index: int) -> int:
        return self.velocity_values[index]

    def tempo_bin(self, bpm: float) -> int:
        target = math.log(bpm)
        bins = self.config.tempo_bins
        return min(range(len(bins)), key=lambda i: (abs(math.log(bins[i]) - target), i))

    def tempo_value(self, index: int) -> float:
        return self.config.tempo_bins[index]

    def duration_bin(self, units: int) -> int:
        bins = self.config.duration_bins
        return min(range(len(bins)), key=lambda i: (abs(bins[i] - units), i))

    def duration_value(self, index: int) -> int:
        return self.config.duration_bins[index]

    # --- Serialization ---

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": VOCAB_FORMAT,
            "version": VOCAB_VERSION,
            "config": self.config.to_dict(),
            "size": len(self),
            "tokens": [str(tok) for tok in self._tokens],
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=False, default_flow_style=None)


def build_vocabulary(config: Optional[VocabConfig] = None) -> Vocabulary:
    """Deterministic id assignment: specials, Bar, Position, Pitch, Velocity,
    Duration, Tempo, TimeSig, Program."""
    config = config or VocabConfig()
    _validate_config(config)
    tokens = [Token(kind) for kind in TokenKind.SPECIALS]
    tokens.append(Token(TokenKind.BAR))
    max_positions = max(
        max(1, num * 4 * config.position_resolution // den) for num, den in config.time_signatures
    )
    tokens += [Token(TokenKind.POSITION, i) for i in range(max_positions)]
    tokens += [Token(TokenKind.PITCH, p) for p in range(128)]
    tokens += [Token(TokenKind.VELOCITY, i) for i in range(config.velocity_bins)]
    tokens += [Token(TokenKind.DURATION, i) for i in range(len(config.duration_bins))]
    tokens += [Token(TokenKind.TEMPO, i) for i in range(len(config.tempo_bins))]
    tokens += [Token(TokenKind.TIMESIG, sig) for sig in config.time_signatures]
    tokens += [Token(TokenKind.PROGRAM, p) for p in range(128)]
    tokens.append(Token(TokenKind.PROGRAM, DRUMS))
    return Vocabulary(config, tokens)


def vocabulary_from_dict(data: dict) -> Vocabulary:
    if not isinstance(data, dict) or data.get("format") != VOCAB_FORMAT:
        raise VocabularyFileError("not a midiforge vocabulary file")
    if data.get("version") != VOCAB_VERSION:
        raise VocabularyFileError(f"unsupported vocabulary version: {data.get('version')}")
    try:
        vocab = build_vocabulary(VocabConfig.from_dict(data.get("config") or {}))
    except (TypeError, ValueError) as e:
        raise VocabularyFileError(f"invalid vocabulary config: {e}") from e
    listed = data.get("tokens")
    if listed is not None and listed != [str(tok) for tok in vocab.tokens]:
        raise VocabularyFileError("token list does not match the vocabulary config")
    return vocab


def load_vocabulary(path: str) -> Vocabulary:
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise VocabularyFileError(f"cannot read vocabulary {path}: {e}") from e
    return vocabulary_from_dict(data)


# --- Quantization ---

def to_grid(tick: int, ticks_per_quarter: int, resolution: int) -> int:
    """Nearest grid index, halves rounding up."""
    return (2 * tick * resolution + ticks_per_quarter) // (2 * ticks_per_quarter)


def from_grid(index: int, ticks_per_quarter: int, resolution: int) -> int:
    return index * ticks_per_quarter // resolution


def quantize(notes: NoteList, ticks_per_quarter: int, position_resolution: int) -> NoteList:
    """Snap onsets and durations to the grid; durations floor at one unit."""
    if position_resolution <= 0:
        raise ValueError("position_resolution must be positive")
    tpq, res = ticks_per_quarter, position_resolution
    out = []
    for note in notes:
        units = max(1, to_grid(note.duration, tpq, res))
        out.append(Note(
            onset=from_grid(to_grid(note.onset, tpq, res), tpq, res),
            duration=max(1, from_grid(units, tpq, res)),
            pitch=note.pitch,
            velocity=note.velocity,
            program=note.program,
            is_drum=note.is_drum,
        ))
    return out


# --- Encode ---

@dataclass
class TokenSequence:
    ids: list[int]
    unknown_count: int = 0
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)


def _program_key(note: Note) -> int:
    return 128 if note.is_drum else note.program


def _changes_on_grid(changes: Sequence[tuple], tpq: int, res: int) -> list[tuple]:
    """Map (tick, *value) changes to grid units; the last change at a grid point wins."""
    by_grid: dict[int, tuple] = {}
    for tick, *value in sorted(changes, key=lambda c: c[0]):
        by_grid[to_grid(tick, tpq, res)] = tuple(value)
    return sorted(by_grid.items())


def encode(
    notes: NoteList,
    meta: Optional[ScoreMeta],
    vocab: Vocabulary,
    context_length: Optional[int] = None,
) -> TokenSequence:
    """Encode notes (in ticks) into REMI+ ids.

    Values the vocabulary cannot express become UNK and are counted. A
    piece longer than `context_length` keeps its first tokens and loses EOS.
    """
    meta = meta or ScoreMeta()
    tpq, res = meta.ticks_per_quarter, vocab.config.position_resolution

    grid_notes = [
        (to_grid(n.onset, tpq, res), max(1, to_grid(n.duration, tpq, res)), n)
        for n in notes
    ]
    tempos = _changes_on_grid(meta.tempos, tpq, res)
    if not tempos or tempos[0][0] != 0:
        tempos.insert(0, (0, (120.0,)))
    signatures = _changes_on_grid(meta.time_signatures, tpq, res)

    last_grid = max(
        [g for g, _, _ in grid_notes] + [g for g, _ in tempos] + [g for g, _ in signatures] + [0]
    )
    by_onset: dict[int, list[tuple[int, Note]]] = {}
    for onset, units, note in grid_notes:
        by_onset.setdefault(onset, []).append((units, note))

    ids = [vocab.bos_id]
    unknown = 0

    def emit(token: Token) -> None:
        nonlocal unknown
        token_id = vocab.id_or_unk(token)
        if token_id == vocab.unk_id:
            unknown += 1
        ids.append(token_id)

    time_sig = DEFAULT_TIME_SIGNATURE
    last_sig: Optional[tuple[int, int]] = None
    last_tempo_bin: Optional[int] = None
    sig_index = tempo_index = 0
    bar_start = 0
    while bar_start <= last_grid:
        while sig_index < len(signatures) and signatures[sig_index][0] <= bar_start:
            time_sig = signatures[sig_index][1]
            sig_index += 1
        emit(Token(TokenKind.BAR))
        if time_sig != last_sig:
            emit(Token(TokenKind.TIMESIG, time_sig))
            last_sig = time_sig
        bar_end = bar_start + vocab.bar_length(time_sig)

        positions = {g for g in by_onset if bar_start <= g < bar_end}
        positions.update(g for g, _ in tempos if bar_start <= g < bar_end)
        for pos in sorted(positions):
            emit(Token(TokenKind.POSITION, pos - bar_start))
            while tempo_index < len(tempos) and tempos[tempo_index][0] <= pos:
                tempo_index += 1
            tempo_bin = vocab.tempo_bin(tempos[tempo_index - 1][1][0])
            if tempo_bin != last_tempo_bin:
                emit(Token(TokenKind.TEMPO, tempo_bin))
                last_tempo_bin = tempo_bin
            group = sorted(by_onset.get(pos, []), key=lambda item: (_program_key(item[1]), item[1].pitch))
            for units, note in group:
                emit(Token(TokenKind.PROGRAM, DRUMS if note.is_drum else note.program))
                emit(Token(TokenKind.PITCH, note.pitch))
                emit(Token(TokenKind.VELOCITY, vocab.velocity_bin(note.velocity)))
                emit(Token(TokenKind.DURATION, vocab.duration_bin(units)))
        bar_start = bar_end

    ids.append(vocab.eos_id)
    truncated = context_length is not None and len(ids) > context_length
    if truncated:
        ids = ids[:context_length]
    if unknown:
        logger.debug("encode mapped %d values to UNK", unknown)
    return TokenSequence(ids=ids, unknown_count=unknown, truncated=truncated)


# --- Decode ---

@dataclass
class DecodeResult:
    notes: NoteList
    meta: ScoreMeta
    violations: int = 0
    unknown_count: int = 0


_STRUCTURAL = {TokenKind.BAR, TokenKind.POSITION, TokenKind.TEMPO, TokenKind.TIMESIG}


def decode(
    tokens: Union[TokenSequence, Sequence[int]],
    vocab: Vocabulary,
    ticks_per_quarter: int = 480,
) -> DecodeResult:
    """Best-effort reconstruction of notes from arbitrary ids.

    Grammar violations are skipped and counted; decoding stops at EOS.
    Drum notes come back with program 0: the drum token carries no
    program, and 0 is the canonical program for channel-10 notes.
    """
    ids = tokens.ids if isinstance(tokens, TokenSequence) else list(tokens)
    tpq, res = ticks_per_quarter, vocab.config.position_resolution
    notes: NoteList = []
    tempos: list[tuple[int, float]] = []
    signatures: list[tuple[int, int, int]] = []
    violations = unknown = 0

    time_sig = DEFAULT_TIME_SIGNATURE
    bar_start: Optional[int] = None
    rel_position: Optional[int] = None
    sig_allowed = False
    pending: Optional[dict[str, Any]] = None

    for index, token_id in enumerate(ids):
        if not 0 <= token_id < len(vocab):
            violations += 1
            continue
        kind, value = vocab.token(token_id)
        if kind == TokenKind.PAD:
            continue
        if kind == TokenKind.EOS:
            break
        if kind == TokenKind.BOS:
            if index != 0:
                violations += 1
            continue
        if kind == TokenKind.UNK:
            unknown += 1
            continue
        if kind in _STRUCTURAL and pending is not None:
            violations += 1
            pending = None

        if kind == TokenKind.BAR:
            bar_start = 0 if bar_start is None else bar_start + vocab.bar_length(time_sig)
            rel_position = None
            sig_allowed = True
        elif kind == TokenKind.TIMESIG:
            if not sig_allowed:
                violations += 1
                continue
            time_sig = value
            sig_allowed = False
            signatures.append((from_grid(bar_start, tpq, res), value[0], value[1]))
        elif kind == TokenKind.POSITION:
            if bar_start is None or value >= vocab.bar_length(time_sig) or (
                rel_position is not None and value < rel_position
            ):
                violations += 1
                continue
            rel_position = value
            sig_allowed = False
        elif kind == TokenKind.TEMPO:
            if rel_position is None:
                violations += 1
                continue
            tempos.append((from_grid(bar_start + rel_position, tpq, res), vocab.tempo_value(value)))
        elif kind == TokenKind.PROGRAM:
            if pending is not None:
                violations += 1
            if rel_position is None:
                violations += 1
                pending = None
                continue
            pending = {"program": value}
        elif kind == TokenKind.PITCH:
            if pending is None or "pitch" in pending:
                violations += 1
                pending = None
                continue
            pending["pitch"] = value
        elif kind == TokenKind.VELOCITY:
            if pending is None or "pitch" not in pending or "velocity" in pending:
                violations += 1
                pending = None
                continue
            pending["velocity"] = vocab.velocity_value(value)
        elif kind == TokenKind.DURATION:
            if pending is None or "velocity" not in pending:
                violations += 1
                pending = None
                continue
            is_drum = pending["program"] == DRUMS
            notes.append(Note(
                onset=from_grid(bar_start + rel_position, tpq, res),
                duration=max(1, from_grid(vocab.duration_value(value), tpq, res)),
                pitch=pending["pitch"],
                velocity=pending["velocity"],
                program=0 if is_drum else pending["program"],
                is_drum=is_drum,
            ))
            pending = None

    if pending is not None:
        violations += 1
    meta = ScoreMeta(ticks_per_quarter=tpq, tempos=_dedupe(tempos), time_signatures=_dedupe(signatures))
    return DecodeResult(notes=notes, meta=meta, violations=violations, unknown_count=unknown)


def _dedupe(changes: list[tuple]) -> list[tuple]:
    """Drop changes that repeat the value already in effect."""
    out: list[tuple] = []
    for change in changes:
        if not out or out[-1][1:] != change[1:]:
            out.append(change)
    return out


# --- Token text format ---

def tokens_to_text(ids: Sequence[int], vocab: Vocabulary) -> str:
    return "".join(f"{vocab.token(i)}\n" for i in ids)


def text_to_tokens(text: str, vocab: Vocabulary) -> list[int]:
    """Parse one token per line; unknown names become UNK."""
    ids = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            token = parse_token(line)
        except ValueError:
            token = Token(TokenKind.UNK)
        ids.append(vocab.id_or_unk(token))
    return ids
