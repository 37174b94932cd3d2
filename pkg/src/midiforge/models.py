"""Core data types: MIDI events, notes, keys and attribute sets."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Union


# --- Constants ---

DRUM_CHANNEL = 9  # channel 10, 1-indexed
DEFAULT_TEMPO_MPQ = 500_000  # 120 bpm
DEFAULT_TIME_SIGNATURE = (4, 4)
MAX_BPM = 1000.0  # exclusive bound on AttributeSet.bpm

PITCH_CLASS_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")


class Mode:
    MAJOR = "major"
    MINOR = "minor"

    _VALID = {MAJOR, MINOR}

    @classmethod
    def is_valid(cls, s: str) -> bool:
        return s in cls._VALID


def _check_range(name: str, value: int, lo: int, hi: int) -> None:
    if not isinstance(value, int) or not lo <= value <= hi:
        raise ValueError(f"{name} must be in {lo}..{hi}, got {value!r}")


# --- Event kinds ---

@dataclass(frozen=True)
class NoteOn:
    channel: int
    pitch: int
    velocity: int

    def __post_init__(self) -> None:
        _check_range("channel", self.channel, 0, 15)
        _check_range("pitch", self.pitch, 0, 127)
        _check_range("velocity", self.velocity, 1, 127)


@dataclass(frozen=True)
class NoteOff:
    channel: int
    pitch: int

    def __post_init__(self) -> None:
        _check_range("channel", self.channel, 0, 15)
        _check_range("pitch", self.pitch, 0, 127)


@dataclass(frozen=True)
class ProgramChange:
    channel: int
    program: int

    def __post_init__(self) -> None:
        _check_range("channel", self.channel, 0, 15)
        _check_range("program", self.program, 0, 127)


@dataclass(frozen=True)
class SetTempo:
    microseconds_per_quarter: int

    def __post_init__(self) -> None:
        _check_range("microseconds_per_quarter", self.microseconds_per_quarter, 1, 0xFFFFFF)

    @property
    def bpm(self) -> float:
        return 60_000_000 / self.microseconds_per_quarter


@dataclass(frozen=True)
class TimeSignature:
    numerator: int
    denominator: int

    def __post_init__(self) -> None:
        _check_range("numerator", self.numerator, 1, 255)
        d = self.denominator
        if d < 1 or d > 128 or d & (d - 1):
            raise ValueError(f"denominator must be a power of two up to 128, got {d!r}")


@dataclass(frozen=True)
class KeySignature:
    sharps: int
    mode: str = Mode.MAJOR

    def __post_init__(self) -> None:
        _check_range("sharps", self.sharps, -7, 7)
        if not Mode.is_valid(self.mode):
            raise ValueError(f"invalid mode: {self.mode!r}")


@dataclass(frozen=True)
class EndOfTrack:
    pass


EventKind = Union[NoteOn, NoteOff, ProgramChange, SetTempo, TimeSignature, KeySignature, EndOfTrack]


@dataclass(frozen=True)
class Event:
    tick: int
    kind: EventKind

    def __post_init__(self) -> None:
        if not isinstance(self.tick, int) or self.tick < 0:
            raise ValueError(f"event tick must be a non-negative integer, got {self.tick!r}")


@dataclass
class Track:
    events: list[Event] = field(default_factory=list)

    @property
    def end_tick(self) -> int:
        return self.events[-1].tick if self.events else 0

    def validate(self) -> None:
        last = 0
        for ev in self.events:
            if ev.tick < last:
                raise ValueError(f"track events out of order at tick {ev.tick}")
            last = ev.tick


@dataclass
class MidiFile:
    """Parsed Standard MIDI File with absolute tick times."""

    format: int = 1
    ticks_per_quarter: int = 480
    tracks: list[Track] = field(default_factory=list)

    def validate(self) -> None:
        if self.format not in (0, 1):
            raise ValueError(f"unsupported SMF format: {self.format}")
        if self.ticks_per_quarter <= 0 or self.ticks_per_quarter > 0x7FFF:
            raise ValueError(f"ticks_per_quarter out of range: {self.ticks_per_quarter}")
        if self.format == 0 and len(self.tracks) != 1:
            raise ValueError("format 0 files hold exactly one track")
        for track in self.tracks:
            track.validate()

    @property
    def final_tick(self) -> int:
        return max((t.end_tick for t in self.tracks), default=0)

    def iter_events(self) -> Iterator[tuple[int, Event]]:
        """Yield (track_index, event) over all tracks, ordered by tick then track."""
        merged = [
            (ev.tick, ti, ei, ev)
            for ti, track in enumerate(self.tracks)
            for ei, ev in enumerate(track.events)
        ]
        merged.sort(key=lambda item: item[:3])
        for _, ti, _, ev in merged:
            yield ti, ev


# --- Notes ---

@dataclass(frozen=True)
class Note:
    onset: int
    duration: int
    pitch: int
    velocity: int
    program: int = 0
    is_drum: bool = False

    def __post_init__(self) -> None:
        if self.onset < 0:
            raise ValueError(f"note onset must be >= 0, got {self.onset}")
        if self.duration < 1:
            raise ValueError(f"note duration must be >= 1, got {self.duration}")
        _check_range("pitch", self.pitch, 0, 127)
        _check_range("velocity", self.velocity, 1, 127)
        _check_range("program", self.program, 0, 127)

    @property
    def end(self) -> int:
        return self.onset + self.duration

    def sort_key(self) -> tuple:
        return (self.onset, self.is_drum, self.program, self.pitch, self.duration, self.velocity)


NoteList = list[Note]


def sort_notes(notes: NoteList) -> NoteList:
    return sorted(notes, key=Note.sort_key)


# --- Keys and attributes ---

@dataclass(frozen=True)
class Key:
    tonic: int
    mode: str = Mode.MAJOR
    score: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        _check_range("tonic", self.tonic, 0, 11)
        if not Mode.is_valid(self.mode):
            raise ValueError(f"invalid mode: {self.mode!r}")

    @property
    def name(self) -> str:
        return f"{PITCH_CLASS_NAMES[self.tonic]} {self.mode}"

    @property
    def relative(self) -> Key:
        """The relative major/minor key."""
        if self.mode == Mode.MAJOR:
            return Key((self.tonic + 9) % 12, Mode.MINOR)
        return Key((self.tonic + 3) % 12, Mode.MAJOR)

    def transpose(self, semitones: int) -> Key:
        return Key((self.tonic + semitones) % 12, self.mode, self.score)


_KEY_RE = re.compile(r"^\s*([A-Ga-g])([#b]?)\s*(major|minor)?\s*$", re.IGNORECASE)


def parse_key(text: str) -> Key:
    """Parse "G# minor", "Bb major" or "a minor" into a Key."""
    m = _KEY_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse key: {text!r}")
    letter = m.group(1).upper()
    accidental = m.group(2).lower()
    mode = (m.group(3) or Mode.MAJOR).lower()
    if accidental == "b":
        tonic = (PITCH_CLASS_NAMES.index(letter) - 1) % 12
    elif accidental == "#":
        tonic = (PITCH_CLASS_NAMES.index(letter) + 1) % 12
    else:
        tonic = PITCH_CLASS_NAMES.index(letter)
    return Key(tonic, mode)


@dataclass
class AttributeSet:
    """Objective attributes of a piece, in the order captions use them."""

    bpm: float = 120.0
    time_signature: tuple[int, int] = DEFAULT_TIME_SIGNATURE
    key: Key = field(default_factory=lambda: Key(0, Mode.MAJOR))
    instruments: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0 < self.bpm < MAX_BPM:
            raise ValueError(f"bpm must be in (0, {MAX_BPM:g}), got {self.bpm}")
        self.time_signature = (int(self.time_signature[0]), int(self.time_signature[1]))
        self.instruments = sorted(set(self.instruments))

    def to_dict(self) -> dict[str, Any]:
        num, den = self.time_signature
        return {
            "bpm": round(self.bpm, 3),
            "time_signature": f"{num}/{den}",
            "key": self.key.name,
            "instruments": list(self.instruments),
        }

    @classmethod
    def from_dict(cls, d: dict) -> AttributeSet:
        ts = d.get("time_signature", "4/4")
        if isinstance(ts, str):
            num, _, den = ts.partition("/")
            ts = (int(num), int(den))
        key = d.get("key", "C major")
        return cls(
            bpm=float(d.get("bpm", 120.0)),
            time_signature=tuple(ts),
            key=parse_key(key) if isinstance(key, str) else key,
            instruments=list(d.get("instruments", [])),
        )


@dataclass
class ScoreMeta:
    """Timing context that travels with a note list.

    tempos: (tick, bpm) changes; time_signatures: (tick, numerator,
    denominator) changes. Empty lists mean 120 bpm and 4/4.
    """

    ticks_per_quarter: int = 480
    tempos: list[tuple[int, float]] = field(default_factory=list)
    time_signatures: list[tuple[int, int, int]] = field(default_factory=list)
    key: Optional[Key] = None
