"""Standard MIDI File parsing and writing.

Files are held with absolute tick times; delta times only exist at the
byte boundary. Handles:
- MThd/MTrk chunks, variable-length quantities, running status
- NoteOn velocity 0 normalised to NoteOff
- meta events for tempo, time signature, key signature and end of track
  (other meta and sysex events are skipped)
"""

from __future__ import annotations

import logging
import math
import struct
from collections import Counter, defaultdict, deque
from typing import Optional

from midiforge.errors import (
    InvalidEvent, InvalidVariableLengthQuantity, MalformedHeader, TruncatedChunk,
    UnsupportedTimeDivision,
)
from midiforge.models import (
    DEFAULT_TEMPO_MPQ, DRUM_CHANNEL, EndOfTrack, Event, EventKind, Key, KeySignature,
    MidiFile, Mode, Note, NoteList, NoteOff, NoteOn, ProgramChange, ScoreMeta, SetTempo,
    TimeSignature, Track, sort_notes,
)

logger = logging.getLogger(__name__)

HEADER_TAG = b"MThd"
TRACK_TAG = b"MTrk"

_HEADER = struct.Struct(">HHH")
_CHUNK = struct.Struct(">4sI")

META_END_OF_TRACK = 0x2F
META_SET_TEMPO = 0x51
META_TIME_SIGNATURE = 0x58
META_KEY_SIGNATURE = 0x59

MAX_VLQ = 0x0FFFFFFF
MELODIC_CHANNELS = tuple(ch for ch in range(16) if ch != DRUM_CHANNEL)


# --- Variable-length quantities ---

def read_vlq(data: bytes, pos: int, end: int) -> tuple[int, int]:
    """Read a variable-length quantity. Returns (value, new position)."""
    value = 0
    for _ in range(4):
        if pos >= end:
            raise InvalidVariableLengthQuantity(f"variable-length quantity runs past byte {end}")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise InvalidVariableLengthQuantity(f"variable-length quantity longer than 4 bytes at byte {pos - 4}")


def write_vlq(value: int) -> bytes:
    if not 0 <= value <= MAX_VLQ:
        raise ValueError(f"value out of variable-length range: {value}")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


# --- Parsing ---

def parse_midi(data: bytes) -> MidiFile:
    """Parse SMF bytes into a MidiFile.

    Raises a MidiParseError subclass on malformed input; never anything else.
    """
    data = bytes(data)
    if len(data) < 8 or data[:4] != HEADER_TAG:
        raise MalformedHeader("missing MThd header chunk")
    length = int.from_bytes(data[4:8], "big")
    if length < 6:
        raise MalformedHeader(f"header chunk too short: {length} bytes")
    if len(data) < 8 + length:
        raise TruncatedChunk("header chunk truncated")
    fmt, ntracks, division = _HEADER.unpack_from(data, 8)
    if division & 0x8000:
        raise UnsupportedTimeDivision("SMPTE time division is not supported")
    if division == 0:
        raise MalformedHeader("ticks per quarter note must be positive")
    if fmt not in (0, 1):
        raise MalformedHeader(f"unsupported SMF format {fmt}")
    if fmt == 0 and ntracks != 1:
        raise MalformedHeader(f"format 0 file declares {ntracks} tracks")

    pos = 8 + length
    tracks: list[Track] = []
    while len(tracks) < ntracks:
        if pos + 8 > len(data):
            raise TruncatedChunk(f"expected {ntracks} track chunks, found {len(tracks)}")
        tag, size = _CHUNK.unpack_from(data, pos)
        start, end = pos + 8, pos + 8 + size
        if end > len(data):
            raise TruncatedChunk(f"chunk {tag!r} declares {size} bytes, {len(data) - start} present")
        if tag == TRACK_TAG:
            tracks.append(_parse_track(data, start, end))
        else:
            logger.debug("skipping unknown chunk %r", tag)
        pos = end
    return MidiFile(format=fmt, ticks_per_quarter=division, tracks=tracks)


def _parse_track(data: bytes, pos: int, end: int) -> Track:
    events: list[Event] = []
    tick = 0
    running: Optional[int] = None

    while pos < end:
        delta, pos = read_vlq(data, pos, end)
        tick += delta
        if pos >= end:
            raise TruncatedChunk("track ends after a delta time")
        status = data[pos]
        if status & 0x80:
            pos += 1
        elif running is None:
            raise InvalidEvent(f"data byte 0x{status:02X} without running status")
        else:
            status = running

        if status == 0xFF:
            # Meta and sysex events cancel running status
            running = None
            if pos >= end:
                raise TruncatedChunk("meta event without type byte")
            meta_type = data[pos]
            size, pos = read_vlq(data, pos + 1, end)
            if pos + size > end:
                raise TruncatedChunk("meta event runs past end of track")
            payload = data[pos:pos + size]
            pos += size
            if meta_type == META_END_OF_TRACK:
                events.append(Event(tick, EndOfTrack()))
                break
            kind = _meta_kind(meta_type, payload)
            if kind is not None:
                events.append(Event(tick, kind))
        elif status in (0xF0, 0xF7):
            running = None
            size, pos = read_vlq(data, pos, end)
            if pos + size > end:
                raise TruncatedChunk("sysex event runs past end of track")
            pos += size
        elif status > 0xF0:
            raise InvalidEvent(f"system message 0x{status:02X} inside a track")
        else:
            running = status
            kind = _channel_kind(status, data, pos, end)
            pos += 1 if status >> 4 in (0xC, 0xD) else 2
            if kind is not None:
                events.append(Event(tick, kind))

    if not events or not isinstance(events[-1].kind, EndOfTrack):
        events.append(Event(tick, EndOfTrack()))
    return Track(events)


def _channel_kind(status: int, data: bytes, pos: int, end: int) -> Optional[EventKind]:
    nibble, channel = status >> 4, status & 0x0F
    size = 1 if nibble in (0xC, 0xD) else 2
    if pos + size > end:
        raise TruncatedChunk("channel event runs past end of track")
    args = data[pos:pos + size]
    if any(b & 0x80 for b in args):
        raise InvalidEvent(f"status byte where data byte expected after 0x{status:02X}")
    if nibble == 0x9 and args[1] > 0:
        return NoteOn(channel, args[0], args[1])
    if nibble in (0x8, 0x9):
        return NoteOff(channel, args[0])
    if nibble == 0xC:
        return ProgramChange(channel, args[0])
    # aftertouch, controllers, pitch bend
    return None


def _meta_kind(meta_type: int, payload: bytes) -> Optional[EventKind]:
    if meta_type == META_SET_TEMPO and len(payload) == 3:
        mpq = int.from_bytes(payload, "big")
        if mpq > 0:
            return SetTempo(mpq)
    elif meta_type == META_TIME_SIGNATURE and len(payload) >= 2:
        if payload[0] > 0 and payload[1] <= 7:
            return TimeSignature(payload[0], 1 << payload[1])
    elif meta_type == META_KEY_SIGNATURE and len(payload) == 2:
        sharps = payload[0] - 256 if payload[0] > 127 else payload[0]
        if -7 <= sharps <= 7 and payload[1] in (0, 1):
            return KeySignature(sharps, Mode.MINOR if payload[1] else Mode.MAJOR)
    else:
        return None
    logger.debug("skipping malformed meta event 0x%02X (%d bytes)", meta_type, len(payload))
    return None


# --- Writing ---

def write_midi(midi: MidiFile) -> bytes:
    """Serialise a MidiFile to SMF bytes (no running status on output)."""
    midi.validate()
    out = bytearray(HEADER_TAG)
    out += (6).to_bytes(4, "big")
    out += _HEADER.pack(midi.format, len(midi.tracks), midi.ticks_per_quarter)
    for track in midi.tracks:
        body = _encode_track(track)
        out += _CHUNK.pack(TRACK_TAG, len(body))
        out += body
    return bytes(out)


def _encode_track(track: Track) -> bytes:
    body = bytearray()
    last = 0
    for ev in track.events:
        if isinstance(ev.kind, EndOfTrack):
            continue
        body += write_vlq(ev.tick - last)
        body += _encode_kind(ev.kind)
        last = ev.tick
    body += write_vlq(track.end_tick - last)
    body += bytes([0xFF, META_END_OF_TRACK, 0x00])
    return bytes(body)


def _encode_kind(kind: EventKind) -> bytes:
    if isinstance(kind, NoteOn):
        return bytes([0x90 | kind.channel, kind.pitch, kind.velocity])
    if isinstance(kind, NoteOff):
        return bytes([0x80 | kind.channel, kind.pitch, 0x40])
    if isinstance(kind, ProgramChange):
        return bytes([0xC0 | kind.channel, kind.program])
    if isinstance(kind, SetTempo):
        return bytes([0xFF, META_SET_TEMPO, 0x03]) + kind.microseconds_per_quarter.to_bytes(3, "big")
    if isinstance(kind, TimeSignature):
        power = kind.denominator.bit_length() - 1
        return bytes([0xFF, META_TIME_SIGNATURE, 0x04, kind.numerator, power, 24, 8])
    if isinstance(kind, KeySignature):
        mode = 1 if kind.mode == Mode.MINOR else 0
        return bytes([0xFF, META_KEY_SIGNATURE, 0x02, kind.sharps & 0xFF, mode])
    raise TypeError(f"cannot encode event kind {kind!r}")


def read_midi(path: str) -> MidiFile:
    with open(path, "rb") as f:
        return parse_midi(f.read())


def save_midi(midi: MidiFile, path: str) -> None:
    with open(path, "wb") as f:
        f.write(write_midi(midi))


# --- Notes ---

def extract_notes(midi: MidiFile) -> NoteList:
    """Pair NoteOn/NoteOff events into notes.

    Pairing is FIFO per (channel, pitch) over the merged event stream;
    each note takes its channel's most recent program. NoteOns left open
    close at the final tick of the file.
    """
    programs = [0] * 16
    pending: dict[tuple[int, int], deque[tuple[int, int, int]]] = defaultdict(deque)
    notes: NoteList = []

    for _, ev in midi.iter_events():
        kind = ev.kind
        if isinstance(kind, ProgramChange):
            programs[kind.channel] = kind.program
        elif isinstance(kind, NoteOn):
            pending[(kind.channel, kind.pitch)].append((ev.tick, kind.velocity, programs[kind.channel]))
        elif isinstance(kind, NoteOff):
            queue = pending.get((kind.channel, kind.pitch))
            if queue:
                onset, velocity, program = queue.popleft()
                notes.append(_make_note(kind.channel, kind.pitch, onset, ev.tick, velocity, program))
            else:
                logger.debug("unmatched NoteOff ch=%d pitch=%d at tick %d", kind.channel, kind.pitch, ev.tick)

    final = midi.final_tick
    for (channel, pitch), queue in pending.items():
        for onset, velocity, program in queue:
            notes.append(_make_note(channel, pitch, onset, final, velocity, program))
    return sort_notes(notes)


def _make_note(channel: int, pitch: int, onset: int, end: int, velocity: int, program: int) -> Note:
    return Note(
        onset=onset,
        duration=max(1, end - onset),
        pitch=pitch,
        velocity=velocity,
        program=program,
        is_drum=channel == DRUM_CHANNEL,
    )


def key_signature_for(key: Key) -> KeySignature:
    major_tonic = key.tonic if key.mode == Mode.MAJOR else (key.tonic + 3) % 12
    sharps = (major_tonic * 7) % 12
    if sharps > 6:
        sharps -= 12
    return KeySignature(sharps, key.mode)


def notes_to_midi(notes: NoteList, meta: Optional[ScoreMeta] = None) -> MidiFile:
    """Build a format-1 file: a conductor track plus one track per program.

    Drums go to channel 10; other programs take the remaining channels in
    order, sharing channels (with a ProgramChange before each note) when
    there are more than 15 of them.
    """
    meta = meta or ScoreMeta()
    conductor: list[Event] = []
    for tick, bpm in meta.tempos:
        conductor.append(Event(tick, SetTempo(round(60_000_000 / bpm))))
    for tick, num, den in meta.time_signatures:
        conductor.append(Event(tick, TimeSignature(num, den)))
    if meta.key is not None:
        conductor.append(Event(0, key_signature_for(meta.key)))
    conductor.sort(key=lambda ev: ev.tick)
    conductor.append(Event(conductor[-1].tick if conductor else 0, EndOfTrack()))

    groups: dict[tuple[bool, int], NoteList] = defaultdict(list)
    for note in notes:
        groups[(note.is_drum, 0 if note.is_drum else note.program)].append(note)
    melodic = sorted(k for k in groups if not k[0])
    shared = len(melodic) > len(MELODIC_CHANNELS)

    tracks = [Track(conductor)]
    for group_key in sorted(groups):
        is_drum, program = group_key
        channel = DRUM_CHANNEL if is_drum else MELODIC_CHANNELS[melodic.index(group_key) % len(MELODIC_CHANNELS)]
        timed: list[tuple[int, int, EventKind]] = []
        if not is_drum and not shared:
            timed.append((0, 0, ProgramChange(channel, program)))
        for note in groups[group_key]:
            if not is_drum and shared:
                timed.append((note.onset, 1, ProgramChange(channel, program)))
            timed.append((note.onset, 2, NoteOn(channel, note.pitch, note.velocity)))
            timed.append((note.end, 0, NoteOff(channel, note.pitch)))
        timed.sort(key=lambda item: (item[0], item[1]))
        events = [Event(tick, kind) for tick, _, kind in timed]
        events.append(Event(events[-1].tick if events else 0, EndOfTrack()))
        tracks.append(Track(events))
    return MidiFile(format=1, ticks_per_quarter=meta.ticks_per_quarter, tracks=tracks)


def merge_tracks(midi: MidiFile) -> MidiFile:
    """Format-1 to format-0 conversion; order is (tick, track, position)."""
    events = [ev for _, ev in midi.iter_events() if not isinstance(ev.kind, EndOfTrack)]
    events.append(Event(midi.final_tick, EndOfTrack()))
    return MidiFile(format=0, ticks_per_quarter=midi.ticks_per_quarter, tracks=[Track(events)])


# --- Tempo map ---

def tempo_map(midi: MidiFile) -> list[tuple[int, int]]:
    """(tick, microseconds per quarter) segments starting at tick 0.

    Simultaneous changes are ordered by value; the last one governs.
    """
    changes = sorted(
        (ev.tick, ev.kind.microseconds_per_quarter)
        for _, ev in midi.iter_events()
        if isinstance(ev.kind, SetTempo)
    )
    segments = [(0, DEFAULT_TEMPO_MPQ)]
    for tick, mpq in changes:
        if segments[-1][0] == tick:
            segments[-1] = (tick, mpq)
        else:
            segments.append((tick, mpq))
    return segments


def tick_to_seconds(midi: MidiFile, tick: int) -> float:
    tpq = midi.ticks_per_quarter
    seconds = 0.0
    segments = tempo_map(midi)
    for i, (start, mpq) in enumerate(segments):
        stop = segments[i + 1][0] if i + 1 < len(segments) else None
        if stop is None or tick <= stop:
            return seconds + (tick - start) * mpq / (1e6 * tpq)
        seconds += (stop - start) * mpq / (1e6 * tpq)
    return seconds


def seconds_to_tick(midi: MidiFile, seconds: float) -> int:
    """Smallest tick whose time is at or after `seconds`."""
    tpq = midi.ticks_per_quarter
    elapsed = 0.0
    segments = tempo_map(midi)
    for i, (start, mpq) in enumerate(segments):
        tick_seconds = mpq / (1e6 * tpq)
        stop = segments[i + 1][0] if i + 1 < len(segments) else None
        if stop is None or elapsed + (stop - start) * tick_seconds >= seconds:
            return start + math.ceil((seconds - elapsed) / tick_seconds - 1e-9)
        elapsed += (stop - start) * tick_seconds
    return segments[-1][0]


def clip_to_seconds(midi: MidiFile, seconds: float) -> MidiFile:
    """Keep the first `seconds` of a file, closing notes sounding at the cut."""
    limit = seconds_to_tick(midi, seconds)
    if limit >= midi.final_tick:
        return midi
    tracks = []
    for track in midi.tracks:
        kept: list[Event] = []
        sounding: Counter[tuple[int, int]] = Counter()
        for ev in track.events:
            if ev.tick >= limit:
                break
            kind = ev.kind
            if isinstance(kind, EndOfTrack):
                continue
            if isinstance(kind, NoteOn):
                sounding[(kind.channel, kind.pitch)] += 1
            elif isinstance(kind, NoteOff) and sounding[(kind.channel, kind.pitch)] > 0:
                sounding[(kind.channel, kind.pitch)] -= 1
            kept.append(ev)
        for (channel, pitch), count in sorted(sounding.items()):
            kept.extend(Event(limit, NoteOff(channel, pitch)) for _ in range(count))
        kept.append(Event(limit, EndOfTrack()))
        tracks.append(Track(kept))
    return MidiFile(format=midi.format, ticks_per_quarter=midi.ticks_per_quarter, tracks=tracks)


def score_meta(midi: MidiFile) -> ScoreMeta:
    """Tempo and time-signature changes of a file, for tokenization."""
    tempos = [(tick, 60_000_000 / mpq) for tick, mpq in tempo_map(midi)]
    time_signatures: list[tuple[int, int, int]] = []
    key: Optional[Key] = None
    for _, ev in midi.iter_events():
        kind = ev.kind
        if isinstance(kind, TimeSignature):
            time_signatures.append((ev.tick, kind.numerator, kind.denominator))
        elif isinstance(kind, KeySignature) and key is None:
            major_tonic = (kind.sharps * 7) % 12
            key = Key(major_tonic) if kind.mode == Mode.MAJOR else Key((major_tonic + 9) % 12, Mode.MINOR)
    return ScoreMeta(midi.ticks_per_quarter, tempos, time_signatures, key)
