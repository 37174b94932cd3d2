"""MIDI builders shared by the test modules."""

from midiforge.models import EndOfTrack, Event, MidiFile, NoteOff, NoteOn, ProgramChange, SetTempo, TimeSignature, Track


def make_midi(*tracks, ticks_per_quarter=480, fmt=1):
    """Build a MidiFile from lists of (tick, kind); EndOfTrack is appended."""
    built = []
    for events in tracks:
        evs = [Event(tick, kind) for tick, kind in sorted(events, key=lambda e: e[0])]
        evs.append(Event(evs[-1].tick if evs else 0, EndOfTrack()))
        built.append(Track(evs))
    return MidiFile(format=fmt, ticks_per_quarter=ticks_per_quarter, tracks=built)


def simple_midi():
    """Conductor at 120 bpm in 3/4, violin playing C4 then E4."""
    conductor = [(0, SetTempo(500_000)), (0, TimeSignature(3, 4))]
    violin = [
        (0, ProgramChange(0, 40)),
        (0, NoteOn(0, 60, 80)),
        (480, NoteOff(0, 60)),
        (480, NoteOn(0, 64, 90)),
        (960, NoteOff(0, 64)),
    ]
    return make_midi(conductor, violin)
