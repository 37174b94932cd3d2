"""midiforge - text-to-MIDI toolkit."""

__version__ = "0.1.0"
