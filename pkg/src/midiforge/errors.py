"""Exception hierarchy for midiforge.

Library code raises these; the CLI commands map them to exit codes.
"""

from __future__ import annotations


class MidiforgeError(Exception):
    """Base class for all midiforge errors."""


# --- MIDI parsing ---

class MidiParseError(MidiforgeError, ValueError):
    """Raised when bytes are not a readable Standard MIDI File."""


class MalformedHeader(MidiParseError):
    pass


class UnsupportedTimeDivision(MalformedHeader):
    """SMPTE time division; only ticks-per-quarter files are accepted."""


class TruncatedChunk(MidiParseError):
    pass


class InvalidVariableLengthQuantity(MidiParseError):
    pass


class InvalidEvent(MidiParseError):
    pass


# --- Vocabulary ---

class VocabularyError(MidiforgeError, ValueError):
    pass


class InvalidBinConfig(VocabularyError):
    pass


class VocabularyFileError(VocabularyError):
    pass


# --- Analysis ---

class EmptyInput(MidiforgeError, ValueError):
    """An analysis needs at least one pitched note."""


# --- Text encoders ---

class EncoderError(MidiforgeError):
    pass


class MissingEmbedding(EncoderError, KeyError):
    def __init__(self, caption: str):
        super().__init__(caption)
        self.caption = caption

    def __str__(self) -> str:
        return f"no stored embedding for caption: {self.caption!r}"


class EmbeddingFileError(EncoderError, ValueError):
    pass


# --- Model ---

class ContextOverflow(MidiforgeError, ValueError):
    pass


class CheckpointError(MidiforgeError):
    pass


class IncompatibleVersion(CheckpointError):
    pass


class ShapeMismatch(CheckpointError, ValueError):
    pass


# --- Configuration ---

class ConfigError(MidiforgeError, ValueError):
    pass
