"""Small helpers shared by the pipeline and the CLI."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Iterable, Iterator


def derive_seed(*parts: Any) -> int:
    """Stable 63-bit seed from any printable parts, e.g. (seed, step, slot)."""
    digest = hashlib.sha256(repr(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def oxford_join(items: list[str]) -> str:
    """Natural-language list: "a", "a and b", "a, b, and c"."""
    if not items:
        return ""
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


def read_jsonl(path: str) -> Iterator[dict[str, Any]]:
    """Yield records from a line-delimited JSON file, skipping blank lines."""
    with open(path, encoding="utf-8") as f:
        for line_num, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_num}: invalid JSON: {e}") from e


def write_jsonl(path: str, records: Iterable[dict[str, Any]]) -> int:
    """Write records one per line, keys in insertion order. Returns the count.

    Full rewrite through a temp file and an atomic rename.
    """
    tmp_path = path + ".tmp"
    count = 0
    try:
        with open(tmp_path, "w", encoding="utf-8") as f:
            for rec in records:
                f.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")
                count += 1
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return count


def midi_files(directory: str) -> list[Path]:
    """MIDI files directly inside a directory, sorted by name."""
    return sorted(
        p for p in Path(directory).iterdir()
        if p.is_file() and p.suffix.lower() in (".mid", ".midi")
    )


def resolve_path(path: str, base: str) -> str:
    """Resolve a manifest-relative path."""
    if os.path.isabs(path):
        return path
    return os.path.join(base, path)
