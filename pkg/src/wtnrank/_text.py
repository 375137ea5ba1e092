"""Formatting helpers shared by the artifact writers.

All files the package emits go through these functions so that two runs on
identical inputs stay byte-identical: floats use their shortest round-trip
form, line endings are "\n" regardless of platform, JSON keys are sorted
and nothing carries a timestamp.
"""

from __future__ import annotations

import json
from pathlib import Path


def fmt(value) -> str:
    """Render a number for delimited output; round-trips under float()."""
    if isinstance(value, str):
        return value
    if hasattr(value, "item"):   # numpy scalar
        value = value.item()
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_lines(path, lines) -> Path:
    """Write text lines with "\n" endings; returns the path written."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    return path


def _plain(value):
    if hasattr(value, "item") and not isinstance(value, (int, float, str, bool)):
        return value.item()
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"not JSON-serializable: {type(value)!r}")


def write_json(path, payload: dict) -> Path:
    """Dump a manifest dict with sorted keys and a trailing newline."""
    path = Path(path)
    text = json.dumps(payload, sort_keys=True, indent=2, default=_plain)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.write("\n")
    return path
