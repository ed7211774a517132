"""Keyed-text serialization: ordered ``key = value`` lines.

Several artifacts (run configs, selection summaries, model checkpoints)
share one plain-text container format so they stay diffable and greppable:

* one ``key = value`` pair per line, keys matching ``[A-Za-z0-9_.-]+``;
* values are the raw text after the first ``=`` with surrounding
  whitespace stripped, so values may contain spaces, commas, or ``=``;
* lines starting with ``#`` and blank lines are ignored on read;
* key order is preserved and duplicate keys are rejected.

Floats are written with ``repr`` so a read-back parses to the identical
binary value.
"""

from __future__ import annotations

import re

from .errors import DataError

__all__ = ["format_keyed", "parse_keyed", "format_float", "read_keyed",
           "write_keyed"]

_KEY_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


def format_float(x) -> str:
    """Shortest decimal string that round-trips to the same float64."""
    return repr(float(x))


def format_keyed(pairs, header: str | None = None) -> str:
    """Render ordered (key, value) pairs as keyed text.

    ``pairs`` may be a dict or an iterable of 2-tuples; values are
    converted with ``str`` (floats should be pre-formatted with
    :func:`format_float` when exact round-trips matter).
    """
    items = pairs.items() if hasattr(pairs, "items") else pairs
    lines = []
    if header:
        for part in header.splitlines():
            lines.append(f"# {part}" if part else "#")
    seen = set()
    for key, value in items:
        key = str(key)
        if not _KEY_RE.match(key):
            raise DataError(f"invalid key {key!r}: use [A-Za-z0-9_.-]+")
        if key in seen:
            raise DataError(f"duplicate key {key!r}")
        seen.add(key)
        value = "" if value is None else str(value)
        if "\n" in value:
            raise DataError(f"value for {key!r} contains a newline")
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_keyed(text: str) -> dict:
    """Parse keyed text back into an ordered ``{key: value}`` dict."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"line {lineno}: expected 'key = value', "
                            f"got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise DataError(f"line {lineno}: invalid key {key!r}")
        if key in out:
            raise DataError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def write_keyed(path, pairs, header: str | None = None) -> None:
    """Write keyed text to ``path`` (LF newlines, UTF-8)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_keyed(pairs, header=header))


def read_keyed(path) -> dict:
    """Read keyed text from ``path``."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_keyed(fh.read())
