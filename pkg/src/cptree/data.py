"""Text-line example format: ``<label> | <feature>[:<weight>] ...``.

One example per line. The label is a single non-whitespace token, features are
whitespace-separated tokens with an optional numeric weight after the last
colon (default 1.0). Feature tokens are hashed at parse time, so downstream
consumers only ever see canonical sparse vectors.
"""

from __future__ import annotations

import os
from typing import Iterable, Iterator

from .features import DEFAULT_HASH_BITS, Example, from_tokens


class ParseError(ValueError):
    """Malformed example line; carries the 1-based line number when known."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


def parse_example_line(
    line: str, hash_bits: int = DEFAULT_HASH_BITS, line_number: int | None = None
) -> Example:
    head, sep, tail = line.partition("|")
    if not sep:
        raise ParseError("missing '|' separator", line_number)
    label_tokens = head.split()
    if not label_tokens:
        raise ParseError("empty label", line_number)
    if len(label_tokens) > 1:
        raise ParseError(f"label must be a single token, got {head!r}", line_number)
    pairs: list[tuple[str, float]] = []
    for token in tail.split():
        if ":" in token:
            name, _, raw_weight = token.rpartition(":")
            if not name:
                raise ParseError(f"feature name missing in {token!r}", line_number)
            try:
                weight = float(raw_weight)
            except ValueError:
                raise ParseError(
                    f"non-numeric weight {raw_weight!r} in {token!r}", line_number
                ) from None
        else:
            name, weight = token, 1.0
        pairs.append((name, weight))
    try:
        x = from_tokens(pairs, hash_bits)
    except ValueError as exc:
        raise ParseError(str(exc), line_number) from None
    return Example(x, label_tokens[0])


def format_example_line(label: str, features: Iterable[tuple[str, float]]) -> str:
    parts = [label, "|"]
    for name, weight in features:
        parts.append(name if weight == 1.0 else f"{name}:{weight!r}")
    return " ".join(parts)


def read_examples(
    lines: Iterable[str], hash_bits: int = DEFAULT_HASH_BITS
) -> Iterator[Example]:
    """Parse an iterable of lines, skipping blank ones."""
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        yield parse_example_line(line, hash_bits, line_number=i)


def read_example_file(
    path: str | os.PathLike, hash_bits: int = DEFAULT_HASH_BITS
) -> Iterator[Example]:
    with open(path, "r", encoding="utf-8") as handle:
        yield from read_examples(handle, hash_bits)
