"""Sectioned plain-text config parser shared by model and scenario files.

Format: ``[section]`` headers, ``key = value`` entries, bare-word entries
(a line with a single token and no ``=``), ``#`` comments. Duplicate keys
and duplicate sections are allowed; order is preserved. All errors carry
a 1-based line and column.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ParseError(ValueError):
    """Malformed config text, with source location."""

    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Entry:
    key: str
    value: str | None  # None for bare-word entries
    line: int
    col: int

    def text(self) -> str:
        return self.key if self.value is None else self.value

    def as_float(self) -> float:
        raw = self.text()
        try:
            return float(raw)
        except ValueError:
            raise ParseError(f"expected a number, got {raw!r}", self.line, self.col) from None

    def as_int(self) -> int:
        raw = self.text()
        try:
            return int(raw)
        except ValueError:
            raise ParseError(f"expected an integer, got {raw!r}", self.line, self.col) from None

    def split(self) -> list[str]:
        return self.text().split()


@dataclass
class Section:
    name: str
    line: int
    entries: list[Entry] = field(default_factory=list)

    def get(self, key: str) -> Entry | None:
        for e in self.entries:
            if e.key == key:
                return e
        return None

    def get_all(self, key: str) -> list[Entry]:
        return [e for e in self.entries if e.key == key]

    def expect(self, key: str) -> Entry:
        e = self.get(key)
        if e is None:
            raise ParseError(f"section [{self.name}] is missing required key {key!r}", self.line)
        return e

    def float_or(self, key: str, default: float) -> float:
        e = self.get(key)
        return default if e is None else e.as_float()

    def int_or(self, key: str, default: int) -> int:
        e = self.get(key)
        return default if e is None else e.as_int()


def parse_sections(text: str) -> list[Section]:
    sections: list[Section] = []
    current: Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        line = stripped.strip()
        col = raw.index(line[0]) + 1 if line else 1
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ParseError(f"malformed section header {line!r}", lineno, col)
            current = Section(name=line[1:-1].strip(), line=lineno)
            sections.append(current)
            continue
        if current is None:
            raise ParseError(f"entry {line!r} before any [section]", lineno, col)
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key:
                raise ParseError("empty key before '='", lineno, col)
            current.entries.append(Entry(key=key, value=value, line=lineno, col=col))
        else:
            if len(line.split()) != 1:
                raise ParseError(f"expected 'key = value' or a single token, got {line!r}", lineno, col)
            current.entries.append(Entry(key=line, value=None, line=lineno, col=col))
    return sections


def section_map(sections: list[Section]) -> dict[str, Section]:
    """First section per name; callers needing duplicates iterate the list."""
    out: dict[str, Section] = {}
    for s in sections:
        out.setdefault(s.name, s)
    return out
