"""Risk-model input files.

Sections:

    [components]        one "label = probability" per component, in order
    [outcomes]          bare outcome labels, ascending severity
    [likelihood]        either the bare word "exactly_k_faults", or explicit
                        rows "f = 110 s3:1.0 s4:0.0" (unlisted outcomes are 0)
    [blame]             bare word "proportional", or "custom" followed by
                        rows "f = 110 s3 0.5 0.5 0.0" (one value per component)
"""

from __future__ import annotations

from pathlib import Path

from ..configfmt import Entry, ParseError, parse_sections, section_map
from .model import (
    BlameFunction,
    CustomBlame,
    FaultConfig,
    FaultModel,
    OutcomeLikelihood,
    OutcomeSpace,
    ProportionalShare,
    enumerate_fault_configs,
)


def _parse_bits(token: str, n: int, entry: Entry) -> FaultConfig:
    if len(token) != n or any(ch not in "01" for ch in token):
        raise ParseError(
            f"fault config {token!r} must be {n} binary digits", entry.line, entry.col
        )
    return tuple(int(ch) for ch in token)


def _parse_likelihood(section, n: int, outcomes: OutcomeSpace) -> OutcomeLikelihood:
    entries = section.entries
    if not entries:
        raise ParseError("empty [likelihood] section", section.line)
    if len(entries) == 1 and entries[0].value is None:
        if entries[0].key != "exactly_k_faults":
            raise ParseError(
                f"unknown likelihood shorthand {entries[0].key!r}", entries[0].line, entries[0].col
            )
        return OutcomeLikelihood.exactly_k_faults(n, outcomes)

    rows: dict[FaultConfig, dict[str, float]] = {}
    for entry in entries:
        if entry.key != "f" or entry.value is None:
            raise ParseError(
                "likelihood rows look like 'f = BITS outcome:prob ...'", entry.line, entry.col
            )
        tokens = entry.value.split()
        if len(tokens) < 2:
            raise ParseError("likelihood row needs bits and at least one outcome:prob", entry.line, entry.col)
        f = _parse_bits(tokens[0], n, entry)
        if f in rows:
            raise ParseError(f"duplicate likelihood row for {tokens[0]}", entry.line, entry.col)
        row: dict[str, float] = {}
        for tok in tokens[1:]:
            label, sep, prob = tok.partition(":")
            if not sep:
                raise ParseError(f"expected outcome:prob, got {tok!r}", entry.line, entry.col)
            if label not in outcomes:
                raise ParseError(f"unknown outcome {label!r}", entry.line, entry.col)
            if label in row:
                raise ParseError(f"duplicate outcome {label!r} in row", entry.line, entry.col)
            try:
                row[label] = float(prob)
            except ValueError:
                raise ParseError(f"bad probability {prob!r}", entry.line, entry.col) from None
        rows[f] = row
    missing = [f for f in enumerate_fault_configs(n) if f not in rows]
    if missing:
        bits = "".join(str(b) for b in missing[0])
        raise ParseError(
            f"likelihood table missing {len(missing)} fault config(s), first is {bits}",
            section.line,
        )
    return OutcomeLikelihood.from_rows(outcomes, rows, n)


def _parse_blame(section, n: int, outcomes: OutcomeSpace) -> BlameFunction:
    entries = section.entries
    if not entries:
        raise ParseError("empty [blame] section", section.line)
    head = entries[0]
    if head.value is None and head.key == "proportional":
        if len(entries) > 1:
            extra = entries[1]
            raise ParseError("proportional blame takes no rows", extra.line, extra.col)
        return ProportionalShare()
    if head.value is None and head.key == "custom":
        table: dict[tuple[FaultConfig, str], tuple[float, ...]] = {}
        for entry in entries[1:]:
            if entry.key != "f" or entry.value is None:
                raise ParseError(
                    "custom blame rows look like 'f = BITS outcome v1 .. vn'", entry.line, entry.col
                )
            tokens = entry.value.split()
            if len(tokens) != 2 + n:
                raise ParseError(
                    f"custom blame row needs bits, outcome and {n} values", entry.line, entry.col
                )
            f = _parse_bits(tokens[0], n, entry)
            label = tokens[1]
            if label not in outcomes:
                raise ParseError(f"unknown outcome {label!r}", entry.line, entry.col)
            try:
                values = tuple(float(t) for t in tokens[2:])
            except ValueError:
                raise ParseError("bad blame value in row", entry.line, entry.col) from None
            table[(f, label)] = values
        if not table:
            raise ParseError("custom blame requires at least one row", head.line, head.col)
        return CustomBlame(table)
    raise ParseError(f"blame kind must be 'proportional' or 'custom', got {head.key!r}", head.line, head.col)


def parse_model_text(text: str) -> tuple[FaultModel, OutcomeLikelihood, BlameFunction]:
    sections = section_map(parse_sections(text))
    for required in ("components", "outcomes", "likelihood", "blame"):
        if required not in sections:
            raise ParseError(f"missing required section [{required}]", 1)

    comp = sections["components"]
    labels: list[str] = []
    probs: list[float] = []
    for entry in comp.entries:
        if entry.value is None:
            raise ParseError("components need 'label = probability'", entry.line, entry.col)
        value = entry.as_float()
        if not 0.0 <= value <= 1.0:
            raise ParseError(f"fault probability {value} not in [0, 1]", entry.line, entry.col)
        labels.append(entry.key)
        probs.append(value)
    if not labels:
        raise ParseError("no components defined", comp.line)
    model = FaultModel(components=tuple(labels), p=tuple(probs))

    out = sections["outcomes"]
    out_labels: list[str] = []
    for entry in out.entries:
        if entry.value is not None:
            raise ParseError("outcomes are bare labels, one per line", entry.line, entry.col)
        out_labels.append(entry.key)
    outcomes = OutcomeSpace(labels=tuple(out_labels))

    lik = _parse_likelihood(sections["likelihood"], model.n, outcomes)
    blame = _parse_blame(sections["blame"], model.n, outcomes)
    return model, lik, blame


def load_model_file(path: str | Path) -> tuple[FaultModel, OutcomeLikelihood, BlameFunction]:
    return parse_model_text(Path(path).read_text(encoding="utf-8"))
