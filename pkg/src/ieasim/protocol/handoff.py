"""Cell map and handoff planning.

Cells are coverage intervals along the corridor, sorted and overlapping so
a moving SC can register with the next cell before leaving the current one.
"""

from __future__ import annotations

from dataclasses import dataclass


class OutOfCorridorError(ValueError):
    """Position not covered by any cell."""


@dataclass(frozen=True)
class Cell:
    mssp_id: str
    start: float
    end: float

    def covers(self, position: float) -> bool:
        return self.start <= position <= self.end


def validate_cell_map(cells: list[Cell], min_overlap: float = 0.0) -> None:
    if not cells:
        raise ValueError("cell map is empty")
    for prev, nxt in zip(cells, cells[1:]):
        if nxt.start < prev.start:
            raise ValueError(f"cells not sorted: {nxt.mssp_id} starts before {prev.mssp_id}")
        overlap = prev.end - nxt.start
        if overlap < min_overlap:
            raise ValueError(
                f"cells {prev.mssp_id}/{nxt.mssp_id} overlap {overlap:.1f} m, "
                f"need at least {min_overlap:.1f} m"
            )


def covering_cell(cells: list[Cell], position: float) -> Cell:
    """The covering cell whose coverage extends furthest ahead."""
    best: Cell | None = None
    for cell in cells:
        if cell.covers(position) and (best is None or cell.end > best.end):
            best = cell
    if best is None:
        raise OutOfCorridorError(f"position {position:.1f} m outside all cells")
    return best


def plan_handoff(
    cells: list[Cell],
    position: float,
    velocity: float,
    lead_time: float,
    current_mssp: str | None = None,
) -> str | None:
    """Next cell's MSSP if the projected position leaves current coverage.

    ``current_mssp`` names the serving cell; when omitted, the first
    covering cell in corridor order counts as current. Returns None while
    the projection stays inside current coverage, and also at the
    corridor's last cell (exit handling is the caller's job).
    """
    if current_mssp is None:
        covering = [c for c in cells if c.covers(position)]
        if not covering:
            raise OutOfCorridorError(f"position {position:.1f} m outside all cells")
        current = min(covering, key=lambda c: c.start)
    else:
        matches = [c for c in cells if c.mssp_id == current_mssp]
        if not matches:
            raise OutOfCorridorError(f"unknown serving cell {current_mssp!r}")
        current = matches[0]
        if not current.covers(position):
            # already outside the serving cell: treat as needing a handoff now
            pass
    projected = position + velocity * lead_time
    if current.covers(projected) and current.covers(position):
        return None
    best: Cell | None = None
    for cell in cells:
        if cell.mssp_id == current.mssp_id:
            continue
        if cell.covers(projected) and (best is None or cell.end > best.end):
            best = cell
    if best is None and not any(c.covers(position) for c in cells):
        raise OutOfCorridorError(f"position {position:.1f} m outside all cells")
    return best.mssp_id if best else None
