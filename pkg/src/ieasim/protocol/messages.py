"""Wire-level message types exchanged between SmartConnects and MSSPs.

Level 1 carries registration control traffic plus the periodic situational
awareness (SA) frames MSSP-to-SC and self-awareness (SeA) reports SC-to-MSSP.
Level 2 is the MSSP-to-MSSP track share; Level 3 is the incident upload to
the corridor operator's cloud. All payload fields are plain data so every
message is hashable, comparable and codec-friendly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

PROTOCOL_VERSION = 1


class DbwStatus(enum.IntEnum):
    OK = 0
    DEGRADED = 1
    FAILED = 2


class ObjectClass(enum.IntEnum):
    VEHICLE = 0
    PEDESTRIAN = 1
    BICYCLE = 2
    UNKNOWN = 3


class IncidentKind(enum.IntEnum):
    STALLED_VEHICLE = 0
    OBSTRUCTION = 1


@dataclass(frozen=True)
class TrackSnapshot:
    """One dynamic-object estimate as shipped inside an SA frame."""

    track_id: str
    object_class: ObjectClass
    position: float  # m along corridor
    lane: int
    velocity: float  # m/s
    position_var: float  # m^2


@dataclass(frozen=True)
class Incident:
    kind: IncidentKind
    position: float
    onset: float
    confidence: float


@dataclass(frozen=True)
class SaFrame:
    """Situational awareness broadcast from one MSSP to a registered SC."""

    frame_seq: int
    mssp_id: str
    timestamp: float
    tracks: tuple[TrackSnapshot, ...] = ()
    incidents: tuple[Incident, ...] = ()


@dataclass(frozen=True)
class SeaReport:
    """Self-awareness report from an SC to its serving MSSP."""

    sc_id: str
    timestamp: float
    position: float
    lane: int
    speed: float
    dbw_status: DbwStatus = DbwStatus.OK


@dataclass(frozen=True)
class RegisterRequest:
    sc_id: str
    position: float


@dataclass(frozen=True)
class RegisterAccept:
    mssp_id: str
    slot: int
    cell_start: float
    cell_end: float


@dataclass(frozen=True)
class RegisterReject:
    mssp_id: str
    reason: str


@dataclass(frozen=True)
class HandoffInitiate:
    """Advisory from a serving MSSP telling an SC which cell comes next."""

    target_mssp_id: str


@dataclass(frozen=True)
class HandoffComplete:
    sc_id: str


@dataclass(frozen=True)
class Deregister:
    sc_id: str


@dataclass(frozen=True)
class NeighborTrackShare:
    """Level-2 share of live tracks with an adjacent MSSP."""

    mssp_id: str
    tracks: tuple[TrackSnapshot, ...] = ()


@dataclass(frozen=True)
class IncidentUpload:
    """Level-3 incident report to the corridor operator's cloud."""

    mssp_id: str
    incident: Incident


ControlMessage = Union[
    RegisterRequest,
    RegisterAccept,
    RegisterReject,
    HandoffInitiate,
    HandoffComplete,
    Deregister,
    NeighborTrackShare,
    IncidentUpload,
]

Message = Union[ControlMessage, SaFrame, SeaReport]
