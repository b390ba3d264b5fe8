"""Level-1/2/3 messages, wire codec and session state machines."""

from .messages import (
    PROTOCOL_VERSION,
    ControlMessage,
    DbwStatus,
    Deregister,
    HandoffComplete,
    HandoffInitiate,
    Incident,
    IncidentKind,
    IncidentUpload,
    Message,
    NeighborTrackShare,
    ObjectClass,
    RegisterAccept,
    RegisterReject,
    RegisterRequest,
    SaFrame,
    SeaReport,
    TrackSnapshot,
)
from .codec import CodecError, DecodeError, VersionError, decode, encode, to_debug_json
from .sc_fsm import (
    Accepted,
    Disengaged,
    Emit,
    EnterCell,
    ExitCorridor,
    HandingOff,
    HandoffNeeded,
    ProtocolParams,
    Registered,
    Registering,
    Rejected,
    SaReceived,
    ScEvent,
    ScSessionState,
    Timeout,
    Unregistered,
    backoff_delay,
    sa_usable,
    sc_step,
)
from .registry import (
    REASON_CAPACITY,
    REASON_NOT_REGISTERED,
    MsspRegistry,
    SessionInfo,
    expire_sessions,
    mssp_handle,
)
from .handoff import Cell, OutOfCorridorError, covering_cell, plan_handoff, validate_cell_map
