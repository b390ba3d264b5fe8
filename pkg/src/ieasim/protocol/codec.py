"""Binary wire codec: length-prefixed, version-tagged, little-endian.

Layout: 2-byte magic ``IE``, 1-byte protocol version, 1-byte variant tag,
4-byte little-endian payload length, payload. Strings are u16-length-prefixed
UTF-8; floats are IEEE-754 doubles; lanes are i16; enums are u8. Field order
per variant follows the dataclass field order in messages.py. decode() is
total over arbitrary bytes: it returns a message or raises DecodeError /
VersionError, never anything else.
"""

from __future__ import annotations

import json
import struct
from dataclasses import fields, is_dataclass

from .messages import (
    PROTOCOL_VERSION,
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

MAGIC = b"IE"
HEADER = struct.Struct("<2sBBI")

_TAGS: dict[type, int] = {
    RegisterRequest: 1,
    RegisterAccept: 2,
    RegisterReject: 3,
    HandoffInitiate: 4,
    HandoffComplete: 5,
    Deregister: 6,
    NeighborTrackShare: 7,
    IncidentUpload: 8,
    SaFrame: 9,
    SeaReport: 10,
}
_TYPES = {tag: cls for cls, tag in _TAGS.items()}


class CodecError(ValueError):
    pass


class DecodeError(CodecError):
    """Truncated or garbled wire input; offset points at the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class VersionError(CodecError):
    def __init__(self, got: int):
        super().__init__(f"unsupported protocol version {got}, expected {PROTOCOL_VERSION}")
        self.got = got


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v: int):
        self.parts.append(struct.pack("<B", v))

    def u16(self, v: int):
        self.parts.append(struct.pack("<H", v))

    def u64(self, v: int):
        self.parts.append(struct.pack("<Q", v))

    def i16(self, v: int):
        self.parts.append(struct.pack("<h", v))

    def f64(self, v: float):
        self.parts.append(struct.pack("<d", v))

    def string(self, v: str):
        raw = v.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise CodecError("string field exceeds 65535 encoded bytes")
        self.u16(len(raw))
        self.parts.append(raw)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, buf: bytes, offset: int = 0):
        self.buf = buf
        self.offset = offset

    def _take(self, n: int) -> bytes:
        if self.offset + n > len(self.buf):
            raise DecodeError(f"need {n} more byte(s), have {len(self.buf) - self.offset}", self.offset)
        chunk = self.buf[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def i16(self) -> int:
        return struct.unpack("<h", self._take(2))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def string(self) -> str:
        n = self.u16()
        start = self.offset
        raw = self._take(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise DecodeError("invalid UTF-8 in string field", start) from None

    def enum(self, enum_cls):
        start = self.offset
        v = self.u8()
        try:
            return enum_cls(v)
        except ValueError:
            raise DecodeError(f"invalid {enum_cls.__name__} value {v}", start) from None

    def done(self):
        if self.offset != len(self.buf):
            raise DecodeError(f"{len(self.buf) - self.offset} trailing byte(s) after payload", self.offset)


def _write_track(w: _Writer, t: TrackSnapshot):
    w.string(t.track_id)
    w.u8(int(t.object_class))
    w.f64(t.position)
    w.i16(t.lane)
    w.f64(t.velocity)
    w.f64(t.position_var)


def _read_track(r: _Reader) -> TrackSnapshot:
    return TrackSnapshot(
        track_id=r.string(),
        object_class=r.enum(ObjectClass),
        position=r.f64(),
        lane=r.i16(),
        velocity=r.f64(),
        position_var=r.f64(),
    )


def _write_incident(w: _Writer, inc: Incident):
    w.u8(int(inc.kind))
    w.f64(inc.position)
    w.f64(inc.onset)
    w.f64(inc.confidence)


def _read_incident(r: _Reader) -> Incident:
    return Incident(kind=r.enum(IncidentKind), position=r.f64(), onset=r.f64(), confidence=r.f64())


def _write_payload(w: _Writer, msg: Message):
    if isinstance(msg, RegisterRequest):
        w.string(msg.sc_id)
        w.f64(msg.position)
    elif isinstance(msg, RegisterAccept):
        w.string(msg.mssp_id)
        w.u16(msg.slot)
        w.f64(msg.cell_start)
        w.f64(msg.cell_end)
    elif isinstance(msg, RegisterReject):
        w.string(msg.mssp_id)
        w.string(msg.reason)
    elif isinstance(msg, HandoffInitiate):
        w.string(msg.target_mssp_id)
    elif isinstance(msg, (HandoffComplete, Deregister)):
        w.string(msg.sc_id)
    elif isinstance(msg, NeighborTrackShare):
        w.string(msg.mssp_id)
        w.u16(len(msg.tracks))
        for t in msg.tracks:
            _write_track(w, t)
    elif isinstance(msg, IncidentUpload):
        w.string(msg.mssp_id)
        _write_incident(w, msg.incident)
    elif isinstance(msg, SaFrame):
        w.u64(msg.frame_seq)
        w.string(msg.mssp_id)
        w.f64(msg.timestamp)
        w.u16(len(msg.tracks))
        for t in msg.tracks:
            _write_track(w, t)
        w.u16(len(msg.incidents))
        for inc in msg.incidents:
            _write_incident(w, inc)
    elif isinstance(msg, SeaReport):
        w.string(msg.sc_id)
        w.f64(msg.timestamp)
        w.f64(msg.position)
        w.i16(msg.lane)
        w.f64(msg.speed)
        w.u8(int(msg.dbw_status))
    else:
        raise CodecError(f"cannot encode {type(msg).__name__}")


def _read_payload(r: _Reader, cls) -> Message:
    if cls is RegisterRequest:
        return RegisterRequest(sc_id=r.string(), position=r.f64())
    if cls is RegisterAccept:
        return RegisterAccept(mssp_id=r.string(), slot=r.u16(), cell_start=r.f64(), cell_end=r.f64())
    if cls is RegisterReject:
        return RegisterReject(mssp_id=r.string(), reason=r.string())
    if cls is HandoffInitiate:
        return HandoffInitiate(target_mssp_id=r.string())
    if cls is HandoffComplete:
        return HandoffComplete(sc_id=r.string())
    if cls is Deregister:
        return Deregister(sc_id=r.string())
    if cls is NeighborTrackShare:
        mssp_id = r.string()
        tracks = tuple(_read_track(r) for _ in range(r.u16()))
        return NeighborTrackShare(mssp_id=mssp_id, tracks=tracks)
    if cls is IncidentUpload:
        return IncidentUpload(mssp_id=r.string(), incident=_read_incident(r))
    if cls is SaFrame:
        frame_seq = r.u64()
        mssp_id = r.string()
        timestamp = r.f64()
        tracks = tuple(_read_track(r) for _ in range(r.u16()))
        incidents = tuple(_read_incident(r) for _ in range(r.u16()))
        return SaFrame(frame_seq, mssp_id, timestamp, tracks, incidents)
    if cls is SeaReport:
        return SeaReport(
            sc_id=r.string(),
            timestamp=r.f64(),
            position=r.f64(),
            lane=r.i16(),
            speed=r.f64(),
            dbw_status=r.enum(DbwStatus),
        )
    raise DecodeError(f"unhandled message class {cls.__name__}", r.offset)


def encode(msg: Message) -> bytes:
    """Serialize a valid message; round-trips exactly through decode()."""
    tag = _TAGS.get(type(msg))
    if tag is None:
        raise CodecError(f"cannot encode {type(msg).__name__}")
    w = _Writer()
    _write_payload(w, msg)
    payload = w.getvalue()
    return HEADER.pack(MAGIC, PROTOCOL_VERSION, tag, len(payload)) + payload


def decode(buf: bytes) -> Message:
    """Parse one message; raises DecodeError/VersionError on any bad input."""
    try:
        if len(buf) < HEADER.size:
            raise DecodeError(f"header needs {HEADER.size} bytes, got {len(buf)}", 0)
        magic, version, tag, length = HEADER.unpack_from(buf, 0)
        if magic != MAGIC:
            raise DecodeError(f"bad magic {magic!r}", 0)
        if version != PROTOCOL_VERSION:
            raise VersionError(version)
        if len(buf) - HEADER.size != length:
            raise DecodeError(
                f"payload length {length} but {len(buf) - HEADER.size} byte(s) present", 4
            )
        cls = _TYPES.get(tag)
        if cls is None:
            raise DecodeError(f"unknown variant tag {tag}", 3)
        r = _Reader(buf, HEADER.size)
        msg = _read_payload(r, cls)
        r.done()
        return msg
    except (DecodeError, VersionError):
        raise
    except Exception as exc:  # totality: wrap anything unexpected
        raise DecodeError(f"malformed message: {exc}", 0) from exc


def to_debug_json(msg: Message) -> dict:
    """Loss-tolerant JSON rendering for trace files and logs."""

    def convert(value):
        if is_dataclass(value):
            out = {"type": type(value).__name__}
            for f in fields(value):
                out[f.name] = convert(getattr(value, f.name))
            return out
        if isinstance(value, (DbwStatus, ObjectClass, IncidentKind)):
            return value.name.lower()
        if isinstance(value, tuple):
            return [convert(v) for v in value]
        return value

    return convert(msg)


def debug_json_str(msg: Message) -> str:
    return json.dumps(to_debug_json(msg), separators=(",", ":"))
