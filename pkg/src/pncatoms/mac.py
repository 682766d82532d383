"""Multi-poll coordination frames: request, demand and assignment.

Layouts (all integers big-endian, FCS = CRC-32 over every preceding byte)::

    request     fc:2 bssid:6 bitmap:ceil(N/8) window:1 fcs:4
    demand      fc:2 bssid:6 did:2 * W fcs:4
    assignment  fc:2 bssid:6 (sid:2 (start:1 role:1) * W) * N fcs:4

Bit ``k`` of the polling bitmap is bit ``k % 8`` (LSB first) of byte
``k // 8``. A role byte carries the atom class (1-9) in its high nibble and
the node's position within the class in its low nibble; ``0x00`` means no
assignment.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field

from .atoms import get_atom

HEADER = struct.Struct(">H6s")
FCS = struct.Struct(">I")
MAX_START = 0xFF


class FrameError(ValueError):
    """Base class for malformed frames."""


class LengthError(FrameError):
    pass


class FCSError(FrameError):
    pass


class RoleError(FrameError):
    pass


class StartTimeError(FrameError):
    pass


def _bssid(value) -> bytes:
    b = bytes(value)
    if len(b) != 6:
        raise FrameError("bssid must be 6 bytes")
    return b


@dataclass(frozen=True)
class MultiPollRequest:
    n_r: int
    scheduled: frozenset = frozenset()
    window: int = 1
    frame_control: int = 0
    bssid: bytes = bytes(6)

    def __post_init__(self):
        object.__setattr__(self, "scheduled", frozenset(self.scheduled))
        object.__setattr__(self, "bssid", _bssid(self.bssid))


@dataclass(frozen=True)
class MultiPollDemand:
    dids: tuple[int, ...]
    frame_control: int = 0
    bssid: bytes = bytes(6)

    def __post_init__(self):
        object.__setattr__(self, "dids", tuple(self.dids))
        object.__setattr__(self, "bssid", _bssid(self.bssid))

    @property
    def window(self) -> int:
        return len(self.dids)


@dataclass(frozen=True)
class AtomRole:
    start_time: int
    atom_class: int
    role: int

    def to_byte(self) -> int:
        return self.atom_class << 4 | self.role


@dataclass(frozen=True)
class PollingControl:
    sid: int
    entries: tuple[AtomRole | None, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))


@dataclass(frozen=True)
class MultiPollAssignment:
    blocks: tuple[PollingControl, ...]
    frame_control: int = 0
    bssid: bytes = bytes(6)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "bssid", _bssid(self.bssid))

    @property
    def n_r(self) -> int:
        return len(self.blocks)

    @property
    def window(self) -> int:
        return len(self.blocks[0].entries) if self.blocks else 0


# --- lengths and overhead ---------------------------------------------------

def request_length(n_r: int) -> int:
    return 13 + math.ceil(n_r / 8)


def demand_length(w: int) -> int:
    return 12 + 2 * w


def assignment_length(n_r: int, w: int) -> int:
    return 12 + (2 + 2 * w) * n_r


def overhead(n_r: int, w: int) -> int:
    """Bytes of one coordination round: a request, a demand per node and
    one assignment."""
    if n_r < 1 or w < 1:
        raise ValueError("n_r and w must be positive")
    return request_length(n_r) + demand_length(w) * n_r + assignment_length(n_r, w)


def per_packet_overhead(n_r: int, w: int) -> float:
    return overhead(n_r, w) / (n_r * w)


# --- framing ----------------------------------------------------------------

def _seal(body: bytes) -> bytes:
    return body + FCS.pack(zlib.crc32(body))


def _open(frame: bytes, expected: int | None = None) -> bytes:
    frame = bytes(frame)
    if expected is not None and len(frame) != expected:
        raise LengthError(f"expected {expected} bytes, got {len(frame)}")
    if len(frame) < HEADER.size + FCS.size:
        raise LengthError(f"frame of {len(frame)} bytes is shorter than header and FCS")
    body, (fcs,) = frame[:-4], FCS.unpack(frame[-4:])
    if zlib.crc32(body) != fcs:
        raise FCSError("frame check sequence mismatch")
    return body


def _u16(value: int, what: str) -> int:
    if not 0 <= value <= 0xFFFF:
        raise FrameError(f"{what} {value} does not fit in 2 bytes")
    return value


def encode_request(req: MultiPollRequest) -> bytes:
    if req.n_r < 1:
        raise FrameError("n_r must be positive")
    if not 1 <= req.window <= 0xFF:
        raise FrameError("window size must be in 1..255")
    bitmap = bytearray(math.ceil(req.n_r / 8))
    for k in req.scheduled:
        if not 0 <= k < req.n_r:
            raise FrameError(f"scheduled node {k} outside 0..{req.n_r - 1}")
        bitmap[k // 8] |= 1 << (k % 8)
    body = HEADER.pack(_u16(req.frame_control, "frame control"), req.bssid)
    return _seal(body + bytes(bitmap) + bytes([req.window]))


def decode_request(frame: bytes, n_r: int | None = None) -> MultiPollRequest:
    body = _open(frame, None if n_r is None else request_length(n_r))
    n_bytes = len(body) - HEADER.size - 1
    if n_bytes < 1:
        raise LengthError("request frame carries no polling bitmap")
    if n_r is None:
        n_r = 8 * n_bytes
    fc, bssid = HEADER.unpack_from(body)
    bitmap = body[HEADER.size:-1]
    scheduled = {k for k in range(8 * n_bytes) if bitmap[k // 8] >> (k % 8) & 1}
    if any(k >= n_r for k in scheduled):
        raise FrameError("bitmap sets bits beyond n_r")
    window = body[-1]
    if window < 1:
        raise FrameError("window size must be at least 1")
    return MultiPollRequest(n_r, frozenset(scheduled), window, fc, bssid)


def encode_demand(dem: MultiPollDemand) -> bytes:
    if dem.window < 1:
        raise FrameError("demand frame needs at least one destination slot")
    body = HEADER.pack(_u16(dem.frame_control, "frame control"), dem.bssid)
    body += b"".join(struct.pack(">H", _u16(d, "destination id")) for d in dem.dids)
    return _seal(body)


def decode_demand(frame: bytes, w: int | None = None) -> MultiPollDemand:
    body = _open(frame, None if w is None else demand_length(w))
    payload = body[HEADER.size:]
    if not payload or len(payload) % 2:
        raise LengthError(f"demand payload of {len(payload)} bytes is not 2*W")
    fc, bssid = HEADER.unpack_from(body)
    dids = struct.unpack(f">{len(payload) // 2}H", payload)
    return MultiPollDemand(dids, fc, bssid)


def _role_byte(entry: AtomRole | None) -> tuple[int, int]:
    if entry is None:
        return 0, 0
    if not 0 <= entry.start_time <= MAX_START:
        raise StartTimeError(f"start time {entry.start_time} does not fit in one byte")
    _check_role(entry.atom_class, entry.role)
    return entry.start_time, entry.to_byte()


def _check_role(atom_class: int, role: int) -> None:
    if not 1 <= atom_class <= 9:
        raise RoleError(f"atom class nibble {atom_class} outside 1..9")
    if not 0 <= role < get_atom(atom_class).peripheral_count:
        raise RoleError(f"role {role} does not exist in atom class {atom_class}")


def encode_assignment(asg: MultiPollAssignment) -> bytes:
    if not asg.blocks:
        raise FrameError("assignment frame needs at least one polling control block")
    w = asg.window
    if w < 1 or any(len(b.entries) != w for b in asg.blocks):
        raise FrameError("every polling control block must carry W >= 1 entries")
    out = bytearray(HEADER.pack(_u16(asg.frame_control, "frame control"), asg.bssid))
    for block in asg.blocks:
        out += struct.pack(">H", _u16(block.sid, "sid"))
        for entry in block.entries:
            out += bytes(_role_byte(entry))
    return _seal(bytes(out))


def decode_assignment(frame: bytes, n_r: int | None = None, w: int | None = None) -> MultiPollAssignment:
    """Either ``n_r`` or ``w`` must be given; the other follows from the length."""
    if n_r is None and w is None:
        raise ValueError("decode_assignment needs n_r or w")
    frame = bytes(frame)
    payload_len = len(frame) - 12
    if n_r is None:
        n_r, rem = divmod(payload_len, 2 + 2 * w)
    else:
        per, rem = divmod(payload_len, n_r) if n_r > 0 else (0, 1)
        w, odd = divmod(per - 2, 2)
        rem = rem or odd or (per < 4)
    if rem or n_r < 1 or w < 1:
        raise LengthError(f"{len(frame)} bytes do not match 12 + (2 + 2W) * N_R")
    body = _open(frame, assignment_length(n_r, w))
    fc, bssid = HEADER.unpack_from(body)
    pos = HEADER.size
    blocks = []
    for _ in range(n_r):
        (sid,) = struct.unpack_from(">H", body, pos)
        pos += 2
        entries = []
        for _ in range(w):
            start, role = body[pos], body[pos + 1]
            pos += 2
            if role == 0:
                if start:
                    raise RoleError("start time given without an atom role")
                entries.append(None)
                continue
            _check_role(role >> 4, role & 0x0F)
            entries.append(AtomRole(start, role >> 4, role & 0x0F))
        blocks.append(PollingControl(sid, tuple(entries)))
    return MultiPollAssignment(tuple(blocks), fc, bssid)


# --- JSON views -------------------------------------------------------------

def to_dict(frame) -> dict:
    """JSON-ready view of a frame; bssid as hex."""
    if isinstance(frame, MultiPollRequest):
        return {"n_r": frame.n_r, "scheduled": sorted(frame.scheduled), "window": frame.window,
                "frame_control": frame.frame_control, "bssid": frame.bssid.hex()}
    if isinstance(frame, MultiPollDemand):
        return {"dids": list(frame.dids), "frame_control": frame.frame_control,
                "bssid": frame.bssid.hex()}
    return {
        "frame_control": frame.frame_control, "bssid": frame.bssid.hex(),
        "blocks": [{"sid": b.sid,
                    "entries": [None if e is None else
                                {"start_time": e.start_time, "class": e.atom_class, "role": e.role}
                                for e in b.entries]}
                   for b in frame.blocks],
    }


def from_dict(kind: str, d: dict):
    """Inverse of :func:`to_dict` for a frame of the given kind."""
    common = {"frame_control": d.get("frame_control", 0),
              "bssid": bytes.fromhex(d.get("bssid", "00" * 6))}
    if kind == "request":
        return MultiPollRequest(d["n_r"], frozenset(d.get("scheduled", ())),
                                d.get("window", 1), **common)
    if kind == "demand":
        return MultiPollDemand(d["dids"], **common)
    blocks = [PollingControl(b["sid"], [
        None if e is None else AtomRole(e["start_time"], e["class"], e["role"])
        for e in b["entries"]]) for b in d["blocks"]]
    return MultiPollAssignment(blocks, **common)


def encode(frame) -> bytes:
    if isinstance(frame, MultiPollRequest):
        return encode_request(frame)
    if isinstance(frame, MultiPollDemand):
        return encode_demand(frame)
    return encode_assignment(frame)
