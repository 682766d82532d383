import json
import math
import random
import struct
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pncatoms import mac
from pncatoms.atoms import catalog

GOLDEN = json.loads((Path(__file__).parent / "golden" / "frames.json").read_text())
PERIPHERALS = {i + 1: a.peripheral_count for i, a in enumerate(catalog())}


def crc32_bitwise(data: bytes) -> int:
    """Reflected CRC-32, polynomial 0xEDB88320, one bit at a time."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ (0xEDB88320 if crc & 1 else 0)
    return crc ^ 0xFFFFFFFF


def test_crc_matches_independent_implementation():
    rng = random.Random(0)
    for w in (1, 2, 9, 100):
        dids = [rng.randrange(1 << 16) for _ in range(w)]
        frame = mac.encode_demand(mac.MultiPollDemand(dids))
        assert struct.unpack(">I", frame[-4:])[0] == crc32_bitwise(frame[:-4])
    assert crc32_bitwise(b"123456789") == 0xCBF43926


@pytest.mark.parametrize("kind", ["request", "demand", "assignment"])
def test_golden_vectors(kind):
    case = GOLDEN[kind]
    frame = mac.from_dict(kind, case["frame"])
    assert mac.encode(frame).hex() == case["hex"]
    raw = bytes.fromhex(case["hex"])
    if kind == "request":
        back = mac.decode_request(raw, case["frame"]["n_r"])
    elif kind == "demand":
        back = mac.decode_demand(raw)
    else:
        back = mac.decode_assignment(raw, case["n_r"], case["w"])
    assert back == frame
    assert mac.to_dict(back) == case["frame"]


def test_lengths_closed_form():
    for n in range(1, 65):
        assert len(mac.encode_request(mac.MultiPollRequest(n))) == 13 + math.ceil(n / 8)
        for w in range(1, 9):
            blocks = [mac.PollingControl(k, [None] * w) for k in range(n)]
            assert len(mac.encode_assignment(mac.MultiPollAssignment(blocks))) == 12 + (2 + 2 * w) * n
    for w in range(1, 9):
        assert len(mac.encode_demand(mac.MultiPollDemand([0] * w))) == 12 + 2 * w


def test_overhead_examples():
    assert mac.request_length(30) == 17
    assert mac.demand_length(1) == 14
    assert mac.overhead(6, 1) == 14 + 84 + 36 == 134
    assert 22 <= mac.per_packet_overhead(6, 1) <= 23
    assert mac.overhead(8, 1) == 14 + 112 + 44 == 170
    assert mac.per_packet_overhead(1000, 1000) == pytest.approx(4 + 14 / 1000, abs=0.01)
    with pytest.raises(ValueError):
        mac.overhead(0, 1)


def _random_assignment(rng, n_r, w):
    blocks = []
    for sid in range(n_r):
        entries = []
        for _ in range(w):
            if rng.random() < 0.25:
                entries.append(None)
            else:
                cls = rng.randint(1, 9)
                entries.append(mac.AtomRole(rng.randint(0, 255), cls, rng.randrange(PERIPHERALS[cls])))
        blocks.append(mac.PollingControl(rng.randrange(1 << 16), entries))
    return mac.MultiPollAssignment(blocks, rng.randrange(1 << 16), bytes(rng.randrange(256) for _ in range(6)))


def test_assignment_round_trip_small():
    rng = random.Random(1)
    a = _random_assignment(rng, 6, 4)
    assert mac.decode_assignment(mac.encode_assignment(a), 6) == a
    assert mac.decode_assignment(mac.encode_assignment(a), w=4) == a


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 40), st.data())
def test_request_round_trip(n_r, data):
    scheduled = data.draw(st.frozensets(st.integers(0, n_r - 1)))
    w = data.draw(st.integers(1, 255))
    req = mac.MultiPollRequest(n_r, scheduled, w, data.draw(st.integers(0, 0xFFFF)),
                               data.draw(st.binary(min_size=6, max_size=6)))
    assert mac.decode_request(mac.encode_request(req), n_r) == req


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 0xFFFF), min_size=1, max_size=16))
def test_demand_round_trip(dids):
    dem = mac.MultiPollDemand(dids)
    assert mac.decode_demand(mac.encode_demand(dem), len(dids)) == dem


def test_corruption_is_detected():
    rng = random.Random(2)
    frame = mac.encode_assignment(_random_assignment(rng, 6, 4))
    for _ in range(1000):
        buf = bytearray(frame)
        i = rng.randrange(len(buf))
        buf[i] ^= rng.randint(1, 255)
        with pytest.raises(mac.FCSError):
            mac.decode_assignment(bytes(buf), 6)


def test_distinct_error_kinds():
    good = mac.encode_demand(mac.MultiPollDemand([1, 2]))
    with pytest.raises(mac.LengthError):
        mac.decode_demand(good, 3)
    with pytest.raises(mac.LengthError):
        mac.decode_demand(good[:10])
    with pytest.raises(mac.FCSError):
        mac.decode_demand(good[:-1] + bytes([good[-1] ^ 1]))
    with pytest.raises(mac.StartTimeError):
        mac.encode_assignment(mac.MultiPollAssignment([mac.PollingControl(1, [mac.AtomRole(256, 1, 0)])]))
    for cls, role in ((0, 0), (10, 0), (1, 2), (6, 4)):
        with pytest.raises(mac.RoleError):
            mac.encode_assignment(mac.MultiPollAssignment(
                [mac.PollingControl(1, [mac.AtomRole(0, cls, role)])]))


def test_decoder_rejects_bad_role_nibble():
    body = struct.pack(">H6sH", 0, bytes(6), 1) + bytes([3, 0xA0])
    frame = body + struct.pack(">I", crc32_bitwise(body))
    with pytest.raises(mac.RoleError):
        mac.decode_assignment(frame, 1)
    body = struct.pack(">H6sH", 0, bytes(6), 1) + bytes([3, 0x00])
    with pytest.raises(mac.RoleError):
        mac.decode_assignment(body + struct.pack(">I", crc32_bitwise(body)), 1)


def test_request_rejects_bits_beyond_n_r():
    frame = mac.encode_request(mac.MultiPollRequest(8, {7}))
    with pytest.raises(mac.FrameError):
        mac.decode_request(frame, 7)
    with pytest.raises(mac.FrameError):
        mac.encode_request(mac.MultiPollRequest(4, {4}))


def test_assignment_decode_needs_a_dimension():
    frame = mac.encode_assignment(mac.MultiPollAssignment([mac.PollingControl(1, [None])]))
    with pytest.raises(ValueError):
        mac.decode_assignment(frame)
