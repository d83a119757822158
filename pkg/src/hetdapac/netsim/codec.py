"""Binary wire format.

A frame is ``u32 length | u8 tag | payload`` with ``length = len(payload) + 1``.
All integers are big-endian; field elements, attribute indices and
sub-packet indices are ``u16``; every vector carries a ``u32`` count.

Payloads:

* QUERY       ``u32 groups`` then per group: members (``u32`` count of keys,
  each key a ``u16`` vector), indices (``u16`` vector), coefficients
  (element vector)
* ANSWER      ``u32 count`` of element vectors
* VERIFY_REQ  ``u8 version | string user | u16 server | claims``
* VERIFY_OK   ``u16 server | outcome``
* VERIFY_FAIL ``u16 server | string reason``
* ATTR_RELAY  ``string user | claims``
* ERROR       ``string message``

where *claims* is ``u32 count`` of ``(u16 position, u16 value)`` pairs and a
*string* is a ``u32``-prefixed UTF-8 byte string. Transcripts are a
separate blob starting with ``b"HDTR"`` and a version byte.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Mapping

from ..errors import DecodeError, FrameError, VersionError
from ..model import Answer, Exchange, Query, QueryGroup, Transcript, VerificationOutcome

VERSION = 1
TRANSCRIPT_MAGIC = b"HDTR"

VERIFY_REQ = 0x01
VERIFY_OK = 0x02
VERIFY_FAIL = 0x03
ATTR_RELAY = 0x04
QUERY = 0x05
ANSWER = 0x06
ERROR = 0x07
TAG_NAMES = {VERIFY_REQ: "VERIFY_REQ", VERIFY_OK: "VERIFY_OK", VERIFY_FAIL: "VERIFY_FAIL",
             ATTR_RELAY: "ATTR_RELAY", QUERY: "QUERY", ANSWER: "ANSWER", ERROR: "ERROR"}

_U8 = struct.Struct(">B")
_U16 = struct.Struct(">H")
_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_HEADER = struct.Struct(">IB")


class Writer:
    def __init__(self):
        self.buf = bytearray()

    def u8(self, x: int):
        self.buf += _U8.pack(x)

    def u16(self, x: int):
        if not 0 <= x < 1 << 16:
            raise ValueError(f"{x} does not fit in 16 bits")
        self.buf += _U16.pack(x)

    def u32(self, x: int):
        self.buf += _U32.pack(x)

    def u64(self, x: int):
        self.buf += _U64.pack(x)

    def u16s(self, xs):
        self.u32(len(xs))
        for x in xs:
            self.u16(x)

    def elements(self, xs, q: int | None):
        if q is not None:
            for x in xs:
                if not 0 <= x < q:
                    raise ValueError(f"element {x} is not reduced modulo {q}")
        self.u16s(xs)

    def string(self, s: str):
        b = s.encode()
        self.u32(len(b))
        self.buf += b

    def claims(self, claims: Mapping[int, int]):
        self.u32(len(claims))
        for pos in sorted(claims):
            self.u16(pos)
            self.u16(claims[pos])

    def bytes(self) -> bytes:
        return bytes(self.buf)


class Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def _take(self, n: int) -> memoryview:
        if self.pos + n > len(self.data):
            raise FrameError(f"truncated payload: need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return _U16.unpack(self._take(2))[0]

    def u32(self) -> int:
        return _U32.unpack(self._take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self._take(8))[0]

    def u16s(self) -> tuple[int, ...]:
        n = self.u32()
        raw = self._take(2 * n)
        return struct.unpack(f">{n}H", raw)

    def string(self) -> str:
        n = self.u32()
        return bytes(self._take(n)).decode()

    def claims(self) -> dict[int, int]:
        n = self.u32()
        out = {}
        for _ in range(n):
            pos = self.u16()
            out[pos] = self.u16()
        return out

    def done(self):
        if self.pos != len(self.data):
            raise FrameError(f"{len(self.data) - self.pos} trailing bytes in payload")


def encode_frame(tag: int, payload: bytes) -> bytes:
    if tag not in TAG_NAMES:
        raise DecodeError(f"unknown frame tag {tag:#04x}")
    return _HEADER.pack(len(payload) + 1, tag) + payload


def decode_frame(data: bytes) -> tuple[int, bytes]:
    if len(data) < _HEADER.size:
        raise FrameError(f"frame of {len(data)} bytes is shorter than its header")
    length, tag = _HEADER.unpack_from(data)
    if length < 1:
        raise FrameError("frame length must count the tag byte")
    if len(data) != 4 + length:
        raise FrameError(f"frame declares {length} bytes after the length field, carries {len(data) - 4}")
    if tag not in TAG_NAMES:
        raise DecodeError(f"unknown frame tag {tag:#04x}")
    return tag, bytes(data[5:])


# -- queries and answers ---------------------------------------------------

def _write_query(w: Writer, query: Query, q: int | None):
    w.u32(len(query))
    for g in query:
        w.u32(len(g.members))
        for v in g.members:
            w.u16s(v)
        w.u16s(g.indices)
        w.elements(g.coeffs, q)


def _read_query(r: Reader) -> Query:
    groups = []
    for _ in range(r.u32()):
        members = tuple(r.u16s() for _ in range(r.u32()))
        indices = r.u16s()
        coeffs = r.u16s()
        groups.append(QueryGroup(members, indices, coeffs))
    return tuple(groups)


def _write_answer(w: Writer, answer: Answer, q: int | None):
    w.u32(len(answer))
    for vec in answer:
        w.elements(vec, q)


def _read_answer(r: Reader) -> Answer:
    return tuple(r.u16s() for _ in range(r.u32()))


def encode_query(query: Query, q: int | None = None) -> bytes:
    w = Writer()
    _write_query(w, query, q)
    return w.bytes()


def decode_query(payload: bytes) -> Query:
    r = Reader(payload)
    out = _read_query(r)
    r.done()
    return out


def encode_answer(answer: Answer, q: int | None = None) -> bytes:
    w = Writer()
    _write_answer(w, answer, q)
    return w.bytes()


def decode_answer(payload: bytes) -> Answer:
    r = Reader(payload)
    out = _read_answer(r)
    r.done()
    return out


# -- verification phase ----------------------------------------------------

@dataclass(frozen=True)
class VerifyRequest:
    user: str
    server: int
    claims: dict

    def __hash__(self):
        return hash((self.user, self.server, tuple(sorted(self.claims.items()))))


def encode_verify_request(req: VerifyRequest) -> bytes:
    w = Writer()
    w.u8(VERSION)
    w.string(req.user)
    w.u16(req.server)
    w.claims(req.claims)
    return w.bytes()


def decode_verify_request(payload: bytes) -> VerifyRequest:
    r = Reader(payload)
    version = r.u8()
    if version != VERSION:
        raise VersionError(f"peer speaks protocol version {version}, expected {VERSION}")
    req = VerifyRequest(r.string(), r.u16(), r.claims())
    r.done()
    return req


def _write_outcome(w: Writer, o: VerificationOutcome):
    w.string(o.user)
    w.u32(len(o.knowledge))
    for server in sorted(o.knowledge):
        w.u16(server)
        w.claims(o.knowledge[server])
    w.claims(o.relayed)


def _read_outcome(r: Reader) -> VerificationOutcome:
    user = r.string()
    knowledge = {}
    for _ in range(r.u32()):
        server = r.u16()
        knowledge[server] = r.claims()
    return VerificationOutcome(user, knowledge, r.claims())


def encode_verify_ok(server: int, outcome: VerificationOutcome) -> bytes:
    w = Writer()
    w.u16(server)
    _write_outcome(w, outcome)
    return w.bytes()


def decode_verify_ok(payload: bytes) -> tuple[int, VerificationOutcome]:
    r = Reader(payload)
    server = r.u16()
    o = _read_outcome(r)
    r.done()
    return server, o


def encode_verify_fail(server: int, reason: str) -> bytes:
    w = Writer()
    w.u16(server)
    w.string(reason)
    return w.bytes()


def decode_verify_fail(payload: bytes) -> tuple[int, str]:
    r = Reader(payload)
    out = r.u16(), r.string()
    r.done()
    return out


def encode_relay(user: str, claims: Mapping[int, int]) -> bytes:
    w = Writer()
    w.string(user)
    w.claims(claims)
    return w.bytes()


def decode_relay(payload: bytes) -> tuple[str, dict[int, int]]:
    r = Reader(payload)
    out = r.string(), r.claims()
    r.done()
    return out


def encode_error(message: str) -> bytes:
    w = Writer()
    w.string(message)
    return w.bytes()


def decode_error(payload: bytes) -> str:
    r = Reader(payload)
    out = r.string()
    r.done()
    return out


# -- transcripts -----------------------------------------------------------

def _write_transcript(w: Writer, t: Transcript):
    w.string(t.scheme)
    for x in (t.N, t.D, t.K, t.q):
        w.u16(x)
    w.u32(t.L)
    w.u16s(t.vstar)
    w.u64(t.user_seed)
    w.u32(t.subpacket_len)
    if t.lam is None:
        w.u8(0)
    else:
        w.u8(1)
        w.u32(t.lam[0])
        w.u32(t.lam[1])
    w.u32(len(t.exchanges))
    for ex in t.exchanges:
        w.u16(ex.server)
        _write_query(w, ex.query, t.q)
        _write_answer(w, ex.answer, t.q)
    w.elements(t.decoded, t.q)
    w.u32(len(t.parts))
    for p in t.parts:
        _write_transcript(w, p)


def _read_transcript(r: Reader) -> Transcript:
    scheme = r.string()
    N, D, K, q = r.u16(), r.u16(), r.u16(), r.u16()
    L = r.u32()
    vstar = r.u16s()
    user_seed = r.u64()
    size = r.u32()
    lam = (r.u32(), r.u32()) if r.u8() else None
    exchanges = []
    for _ in range(r.u32()):
        server = r.u16()
        exchanges.append(Exchange(server, _read_query(r), _read_answer(r)))
    decoded = r.u16s()
    parts = [_read_transcript(r) for _ in range(r.u32())]
    return Transcript(scheme, N, D, K, q, L, vstar, user_seed, size, exchanges, decoded, lam, parts)


def encode_transcript(t: Transcript) -> bytes:
    w = Writer()
    w.buf += TRANSCRIPT_MAGIC
    w.u8(VERSION)
    _write_transcript(w, t)
    return w.bytes()


def decode_transcript(data: bytes) -> Transcript:
    if bytes(data[:4]) != TRANSCRIPT_MAGIC:
        raise DecodeError("not a transcript blob")
    r = Reader(data)
    r.pos = 4
    version = r.u8()
    if version != VERSION:
        raise VersionError(f"transcript format version {version}, expected {VERSION}")
    t = _read_transcript(r)
    r.done()
    return t


# -- generic entry points --------------------------------------------------

def encode(obj, q: int | None = None) -> bytes:
    """Encode a Query, Answer, VerificationOutcome or Transcript."""
    if isinstance(obj, Transcript):
        return encode_transcript(obj)
    if isinstance(obj, VerificationOutcome):
        return encode_frame(VERIFY_OK, encode_verify_ok(0, obj))
    if isinstance(obj, tuple) and all(isinstance(g, QueryGroup) for g in obj) and obj:
        return encode_frame(QUERY, encode_query(obj, q))
    if isinstance(obj, tuple):
        return encode_frame(ANSWER, encode_answer(obj, q))
    raise TypeError(f"cannot encode {type(obj).__name__}")


def decode(data: bytes):
    if bytes(data[:4]) == TRANSCRIPT_MAGIC:
        return decode_transcript(data)
    tag, payload = decode_frame(data)
    if tag == QUERY:
        return decode_query(payload)
    if tag == ANSWER:
        return decode_answer(payload)
    if tag == VERIFY_OK:
        return decode_verify_ok(payload)[1]
    raise DecodeError(f"{TAG_NAMES[tag]} frames carry no standalone object")
