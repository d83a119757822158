"""Socket service: one TCP server per database, and the user-side client.

Each connection is a sequential state machine. A dedicated server accepts
``VERIFY_REQ`` for its own attribute, waits until the central server has
relayed the trailing attributes (``ATTR_RELAY``), replies ``VERIFY_OK`` and
then answers ``QUERY`` frames. The central server verifies the trailing
attributes, relays them to every dedicated server and waits for their
acknowledgements before replying ``VERIFY_OK`` itself.

The client verifies with the central server first, then with each
dedicated server, then sends every query before reading any answer.
"""
from __future__ import annotations

import logging
import os
import socket
import socketserver
import threading
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..errors import AccessViolation, ConfigError, FrameError, HetDapacError, SessionError, VerificationFailed
from ..model import (DatabaseView, Exchange, Key, MessageStore, RandomnessPool, SystemConfig, Transcript,
                     VerificationOutcome, dedicated_view, keys_matching, validate_vector)
from ..randomness import UserRandom, derive_seed
from ..schemes import get
from ..schemes.common import build_plan, subpacket_len
from . import codec

log = logging.getLogger(__name__)

POOL_SEED_ENV = "HETDAPAC_POOL_SEED"
RELAY_TIMEOUT = 10.0

Address = tuple[str, int]


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    header = _read_exact(sock, codec._HEADER.size)
    length, tag = codec._HEADER.unpack(header)
    if length < 1:
        raise FrameError("frame length field is zero")
    return tag, _read_exact(sock, length - 1)


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed the connection")
        buf += chunk
    return bytes(buf)


def send_frame(sock: socket.socket, tag: int, payload: bytes):
    sock.sendall(codec.encode_frame(tag, payload))


def pool_seed_from_env() -> int:
    raw = os.environ.get(POOL_SEED_ENV)
    if raw is None:
        raise ConfigError(f"servers need the shared pool seed in ${POOL_SEED_ENV}")
    return int(raw, 0)


def default_pool_seed(cfg: SystemConfig) -> int:
    """The pool seed the in-process simulation uses for ``cfg``."""
    return derive_seed(cfg.seed, "pool")


# -- servers ---------------------------------------------------------------

@dataclass
class ServerState:
    cfg: SystemConfig
    server: int
    scheme: str
    registry: Mapping[str, Sequence[int]]
    pool_seed: int
    peers: dict[int, Address] = field(default_factory=dict)
    relays: dict[str, dict[int, int]] = field(default_factory=dict)
    cond: threading.Condition = field(default_factory=threading.Condition)

    def __post_init__(self):
        self.module = get(self.scheme)
        self.store = MessageStore(self.cfg, derive_seed(self.cfg.seed, "msg"))
        self.pool = RandomnessPool(self.pool_seed, self.cfg.q)

    @property
    def central(self) -> bool:
        return self.server == self.cfg.D + 1

    def tail_positions(self) -> set[int]:
        return set(range(self.cfg.D, self.cfg.N))


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        st: ServerState = self.server.state
        view: DatabaseView | None = None
        sock = self.request
        while True:
            try:
                tag, payload = read_frame(sock)
            except (ConnectionError, OSError):
                return
            try:
                if tag == codec.VERIFY_REQ:
                    view = self._verify(st, codec.decode_verify_request(payload))
                elif tag == codec.ATTR_RELAY:
                    self._relay(st, *codec.decode_relay(payload))
                elif tag == codec.QUERY:
                    if view is None:
                        send_frame(sock, codec.ERROR, codec.encode_error("query before verification"))
                        continue
                    query = codec.decode_query(payload)
                    answer = st.module.answer(view, query, st.store, st.pool)
                    send_frame(sock, codec.ANSWER, codec.encode_answer(answer, st.cfg.q))
                else:
                    send_frame(sock, codec.ERROR, codec.encode_error(f"unexpected {codec.TAG_NAMES.get(tag, tag)}"))
            except VerificationFailed as exc:
                send_frame(sock, codec.VERIFY_FAIL, codec.encode_verify_fail(st.server, exc.reason))
            except (HetDapacError, AccessViolation) as exc:
                log.warning("server %d: %s", st.server, exc)
                send_frame(sock, codec.ERROR, codec.encode_error(str(exc)))

    def _verify(self, st: ServerState, req: codec.VerifyRequest) -> DatabaseView:
        cfg = st.cfg
        if req.server != st.server:
            raise VerificationFailed(st.server, f"request addressed to server {req.server}")
        truth = st.registry.get(req.user)
        if truth is None:
            raise VerificationFailed(st.server, f"unknown user {req.user!r}")
        expected = st.tail_positions() if st.central else {st.server - 1}
        if set(req.claims) != expected:
            raise VerificationFailed(st.server, f"expected claims for positions {sorted(expected)}")
        for pos, val in req.claims.items():
            if truth[pos] != val:
                raise VerificationFailed(st.server, f"attribute {pos + 1} does not match registry")
        if st.central:
            tail = dict(req.claims)
            for n, addr in sorted(st.peers.items()):
                with socket.create_connection(addr, timeout=RELAY_TIMEOUT) as peer:
                    send_frame(peer, codec.ATTR_RELAY, codec.encode_relay(req.user, tail))
                    tag, _ = read_frame(peer)
                    if tag != codec.VERIFY_OK:
                        raise VerificationFailed(st.server, f"server {n} did not acknowledge the relay")
            knowledge = {st.server: tail}
            view = DatabaseView(st.server, frozenset(keys_matching(cfg, tail)))
        else:
            with st.cond:
                if not st.cond.wait_for(lambda: req.user in st.relays, RELAY_TIMEOUT):
                    raise VerificationFailed(st.server, "no attribute relay from the central server")
                tail = st.relays[req.user]
            own = req.claims[st.server - 1]
            knowledge = {st.server: {st.server - 1: own, **tail}}
            view = dedicated_view(cfg, st.server, own, tail)
        outcome = VerificationOutcome(req.user, knowledge, tail)
        send_frame(self.request, codec.VERIFY_OK, codec.encode_verify_ok(st.server, outcome))
        return view

    def _relay(self, st: ServerState, user: str, claims: dict[int, int]):
        with st.cond:
            st.relays[user] = dict(claims)
            st.cond.notify_all()
        outcome = VerificationOutcome(user, {st.server: dict(claims)}, dict(claims))
        send_frame(self.request, codec.VERIFY_OK, codec.encode_verify_ok(st.server, outcome))


class ProtocolServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: Address, state: ServerState):
        super().__init__(address, _Handler)
        self.state = state

    @property
    def address(self) -> Address:
        return self.server_address[:2]


class Cluster:
    """All D+1 servers on localhost, each serving from its own thread."""

    def __init__(self, cfg: SystemConfig, scheme: str, registry: Mapping[str, Sequence[int]],
                 pool_seed: int | None = None, host: str = "127.0.0.1", ports: Sequence[int] | None = None):
        if scheme not in ("dapac", "hetdapac", "d3"):
            raise ConfigError(f"service mode supports dapac, hetdapac and d3, not {scheme!r}")
        pool_seed = default_pool_seed(cfg) if pool_seed is None else pool_seed
        ports = list(ports) if ports else [0] * (cfg.D + 1)
        self.servers: dict[int, ProtocolServer] = {}
        for n in range(1, cfg.D + 1):
            self.servers[n] = ProtocolServer((host, ports[n - 1]), ServerState(cfg, n, scheme, registry, pool_seed))
        peers = {n: s.address for n, s in self.servers.items()}
        central = ServerState(cfg, cfg.D + 1, scheme, registry, pool_seed, peers)
        self.servers[cfg.D + 1] = ProtocolServer((host, ports[cfg.D]), central)
        self._threads = []

    @property
    def addresses(self) -> dict[int, Address]:
        return {n: s.address for n, s in self.servers.items()}

    def start(self) -> "Cluster":
        for s in self.servers.values():
            t = threading.Thread(target=s.serve_forever, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self):
        for s in self.servers.values():
            s.shutdown()
            s.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


# -- client ----------------------------------------------------------------

@dataclass(frozen=True)
class SentFrame:
    server: int
    tag: int
    payload: bytes


class Client:
    """The user's side of a live session; records every frame it sends."""

    def __init__(self, cfg: SystemConfig, addresses: Mapping[int, Address], timeout: float = 30.0):
        self.cfg = cfg
        self.addresses = dict(addresses)
        self.timeout = timeout
        self.sent: list[SentFrame] = []
        self.received: list[SentFrame] = []
        self._socks: dict[int, socket.socket] = {}

    def _send(self, n: int, tag: int, payload: bytes):
        self.sent.append(SentFrame(n, tag, payload))
        send_frame(self._socks[n], tag, payload)

    def _recv(self, n: int) -> tuple[int, bytes]:
        tag, payload = read_frame(self._socks[n])
        self.received.append(SentFrame(n, tag, payload))
        if tag == codec.ERROR:
            raise HetDapacError(f"server {n}: {codec.decode_error(payload)}")
        return tag, payload

    def _verify(self, n: int, user: str, claims: dict[int, int]) -> VerificationOutcome:
        self._send(n, codec.VERIFY_REQ, codec.encode_verify_request(codec.VerifyRequest(user, n, claims)))
        tag, payload = self._recv(n)
        if tag == codec.VERIFY_FAIL:
            server, reason = codec.decode_verify_fail(payload)
            raise VerificationFailed(server, reason)
        if tag != codec.VERIFY_OK:
            raise SessionError(f"server {n} sent {codec.TAG_NAMES.get(tag, tag)} during verification")
        return codec.decode_verify_ok(payload)[1]

    def retrieve(self, scheme: str, user: str, vstar: Sequence[int], user_seed: int = 0,
                 claims: Mapping[int, Mapping[int, int]] | None = None) -> Transcript:
        """Verify, then retrieve the message keyed by ``vstar``.

        ``claims`` overrides what is asserted to each server (to exercise
        rejection); by default each server is sent the honest coordinates.
        """
        cfg = self.cfg
        vstar = validate_vector(cfg, vstar)
        mod = get(scheme)
        D = cfg.D
        honest = {n: {n - 1: vstar[n - 1]} for n in range(1, D + 1)}
        honest[D + 1] = {i: vstar[i] for i in range(D, cfg.N)}
        claims = {**honest, **(claims or {})}
        layout = mod.layout(cfg, vstar)
        t = Transcript(scheme, cfg.N, D, cfg.K, cfg.q, cfg.L, vstar, user_seed,
                       subpacket_len(cfg, cfg.L, layout.parts, scheme))
        try:
            for n in range(1, D + 2):
                self._socks[n] = socket.create_connection(self.addresses[n], timeout=self.timeout)
            self._verify(D + 1, user, dict(claims[D + 1]))
            for n in range(1, D + 1):
                self._verify(n, user, dict(claims[n]))
            plan = build_plan(layout, UserRandom.seeded(user_seed, cfg.q))
            servers = sorted(plan.queries)
            for n in servers:
                self._send(n, codec.QUERY, codec.encode_query(plan.queries[n], cfg.q))
            for n in servers:
                tag, payload = self._recv(n)
                if tag != codec.ANSWER:
                    raise SessionError(f"server {n} sent {codec.TAG_NAMES.get(tag, tag)} instead of an answer", t)
                t.exchanges.append(Exchange(n, plan.queries[n], codec.decode_answer(payload)))
        except (OSError, ConnectionError, FrameError) as exc:
            raise SessionError(f"connection failure: {exc}", t) from exc
        finally:
            self.close()
        t.decoded = mod.decode(t, plan)
        return t

    def close(self):
        for s in self._socks.values():
            s.close()
        self._socks.clear()


def inspect_claims(cfg: SystemConfig, frames: Sequence[SentFrame]) -> list[str]:
    """Wire-level check that no dedicated server is told any attribute but its own.

    Returns a list of violations; empty means the capture is clean.
    """
    problems = []
    for f in frames:
        if f.server > cfg.D:
            continue
        if f.tag == codec.VERIFY_REQ:
            req = codec.decode_verify_request(f.payload)
            extra = set(req.claims) - {f.server - 1}
            if extra:
                problems.append(f"server {f.server} was sent attributes {sorted(p + 1 for p in extra)}")
        elif f.tag == codec.ATTR_RELAY:
            problems.append(f"user sent ATTR_RELAY to server {f.server}")
    return problems


def service_run(cfg: SystemConfig, scheme: str, vstar: Key, user: str = "user", user_seed: int | None = None,
                pool_seed: int | None = None) -> tuple[Transcript, Client]:
    """Start a localhost cluster, run one session against it and shut it down."""
    vstar = validate_vector(cfg, vstar)
    user_seed = cfg.seed if user_seed is None else user_seed
    with Cluster(cfg, scheme, {user: vstar}, pool_seed) as cluster:
        client = Client(cfg, cluster.addresses)
        t = client.retrieve(scheme, user, vstar, user_seed)
    return t, client
