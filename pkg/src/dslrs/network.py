"""In-process simulation of the N-node deanonymization network.

Nodes are actors that only talk through :class:`SimMessage` values placed on
per-(sender, receiver) FIFO channels. A seeded round-robin scheduler delivers
one message per non-empty channel per round, visiting channels in an order
reshuffled every round, so a given seed always yields the same transcript.

Key generation is Joint-Feldman: every dealing node shares a random secret
with Feldman commitments, and the network key is the sum over qualified
dealers. The complaint round is off by default.
"""

from __future__ import annotations

import enum
import itertools
import json
import random
import struct
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import group, scheme, threshold
from .errors import DecodeError, DeanonTimeout, DkgFailed
from .group import G, IDENTITY, GroupElement, Scalar
from .threshold import DecryptionShare, NetPublic, NetShare

REQUESTER_ID = 0
BROADCAST = -1


class Behavior(str, enum.Enum):
    HONEST = "honest"
    SILENT = "silent"
    CORRUPT = "corrupt-share"


class MsgKind(str, enum.Enum):
    DKG_COMMIT = "DkgCommit"
    DKG_SHARE = "DkgShare"
    DKG_COMPLAINT = "DkgComplaint"
    DEANON_REQUEST = "DeanonRequest"
    DEANON_SHARE = "DeanonShare"


@dataclass(frozen=True)
class SimMessage:
    sender: int
    to: int
    kind: MsgKind
    payload: bytes

    def to_json(self) -> dict:
        return {"from": self.sender, "to": self.to, "kind": self.kind.value,
                "payload": self.payload.hex()}

    @classmethod
    def from_json(cls, d: dict) -> SimMessage:
        return cls(int(d["from"]), int(d["to"]), MsgKind(d["kind"]), bytes.fromhex(d["payload"]))


def _pack_points(pts: Sequence[GroupElement]) -> bytes:
    return b"".join(p.to_bytes() for p in pts)


def _unpack_points(data: bytes) -> list[GroupElement]:
    if len(data) % group.POINT_LEN:
        raise DecodeError("commitment payload length")
    return [group.decode_point(data[i:i + group.POINT_LEN])
            for i in range(0, len(data), group.POINT_LEN)]


def _feldman_eval(commitments: Sequence[GroupElement], x: Scalar) -> GroupElement:
    acc = IDENTITY
    for c in reversed(commitments):
        acc = x * acc + c
    return acc


@dataclass
class Node:
    id: int
    omega: Scalar
    behavior: Behavior
    rng: random.Random
    k: int = 0
    coeffs: list[Scalar] = field(default_factory=list)
    commitments: dict[int, list[GroupElement]] = field(default_factory=dict)
    received: dict[int, Scalar] = field(default_factory=dict)
    bad_dealers: set[int] = field(default_factory=set)
    complaints: set[int] = field(default_factory=set)
    share: NetShare | None = None

    # -- DKG ------------------------------------------------------------------

    def deal(self, k: int, peers: Iterable[Node]) -> list[SimMessage]:
        self.k = k
        self.coeffs = [group.random_scalar(self.rng) for _ in range(k)]
        comm = [c * G for c in self.coeffs]
        self.commitments[self.id] = comm
        self.received[self.id] = threshold.eval_poly(self.coeffs, self.omega)
        if self.behavior is Behavior.SILENT:
            return []
        out = [SimMessage(self.id, BROADCAST, MsgKind.DKG_COMMIT, _pack_points(comm))]
        for peer in peers:
            if peer.id == self.id:
                continue
            s = threshold.eval_poly(self.coeffs, peer.omega)
            if self.behavior is Behavior.CORRUPT:
                s = s + 1
            out.append(SimMessage(self.id, peer.id, MsgKind.DKG_SHARE, s.to_bytes()))
        return out

    def check_dealings(self, dealers: Iterable[int]) -> list[SimMessage]:
        """Flag every dealer whose share is missing or off its commitments."""
        for d in dealers:
            if d == self.id or d not in self.commitments:
                continue
            s = self.received.get(d)
            if s is None or s * G != _feldman_eval(self.commitments[d], self.omega):
                self.bad_dealers.add(d)
        if self.behavior is Behavior.SILENT:
            return []
        return [SimMessage(self.id, BROADCAST, MsgKind.DKG_COMPLAINT, struct.pack(">H", d))
                for d in sorted(self.bad_dealers)]

    def qualified(self) -> list[int]:
        return sorted(d for d, comm in self.commitments.items()
                      if d not in self.complaints and len(comm) == self.k)

    def finish_dkg(self, qual: Sequence[int]) -> GroupElement:
        total = sum((self.received[d] for d in qual), Scalar(0))
        self.share = NetShare(self.omega, total)
        p_net = IDENTITY
        for d in qual:
            p_net = p_net + self.commitments[d][0]
        return p_net

    # -- message handling -----------------------------------------------------

    def handle(self, msg: SimMessage) -> list[SimMessage]:
        if msg.kind is MsgKind.DKG_COMMIT:
            self.commitments[msg.sender] = _unpack_points(msg.payload)
        elif msg.kind is MsgKind.DKG_SHARE:
            self.received[msg.sender] = group.decode_scalar(msg.payload)
        elif msg.kind is MsgKind.DKG_COMPLAINT:
            (dealer,) = struct.unpack(">H", msg.payload)
            self.complaints.add(dealer)
        elif msg.kind is MsgKind.DEANON_REQUEST:
            return self._answer_request(msg)
        return []

    def _answer_request(self, msg: SimMessage) -> list[SimMessage]:
        if self.behavior is Behavior.SILENT or self.share is None:
            return []
        (name_len,) = struct.unpack(">H", msg.payload[:2])
        sig = scheme.deserialize(msg.payload[2 + name_len:])
        d = threshold.decryption_share(self.share, sig.c1)
        if self.behavior is Behavior.CORRUPT:
            d = DecryptionShare(d.index, d.share_point + G)
        return [SimMessage(self.id, msg.sender, MsgKind.DEANON_SHARE, d.to_bytes())]


class Network:
    """N simulated nodes with ids 1..N and omega_j = j; id 0 is the outside requester."""

    def __init__(self, n_nodes: int, behaviors: dict[int, Behavior | str] | None = None,
                 seed: int | str = 0, complaints: bool = False):
        if n_nodes < 1:
            raise ValueError("need at least one node")
        behaviors = {int(k): Behavior(v) for k, v in (behaviors or {}).items()}
        self.seed = seed
        self.complaints = complaints
        self.nodes = [
            Node(j, Scalar(j), behaviors.get(j, Behavior.HONEST), random.Random(f"{seed}/node/{j}"))
            for j in range(1, n_nodes + 1)
        ]
        self._sched = random.Random(f"{seed}/scheduler")
        self._channels: dict[tuple[int, int], deque[SimMessage]] = {}
        self.transcript: list[SimMessage] = []
        self.inbox: list[SimMessage] = []  # messages addressed to the requester
        self.net_public: NetPublic | None = None

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id - 1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    # -- transport --------------------------------------------------------------

    def send(self, msgs: Iterable[SimMessage]) -> None:
        for m in msgs:
            targets = [n.id for n in self.nodes if n.id != m.sender] if m.to == BROADCAST else [m.to]
            for t in targets:
                self._channels.setdefault((m.sender, t), deque()).append(
                    SimMessage(m.sender, t, m.kind, m.payload))

    def run(self, max_rounds: int = 10_000) -> int:
        """Deliver until every channel is empty; returns the number of deliveries."""
        delivered = 0
        for _ in range(max_rounds):
            live = sorted(k for k, q in self._channels.items() if q)
            if not live:
                return delivered
            self._sched.shuffle(live)
            for key in live:
                msg = self._channels[key].popleft()
                self.transcript.append(msg)
                delivered += 1
                if msg.to == REQUESTER_ID:
                    self.inbox.append(msg)
                else:
                    self.send(self.node(msg.to).handle(msg))
        raise RuntimeError("simulation did not quiesce")

    # -- protocols ----------------------------------------------------------------

    def run_dkg(self, k: int) -> tuple[NetPublic, dict[int, NetShare]]:
        n = self.n_nodes
        if not 1 <= k <= n:
            raise DkgFailed(f"need 1 <= k <= N, got k={k}, N={n}")
        honest = [nd for nd in self.nodes if nd.behavior is Behavior.HONEST]
        if len(honest) < k:
            raise DkgFailed(f"only {len(honest)} honest nodes for threshold {k}")

        for nd in self.nodes:
            self.send(nd.deal(k, self.nodes))
        self.run()

        dealers = [nd.id for nd in self.nodes]
        for nd in self.nodes:
            out = nd.check_dealings(dealers)
            if self.complaints:
                nd.complaints |= nd.bad_dealers
                self.send(out)
            elif nd.bad_dealers and nd.behavior is Behavior.HONEST:
                raise DkgFailed(f"node {nd.id} received inconsistent shares from {sorted(nd.bad_dealers)}"
                                " and the complaint round is disabled")
        self.run()

        views = {nd.id: nd.qualified() for nd in honest}
        qual = views[honest[0].id]
        if not qual or any(v != qual for v in views.values()):
            raise DkgFailed("nodes disagree on the qualified dealer set")
        keys = {nd.id: nd.finish_dkg(qual) for nd in self.nodes if all(d in nd.received for d in qual)}
        p_net = keys[honest[0].id]
        if any(keys[nd.id] != p_net for nd in honest):
            raise DkgFailed("nodes derived different network keys")

        self.net_public = NetPublic(p_net, tuple(nd.omega for nd in self.nodes), k)
        return self.net_public, {nd.id: nd.share for nd in self.nodes if nd.share is not None}

    def install_shares(self, net: NetPublic, shares: Sequence[NetShare]) -> None:
        """Load dealer-mode shares (share j goes to node with omega_j)."""
        by_omega = {s.index: s for s in shares}
        for nd in self.nodes:
            nd.share = by_omega.get(nd.omega)
        self.net_public = net

    def request_deanonymization(self, sig, requester: str = "anonymous",
                                robust: bool = False) -> GroupElement:
        """Broadcast a request and combine the first k shares that come back.

        With ``robust`` set, other k-subsets of the responses are tried (in
        arrival order) until the result is a member of the signature's ring.
        """
        if self.net_public is None:
            raise DkgFailed("network has no key yet")
        name = requester.encode()
        payload = struct.pack(">H", len(name)) + name + sig.to_bytes()
        self.inbox.clear()
        self.send([SimMessage(REQUESTER_ID, BROADCAST, MsgKind.DEANON_REQUEST, payload)])
        self.run()
        responses = [DecryptionShare.from_bytes(m.payload) for m in self.inbox
                     if m.kind is MsgKind.DEANON_SHARE]
        k = self.net_public.k
        if len(responses) < k:
            raise DeanonTimeout(f"{len(responses)} of {k} required shares arrived")
        first = threshold.deanonymize(sig, responses[:k], self.net_public)
        if not robust or first in sig.ring:
            return first
        for subset in itertools.combinations(responses, k):
            pt = threshold.deanonymize(sig, subset, self.net_public)
            if pt in sig.ring:
                return pt
        return first

    # -- transcript -------------------------------------------------------------

    def transcript_lines(self) -> list[str]:
        return [json.dumps({"step": i, **m.to_json()}, sort_keys=True)
                for i, m in enumerate(self.transcript)]

    def save_transcript(self, path: str | Path) -> None:
        Path(path).write_text("".join(ln + "\n" for ln in self.transcript_lines()))


def run_dkg(n_nodes: int, k: int, behaviors: dict[int, Behavior | str] | None = None,
            seed: int | str = 0, complaints: bool = False):
    """Create a network, run Joint-Feldman key generation, return (network, NetPublic, shares)."""
    net = Network(n_nodes, behaviors, seed, complaints)
    pub, shares = net.run_dkg(k)
    return net, pub, shares
