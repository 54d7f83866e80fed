"""Deanonymizable scoped linkable ring signatures: sign, verify, link, wire format.

Ring positions are 0-based throughout. Where the published algorithm writes
signer s (1-based) and walks i = ((s + j - 1) mod n) + 1, this module uses
t = s - 1 and walks i = (t + j) mod n; the challenge produced from member i's
commitments belongs to position (i + 1) mod n. ``ch1`` is the challenge at
position 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

from . import group
from .errors import (
    DecodeError,
    DuplicateRingMember,
    RingNotRegistered,
    RingTooSmall,
    SignerNotInRing,
    UnknownScope,
)
from .group import G, GroupElement, Scalar, hash_to_point
from .params import PublicParams

PL = group.POINT_LEN
SL = group.SCALAR_LEN

Ring = tuple[GroupElement, ...]


@dataclass(frozen=True)
class CommitmentQuad:
    L: GroupElement
    R: GroupElement
    A: GroupElement
    B: GroupElement


@dataclass(frozen=True)
class DslrsSignature:
    key_image: GroupElement
    ring: Ring
    sid: Scalar
    p_net: GroupElement
    c1: GroupElement
    c2: GroupElement
    ch1: Scalar
    responses: tuple[tuple[Scalar, Scalar], ...]

    @property
    def n(self) -> int:
        return len(self.ring)

    def to_bytes(self) -> bytes:
        return serialize(self)

    def payload_len(self) -> int:
        return payload_size(self.n)


@dataclass(frozen=True)
class SignTrace:
    """Signer-side view of one signing run, for tests and audits; never published."""

    signature: DslrsSignature
    r_dean: Scalar
    signer_index: int
    challenges: tuple[Scalar, ...]


def payload_size(n: int) -> int:
    """(n + 4) points plus (2n + 2) scalars = 97n + 196 bytes on secp256k1."""
    return (n + 4) * PL + (2 * n + 2) * SL


def wire_size(n: int) -> int:
    return payload_size(n) + 2


def scope_base(public: GroupElement, sid: Scalar) -> GroupElement:
    """H_p(P || SID)."""
    return hash_to_point(public.to_bytes() + sid.to_bytes())


def key_image(secret: Scalar, public: GroupElement, sid: Scalar) -> GroupElement:
    return secret * scope_base(public, sid)


# -- Fiat-Shamir transcript -------------------------------------------------

def _lp(b: bytes) -> bytes:
    return struct.pack(">I", len(b)) + b


def _transcript_prefix(m: bytes, ring: Sequence[GroupElement], ki: GroupElement, sid: Scalar,
                       c1: GroupElement, c2: GroupElement) -> bytes:
    return b"".join((
        _lp(bytes(m)),
        _lp(b"".join(p.to_bytes() for p in ring)),
        _lp(ki.to_bytes()),
        _lp(sid.to_bytes()),
        _lp(c1.to_bytes()),
        _lp(c2.to_bytes()),
    ))


def _challenge_from_prefix(prefix: bytes, quad: CommitmentQuad) -> Scalar:
    return group.hash_to_scalar(
        prefix + _lp(quad.L.to_bytes()) + _lp(quad.R.to_bytes())
        + _lp(quad.A.to_bytes()) + _lp(quad.B.to_bytes())
    )


def challenge(m: bytes, ring: Sequence[GroupElement], ki: GroupElement, sid: Scalar,
              c1: GroupElement, c2: GroupElement, quad: CommitmentQuad) -> Scalar:
    """H(m, L, I_scope, SID, C1, C2, L_i, R_i, A_i, B_i)."""
    return _challenge_from_prefix(_transcript_prefix(m, ring, ki, sid, c1, c2), quad)


def _member_quad(x: Scalar, z: Scalar, ch: Scalar, member: GroupElement, sid: Scalar,
                 ki: GroupElement, p_net: GroupElement, c1: GroupElement,
                 c2: GroupElement) -> CommitmentQuad:
    return CommitmentQuad(
        x * G + ch * member,
        x * scope_base(member, sid) + ch * ki,
        z * G - ch * c1,
        z * p_net - ch * (c2 - member),
    )


# -- sign -------------------------------------------------------------------

def _check_ring(ring: Ring, sid: Scalar, pp: PublicParams) -> None:
    if len(set(ring)) != len(ring):
        raise DuplicateRingMember("ring contains a repeated key")
    if any(p.is_identity for p in ring):
        raise RingNotRegistered("identity element cannot be a ring member")
    if not pp.catalog.is_signing_scope(sid):
        raise UnknownScope(sid.hex())
    if len(ring) < pp.n_min:
        raise RingTooSmall(f"ring of {len(ring)} < n_min={pp.n_min}")
    if pp.checks_registry and not pp.registry.contains_all(ring):
        raise RingNotRegistered("ring member missing from registry")


def sign_traced(m: bytes, secret: Scalar, ring: Sequence[GroupElement], sid: Scalar,
                pp: PublicParams, rng=None, *,
                _encapsulate: GroupElement | None = None) -> SignTrace:
    """Sign and also return the signer-side secrets (r_dean, position, challenges).

    ``_encapsulate`` replaces P_s inside C2; it exists only so tests can play
    a dishonest signer, and the resulting signature does not verify.
    """
    secret = Scalar(secret)
    ring = tuple(ring)
    public = secret * G
    if public not in ring:
        raise SignerNotInRing(public.hex())
    _check_ring(ring, sid, pp)

    n = len(ring)
    t = ring.index(public)
    p_net = pp.p_net
    ki = key_image(secret, public, sid)

    r = group.random_scalar(rng)
    r_dean = group.random_scalar(rng)
    r_z = group.random_scalar(rng)
    c1 = r_dean * G
    c2 = (public if _encapsulate is None else _encapsulate) + r_dean * p_net

    prefix = _transcript_prefix(m, ring, ki, sid, c1, c2)
    ch: list[Scalar | None] = [None] * n
    xs: list[Scalar | None] = [None] * n
    zs: list[Scalar | None] = [None] * n

    signer_quad = CommitmentQuad(r * G, r * scope_base(public, sid), r_z * G, r_z * p_net)
    ch[(t + 1) % n] = _challenge_from_prefix(prefix, signer_quad)
    for j in range(1, n):
        i = (t + j) % n
        xs[i] = group.random_scalar(rng)
        zs[i] = group.random_scalar(rng)
        quad = _member_quad(xs[i], zs[i], ch[i], ring[i], sid, ki, p_net, c1, c2)
        ch[(i + 1) % n] = _challenge_from_prefix(prefix, quad)

    xs[t] = r - ch[t] * secret
    zs[t] = r_z + ch[t] * r_dean

    sig = DslrsSignature(ki, ring, sid, p_net, c1, c2, ch[0], tuple(zip(xs, zs)))
    return SignTrace(sig, r_dean, t, tuple(ch))


def sign(m: bytes, secret: Scalar, ring: Sequence[GroupElement], sid: Scalar,
         pp: PublicParams, rng=None) -> DslrsSignature:
    """Ring-sign ``m`` in scope ``sid``. The ring is hashed in the order given."""
    return sign_traced(m, secret, ring, sid, pp, rng).signature


# -- verify / link ----------------------------------------------------------

def _structurally_valid(sig: DslrsSignature, pp: PublicParams) -> bool:
    if not isinstance(sig, DslrsSignature):
        return False
    ring = sig.ring
    n = len(ring)
    if n < pp.n_min or len(sig.responses) != n or len(set(ring)) != n:
        return False
    if any(not isinstance(p, GroupElement) or p.is_identity for p in ring):
        return False
    if pp.checks_registry and not pp.registry.contains_all(ring):
        return False
    if not pp.catalog.is_signing_scope(sig.sid):
        return False
    if sig.p_net != pp.p_net:
        return False
    for pt in (sig.key_image, sig.c1, sig.c2):
        if not isinstance(pt, GroupElement):
            return False
    return not sig.key_image.is_identity


def verify(m: bytes, sig: DslrsSignature, pp: PublicParams) -> bool:
    """Recompute the challenge loop from ch1; never raises."""
    try:
        if not _structurally_valid(sig, pp):
            return False
        prefix = _transcript_prefix(m, sig.ring, sig.key_image, sig.sid, sig.c1, sig.c2)
        ch = sig.ch1
        for member, (x, z) in zip(sig.ring, sig.responses):
            quad = _member_quad(x, z, ch, member, sig.sid, sig.key_image, pp.p_net, sig.c1, sig.c2)
            ch = _challenge_from_prefix(prefix, quad)
        return ch == sig.ch1
    except Exception:
        return False


def verify_bytes(m: bytes, data: bytes, pp: PublicParams) -> bool:
    try:
        sig = deserialize(data, pp)
    except DecodeError:
        return False
    return verify(m, sig, pp)


def link(sig1: DslrsSignature, m1: bytes, sig2: DslrsSignature, m2: bytes,
         pp: PublicParams) -> bool:
    if sig1.sid != sig2.sid:
        return False
    if not (verify(m1, sig1, pp) and verify(m2, sig2, pp)):
        return False
    return sig1.key_image == sig2.key_image


# -- wire format ------------------------------------------------------------
# key_image(33) | n(u16 BE) | ring(33n) | SID(32) | P_net(33) | C1(33) | C2(33)
# | ch1(32) | x_1..x_n(32n) | z_1..z_n(32n)

def serialize(sig: DslrsSignature) -> bytes:
    n = sig.n
    if n > 0xFFFF:
        raise ValueError("ring too large for u16 length field")
    parts = [sig.key_image.to_bytes(), struct.pack(">H", n)]
    parts += [p.to_bytes() for p in sig.ring]
    parts += [sig.sid.to_bytes(), sig.p_net.to_bytes(), sig.c1.to_bytes(),
              sig.c2.to_bytes(), sig.ch1.to_bytes()]
    parts += [x.to_bytes() for x, _ in sig.responses]
    parts += [z.to_bytes() for _, z in sig.responses]
    return b"".join(parts)


def deserialize(data: bytes, pp: PublicParams | None = None) -> DslrsSignature:
    data = bytes(data)
    if len(data) < PL + 2:
        raise DecodeError("signature truncated")
    (n,) = struct.unpack(">H", data[PL:PL + 2])
    if len(data) != wire_size(n):
        raise DecodeError(f"length {len(data)} inconsistent with ring size {n}")
    n_min = pp.n_min if pp is not None else 1
    if n < n_min:
        raise DecodeError(f"ring size {n} below n_min={n_min}")

    pos = 0

    def take(size: int) -> bytes:
        nonlocal pos
        chunk = data[pos:pos + size]
        pos += size
        return chunk

    ki = group.decode_point(take(PL))
    take(2)
    ring = tuple(group.decode_point(take(PL)) for _ in range(n))
    sid = group.decode_scalar(take(SL))
    p_net = group.decode_point(take(PL))
    c1 = group.decode_point(take(PL))
    c2 = group.decode_point(take(PL))
    ch1 = group.decode_scalar(take(SL))
    xs = [group.decode_scalar(take(SL)) for _ in range(n)]
    zs = [group.decode_scalar(take(SL)) for _ in range(n)]
    return DslrsSignature(ki, ring, sid, p_net, c1, c2, ch1, tuple(zip(xs, zs)))
