"""secp256k1 group arithmetic, scalar field, and the two random-oracle hashes.

Point operations are delegated to libsecp256k1 through ``coincurve``; this
module adds the identity element, negation/subtraction, fixed-length
canonical encodings and the hashes ``H`` (to a nonzero scalar) and ``H_p``
(to a curve point).

secp256k1 has cofactor 1, so every point that decodes onto the curve is in
the prime-order subgroup.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from functools import lru_cache

from coincurve import PublicKey

from .errors import DecodeError

CURVE_ID = "secp256k1"
P = 2**256 - 2**32 - 977
Q = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
POINT_LEN = 33
SCALAR_LEN = 32

TAG_H = b"DSLRS/H"
TAG_HP = b"DSLRS/Hp"

_IDENTITY_BYTES = bytes(POINT_LEN)


class Scalar:
    """Element of Z_q. Always reduced; immutable."""

    __slots__ = ("_v",)

    def __init__(self, value: int = 0):
        if isinstance(value, Scalar):
            value = value._v
        object.__setattr__(self, "_v", int(value) % Q)

    def __setattr__(self, name, value):
        raise AttributeError("Scalar is immutable")

    @property
    def value(self) -> int:
        return self._v

    def __int__(self) -> int:
        return self._v

    def __index__(self) -> int:
        return self._v

    def __bool__(self) -> bool:
        return self._v != 0

    def __add__(self, other):
        if isinstance(other, (Scalar, int)):
            return Scalar(self._v + int(other))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (Scalar, int)):
            return Scalar(self._v - int(other))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (Scalar, int)):
            return Scalar(int(other) - self._v)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (Scalar, int)):
            return Scalar(self._v * int(other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (Scalar, int)):
            return Scalar(self._v * int(other))
        return NotImplemented

    def __neg__(self) -> Scalar:
        return Scalar(-self._v)

    def inverse(self) -> Scalar:
        if self._v == 0:
            raise ZeroDivisionError("zero has no inverse mod q")
        return Scalar(pow(self._v, -1, Q))

    def __truediv__(self, other):
        if isinstance(other, (Scalar, int)):
            return self * Scalar(other).inverse()
        return NotImplemented

    def __eq__(self, other) -> bool:
        if isinstance(other, Scalar):
            return self._v == other._v
        if isinstance(other, int):
            return self._v == other % Q
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Scalar", self._v))

    def __repr__(self) -> str:
        return f"Scalar(0x{self._v:064x})"

    def to_bytes(self) -> bytes:
        return self._v.to_bytes(SCALAR_LEN, "big")

    def hex(self) -> str:
        return self.to_bytes().hex()


class GroupElement:
    """Point of the secp256k1 group, identity included. Immutable.

    ``_pk`` is the coincurve key, or ``None`` for the identity.
    """

    __slots__ = ("_pk", "_enc")

    def __init__(self, pk: PublicKey | None, enc: bytes | None = None):
        object.__setattr__(self, "_pk", pk)
        if enc is None:
            enc = _IDENTITY_BYTES if pk is None else pk.format(compressed=True)
        object.__setattr__(self, "_enc", enc)

    def __setattr__(self, name, value):
        raise AttributeError("GroupElement is immutable")

    @property
    def is_identity(self) -> bool:
        return self._pk is None

    def __add__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        if self._pk is None:
            return other
        if other._pk is None:
            return self
        try:
            return GroupElement(PublicKey.combine_keys([self._pk, other._pk]))
        except ValueError:
            # only possible when other == -self
            return IDENTITY

    def __neg__(self) -> GroupElement:
        if self._pk is None:
            return self
        enc = bytes([self._enc[0] ^ 1]) + self._enc[1:]
        return GroupElement(PublicKey(enc), enc)

    def __sub__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self + (-other)

    def __rmul__(self, k):
        if isinstance(k, Scalar):
            k = k.value
        elif isinstance(k, int):
            k %= Q
        else:
            return NotImplemented
        if k == 0 or self._pk is None:
            return IDENTITY
        kb = k.to_bytes(SCALAR_LEN, "big")
        if self is G:
            return GroupElement(PublicKey.from_secret(kb))
        return GroupElement(self._pk.multiply(kb))

    def __eq__(self, other) -> bool:
        if isinstance(other, GroupElement):
            return self._enc == other._enc
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._enc)

    def __repr__(self) -> str:
        return f"GroupElement({self._enc.hex()})"

    def to_bytes(self) -> bytes:
        return self._enc

    def hex(self) -> str:
        return self._enc.hex()


IDENTITY = GroupElement(None)
G = GroupElement(PublicKey.from_secret((1).to_bytes(SCALAR_LEN, "big")))


@dataclass(frozen=True)
class GroupParams:
    curve_id: str = CURVE_ID
    generator: GroupElement = G
    order_q: int = Q
    point_len: int = POINT_LEN
    scalar_len: int = SCALAR_LEN


SECP256K1 = GroupParams()


# -- encodings --------------------------------------------------------------

def encode_point(pt: GroupElement) -> bytes:
    return pt.to_bytes()


def decode_point(data: bytes) -> GroupElement:
    """Decode a 33-byte compressed point; 33 zero bytes denote the identity."""
    data = bytes(data)
    if len(data) != POINT_LEN:
        raise DecodeError(f"point encoding must be {POINT_LEN} bytes, got {len(data)}")
    if data == _IDENTITY_BYTES:
        return IDENTITY
    if data[0] not in (2, 3):
        raise DecodeError("point encoding must use a compressed prefix")
    try:
        pk = PublicKey(data)
    except ValueError as exc:
        raise DecodeError("point is not on the curve") from exc
    return GroupElement(pk, data)


def encode_scalar(s: Scalar) -> bytes:
    return s.to_bytes()


def decode_scalar(data: bytes) -> Scalar:
    data = bytes(data)
    if len(data) != SCALAR_LEN:
        raise DecodeError(f"scalar encoding must be {SCALAR_LEN} bytes, got {len(data)}")
    v = int.from_bytes(data, "big")
    if v >= Q:
        raise DecodeError("non-canonical scalar (>= q)")
    return Scalar(v)


# -- hashing ----------------------------------------------------------------

def tagged_hash_to_scalar(tag: bytes, data: bytes) -> Scalar:
    """SHA-256(tag || data || ctr) for ctr = 0, 1, ... until the value is in [1, q-1]."""
    for ctr in range(256):
        v = int.from_bytes(hashlib.sha256(tag + data + bytes([ctr])).digest(), "big")
        if 0 < v < Q:
            return Scalar(v)
    raise RuntimeError("hash_to_scalar exhausted its counter")  # probability ~2^-32000


def hash_to_scalar(data: bytes) -> Scalar:
    """The oracle H: bytes -> Z_q*."""
    return tagged_hash_to_scalar(TAG_H, data)


@lru_cache(maxsize=4096)
def hash_to_point(data: bytes) -> GroupElement:
    """The oracle H_p: bytes -> G \\ {O}, by try-and-increment.

    Candidate x = SHA-256("DSLRS/Hp" || data || ctr); the first x < p that
    lies on the curve is taken with the even-y root.
    """
    data = bytes(data)
    for ctr in range(256):
        digest = hashlib.sha256(TAG_HP + data + bytes([ctr])).digest()
        if int.from_bytes(digest, "big") >= P:
            continue
        enc = b"\x02" + digest
        try:
            return GroupElement(PublicKey(enc), enc)
        except ValueError:
            continue
    raise RuntimeError("hash_to_point exhausted its counter")


# -- randomness -------------------------------------------------------------

_SYSTEM_RNG = secrets.SystemRandom()


def default_rng():
    return _SYSTEM_RNG


def random_scalar(rng=None) -> Scalar:
    """Uniform element of Z_q*.

    ``rng`` needs a ``randrange`` method; ``random.Random(seed)`` is fine for
    reproducible tests but is not a cryptographic source.
    """
    rng = rng or _SYSTEM_RNG
    return Scalar(rng.randrange(1, Q))
