"""User key pairs, Schnorr proof of possession, the key registry and scope catalog."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import group
from .errors import (
    DecodeError,
    DuplicateKey,
    IdentityPoint,
    InvalidPoP,
    NotInSubgroup,
)
from .group import G, GroupElement, Scalar

TAG_POP = b"DSLRS/PoP"
KEYFILE_LEN = group.SCALAR_LEN + group.POINT_LEN
DEFAULT_N_MIN = 2


@dataclass(frozen=True)
class KeyPair:
    secret: Scalar
    public: GroupElement

    def __post_init__(self):
        if not self.secret:
            raise ValueError("secret key must be nonzero")
        if self.secret * G != self.public:
            raise ValueError("public key does not match secret")

    @classmethod
    def from_secret(cls, secret: Scalar | int) -> KeyPair:
        secret = Scalar(secret)
        return cls(secret, secret * G)

    def to_bytes(self) -> bytes:
        """Key file framing: secret (32) || public (33)."""
        return self.secret.to_bytes() + self.public.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> KeyPair:
        if len(data) != KEYFILE_LEN:
            raise DecodeError(f"key file must be {KEYFILE_LEN} bytes")
        secret = group.decode_scalar(data[: group.SCALAR_LEN])
        public = group.decode_point(data[group.SCALAR_LEN:])
        try:
            return cls(secret, public)
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc


def gen_keypair(rng=None) -> KeyPair:
    return KeyPair.from_secret(group.random_scalar(rng))


@dataclass(frozen=True)
class ScopeCatalog:
    """Scope identifiers; ``sids[0]`` is SID_1, reserved for key registration."""

    sids: tuple[Scalar, ...]

    def __post_init__(self):
        if not self.sids:
            raise ValueError("catalog needs at least the registration scope")
        if len(set(self.sids)) != len(self.sids):
            raise ValueError("scope identifiers must be distinct")

    @property
    def registration_sid(self) -> Scalar:
        return self.sids[0]

    @property
    def signing_sids(self) -> tuple[Scalar, ...]:
        return self.sids[1:]

    def is_signing_scope(self, sid: Scalar) -> bool:
        return sid in self.sids[1:]

    @classmethod
    def generate(cls, n_scopes: int, rng=None) -> ScopeCatalog:
        """Registration scope plus ``n_scopes`` random signing scopes."""
        sids: list[Scalar] = []
        while len(sids) < n_scopes + 1:
            s = group.random_scalar(rng)
            if s not in sids:
                sids.append(s)
        return cls(tuple(sids))


@dataclass(frozen=True)
class PoP:
    commitment: GroupElement
    response: Scalar

    def to_bytes(self) -> bytes:
        return self.commitment.to_bytes() + self.response.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> PoP:
        if len(data) != group.POINT_LEN + group.SCALAR_LEN:
            raise DecodeError("PoP must be 65 bytes")
        return cls(group.decode_point(data[: group.POINT_LEN]),
                   group.decode_scalar(data[group.POINT_LEN:]))


def pop_message(public: GroupElement, catalog: ScopeCatalog) -> Scalar:
    """m_i = H(P_i || SID_1)."""
    return group.hash_to_scalar(public.to_bytes() + catalog.registration_sid.to_bytes())


def _pop_challenge(public: GroupElement, commitment: GroupElement, msg: Scalar) -> Scalar:
    data = G.to_bytes() + public.to_bytes() + commitment.to_bytes() + msg.to_bytes()
    return group.tagged_hash_to_scalar(TAG_POP, data)


def pop_create(kp: KeyPair, catalog: ScopeCatalog, rng=None) -> PoP:
    nonce = group.random_scalar(rng)
    commitment = nonce * G
    e = _pop_challenge(kp.public, commitment, pop_message(kp.public, catalog))
    return PoP(commitment, nonce + e * kp.secret)


def pop_verify(public: GroupElement, pop: PoP, catalog: ScopeCatalog) -> bool:
    if public.is_identity or pop.commitment.is_identity:
        return False
    e = _pop_challenge(public, pop.commitment, pop_message(public, catalog))
    return pop.response * G == pop.commitment + e * public


class Registry:
    """The global key list. Entries are only added through :meth:`register`."""

    def __init__(self, catalog: ScopeCatalog, n_min: int = DEFAULT_N_MIN):
        if n_min < 1:
            raise ValueError("n_min must be >= 1")
        self.catalog = catalog
        self.n_min = n_min
        self._keys: list[GroupElement] = []
        self._index: set[GroupElement] = set()
        self._lock = threading.Lock()

    @property
    def keys(self) -> tuple[GroupElement, ...]:
        return tuple(self._keys)

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, pt) -> bool:
        return pt in self._index

    def __iter__(self):
        return iter(tuple(self._keys))

    def contains_all(self, pts: Iterable[GroupElement]) -> bool:
        return all(p in self._index for p in pts)

    def register(self, public: GroupElement | bytes, pop: PoP) -> GroupElement:
        """Admit ``public`` after subgroup, identity, duplicate and PoP checks.

        ``public`` may be raw 33-byte encoding; undecodable bytes count as
        failing subgroup membership.
        """
        if not isinstance(public, GroupElement):
            try:
                public = group.decode_point(public)
            except DecodeError as exc:
                raise NotInSubgroup(str(exc)) from exc
        if public.is_identity:
            raise IdentityPoint("identity element cannot be registered")
        with self._lock:
            if public in self._index:
                raise DuplicateKey(public.hex())
            if not pop_verify(public, pop, self.catalog):
                raise InvalidPoP(public.hex())
            self._keys.append(public)
            self._index.add(public)
        return public

    # -- persistence --------------------------------------------------------
    # header: "# dslrs-registry curve=<id> n_min=<n>", then one hex point per line.
    # PoPs are checked on admission and not stored; a loaded file is trusted.

    def dumps(self) -> str:
        lines = [f"# dslrs-registry curve={group.CURVE_ID} n_min={self.n_min}"]
        lines += [k.hex() for k in self._keys]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str, catalog: ScopeCatalog) -> Registry:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# dslrs-registry"):
            raise DecodeError("missing registry header")
        fields = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
        if fields.get("curve") != group.CURVE_ID:
            raise DecodeError(f"registry curve {fields.get('curve')!r} unsupported")
        reg = cls(catalog, int(fields.get("n_min", DEFAULT_N_MIN)))
        for ln in lines[1:]:
            pt = group.decode_point(bytes.fromhex(ln))
            if pt.is_identity or pt in reg._index:
                raise DecodeError(f"invalid registry entry {ln}")
            reg._keys.append(pt)
            reg._index.add(pt)
        return reg

    @classmethod
    def load(cls, path: str | Path, catalog: ScopeCatalog) -> Registry:
        return cls.loads(Path(path).read_text(), catalog)

    @classmethod
    def _trusted(cls, catalog: ScopeCatalog, n_min: int, keys: Sequence[GroupElement]) -> Registry:
        # for ledger replay and tests that seed a registry without PoPs
        reg = cls(catalog, n_min)
        for k in keys:
            reg._keys.append(k)
            reg._index.add(k)
        return reg


def register_key(reg: Registry, public: GroupElement | bytes, pop: PoP) -> Registry:
    reg.register(public, pop)
    return reg
