"""k-of-N network key: Shamir dealer keygen, Lagrange reconstruction, threshold
ElGamal decryption of the (C1, C2) tuple embedded in a signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import group
from .errors import (
    DecodeError,
    DuplicateIndex,
    InvalidSignature,
    InvalidThreshold,
    UnknownIndex,
    WrongShareCount,
)
from .group import G, IDENTITY, GroupElement, Scalar


@dataclass(frozen=True)
class NetShare:
    index: Scalar
    secret_share: Scalar

    def __post_init__(self):
        if not self.index:
            raise ValueError("share index must be nonzero")

    def to_line(self) -> str:
        return f"{self.index.hex()}:{self.secret_share.hex()}"

    @classmethod
    def from_line(cls, line: str) -> NetShare:
        try:
            a, b = line.strip().split(":")
            return cls(group.decode_scalar(bytes.fromhex(a)),
                       group.decode_scalar(bytes.fromhex(b)))
        except ValueError as exc:
            raise DecodeError(f"bad share line: {line!r}") from exc


@dataclass(frozen=True)
class NetPublic:
    p_net: GroupElement
    indices: tuple[Scalar, ...]
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= len(self.indices):
            raise InvalidThreshold(f"need 1 <= k <= N, got k={self.k}, N={len(self.indices)}")
        if any(not w for w in self.indices) or len(set(self.indices)) != len(self.indices):
            raise InvalidThreshold("indices must be distinct and nonzero")

    @property
    def n_nodes(self) -> int:
        return len(self.indices)

    def to_json(self) -> dict:
        return {
            "p_net": self.p_net.hex(),
            "indices": [w.hex() for w in self.indices],
            "k": self.k,
        }

    @classmethod
    def from_json(cls, d: dict) -> NetPublic:
        return cls(
            group.decode_point(bytes.fromhex(d["p_net"])),
            tuple(group.decode_scalar(bytes.fromhex(w)) for w in d["indices"]),
            int(d["k"]),
        )


@dataclass(frozen=True)
class DecryptionShare:
    index: Scalar
    share_point: GroupElement

    def to_bytes(self) -> bytes:
        """Wire form: omega_j (32) || D_j (33)."""
        return self.index.to_bytes() + self.share_point.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> DecryptionShare:
        if len(data) != group.SCALAR_LEN + group.POINT_LEN:
            raise DecodeError("decryption share must be 65 bytes")
        return cls(group.decode_scalar(data[: group.SCALAR_LEN]),
                   group.decode_point(data[group.SCALAR_LEN:]))


def eval_poly(coeffs: Sequence[Scalar], x: Scalar) -> Scalar:
    acc = Scalar(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def dealer_keygen(k: int, n_nodes: int, rng=None) -> tuple[NetPublic, list[NetShare]]:
    """Trusted-dealer Shamir sharing of a fresh S_net at omega_j = 1..N."""
    if n_nodes < 1 or not 1 <= k <= n_nodes:
        raise InvalidThreshold(f"need 1 <= k <= N, got k={k}, N={n_nodes}")
    coeffs = [group.random_scalar(rng) for _ in range(k)]
    indices = tuple(Scalar(j) for j in range(1, n_nodes + 1))
    shares = [NetShare(w, eval_poly(coeffs, w)) for w in indices]
    return NetPublic(coeffs[0] * G, indices, k), shares


def lagrange_coeffs(indices: Sequence[Scalar]) -> list[Scalar]:
    """lambda_j = prod_{i != j} w_i / (w_i - w_j), i.e. interpolation at 0."""
    idx = [Scalar(w) for w in indices]
    if len(set(idx)) != len(idx):
        raise DuplicateIndex("share indices must be distinct")
    if any(not w for w in idx):
        raise ValueError("share indices must be nonzero")
    out = []
    for j, wj in enumerate(idx):
        num, den = Scalar(1), Scalar(1)
        for i, wi in enumerate(idx):
            if i != j:
                num = num * wi
                den = den * (wi - wj)
        out.append(num * den.inverse())
    return out


def reconstruct_secret(shares: Sequence[NetShare]) -> Scalar:
    lam = lagrange_coeffs([s.index for s in shares])
    return sum((l * s.secret_share for l, s in zip(lam, shares)), Scalar(0))


def decryption_share(share: NetShare, c1: GroupElement) -> DecryptionShare:
    return DecryptionShare(share.index, share.secret_share * c1)


def combine_shares(shares: Sequence[DecryptionShare]) -> GroupElement:
    """V = sum lambda_j * D_j."""
    lam = lagrange_coeffs([d.index for d in shares])
    v = IDENTITY
    for l, d in zip(lam, shares):
        v = v + l * d.share_point
    return v


def deanonymize(sig, shares: Sequence[DecryptionShare], net: NetPublic,
                message: bytes | None = None, pp=None) -> GroupElement:
    """Return C2 - sum(lambda_j * D_j) for exactly ``net.k`` shares.

    Share correctness is not checked; a corrupted share gives a wrong point
    that callers detect by ring membership. When ``message`` and ``pp`` are
    given the signature is verified first.
    """
    if message is not None and pp is not None:
        from .scheme import verify
        if not verify(message, sig, pp):
            raise InvalidSignature("signature does not verify")
    if len(shares) != net.k:
        raise WrongShareCount(f"expected {net.k} shares, got {len(shares)}")
    seen = set()
    known = set(net.indices)
    for d in shares:
        if d.index in seen:
            raise DuplicateIndex(f"duplicate share index {int(d.index)}")
        if d.index not in known:
            raise UnknownIndex(f"share index {int(d.index)} not published")
        seen.add(d.index)
    return sig.c2 - combine_shares(shares)


def save_shares(shares: Sequence[NetShare], path: str | Path) -> None:
    Path(path).write_text("".join(s.to_line() + "\n" for s in shares))


def load_shares(path: str | Path) -> list[NetShare]:
    return [NetShare.from_line(ln) for ln in Path(path).read_text().splitlines() if ln.strip()]
