"""Public parameters and whole-system setup."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from . import group
from .errors import DecodeError
from .keys import DEFAULT_N_MIN, KeyPair, Registry, ScopeCatalog, gen_keypair, pop_create
from .threshold import NetPublic, NetShare, dealer_keygen


@dataclass(frozen=True)
class PublicParams:
    """Everything a verifier needs.

    ``registry_check`` toggles the ring-subset-of-registry test; it is
    forced off when no registry is attached.
    """

    catalog: ScopeCatalog
    net: NetPublic
    n_min: int = DEFAULT_N_MIN
    registry: Registry | None = None
    registry_check: bool = True

    @property
    def p_net(self):
        return self.net.p_net

    @property
    def checks_registry(self) -> bool:
        return self.registry_check and self.registry is not None

    def without_registry_check(self) -> PublicParams:
        return replace(self, registry_check=False)

    def with_registry(self, registry: Registry) -> PublicParams:
        return replace(self, registry=registry)

    def to_json(self) -> dict:
        return {
            "curve": group.CURVE_ID,
            "n_min": self.n_min,
            "sids": [s.hex() for s in self.catalog.sids],
            "net": self.net.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict, registry: Registry | None = None) -> PublicParams:
        if d.get("curve") != group.CURVE_ID:
            raise DecodeError(f"unsupported curve {d.get('curve')!r}")
        catalog = ScopeCatalog(tuple(group.decode_scalar(bytes.fromhex(s)) for s in d["sids"]))
        return cls(catalog, NetPublic.from_json(d["net"]), int(d["n_min"]), registry)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path, registry: Registry | None = None) -> PublicParams:
        return cls.from_json(json.loads(Path(path).read_text()), registry)


@dataclass
class System:
    pp: PublicParams
    users: list[KeyPair]
    net_shares: list[NetShare]

    @property
    def registry(self) -> Registry:
        return self.pp.registry


def setup(n_users: int, n_nodes: int = 1, k: int = 1, n_scopes: int = 1,
          n_min: int = DEFAULT_N_MIN, rng=None) -> System:
    """Dealer-mode setup: scopes, network key, ``n_users`` PoP-registered users."""
    catalog = ScopeCatalog.generate(n_scopes, rng)
    net, shares = dealer_keygen(k, n_nodes, rng)
    registry = Registry(catalog, n_min)
    users = []
    for _ in range(n_users):
        kp = gen_keypair(rng)
        registry.register(kp.public, pop_create(kp, catalog, rng))
        users.append(kp)
    return System(PublicParams(catalog, net, n_min, registry), users, shares)
