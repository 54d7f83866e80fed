"""Consent-management state machine over an append-only operation log.

Records move VALID -> REVOKED, VALID -> REVEALED or REVOKED -> REVEALED;
REVEALED is terminal. The persisted log is JSON lines: a ``genesis`` entry
carrying the public parameters and initial registry, then one entry per
accepted ``register``, ``publish``, ``revoke`` or ``reveal``. Rejected
operations are never logged, and the state is the fold of the log.
"""

from __future__ import annotations

import enum
import json
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from . import group, scheme, threshold
from .errors import (
    DuplicateActiveKeyImage,
    NotLinked,
    RecordNotValid,
    RevealInconsistent,
    UnknownRecord,
    VerifyFailed,
)
from .group import GroupElement
from .keys import PoP, Registry
from .params import PublicParams
from .scheme import DslrsSignature
from .threshold import DecryptionShare

REV = b"REV"


class Status(str, enum.Enum):
    VALID = "VALID"
    REVOKED = "REVOKED"
    REVEALED = "REVEALED"


ALLOWED = {
    (Status.VALID, Status.REVOKED),
    (Status.VALID, Status.REVEALED),
    (Status.REVOKED, Status.REVEALED),
}


@dataclass(frozen=True)
class ConsentRecord:
    consent_proof: bytes
    signature: DslrsSignature
    status: Status = Status.VALID
    revealed_signer: GroupElement | None = None

    def to_json(self) -> dict:
        return {
            "m": self.consent_proof.hex(),
            "sig": self.signature.to_bytes().hex(),
            "status": self.status.value,
            "revealed_signer": None if self.revealed_signer is None else self.revealed_signer.hex(),
        }


class ConsentLedger:
    """Single-writer ledger. Pass ``path`` to persist every accepted operation."""

    def __init__(self, pp: PublicParams, path: str | Path | None = None):
        if pp.registry is None:
            pp = pp.with_registry(Registry(pp.catalog, pp.n_min))
        # ledger mode always checks ring membership in the registry
        self.pp = replace(pp, registry_check=True)
        self.records: list[ConsentRecord] = []
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None
        self._replaying = False
        if self._path is not None and not self._path.exists():
            self._append({"op": "genesis", "params": self.pp.to_json(),
                          "registry": [k.hex() for k in self.pp.registry]})

    @property
    def registry(self) -> Registry:
        return self.pp.registry

    @property
    def net_public(self):
        return self.pp.net

    @property
    def catalog(self):
        return self.pp.catalog

    # -- persistence ------------------------------------------------------------

    def _append(self, entry: dict) -> None:
        if self._path is None or self._replaying:
            return
        with self._path.open("a") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    @classmethod
    def open(cls, path: str | Path) -> ConsentLedger:
        """Rebuild a ledger by replaying its log; later writes append to it."""
        path = Path(path)
        lines = [json.loads(ln) for ln in path.read_text().splitlines() if ln.strip()]
        if not lines or lines[0].get("op") != "genesis":
            raise ValueError(f"{path} does not start with a genesis entry")
        g = lines[0]
        pp = PublicParams.from_json(g["params"])
        keys = [group.decode_point(bytes.fromhex(h)) for h in g["registry"]]
        pp = pp.with_registry(Registry._trusted(pp.catalog, pp.n_min, keys))
        ledger = cls(pp, path)
        ledger._replaying = True
        try:
            for entry in lines[1:]:
                ledger._apply(entry)
        finally:
            ledger._replaying = False
        return ledger

    def _apply(self, e: dict) -> None:
        op = e["op"]
        if op == "register":
            self.register(bytes.fromhex(e["public"]), PoP.from_bytes(bytes.fromhex(e["pop"])))
        elif op == "publish":
            self.publish(bytes.fromhex(e["m"]), scheme.deserialize(bytes.fromhex(e["sig"]), self.pp))
        elif op == "revoke":
            self.revoke(e["record"], bytes.fromhex(e["m"]),
                        scheme.deserialize(bytes.fromhex(e["sig"]), self.pp))
        elif op == "reveal":
            self.reveal(e["record"], [DecryptionShare.from_bytes(bytes.fromhex(s)) for s in e["shares"]])
        else:
            raise ValueError(f"unknown ledger op {op!r}")

    def snapshot(self) -> bytes:
        """Canonical byte encoding of the whole state."""
        state = {
            "params": self.pp.to_json(),
            "registry": [k.hex() for k in self.registry],
            "records": [r.to_json() for r in self.records],
        }
        return json.dumps(state, sort_keys=True, separators=(",", ":")).encode()

    # -- operations -------------------------------------------------------------

    def register(self, public: GroupElement | bytes, pop: PoP) -> GroupElement:
        with self._lock:
            pt = self.registry.register(public, pop)
            self._append({"op": "register", "public": pt.hex(), "pop": pop.to_bytes().hex()})
            return pt

    def _get(self, record_id: int) -> ConsentRecord:
        if not isinstance(record_id, int) or not 0 <= record_id < len(self.records):
            raise UnknownRecord(record_id)
        return self.records[record_id]

    def _active_key_image(self, sig: DslrsSignature) -> int | None:
        for i, r in enumerate(self.records):
            if (r.status is Status.VALID and r.signature.sid == sig.sid
                    and r.signature.key_image == sig.key_image):
                return i
        return None

    def _transition(self, record_id: int, new: Status, **changes) -> None:
        old = self.records[record_id]
        if (old.status, new) not in ALLOWED:
            raise RecordNotValid(f"record {record_id}: {old.status.value} -> {new.value} not allowed")
        self.records[record_id] = replace(old, status=new, **changes)

    def publish(self, m: bytes, sig: DslrsSignature) -> int:
        with self._lock:
            if not scheme.verify(m, sig, self.pp):
                raise VerifyFailed("signature does not verify")
            dup = self._active_key_image(sig)
            if dup is not None:
                raise DuplicateActiveKeyImage(f"key image already VALID in record {dup}; use revoke")
            self.records.append(ConsentRecord(bytes(m), sig))
            self._append({"op": "publish", "m": bytes(m).hex(), "sig": sig.to_bytes().hex()})
            return len(self.records) - 1

    def revoke(self, record_id: int, m_new: bytes, sig_new: DslrsSignature) -> int:
        """Revoke ``record_id`` with a linked signature; ``m_new`` is ``b"REV"`` or a new consent proof."""
        with self._lock:
            old = self._get(record_id)
            if old.status is not Status.VALID:
                raise RecordNotValid(f"record {record_id} is {old.status.value}")
            if not scheme.verify(m_new, sig_new, self.pp):
                raise VerifyFailed("replacement signature does not verify")
            if not scheme.link(old.signature, old.consent_proof, sig_new, m_new, self.pp):
                raise NotLinked(f"signature is not linked to record {record_id}")
            self._transition(record_id, Status.REVOKED)
            self.records.append(ConsentRecord(bytes(m_new), sig_new))
            self._append({"op": "revoke", "record": record_id, "m": bytes(m_new).hex(),
                          "sig": sig_new.to_bytes().hex()})
            return len(self.records) - 1

    def reveal(self, record_id: int, shares: Sequence[DecryptionShare]) -> GroupElement:
        with self._lock:
            rec = self._get(record_id)
            if rec.status is Status.REVEALED:
                raise RecordNotValid(f"record {record_id} is already REVEALED")
            signer = threshold.deanonymize(rec.signature, shares, self.net_public)
            if signer not in rec.signature.ring:
                raise RevealInconsistent(f"record {record_id}: deanonymized key is not a ring member")
            self._transition(record_id, Status.REVEALED, revealed_signer=signer)
            self._append({"op": "reveal", "record": record_id,
                          "shares": [s.to_bytes().hex() for s in shares]})
            return signer

    def status(self, record_id: int | None = None):
        if record_id is not None:
            return self._get(record_id).status
        return [r.status for r in self.records]
