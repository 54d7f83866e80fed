"""Command-line interface.

On-disk formats:
  params     JSON (curve, n_min, scope ids, network public key)
  registry   "# dslrs-registry curve=.. n_min=.." header, one hex point per line
  key        raw 65 bytes: secret (32) || public (33)
  signature  raw wire bytes (97n + 198)
  shares     "hex(omega):hex(share)" per line
  dshares    one hex decryption share (omega(32) || D(33)) per line
  ledger     JSON lines, see dslrs.ledger

Default paths may be supplied by a JSON file named in $DSLRS_CONFIG with
keys ``params``, ``registry``, ``shares`` and ``ledger``. ``--seed`` makes a
run reproducible and is meant for tests only.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from . import group, scheme, threshold
from .errors import DslrsError
from .keys import KeyPair, PoP, Registry, ScopeCatalog, gen_keypair, pop_create
from .ledger import ConsentLedger
from .network import Network
from .params import PublicParams
from .threshold import DecryptionShare

CONFIG_ENV = "DSLRS_CONFIG"


@dataclass
class CliConfig:
    params: Path = Path("params.json")
    registry: Path = Path("registry.txt")
    shares: Path = Path("shares.txt")
    ledger: Path = Path("ledger.jsonl")
    n_min: int = 2
    curve_id: str = group.CURVE_ID
    registry_check: bool = True
    seed: int | None = None

    @classmethod
    def from_args(cls, args) -> CliConfig:
        cfg = cls()
        env = os.environ.get(CONFIG_ENV)
        if env:
            for key, val in json.loads(Path(env).read_text()).items():
                if key in ("params", "registry", "shares", "ledger"):
                    setattr(cfg, key, Path(val))
        for key in ("params", "registry", "shares", "ledger"):
            val = getattr(args, key, None)
            if val is not None:
                setattr(cfg, key, Path(val))
        cfg.registry_check = not getattr(args, "no_registry_check", False)
        cfg.seed = getattr(args, "seed", None)
        return cfg

    def rng(self):
        return random.Random(self.seed) if self.seed is not None else group.default_rng()


class CliError(Exception):
    pass


# -- helpers -------------------------------------------------------------------

def _load_pp(cfg: CliConfig, with_registry: bool = True) -> PublicParams:
    pp = PublicParams.load(cfg.params)
    if with_registry and cfg.registry.exists():
        pp = pp.with_registry(Registry.load(cfg.registry, pp.catalog))
    if not cfg.registry_check:
        pp = pp.without_registry_check()
    return pp


def _message(args) -> bytes:
    if getattr(args, "message_file", None):
        return Path(args.message_file).read_bytes()
    if getattr(args, "message", None) is not None:
        return args.message.encode()
    raise CliError("one of --message / --message-file is required")


def _scope(catalog: ScopeCatalog, value: str) -> group.Scalar:
    """Accept a 1-based catalog position or a 64-hex-digit scope id."""
    if value.isdigit() and len(value) < 8:
        i = int(value)
        if not 1 <= i <= len(catalog.sids):
            raise CliError(f"scope index {i} outside 1..{len(catalog.sids)}")
        return catalog.sids[i - 1]
    return group.decode_scalar(bytes.fromhex(value))


def _read_points(path: str | Path) -> list[group.GroupElement]:
    return [group.decode_point(bytes.fromhex(ln.strip()))
            for ln in Path(path).read_text().splitlines()
            if ln.strip() and not ln.startswith("#")]


def _read_dshares(args) -> list[DecryptionShare]:
    hexes = list(args.dshare or [])
    if args.dshares:
        hexes += [ln.strip() for ln in Path(args.dshares).read_text().splitlines() if ln.strip()]
    return [DecryptionShare.from_bytes(bytes.fromhex(h)) for h in hexes]


def _out(obj) -> None:
    if isinstance(obj, (dict, list)):
        print(json.dumps(obj, indent=2))
    else:
        print(obj)


# -- commands ------------------------------------------------------------------

def cmd_setup(args, cfg):
    rng = cfg.rng()
    catalog = ScopeCatalog.generate(args.scopes, rng)
    net, shares = threshold.dealer_keygen(args.k, args.nodes, rng)
    pp = PublicParams(catalog, net, args.n_min)
    pp.save(cfg.params)
    Registry(catalog, args.n_min).save(cfg.registry)
    threshold.save_shares(shares, cfg.shares)
    _out(pp.to_json())


def cmd_keygen(args, cfg):
    kp = gen_keypair(cfg.rng())
    Path(args.out).write_bytes(kp.to_bytes())
    _out(kp.public.hex())


def cmd_register(args, cfg):
    pp = PublicParams.load(cfg.params)
    reg = Registry.load(cfg.registry, pp.catalog) if cfg.registry.exists() else Registry(pp.catalog, pp.n_min)
    if args.key:
        kp = KeyPair.from_bytes(Path(args.key).read_bytes())
        public, pop = kp.public, pop_create(kp, pp.catalog, cfg.rng())
    elif args.public and args.pop:
        public, pop = bytes.fromhex(args.public), PoP.from_bytes(bytes.fromhex(args.pop))
    else:
        raise CliError("register needs --key, or --public with --pop")
    pt = reg.register(public, pop)
    reg.save(cfg.registry)
    _out({"public": pt.hex(), "pop": pop.to_bytes().hex(), "registry_size": len(reg)})


def cmd_pop(args, cfg):
    pp = PublicParams.load(cfg.params)
    kp = KeyPair.from_bytes(Path(args.key).read_bytes())
    _out(pop_create(kp, pp.catalog, cfg.rng()).to_bytes().hex())


def cmd_image(args, cfg):
    pp = PublicParams.load(cfg.params)
    kp = KeyPair.from_bytes(Path(args.key).read_bytes())
    _out(scheme.key_image(kp.secret, kp.public, _scope(pp.catalog, args.scope)).hex())


def cmd_sign(args, cfg):
    pp = _load_pp(cfg)
    rng = cfg.rng()
    kp = KeyPair.from_bytes(Path(args.key).read_bytes())
    if args.ring:
        ring = _read_points(args.ring)
    elif args.ring_size:
        if pp.registry is None:
            raise CliError("--ring-size samples from the registry, which is missing")
        others = [p for p in pp.registry if p != kp.public]
        if args.ring_size - 1 > len(others):
            raise CliError(f"registry holds only {len(others)} other keys")
        ring = rng.sample(others, args.ring_size - 1) + [kp.public]
    else:
        raise CliError("one of --ring / --ring-size is required")
    if not args.no_shuffle:
        rng.shuffle(ring)
    sig = scheme.sign(_message(args), kp.secret, ring, _scope(pp.catalog, args.scope), pp, rng)
    data = scheme.serialize(sig)
    Path(args.out).write_bytes(data)
    _out({"out": str(args.out), "ring_size": sig.n, "bytes": len(data),
          "payload_bytes": scheme.payload_size(sig.n), "key_image": sig.key_image.hex()})


def cmd_verify(args, cfg):
    pp = _load_pp(cfg)
    ok = scheme.verify_bytes(_message(args), Path(args.sig).read_bytes(), pp)
    _out(int(ok))
    return 0 if ok else 1


def cmd_link(args, cfg):
    pp = _load_pp(cfg)
    try:
        s1 = scheme.deserialize(Path(args.sig1).read_bytes(), pp)
        s2 = scheme.deserialize(Path(args.sig2).read_bytes(), pp)
    except DslrsError:
        _out(0)
        return 1
    linked = scheme.link(s1, args.m1.encode(), s2, args.m2.encode(), pp)
    _out(int(linked))
    return 0 if linked else 1


def cmd_net_keygen(args, cfg):
    pp = PublicParams.load(cfg.params)
    if args.mode == "dealer":
        net, shares = threshold.dealer_keygen(args.k, args.nodes, cfg.rng())
    else:
        behaviors = json.loads(args.behaviors) if args.behaviors else None
        sim = Network(args.nodes, behaviors, seed=cfg.seed if cfg.seed is not None else os.urandom(16).hex(),
                      complaints=args.complaints)
        net, by_node = sim.run_dkg(args.k)
        shares = [by_node[j] for j in sorted(by_node)]
    PublicParams(pp.catalog, net, pp.n_min).save(cfg.params)
    threshold.save_shares(shares, cfg.shares)
    _out(net.to_json())


def cmd_share(args, cfg):
    shares = {int(s.index): s for s in threshold.load_shares(cfg.shares)}
    if args.node not in shares:
        raise CliError(f"no share for node {args.node}")
    sig = scheme.deserialize(Path(args.sig).read_bytes())
    d = threshold.decryption_share(shares[args.node], sig.c1)
    line = d.to_bytes().hex()
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(line + "\n")
    _out(line)


def cmd_deanonymize(args, cfg):
    pp = _load_pp(cfg)
    sig = scheme.deserialize(Path(args.sig).read_bytes(), pp)
    msg = _message(args) if (args.message is not None or args.message_file) else None
    signer = threshold.deanonymize(sig, _read_dshares(args), pp.net, message=msg,
                                   pp=pp if msg is not None else None)
    _out({"signer": signer.hex(), "in_ring": signer in sig.ring})


def _open_ledger(cfg) -> ConsentLedger:
    if cfg.ledger.exists():
        return ConsentLedger.open(cfg.ledger)
    return ConsentLedger(_load_pp(cfg), cfg.ledger)


def cmd_ledger(args, cfg):
    led = _open_ledger(cfg)
    if args.action == "publish":
        sig = scheme.deserialize(Path(args.sig).read_bytes(), led.pp)
        _out({"record": led.publish(_message(args), sig)})
    elif args.action == "revoke":
        sig = scheme.deserialize(Path(args.sig).read_bytes(), led.pp)
        msg = _message(args) if (args.message is not None or args.message_file) else b"REV"
        _out({"record": led.revoke(args.record, msg, sig)})
    elif args.action == "reveal":
        signer = led.reveal(args.record, _read_dshares(args))
        _out({"record": args.record, "signer": signer.hex()})
    else:
        recs = led.records if args.record is None else [led._get(args.record)]
        base = 0 if args.record is None else args.record
        _out([{"record": base + i, "status": r.status.value, "m": r.consent_proof.hex(),
               "key_image": r.signature.key_image.hex(),
               "revealed_signer": r.revealed_signer.hex() if r.revealed_signer else None}
              for i, r in enumerate(recs)])


def run_scenario(scenario: dict, transcript: str | Path | None = None) -> dict:
    """Drive the network simulator from a scenario description.

    Keys: ``nodes``, ``k``, ``seed``, optional ``behaviors`` ({id: behavior}),
    ``complaints``, ``keygen`` ("dkg" or "dealer"), ``signatures`` (count),
    ``ring_size``.
    """
    seed = scenario.get("seed", 0)
    rng = random.Random(f"{seed}/scenario")
    sim = Network(scenario["nodes"], scenario.get("behaviors"), seed, scenario.get("complaints", False))
    k = scenario["k"]
    if scenario.get("keygen", "dkg") == "dealer":
        net, shares = threshold.dealer_keygen(k, scenario["nodes"], rng)
        sim.install_shares(net, shares)
    else:
        net, _ = sim.run_dkg(k)
    ring_size = scenario.get("ring_size", 4)
    n_sigs = scenario.get("signatures", 1)
    catalog = ScopeCatalog.generate(1, rng)
    users = [gen_keypair(rng) for _ in range(ring_size)]
    pp = PublicParams(catalog, net, min(2, ring_size))
    results = []
    for i in range(n_sigs):
        signer = users[i % ring_size]
        sig = scheme.sign(b"scenario-%d" % i, signer.secret, [u.public for u in users],
                          catalog.signing_sids[0], pp, rng)
        try:
            got = sim.request_deanonymization(sig, requester=scenario.get("requester", "scenario"))
            results.append({"signature": i, "ok": got == signer.public, "signer": got.hex()})
        except DslrsError as exc:
            results.append({"signature": i, "ok": False, "error": f"{type(exc).__name__}: {exc}"})
    if transcript:
        sim.save_transcript(transcript)
    return {"p_net": net.p_net.hex(), "k": k, "nodes": scenario["nodes"],
            "messages": len(sim.transcript), "results": results,
            "all_ok": all(r["ok"] for r in results)}


def cmd_simulate(args, cfg):
    summary = run_scenario(json.loads(Path(args.scenario).read_text()), args.transcript)
    _out(summary)
    return 0 if summary["all_ok"] else 1


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params")
    common.add_argument("--registry")
    common.add_argument("--shares")
    common.add_argument("--ledger")
    common.add_argument("--seed", type=int, help="deterministic randomness (tests only)")
    common.add_argument("--no-registry-check", action="store_true")

    msg = argparse.ArgumentParser(add_help=False)
    msg.add_argument("--message", "-m")
    msg.add_argument("--message-file")

    dsh = argparse.ArgumentParser(add_help=False)
    dsh.add_argument("--dshare", action="append", help="hex decryption share (repeatable)")
    dsh.add_argument("--dshares", help="file with one hex decryption share per line")

    p = argparse.ArgumentParser(prog="dslrs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("setup", parents=[common])
    s.add_argument("--scopes", type=int, default=1, help="number of signing scopes")
    s.add_argument("--n-min", type=int, default=2)
    s.add_argument("--nodes", type=int, default=1)
    s.add_argument("--k", type=int, default=1)
    s.set_defaults(func=cmd_setup)

    s = sub.add_parser("keygen", parents=[common])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_keygen)

    s = sub.add_parser("register", parents=[common])
    s.add_argument("--key")
    s.add_argument("--public")
    s.add_argument("--pop")
    s.set_defaults(func=cmd_register)

    s = sub.add_parser("pop", parents=[common])
    s.add_argument("--key", required=True)
    s.set_defaults(func=cmd_pop)

    s = sub.add_parser("image", parents=[common])
    s.add_argument("--key", required=True)
    s.add_argument("--scope", required=True)
    s.set_defaults(func=cmd_image)

    s = sub.add_parser("sign", parents=[common, msg])
    s.add_argument("--key", required=True)
    s.add_argument("--scope", required=True)
    s.add_argument("--ring")
    s.add_argument("--ring-size", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--no-shuffle", action="store_true")
    s.set_defaults(func=cmd_sign)

    s = sub.add_parser("verify", parents=[common, msg])
    s.add_argument("--sig", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("link", parents=[common])
    s.add_argument("--sig1", required=True)
    s.add_argument("--m1", required=True)
    s.add_argument("--sig2", required=True)
    s.add_argument("--m2", required=True)
    s.set_defaults(func=cmd_link)

    s = sub.add_parser("net-keygen", parents=[common])
    s.add_argument("--mode", choices=["dealer", "dkg"], default="dealer")
    s.add_argument("--nodes", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--behaviors", help='JSON object, e.g. \'{"2": "silent"}\'')
    s.add_argument("--complaints", action="store_true")
    s.set_defaults(func=cmd_net_keygen)

    s = sub.add_parser("share", parents=[common])
    s.add_argument("--node", type=int, required=True)
    s.add_argument("--sig", required=True)
    s.add_argument("--out", help="append the share line to this file")
    s.set_defaults(func=cmd_share)

    s = sub.add_parser("deanonymize", parents=[common, msg, dsh])
    s.add_argument("--sig", required=True)
    s.set_defaults(func=cmd_deanonymize)

    s = sub.add_parser("ledger", parents=[common, msg, dsh])
    s.add_argument("action", choices=["publish", "revoke", "reveal", "status"])
    s.add_argument("--sig")
    s.add_argument("--record", type=int)
    s.set_defaults(func=cmd_ledger)

    s = sub.add_parser("simulate", parents=[common])
    s.add_argument("--scenario", required=True)
    s.add_argument("--transcript")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "ledger" and args.action in ("publish", "revoke") and not args.sig:
        parser.error("ledger publish/revoke need --sig")
    if args.command == "ledger" and args.action in ("revoke", "reveal") and args.record is None:
        parser.error(f"ledger {args.action} needs --record")
    cfg = CliConfig.from_args(args)
    try:
        rc = args.func(args, cfg)
    except (DslrsError, CliError, OSError, ValueError, KeyError) as exc:
        reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {type(exc).__name__}: {reason}", file=sys.stderr)
        return 1
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
