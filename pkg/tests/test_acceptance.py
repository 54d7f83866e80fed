"""End-to-end acceptance checks. Each test prints one PASS/FAIL line, and the
lines are repeated in the terminal summary.
"""

import itertools
import random
import time
from dataclasses import replace

import pytest
from scipy.stats import ks_2samp

import conftest
import ledger_model
from dslrs import keys, scheme, threshold
from dslrs.errors import InvalidPoP, RevealInconsistent, WrongShareCount
from dslrs.group import G, Q
from dslrs.keys import PoP, gen_keypair, pop_create
from dslrs.ledger import ConsentLedger
from dslrs.network import Network, run_dkg
from dslrs.params import setup
from dslrs.scheme import DslrsSignature, link, serialize, sign, sign_traced, verify, verify_bytes


def report(num, title, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:>2}: {title}" + (f" ({detail})" if detail else "")
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def big():
    """32 registered users, 7-node k=4 network, two signing scopes."""
    return setup(n_users=32, n_nodes=7, k=4, n_scopes=2, rng=random.Random(31337))


def ring_with(sysm, signer, n, rng):
    others = [i for i in range(len(sysm.users)) if i != signer]
    idx = rng.sample(others, n - 1) + [signer]
    rng.shuffle(idx)
    return [sysm.users[i].public for i in idx]


def all_dshares(sysm, sig):
    return [threshold.decryption_share(s, sig.c1) for s in sysm.net_shares]


def test_c01_size_formula(big):
    rng = random.Random(1)
    sid = big.pp.catalog.signing_sids[0]
    t0 = time.perf_counter()
    got = {}
    for n in (8, 16, 32):
        sig = sign(b"size", big.users[0].secret, ring_with(big, 0, n, rng), sid, big.pp, rng)
        got[n] = (sig.payload_len(), len(serialize(sig)))
    elapsed = time.perf_counter() - t0
    ok = got == {8: (972, 974), 16: (1748, 1750), 32: (3300, 3302)} and elapsed < 1.0
    report(1, "payload 972/1748/3300 bytes at n=8/16/32", ok,
           f"payload+total {got}, {elapsed:.3f}s < 1s")


def test_c02_correctness_and_deanonymization(big):
    rng = random.Random(2)
    catalog = big.pp.catalog
    subsets = list(itertools.combinations(range(7), 4))
    failures = 0
    t0 = time.perf_counter()
    for i in range(1000):
        n = rng.randint(big.pp.n_min, 16)
        t = rng.randrange(len(big.users))
        sid = rng.choice(catalog.signing_sids)
        m = rng.randbytes(rng.randrange(1, 80))
        sig = sign(m, big.users[t].secret, ring_with(big, t, n, rng), sid, big.pp, rng)
        if not verify(m, sig, big.pp):
            failures += 1
            continue
        ds = all_dshares(big, sig)
        for sub in rng.sample(subsets, 20):
            if threshold.deanonymize(sig, [ds[j] for j in sub], big.pp.net) != big.users[t].public:
                failures += 1
    elapsed = time.perf_counter() - t0
    report(2, "1000 sign/verify round trips, 20 k-subsets each deanonymize correctly",
           failures == 0 and elapsed < 120, f"{failures} failures, {elapsed:.1f}s < 120s")


def test_c03_scoped_linkability(big):
    rng = random.Random(3)
    s1, s2 = big.pp.catalog.signing_sids[:2]
    pp = big.pp
    counts = {"same": 0, "diff_signer": 0, "diff_scope": 0}

    def one(a, b, sid_a, sid_b):
        sa = sign(b"m1", big.users[a].secret, ring_with(big, a, rng.randint(2, 10), rng), sid_a, pp, rng)
        sb = sign(b"m2", big.users[b].secret, ring_with(big, b, rng.randint(2, 10), rng), sid_b, pp, rng)
        return link(sa, b"m1", sb, b"m2", pp)

    for _ in range(200):
        a, b = rng.sample(range(32), 2)
        sid = rng.choice((s1, s2))
        counts["same"] += one(a, a, sid, sid) is True
        counts["diff_signer"] += one(a, b, sid, sid) is False
        counts["diff_scope"] += one(a, a, s1, s2) is False
    report(3, "scoped linkability over 3 x 200 pairs", counts == dict.fromkeys(counts, 200), str(counts))


def _mutants(big, rng, count):
    """Yield (message, mutated bytes, true signer) for single-byte mutations."""
    sid = big.pp.catalog.signing_sids[0]
    made = 0
    while made < count:
        t = rng.randrange(32)
        m = rng.randbytes(16)
        data = serialize(sign(m, big.users[t].secret, ring_with(big, t, rng.randint(2, 8), rng), sid, big.pp, rng))
        for _ in range(20):
            b = bytearray(data)
            b[rng.randrange(len(b))] ^= rng.randrange(1, 256)
            made += 1
            yield m, bytes(b), big.users[t].public


def test_c04_mutations_rejected(big):
    rng = random.Random(4)
    total = survivors = 0
    for m, data, _ in _mutants(big, rng, 400):
        total += 1
        survivors += verify_bytes(m, data, big.pp)
    report(4, "single-byte mutations never verify", total >= 200 and survivors == 0,
           f"{total} mutants, {survivors} survivors")


def test_c05_non_frameability(big):
    rng = random.Random(5)
    sid = big.pp.catalog.signing_sids[0]
    p_net = big.pp.p_net
    accepted = 0
    variants = 0
    for i in range(20):
        t = rng.randrange(32)
        ring = ring_with(big, t, rng.randint(3, 8), rng)
        fake = rng.choice([p for p in ring if p != big.users[t].public]) if i % 2 else gen_keypair(rng).public
        # dishonest signer: builds the whole challenge loop around the fake encapsulation
        tr = sign_traced(b"frame", big.users[t].secret, ring, sid, big.pp, rng, _encapsulate=fake)
        accepted += verify(b"frame", tr.signature, big.pp)
        # post-hoc substitution into an honest signature
        tr = sign_traced(b"frame", big.users[t].secret, ring, sid, big.pp, rng)
        s = tr.signature
        forged = DslrsSignature(s.key_image, s.ring, s.sid, s.p_net, s.c1, fake + tr.r_dean * p_net,
                                s.ch1, s.responses)
        accepted += verify(b"frame", forged, big.pp)
        variants += 2
    # across a mutation batch: nothing both verifies and opens to a non-signer
    framed = 0
    for m, data, signer in _mutants(big, rng, 200):
        if verify_bytes(m, data, big.pp):
            sig = scheme.deserialize(data, big.pp)
            if threshold.deanonymize(sig, all_dshares(big, sig)[:4], big.pp.net) != signer:
                framed += 1
    report(5, "C2 substitution with P_fake never verifies; no framing artifact",
           accepted == 0 and framed == 0, f"{variants} variants accepted={accepted}, framed={framed}")


def test_c06_threshold_behavior(big):
    rng = random.Random(6)
    sid = big.pp.catalog.signing_sids[0]
    sig = sign(b"t", big.users[9].secret, ring_with(big, 9, 6, rng), sid, big.pp, rng)
    ds = all_dshares(big, sig)
    outs = {threshold.deanonymize(sig, [ds[j] for j in sub], big.pp.net)
            for sub in itertools.combinations(range(7), 4)}
    same = outs == {big.users[9].public}
    short_rejected = 0
    for sub in itertools.combinations(range(7), 3):
        try:
            threshold.deanonymize(sig, [ds[j] for j in sub], big.pp.net)
        except WrongShareCount:
            short_rejected += 1
    bad = [ds[0], ds[1], ds[2], threshold.DecryptionShare(ds[3].index, ds[3].share_point + G)]
    outside = threshold.deanonymize(sig, bad, big.pp.net) not in sig.ring
    led = ConsentLedger(big.pp)
    led.publish(b"t", sig)
    try:
        led.reveal(0, bad)
        ledger_flag = False
    except RevealInconsistent:
        ledger_flag = True
    ok = same and short_rejected == 35 and outside and ledger_flag
    report(6, "N=7 k=4: 35 subsets agree, 3 shares rejected, corrupt share caught", ok,
           f"distinct outputs={len(outs)}, WrongShareCount {short_rejected}/35, "
           f"corrupt not in ring={outside}, RevealInconsistent={ledger_flag}")


def test_c07_rogue_key(big):
    rng = random.Random(7)
    catalog = big.pp.catalog
    reg = keys.Registry(catalog)
    k1, k2 = gen_keypair(rng), gen_keypair(rng)
    for kp in (k1, k2):
        reg.register(kp.public, pop_create(kp, catalog, rng))
    rogue = k1.public - k2.public
    m_rogue = keys.pop_message(rogue, catalog)
    attempts = []
    p1, p2 = pop_create(k1, catalog, rng), pop_create(k2, catalog, rng)
    attempts += [p1, p2, PoP(p1.commitment - p2.commitment, p1.response - p2.response)]
    while len(attempts) < 100:
        r = rng.randrange(1, Q)
        R = r * G
        e = keys._pop_challenge(rogue, R, m_rogue)
        kind = len(attempts) % 3
        if kind == 0:    # Schnorr answer with only S_1 against the rogue challenge
            attempts.append(PoP(R, r + e * k1.secret))
        elif kind == 1:  # try to cancel P_2 through the commitment
            attempts.append(PoP(R - e * k2.public, r + e * k1.secret))
        else:            # random guess
            attempts.append(PoP(R, rng.randrange(1, Q)))
    rejected = 0
    for pop in attempts:
        try:
            reg.register(rogue, pop)
        except InvalidPoP:
            rejected += 1
    report(7, "100 forged PoPs for P_1 - P_2 rejected", rejected == 100 and rogue not in reg,
           f"{rejected}/100 rejected")


def test_c08_dkg_equivalence(big):
    rng = random.Random(8)
    sid = big.pp.catalog.signing_sids[0]
    corpus = []
    for i in range(50):
        t = rng.randrange(32)
        corpus.append((b"dkg-%d" % i, t, ring_with(big, t, rng.randint(2, 8), rng)))

    def run_corpus(network, pp):
        out = []
        srng = random.Random(80)
        for m, t, ring in corpus:
            sig = sign(m, big.users[t].secret, ring, sid, pp, srng)
            assert verify(m, sig, pp)
            out.append(network.request_deanonymization(sig) == big.users[t].public)
        return out

    dkg_net, pub, _ = run_dkg(5, 3, seed="acceptance-8")
    dkg_res = run_corpus(dkg_net, replace(big.pp, net=pub))
    net_d, shares_d = threshold.dealer_keygen(3, 5, random.Random(81))
    dealer_net = Network(5, seed="acceptance-8-dealer")
    dealer_net.install_shares(net_d, shares_d)
    dealer_res = run_corpus(dealer_net, replace(big.pp, net=net_d))
    ok = all(dkg_res) and dkg_res == dealer_res
    report(8, "Joint-Feldman N=5 k=3 deanonymizes a 50-signature corpus like dealer mode", ok,
           f"dkg {sum(dkg_res)}/50, dealer {sum(dealer_res)}/50")


def test_c09_blinding_ks(big):
    rng = random.Random(9)
    sid = big.pp.catalog.signing_sids[0]
    signer_x, other_x = [], []
    for _ in range(2000):
        t = rng.randrange(32)
        tr = sign_traced(b"ks", big.users[t].secret, ring_with(big, t, 4, rng), sid, big.pp, rng)
        for i, (x, _z) in enumerate(tr.signature.responses):
            (signer_x if i == tr.signer_index else other_x).append(x.value / Q)
    res = ks_2samp(signer_x, other_x)
    report(9, "KS test signer vs non-signer x-responses over 2000 signatures", res.pvalue >= 0.01,
           f"D={res.statistic:.4f}, p={res.pvalue:.3f} >= 0.01, samples {len(signer_x)}/{len(other_x)}")


def test_c10_ledger_state_machine(tmp_path):
    sysm = setup(n_users=8, n_nodes=5, k=3, n_scopes=2, rng=random.Random(10))
    replays_ok = True
    applied = 0
    for seed in (100, 101):
        path = tmp_path / f"ledger-{seed}.jsonl"
        led = ConsentLedger(sysm.pp, path)
        counts = ledger_model.run(led, sysm, 500, seed)  # raises on any illegal transition
        applied += sum(c for (op, ok), c in counts.items() if ok)
        replays_ok &= ConsentLedger.open(path).snapshot() == led.snapshot()
    report(10, "2 x 500 random ledger ops respect transitions; replay is byte-identical", replays_ok,
           f"{applied} accepted ops, replay identical={replays_ok}")
