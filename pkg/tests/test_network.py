import itertools
import json
import random
from dataclasses import replace

import pytest

from dslrs import threshold
from dslrs.errors import DeanonTimeout, DkgFailed
from dslrs.group import G, Scalar
from dslrs.network import Behavior, MsgKind, Network, SimMessage, run_dkg
from dslrs.scheme import sign


def signed_under(system, sid, net_public, t=2, n=5, seed=0):
    pp = replace(system.pp, net=net_public)
    ring = [u.public for u in system.users[:n]]
    return sign(b"network test", system.users[t].secret, ring, sid, pp, random.Random(seed)), ring[t]


class TestDkg:
    def test_single_node(self, system, sid):
        net, pub, shares = run_dkg(1, 1, seed="one")
        assert shares[1].secret_share * G == pub.p_net
        sig, signer = signed_under(system, sid, pub)
        assert net.request_deanonymization(sig) == signer

    def test_honest_5_of_3_every_subset(self, system, sid):
        net, pub, shares = run_dkg(5, 3, seed=11)
        assert sorted(shares) == [1, 2, 3, 4, 5]
        for sub in itertools.combinations(shares.values(), 3):
            assert threshold.reconstruct_secret(sub) * G == pub.p_net
        sig, signer = signed_under(system, sid, pub)
        for idx in itertools.combinations(shares, 3):
            ds = [threshold.decryption_share(shares[j], sig.c1) for j in idx]
            assert threshold.deanonymize(sig, ds, pub) == signer
        assert net.request_deanonymization(sig) == signer

    def test_share_commitments_consistent(self):
        net, pub, shares = run_dkg(4, 2, seed=3)
        for j, s in shares.items():
            nd = net.node(j)
            expected = sum((nd.commitments[d][0] for d in nd.qualified()), start=pub.p_net - pub.p_net)
            assert expected == pub.p_net
            assert s.index == Scalar(j)

    def test_silent_dealer_excluded(self, system, sid):
        net, pub, shares = run_dkg(5, 3, {4: "silent"}, seed=5)
        assert 4 not in net.node(1).qualified()
        sig, signer = signed_under(system, sid, pub)
        assert net.request_deanonymization(sig) == signer

    def test_too_few_honest(self):
        with pytest.raises(DkgFailed):
            run_dkg(3, 3, {1: "silent"})

    def test_bad_threshold(self):
        with pytest.raises(DkgFailed):
            run_dkg(3, 4)

    def test_corrupt_dealer_without_complaints_fails(self):
        with pytest.raises(DkgFailed):
            run_dkg(5, 3, {2: "corrupt-share"}, seed=9)

    def test_corrupt_dealer_with_complaints_disqualified(self, system, sid):
        net, pub, shares = run_dkg(5, 3, {2: "corrupt-share"}, seed=9, complaints=True)
        assert 2 not in net.node(1).qualified()
        honest = [shares[j] for j in (1, 3, 4)]
        assert threshold.reconstruct_secret(honest) * G == pub.p_net
        assert any(m.kind is MsgKind.DKG_COMPLAINT for m in net.transcript)


class TestDeanonymization:
    def test_dealer_install_matches_offline(self, system, sid):
        net = Network(7, seed="dealer")
        net.install_shares(system.pp.net, system.net_shares)
        sig, signer = signed_under(system, sid, system.pp.net, t=4, n=8)
        assert net.request_deanonymization(sig) == signer

    def test_timeout(self, system, sid):
        net, pub, _ = run_dkg(5, 3, seed=2)
        for j in (1, 2, 3):
            net.node(j).behavior = Behavior.SILENT
        sig, _ = signed_under(system, sid, pub)
        with pytest.raises(DeanonTimeout):
            net.request_deanonymization(sig)

    def test_one_silent_responder(self, system, sid):
        net, pub, _ = run_dkg(5, 3, seed=2)
        net.node(5).behavior = Behavior.SILENT
        sig, signer = signed_under(system, sid, pub)
        assert net.request_deanonymization(sig) == signer

    def test_no_key(self, system, sid):
        sig, _ = signed_under(system, sid, system.pp.net)
        with pytest.raises(DkgFailed):
            Network(3).request_deanonymization(sig)

    def test_corrupt_responder(self, system, sid):
        net = Network(7, behaviors={1: "corrupt-share"}, seed="c")
        net.install_shares(system.pp.net, system.net_shares)
        sig, signer = signed_under(system, sid, system.pp.net, n=8)
        first = net.request_deanonymization(sig)
        used = [threshold.DecryptionShare.from_bytes(m.payload) for m in net.inbox][:4]
        if any(d.index == Scalar(1) for d in used):
            assert first != signer and first not in sig.ring
        else:
            assert first == signer
        assert net.request_deanonymization(sig, robust=True) == signer

    def test_request_logged_with_requester(self, system, sid):
        net = Network(7, seed="log")
        net.install_shares(system.pp.net, system.net_shares)
        sig, _ = signed_under(system, sid, system.pp.net)
        net.request_deanonymization(sig, requester="auditor-7")
        reqs = [m for m in net.transcript if m.kind is MsgKind.DEANON_REQUEST]
        assert len(reqs) == 7
        assert b"auditor-7" in reqs[0].payload


class TestDeterminism:
    def test_same_seed_same_transcript(self, system, sid):
        def go():
            net, pub, _ = run_dkg(5, 3, {5: "silent"}, seed="det")
            sig, _ = signed_under(system, sid, pub)
            net.request_deanonymization(sig)
            return net.transcript_lines(), pub
        (a, pa), (b, pb) = go(), go()
        assert a == b and pa == pb

    def test_different_seed_different_order(self):
        a, _, _ = run_dkg(5, 3, seed="x")
        b, _, _ = run_dkg(5, 3, seed="y")
        assert a.transcript_lines() != b.transcript_lines()

    def test_transcript_file(self, tmp_path):
        net, _, _ = run_dkg(3, 2, seed=1)
        path = tmp_path / "t.jsonl"
        net.save_transcript(path)
        lines = path.read_text().splitlines()
        assert len(lines) == len(net.transcript)
        first = json.loads(lines[0])
        assert first["step"] == 0
        assert SimMessage.from_json(first) == net.transcript[0]

    def test_fifo_per_channel(self):
        net, _, _ = run_dkg(4, 2, seed="fifo")
        per_channel = {}
        for m in net.transcript:
            per_channel.setdefault((m.sender, m.to), []).append(m.kind)
        for kinds in per_channel.values():
            # a dealer's commitment is sent before its share, and both before complaints
            order = [MsgKind.DKG_COMMIT, MsgKind.DKG_SHARE, MsgKind.DKG_COMPLAINT]
            ranks = [order.index(k) for k in kinds if k in order]
            assert ranks == sorted(ranks)
