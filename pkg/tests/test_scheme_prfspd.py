import json

import numpy as np
import pytest
from scipy import stats

import qpkelab.scheme_prfspd as prfspd_mod
from qpkelab.bitstrings import int_to_bits, random_bits
from qpkelab.primitives import REJECT, PrimitiveConfig, prf_eval, prfspd_verify
from qpkelab.rng import make_rng
from qpkelab.scheme_prfspd import PrfspdCiphertext, PrfspdScheme
from qpkelab.sim import (
    StateVector,
    apply_xor_oracle,
    densify,
    measure_computational,
    tensor,
)

PRESET = PrimitiveConfig(lambda_toy=8, prfs_d=2, prfspd_dprime=2, prf_out_bits=8, tag_bits=16)


class TestPublicKey:
    def test_factor_matches_oracle_built_construction(self):
        scheme = PrfspdScheme(PRESET, num_instances=1)
        kp = scheme.gen(make_rng(1))
        factor = scheme.qpk_gen(kp).factors.factors[0]
        d, dp, out = PRESET.prfs_d, PRESET.prfspd_dprime, PRESET.prf_out_bits
        start = tensor(
            tensor(StateVector.uniform(d), StateVector.uniform(dp)),
            StateVector.basis("0" * out),
        )
        oracle_built = apply_xor_oracle(
            start,
            lambda xy: prf_eval(PRESET, kp.dks[0], xy, in_bits=d + dp),
            list(range(d + dp)),
            list(range(d + dp, d + dp + out)),
        )
        assert np.allclose(factor.amplitudes, oracle_built.amplitudes, atol=1e-12)

    def test_index_marginal_uniform_per_factor(self):
        scheme = PrfspdScheme(PRESET, num_instances=2)
        kp = scheme.gen(make_rng(2))
        rng = make_rng(3)
        counts = np.zeros(4)
        for _ in range(10_000):
            factor = scheme.qpk_gen(kp).factors.factors[0]
            rec = measure_computational(factor, [0, 1], rng)
            counts[int(rec.outcome, 2)] += 1
        _, p = stats.chisquare(counts)
        assert p > 0.001

    def test_repeated_generation_identical(self):
        scheme = PrfspdScheme(PRESET, num_instances=3)
        kp = scheme.gen(make_rng(4))
        a = scheme.qpk_gen(kp)
        b = scheme.qpk_gen(kp)
        for fa, fb in zip(a.factors.factors, b.factors.factors):
            assert np.array_equal(fa.amplitudes, fb.amplitudes)

    def test_joint_densification_equivalence_at_two_instances(self):
        # The factored public key and its joint dense form agree: the joint
        # state is normalized and its per-instance index marginals equal the
        # factor marginals exactly.  Narrow widths keep two joint factors
        # under the dense cap.
        cfg = PrimitiveConfig(
            lambda_toy=8, prfs_d=2, prfspd_dprime=2, prf_out_bits=6, tag_bits=16
        )
        scheme = PrfspdScheme(cfg, num_instances=2)
        kp = scheme.gen(make_rng(5))
        pk = scheme.qpk_gen(kp)
        joint = densify(pk.factors)
        assert joint.norm_error() < 1e-9
        per_factor = pk.factors.factors[0].probabilities().reshape(4, -1).sum(axis=1)
        joint_marginal = joint.probabilities().reshape(4, -1).sum(axis=1)
        assert np.allclose(per_factor, joint_marginal, atol=1e-12)


class TestEncryptDecrypt:
    def test_round_trip_within_quantified_error(self):
        # Fresh-key round trips fail only through k-recovery errors, whose
        # rate is bounded by instances * 2^-out plus decoy-key collisions.
        scheme = PrfspdScheme(PRESET, num_instances=8)
        rng = make_rng(6)
        trials = 300
        failures = 0
        for i in range(trials):
            kp = scheme.gen(rng)
            m = bytes([i % 256, (i * 7) % 256])
            _, ct = scheme.encrypt(scheme.qpk_gen(kp), m, rng)
            out = scheme.decrypt(kp, ct)
            if out != m:
                assert out is REJECT  # never garbage plaintext
                failures += 1
        bound = scheme.num_instances * 2 ** (1 - PRESET.prf_out_bits)
        se = np.sqrt(bound * (1 - bound) / trials)
        assert failures / trials <= bound + 4 * se

    def test_empty_message_round_trips(self):
        scheme = PrfspdScheme(PRESET, num_instances=4)
        rng = make_rng(7)
        kp = scheme.gen(rng)
        _, ct = scheme.encrypt(scheme.qpk_gen(kp), b"", rng)
        assert scheme.decrypt(kp, ct) == b""

    def test_forced_all_ones_key_all_real_proofs_verify(self, monkeypatch):
        # k_i = 1 publishes the real proof, which verifies by perfect
        # correctness of the destruction relation.
        scheme = PrfspdScheme(PRESET, num_instances=6)
        real = random_bits

        def forced(width, rng):
            if width == scheme.num_instances:
                return "1" * width
            return real(width, rng)

        monkeypatch.setattr(prfspd_mod, "random_bits", forced)
        rng = make_rng(8)
        for _ in range(200):
            kp = scheme.gen(rng)
            rk, ct = scheme.encrypt(scheme.qpk_gen(kp), b"x", rng)
            assert rk.k.bits == "1" * 6
            for i, (x_i, proof) in enumerate(ct.pairs):
                assert prfspd_verify(PRESET, kp.dks[i], x_i, proof) == 1

    def test_forced_all_zeros_key_decoy_proofs_rarely_verify(self, monkeypatch):
        # 16-bit scheme keys keep decoy keys distinct from the instance key,
        # so acceptances are function-output collisions only.
        wide = PrimitiveConfig(
            lambda_toy=16, prfs_d=2, prfspd_dprime=2, prf_out_bits=8, tag_bits=16
        )
        scheme = PrfspdScheme(wide, num_instances=6)
        real = random_bits

        def forced(width, rng):
            if width == scheme.num_instances:
                return "0" * width
            return real(width, rng)

        monkeypatch.setattr(prfspd_mod, "random_bits", forced)
        rng = make_rng(9)
        accepts = 0
        checked = 0
        for _ in range(600):
            kp = scheme.gen(rng)
            _, ct = scheme.encrypt(scheme.qpk_gen(kp), b"x", rng)
            for i, (x_i, proof) in enumerate(ct.pairs):
                accepts += prfspd_verify(scheme.cfg, kp.dks[i], x_i, proof)
                checked += 1
        bound = 2**-scheme.cfg.prf_out_bits
        se = np.sqrt(bound * (1 - bound) / checked)
        assert accepts / checked <= bound + 4 * se

    def test_k_recovery_error_rate(self):
        scheme = PrfspdScheme(PRESET, num_instances=8)
        rng = make_rng(10)
        bad = 0
        trials = 3000
        for _ in range(trials):
            kp = scheme.gen(rng)
            rk, ct = scheme.encrypt(scheme.qpk_gen(kp), b"m", rng)
            bad += scheme.recover_k(kp, ct) != rk.k.bits
        bound = scheme.num_instances * 2**-PRESET.prf_out_bits
        se = np.sqrt(bound * (1 - bound) / trials)
        assert bad / trials <= bound + 4 * se

    def test_tampered_pair_rejects_when_recovery_shifts(self):
        scheme = PrfspdScheme(PRESET, num_instances=8)
        rng = make_rng(11)
        mismatched = 0
        rejected = 0
        for _ in range(500):
            kp = scheme.gen(rng)
            rk, ct = scheme.encrypt(scheme.qpk_gen(kp), b"m", rng)
            i = int(rng.integers(0, 8))
            x_i, proof = ct.pairs[i]
            flipped = int_to_bits(int(x_i, 2) ^ 1, PRESET.prfs_d)
            pairs = ct.pairs[:i] + ((flipped, proof),) + ct.pairs[i + 1 :]
            tampered = PrfspdCiphertext(ct.body, pairs)
            if scheme.recover_k(kp, tampered) != rk.k.bits:
                mismatched += 1
                rejected += scheme.decrypt(kp, tampered) is REJECT
        assert mismatched > 0
        assert rejected == mismatched  # wrong k always fails the tag check

    def test_reusability_hundred_messages(self):
        # Given a successful key agreement (recovery failures are quantified
        # elsewhere), the recycled key supports any number of encryptions.
        scheme = PrfspdScheme(PRESET, num_instances=8)
        rng = make_rng(12)
        while True:
            kp = scheme.gen(rng)
            key, ct0 = scheme.encrypt(scheme.qpk_gen(kp), b"probe", rng)
            if scheme.recover_k(kp, ct0) == key.k.bits:
                break
        for i in range(100):
            m = bytes([i])
            key, ct = scheme.encrypt(key, m, rng)
            assert scheme.decrypt(kp, ct) == m


class TestSerialization:
    def test_ciphertext_round_trip(self):
        scheme = PrfspdScheme(PRESET, num_instances=4)
        rng = make_rng(13)
        kp = scheme.gen(rng)
        _, ct = scheme.encrypt(scheme.qpk_gen(kp), b"wire", rng)
        back = scheme.ciphertext_from_json(scheme.ciphertext_to_json(ct))
        assert back == ct
        assert scheme.decrypt(kp, back) == b"wire"

    def test_recycled_key_marked_secret(self):
        scheme = PrfspdScheme(PRESET, num_instances=4)
        rng = make_rng(14)
        kp = scheme.gen(rng)
        rk, _ = scheme.encrypt(scheme.qpk_gen(kp), b"x", rng)
        doc = json.loads(scheme.recycled_to_json(rk))
        assert doc["secret"] is True
        assert len(doc["pairs"]) == 4
