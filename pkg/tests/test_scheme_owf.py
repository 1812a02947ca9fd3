import json

import numpy as np
import pytest

from qpkelab.bitstrings import int_to_bits
from qpkelab.primitives import REJECT, PrimitiveConfig, SkeCiphertext, prf_eval
from qpkelab.rng import derive_rng, make_rng
from qpkelab.scheme_owf import BitCiphertext, BitScheme, OwfCiphertext, OwfScheme
from qpkelab.sim import trace_distance_pure

SMALL = PrimitiveConfig(lambda_toy=4, prf_out_bits=8, tag_bits=16)


class TestKeyGeneration:
    def test_same_seed_same_key(self):
        scheme = OwfScheme(SMALL)
        assert scheme.gen(make_rng(5)).dk == scheme.gen(make_rng(5)).dk

    def test_distinct_seeds_rarely_collide(self):
        scheme = OwfScheme(SMALL)
        keys = [scheme.gen(make_rng(seed)).dk.bits for seed in range(1000)]
        distinct_rate = sum(a != b for a, b in zip(keys, keys[1:])) / 999
        # Pairwise collision probability is 2^-lambda.
        assert distinct_rate >= 1 - 2**-SMALL.lambda_toy - 0.03

    def test_key_width(self):
        assert len(OwfScheme(SMALL).gen(make_rng(0)).dk.bits) == SMALL.lambda_toy


class TestPublicKey:
    def test_amplitudes_exhaustive_at_lambda_3(self):
        cfg = PrimitiveConfig(lambda_toy=3, prf_out_bits=8, tag_bits=16)
        scheme = OwfScheme(cfg)
        kp = scheme.gen(make_rng(1))
        state = scheme.qpk_gen(kp).state
        nonzero = np.flatnonzero(np.abs(state.amplitudes) > 1e-12)
        assert len(nonzero) == 8
        for idx in nonzero:
            x = int_to_bits(int(idx) >> 8, 3)
            y = int_to_bits(int(idx) & 0xFF, 8)
            assert y == prf_eval(cfg, kp.dk, x)
            assert state.amplitudes[idx] == pytest.approx(2 ** -1.5, abs=1e-12)

    def test_normalized_and_reproducible(self):
        scheme = OwfScheme(SMALL)
        kp = scheme.gen(make_rng(2))
        a, b = scheme.qpk_gen(kp).state, scheme.qpk_gen(kp).state
        assert a.norm_error() < 1e-9
        assert trace_distance_pure(a, b) < 1e-7


class TestEncryptDecrypt:
    def test_round_trip_many_messages(self):
        scheme = OwfScheme(SMALL)
        rng = make_rng(3)
        for _ in range(200):
            kp = scheme.gen(rng)
            _, ct = scheme.encrypt(scheme.qpk_gen(kp), scheme.random_message(rng), rng)
            m2 = scheme.decrypt(kp, ct)
            assert m2 is not REJECT

    def test_recycled_key_shares_c0(self):
        scheme = OwfScheme(SMALL)
        rng = make_rng(4)
        kp = scheme.gen(rng)
        rk, ct1 = scheme.encrypt(scheme.qpk_gen(kp), b"a", rng)
        _, ct2 = scheme.encrypt(rk, b"b", rng)
        assert ct1.c0 == ct2.c0

    def test_measured_pair_lies_on_function_graph(self):
        scheme = OwfScheme(SMALL)
        rng = make_rng(5)
        for _ in range(10_000):
            kp = scheme.gen(rng)
            rk, _ = scheme.encrypt(scheme.qpk_gen(kp), b"", rng)
            assert rk.y_star == prf_eval(SMALL, kp.dk, rk.x_star)

    def test_mauled_body_rejects(self):
        scheme = OwfScheme(SMALL)
        rng = make_rng(6)
        kp = scheme.gen(rng)
        _, ct = scheme.encrypt(scheme.qpk_gen(kp), b"secret", rng)
        mauled = OwfCiphertext(
            ct.c0, SkeCiphertext(ct.c1.body[:-1] + bytes([ct.c1.body[-1] ^ 1]), ct.c1.tag)
        )
        assert scheme.decrypt(kp, mauled) is REJECT

    def test_wrong_c0_rejects(self):
        scheme = OwfScheme(SMALL)
        rng = make_rng(7)
        rejects = 0
        for _ in range(1000):
            kp = scheme.gen(rng)
            rk, ct = scheme.encrypt(scheme.qpk_gen(kp), b"m", rng)
            flipped = int_to_bits(int(rk.x_star, 2) ^ 1, SMALL.lambda_toy)
            rejects += scheme.decrypt(kp, OwfCiphertext(flipped, ct.c1)) is REJECT
        assert rejects >= 1000 * (1 - 2**-SMALL.tag_bits) - 4


class TestReusability:
    def test_hundred_messages_through_one_key(self):
        scheme = OwfScheme(SMALL)
        rng = make_rng(8)
        kp = scheme.gen(rng)
        key = scheme.qpk_gen(kp)
        for i in range(100):
            m = bytes([i, i ^ 0xFF])
            key, ct = scheme.encrypt(key, m, rng)
            assert scheme.decrypt(kp, ct) == m


class TestHybridDistance:
    @pytest.mark.parametrize("lam", [2, 3, 4])
    def test_punctured_key_distance(self, lam):
        cfg = PrimitiveConfig(lambda_toy=lam, prf_out_bits=8, tag_bits=16)
        scheme = OwfScheme(cfg)
        rng = make_rng(9 + lam)
        kp = scheme.gen(rng)
        x_star = int_to_bits(int(rng.integers(0, 1 << lam)), lam)
        dist = trace_distance_pure(scheme.qpk_gen(kp).state, scheme.punctured_qpk(kp, x_star))
        assert dist == pytest.approx(2 ** (-lam / 2), abs=1e-9)


class TestSerialization:
    def test_ciphertext_round_trip(self):
        scheme = OwfScheme(SMALL)
        rng = make_rng(10)
        kp = scheme.gen(rng)
        _, ct = scheme.encrypt(scheme.qpk_gen(kp), b"wire", rng)
        back = scheme.ciphertext_from_json(scheme.ciphertext_to_json(ct))
        assert back == ct
        assert scheme.decrypt(kp, back) == b"wire"

    def test_bit_exact_across_runs(self):
        def run():
            scheme = OwfScheme(SMALL)
            rng = derive_rng(77, "serialization")
            kp = scheme.gen(rng)
            _, ct = scheme.encrypt(scheme.qpk_gen(kp), b"stable", rng)
            return scheme.keypair_to_json(kp), scheme.ciphertext_to_json(ct)

        assert run() == run()

    def test_keypair_round_trip(self):
        scheme = OwfScheme(SMALL)
        kp = scheme.gen(make_rng(11))
        assert scheme.keypair_from_json(scheme.keypair_to_json(kp)) == kp


class TestBitScheme:
    def test_round_trip_zero_with_disjoint_ranges(self):
        cfg = PrimitiveConfig(lambda_toy=3, prf_out_bits=12, tag_bits=16)
        scheme = BitScheme(cfg)
        rng = make_rng(12)
        while True:
            kp = scheme.gen(rng)
            if scheme.ranges_disjoint(kp):
                break
        for m in (0, 1):
            _, ct = scheme.encrypt(scheme.qpk_gen(kp), m, rng)
            assert scheme.decrypt(kp, ct) == m

    def test_out_of_range_pair_rejects(self):
        cfg = PrimitiveConfig(lambda_toy=3, prf_out_bits=12, tag_bits=16)
        scheme = BitScheme(cfg)
        kp = scheme.gen(make_rng(13))
        y_bad = "1" * 12
        while prf_eval(cfg, kp.dk0, "000") == y_bad or prf_eval(cfg, kp.dk1, "000") == y_bad:
            y_bad = "0" + y_bad[:-1]
        assert scheme.decrypt(kp, BitCiphertext("000", y_bad)) is REJECT

    def test_recycled_key_derandomizes(self):
        cfg = PrimitiveConfig(lambda_toy=3, prf_out_bits=8, tag_bits=16)
        scheme = BitScheme(cfg)
        rng = make_rng(14)
        kp = scheme.gen(rng)
        rk, ct1 = scheme.encrypt(scheme.qpk_gen(kp), 1, rng)
        rk, ct2 = scheme.encrypt(rk, 1, rng)
        assert (ct1.x, ct1.y) == (ct2.x, ct2.y)
        # The untouched branch still encrypts fresh outcomes.
        rk, ct0 = scheme.encrypt(rk, 0, rng)
        assert scheme.decrypt(kp, ct0) == 0

    def test_exhaustive_error_matches_sampled_error(self):
        # Decryption-error oracle: enumerate the pointwise collisions; the
        # sampled error over real encryptions of 1 must match within 4 sigma.
        cfg = PrimitiveConfig(lambda_toy=4, prf_out_bits=4, tag_bits=16)
        scheme = BitScheme(cfg)
        rng = make_rng(15)
        kp = scheme.gen(rng)
        agreement = scheme.agreement_fraction(kp)
        trials = 4000
        errors = 0
        for _ in range(trials):
            _, ct = scheme.encrypt(scheme.qpk_gen(kp), 1, rng)
            errors += scheme.decrypt(kp, ct) != 1
        se = np.sqrt(max(agreement * (1 - agreement), 1e-12) / trials)
        assert abs(errors / trials - agreement) <= 4 * se + 1e-9

    def test_perfect_correctness_under_disjoint_ranges_full_enumeration(self):
        cfg = PrimitiveConfig(lambda_toy=4, prf_out_bits=12, tag_bits=16)
        scheme = BitScheme(cfg)
        rng = make_rng(16)
        checked = 0
        for _ in range(50):
            kp = scheme.gen(rng)
            if not scheme.ranges_disjoint(kp):
                continue
            checked += 1
            for b, dk in ((0, kp.dk0), (1, kp.dk1)):
                for x in range(16):
                    xb = int_to_bits(x, 4)
                    ct = BitCiphertext(xb, prf_eval(cfg, dk, xb))
                    assert scheme.decrypt(kp, ct) == b
        assert checked > 0

    def test_ciphertext_serialization(self):
        cfg = PrimitiveConfig(lambda_toy=3, prf_out_bits=8, tag_bits=16)
        scheme = BitScheme(cfg)
        rng = make_rng(17)
        kp = scheme.gen(rng)
        _, ct = scheme.encrypt(scheme.qpk_gen(kp), 0, rng)
        assert scheme.ciphertext_from_json(scheme.ciphertext_to_json(ct)) == ct
