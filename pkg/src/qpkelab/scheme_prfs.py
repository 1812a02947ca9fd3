"""Bit encryption with quantum ciphertexts from function-like states.

The public key entangles a d-qubit index register with n copies of the
keyed phase state for every index.  Encryption measures the index register:
the residual n copies are the ciphertext payload for message 0, while
message 1 swaps in n copies generated under a fresh uniform key.  The
decryptor regenerates its own copy and runs a comparison (swap) test against
each payload block; any rejection means 1.

One public key encrypts one bit; there is no recycled key for this scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitstrings import random_bits
from .primitives import PrfKey, PrimitiveConfig, prfs_gen, prfs_gen_superposed
from .rng import SeededRng
from .sim import (
    QUBIT_CAP,
    ContractError,
    ResourceError,
    StateVector,
    measure_computational,
    project_out,
    tensor,
)


@dataclass(frozen=True)
class PrfsKeyPair:
    dk: PrfKey


@dataclass(frozen=True)
class PrfsPublicKey:
    state: StateVector


@dataclass(frozen=True)
class PrfsCiphertext:
    x: str
    payload: StateVector


class PrfsScheme:
    """Construction with n-copy phase-state payloads and swap-test decryption."""

    classical_ciphertexts = False
    reusable = False

    def __init__(self, cfg: PrimitiveConfig, n_copies: int = 4):
        if n_copies < 1:
            raise ContractError("need at least one payload copy")
        self.cfg = cfg
        self.n_copies = n_copies

    def _total_qubits(self) -> int:
        return self.cfg.prfs_d + self.n_copies * self.cfg.prfs_m

    def gen(self, rng: SeededRng) -> PrfsKeyPair:
        return PrfsKeyPair(PrfKey(random_bits(self.cfg.lambda_toy, rng)))

    def qpk_gen(self, kp: PrfsKeyPair) -> PrfsPublicKey:
        """Exact entangled key state sum_x |x> |psi_{dk,x}>^(n), normalized."""
        if self._total_qubits() > QUBIT_CAP:
            raise ResourceError("public key exceeds the dense qubit cap")
        state = StateVector.uniform(self.cfg.prfs_d)
        for _ in range(self.n_copies):
            state = prfs_gen_superposed(self.cfg, kp.dk, state)
        return PrfsPublicKey(state)

    def encrypt(
        self, pk: PrfsPublicKey, m: int, rng: SeededRng
    ) -> tuple[None, PrfsCiphertext]:
        """Measure the index register and emit the selected payload.

        The public key is consumed.  Returns (None, ciphertext): there is no
        recycled key for this scheme.
        """
        if m not in (0, 1):
            raise ContractError("messages are single bits")
        cfg = self.cfg
        d = cfg.prfs_d
        record = measure_computational(pk.state, list(range(d)), rng)
        x_star = record.outcome
        residual = project_out(record.post_state, list(range(d)), x_star)
        if m == 0:
            payload = residual
        else:
            dk1 = PrfKey(random_bits(cfg.lambda_toy, rng))
            block = prfs_gen(cfg, dk1, x_star)
            payload = block
            for _ in range(self.n_copies - 1):
                payload = tensor(payload, block)
        return None, PrfsCiphertext(x_star, payload)

    def accept_probability(self, kp: PrfsKeyPair, ct: PrfsCiphertext) -> float:
        """Exact probability that all n comparison tests accept the payload.

        The n tests act on disjoint blocks, so they commute and the all-accept
        probability is the average over block subsets S of the payload weight
        after projecting every block in S onto the reference state.  For a
        product payload this reduces to prod_i (1 + F_i) / 2.
        """
        cfg = self.cfg
        n, m = self.n_copies, cfg.prfs_m
        if ct.payload.num_qubits != n * m:
            raise ContractError("payload width does not match (n, m)")
        ref = prfs_gen(cfg, kp.dk, ct.x).amplitudes.conj()
        total = 0.0
        block_dim = 1 << m
        for subset in range(1 << n):
            t = ct.payload.amplitudes.reshape([block_dim] * n)
            for j in range(n - 1, -1, -1):
                if (subset >> (n - 1 - j)) & 1:
                    t = np.tensordot(ref, t, axes=([0], [j]))
            total += float(np.sum(np.abs(t) ** 2))
        return min(1.0, total / (1 << n))

    def decrypt(self, kp: PrfsKeyPair, ct: PrfsCiphertext, rng: SeededRng) -> int:
        """0 iff every per-block comparison test accepts; the payload is consumed."""
        if len(ct.x) != self.cfg.prfs_d:
            raise ContractError("ciphertext index width mismatch")
        return 0 if rng.random() < self.accept_probability(kp, ct) else 1

    def encrypt_string(
        self, keys: list[PrfsPublicKey], m_bits: str, rng: SeededRng
    ) -> list[PrfsCiphertext]:
        """Bit-by-bit encryption; consumes exactly one public key per bit."""
        if len(keys) != len(m_bits):
            raise ContractError("need exactly one public key per message bit")
        return [self.encrypt(pk, int(bit), rng)[1] for pk, bit in zip(keys, m_bits)]

    def decrypt_string(self, kp: PrfsKeyPair, cts: list[PrfsCiphertext], rng: SeededRng) -> str:
        return "".join(str(self.decrypt(kp, ct, rng)) for ct in cts)

    def exact_overlap(self, kp: PrfsKeyPair, dk_other: PrfKey, x: str) -> float:
        """F = |<psi_dk,x | psi_other,x>|^2, the per-block test fidelity."""
        a = prfs_gen(self.cfg, kp.dk, x)
        b = prfs_gen(self.cfg, dk_other, x)
        return abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2

    def challenge_pair(self) -> tuple[int, int]:
        return 0, 1

    def random_message(self, rng: SeededRng, length: int = 1) -> int:
        return int(rng.integers(0, 2))
