"""Reusable encryption with classical ciphertexts from proof-of-destruction states.

The public key is a product of independent instances, one per bit of a
symmetric key to be agreed.  Encrypting measures each instance's index
register, destructs the residual function state into a real proof, destructs
a freshly generated decoy state into a decoy proof, and publishes per
instance either the real or the decoy proof according to the bit of a
uniformly drawn symmetric key k.  The decryptor recovers k bitwise by
verifying each published proof against its own key, then decrypts the
symmetric ciphertext.  The recycled key (k plus the published pairs) allows
any number of further encryptions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bitstrings import bits_to_hex, bits_to_int, hex_to_bits, int_to_bits, random_bits
from .primitives import (
    PodProof,
    PrfKey,
    PrimitiveConfig,
    SkeCiphertext,
    SkeKey,
    prf_eval,
    prfspd_destruct,
    prfspd_gen,
    prfspd_verify,
    ske_decrypt,
    ske_encrypt,
)
from .rng import SeededRng
from .sim import (
    QUBIT_CAP,
    ContractError,
    ResourceError,
    StateVector,
    StructuredState,
    measure_computational,
    project_out,
)


@dataclass(frozen=True)
class PrfspdKeyPair:
    dks: tuple[PrfKey, ...]


@dataclass(frozen=True)
class PrfspdPublicKey:
    factors: StructuredState


@dataclass(frozen=True)
class PrfspdCiphertext:
    body: SkeCiphertext
    pairs: tuple[tuple[str, PodProof], ...]


@dataclass(frozen=True)
class PrfspdRecycledKey:
    """Secret residue of the first encryption: the agreed k and its pairs."""

    k: SkeKey
    pairs: tuple[tuple[str, PodProof], ...]


def _instance_state(cfg: PrimitiveConfig, key: PrfKey) -> StateVector:
    """One instance: index register entangled with its function state."""
    d, dp, out = cfg.prfs_d, cfg.prfspd_dprime, cfg.prf_out_bits
    num_qubits = d + dp + out
    if num_qubits > QUBIT_CAP:
        raise ResourceError("public-key factor exceeds the dense qubit cap")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    scale = 1.0 / np.sqrt(1 << (d + dp))
    for x in range(1 << d):
        xb = int_to_bits(x, d)
        for y in range(1 << dp):
            z = prf_eval(cfg, key, xb + int_to_bits(y, dp), in_bits=d + dp)
            amps[(x << (dp + out)) | (y << out) | bits_to_int(z)] = scale
    return StateVector(num_qubits, amps)


class PrfspdScheme:
    """Parallel-instance key agreement with proof-of-destruction ciphertexts."""

    classical_ciphertexts = True
    reusable = True

    def __init__(self, cfg: PrimitiveConfig, num_instances: int = 8):
        if num_instances < 1:
            raise ContractError("need at least one instance")
        self.cfg = cfg
        self.num_instances = num_instances

    def gen(self, rng: SeededRng) -> PrfspdKeyPair:
        return PrfspdKeyPair(
            tuple(PrfKey(random_bits(self.cfg.lambda_toy, rng)) for _ in range(self.num_instances))
        )

    def qpk_gen(self, kp: PrfspdKeyPair) -> PrfspdPublicKey:
        """Product of per-instance states, kept factored (never densified jointly)."""
        return PrfspdPublicKey(
            StructuredState(tuple(_instance_state(self.cfg, dk) for dk in kp.dks))
        )

    def encrypt(
        self, key: PrfspdPublicKey | PrfspdRecycledKey, m: bytes, rng: SeededRng
    ) -> tuple[PrfspdRecycledKey, PrfspdCiphertext]:
        """First use consumes the quantum key and agrees on k; later uses reuse it."""
        cfg = self.cfg
        if isinstance(key, PrfspdPublicKey):
            if len(key.factors.factors) != self.num_instances:
                raise ContractError("instance count mismatch")
            d = cfg.prfs_d
            k_bits = random_bits(self.num_instances, rng)
            pairs = []
            for i, factor in enumerate(key.factors.factors):
                record = measure_computational(factor, list(range(d)), rng)
                x_i = record.outcome
                residual = project_out(record.post_state, list(range(d)), x_i)
                real_proof = prfspd_destruct(cfg, residual, rng)
                decoy_key = PrfKey(random_bits(cfg.lambda_toy, rng))
                decoy_proof = prfspd_destruct(cfg, prfspd_gen(cfg, decoy_key, x_i), rng)
                proof = decoy_proof if k_bits[i] == "0" else real_proof
                pairs.append((x_i, proof))
            recycled = PrfspdRecycledKey(SkeKey(k_bits), tuple(pairs))
        else:
            recycled = key
        body = ske_encrypt(cfg, recycled.k, m, rng)
        return recycled, PrfspdCiphertext(body, recycled.pairs)

    def decrypt(self, kp: PrfspdKeyPair, ct: PrfspdCiphertext):
        """Recover k bitwise through proof verification, then decrypt the body.

        A wrong recovered bit surfaces as an authentication failure (REJECT)
        rather than as garbage plaintext.
        """
        if len(ct.pairs) != self.num_instances:
            raise ContractError("ciphertext instance count mismatch")
        bits = "".join(
            str(prfspd_verify(self.cfg, kp.dks[i], x_i, proof))
            for i, (x_i, proof) in enumerate(ct.pairs)
        )
        return ske_decrypt(self.cfg, SkeKey(bits), ct.body)

    def recover_k(self, kp: PrfspdKeyPair, ct: PrfspdCiphertext) -> str:
        """The bitwise-verified key, exposed for recovery statistics."""
        return "".join(
            str(prfspd_verify(self.cfg, kp.dks[i], x_i, proof))
            for i, (x_i, proof) in enumerate(ct.pairs)
        )

    def challenge_pair(self) -> tuple[bytes, bytes]:
        return b"\x00", b"\xff"

    def random_message(self, rng: SeededRng, length: int = 4) -> bytes:
        return rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()

    # Wire formats -------------------------------------------------------

    def ciphertext_to_json(self, ct: PrfspdCiphertext) -> str:
        return json.dumps(
            {
                "body": {
                    "nonce": ct.body.body[:8].hex(),
                    "body": ct.body.body[8:].hex(),
                    "tag": ct.body.tag.hex(),
                },
                "pairs": [
                    {"x": bits_to_hex(x), "y": bits_to_hex(p.y), "z": bits_to_hex(p.z)}
                    for x, p in ct.pairs
                ],
            },
            sort_keys=True,
        )

    def ciphertext_from_json(self, text: str) -> PrfspdCiphertext:
        cfg = self.cfg
        obj = json.loads(text)
        body = bytes.fromhex(obj["body"]["nonce"]) + bytes.fromhex(obj["body"]["body"])
        pairs = tuple(
            (
                hex_to_bits(entry["x"], cfg.prfs_d),
                PodProof(
                    hex_to_bits(entry["y"], cfg.prfspd_dprime),
                    hex_to_bits(entry["z"], cfg.prf_out_bits),
                ),
            )
            for entry in obj["pairs"]
        )
        return PrfspdCiphertext(SkeCiphertext(body, bytes.fromhex(obj["body"]["tag"])), pairs)

    def recycled_to_json(self, rk: PrfspdRecycledKey) -> str:
        return json.dumps(
            {
                "secret": True,
                "k": bits_to_hex(rk.k.bits),
                "pairs": [
                    {"x": bits_to_hex(x), "y": bits_to_hex(p.y), "z": bits_to_hex(p.z)}
                    for x, p in rk.pairs
                ],
            },
            sort_keys=True,
        )
