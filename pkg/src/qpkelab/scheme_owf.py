"""Quantum-public-key encryption from a keyed function family.

Two schemes live here.  The many-bit scheme puts the keyed function's whole
graph in superposition as the public key; encrypting measures it once to
agree on (x*, y*) and then runs authenticated symmetric encryption under
y*, so one public key supports arbitrarily many ciphertexts through the
recycled (x*, y*) pair, and ciphertexts are classical.

The bit scheme keeps two function-graph states, one per message bit;
encrypting a bit measures that branch and publishes the outcome, and
decryption checks which branch the pair (x, y) belongs to.  It is perfectly
correct exactly when the two key functions never collide pointwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bitstrings import bits_to_hex, bits_to_int, hex_to_bits, int_to_bits, random_bits
from .primitives import (
    REJECT,
    PrfKey,
    PrimitiveConfig,
    SkeCiphertext,
    SkeKey,
    prf_eval,
    ske_decrypt,
    ske_encrypt,
)
from .rng import SeededRng
from .sim import QUBIT_CAP, ContractError, ResourceError, StateVector, measure_computational, tensor


@dataclass(frozen=True)
class OwfKeyPair:
    dk: PrfKey


@dataclass(frozen=True)
class OwfPublicKey:
    state: StateVector


@dataclass(frozen=True)
class RecycledKey:
    """Measured key material (x*, y*) that re-enables encryption."""

    x_star: str
    y_star: str


@dataclass(frozen=True)
class OwfCiphertext:
    c0: str
    c1: SkeCiphertext


def _function_state(cfg: PrimitiveConfig, key: PrfKey, in_bits: int) -> StateVector:
    """Uniform superposition over the graph of the keyed function."""
    out = cfg.prf_out_bits
    num_qubits = in_bits + out
    if num_qubits > QUBIT_CAP:
        raise ResourceError(f"public key needs {num_qubits} qubits, above the cap")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    scale = 1.0 / np.sqrt(1 << in_bits)
    for x in range(1 << in_bits):
        y = prf_eval(cfg, key, int_to_bits(x, in_bits), in_bits=in_bits)
        amps[(x << out) | bits_to_int(y)] = scale
    return StateVector(num_qubits, amps)


class OwfScheme:
    """Reusable many-bit scheme with classical ciphertexts (key agreement)."""

    classical_ciphertexts = True
    reusable = True

    def __init__(self, cfg: PrimitiveConfig):
        self.cfg = cfg

    def gen(self, rng: SeededRng) -> OwfKeyPair:
        return OwfKeyPair(PrfKey(random_bits(self.cfg.lambda_toy, rng)))

    def qpk_gen(self, kp: OwfKeyPair) -> OwfPublicKey:
        """Exact public-key state; repeated calls give identical amplitudes."""
        return OwfPublicKey(_function_state(self.cfg, kp.dk, self.cfg.lambda_toy))

    def encrypt(
        self, key: OwfPublicKey | RecycledKey, m: bytes, rng: SeededRng
    ) -> tuple[RecycledKey, OwfCiphertext]:
        """Measure a fresh public key (or reuse a recycled one), then encrypt.

        Returns the recycled key alongside the ciphertext; threading it into
        the next call encrypts further messages without another key state.
        """
        cfg = self.cfg
        if isinstance(key, OwfPublicKey):
            record = measure_computational(key.state, list(range(key.state.num_qubits)), rng)
            x_star = record.outcome[: cfg.lambda_toy]
            y_star = record.outcome[cfg.lambda_toy :]
            recycled = RecycledKey(x_star, y_star)
        else:
            recycled = key
        ct = OwfCiphertext(recycled.x_star, ske_encrypt(cfg, SkeKey(recycled.y_star), m, rng))
        return recycled, ct

    def decrypt(self, kp: OwfKeyPair, ct: OwfCiphertext):
        y = prf_eval(self.cfg, kp.dk, ct.c0)
        return ske_decrypt(self.cfg, SkeKey(y), ct.c1)

    def punctured_qpk(self, kp: OwfKeyPair, x_star: str) -> StateVector:
        """Public key with the (x*, f(x*)) branch removed and renormalized.

        A proof-device state: its trace distance to the honest key is the
        quantity checked by the hybrid-distance regression test.
        """
        cfg = self.cfg
        state = self.qpk_gen(kp).state
        amps = state.amplitudes.copy()
        y_star = prf_eval(cfg, kp.dk, x_star)
        amps[(bits_to_int(x_star) << cfg.prf_out_bits) | bits_to_int(y_star)] = 0.0
        return StateVector(state.num_qubits, amps / np.linalg.norm(amps))

    def challenge_pair(self) -> tuple[bytes, bytes]:
        return b"\x00", b"\xff"

    def random_message(self, rng: SeededRng, length: int = 4) -> bytes:
        return rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()

    # Wire formats -------------------------------------------------------

    def ciphertext_to_json(self, ct: OwfCiphertext) -> str:
        return json.dumps(
            {
                "c0": bits_to_hex(ct.c0),
                "c1": {
                    "nonce": ct.c1.body[:8].hex(),
                    "body": ct.c1.body[8:].hex(),
                    "tag": ct.c1.tag.hex(),
                },
            },
            sort_keys=True,
        )

    def ciphertext_from_json(self, text: str) -> OwfCiphertext:
        obj = json.loads(text)
        body = bytes.fromhex(obj["c1"]["nonce"]) + bytes.fromhex(obj["c1"]["body"])
        return OwfCiphertext(
            hex_to_bits(obj["c0"], self.cfg.lambda_toy),
            SkeCiphertext(body, bytes.fromhex(obj["c1"]["tag"])),
        )

    def keypair_to_json(self, kp: OwfKeyPair) -> str:
        return json.dumps({"dk": bits_to_hex(kp.dk.bits)}, sort_keys=True)

    def keypair_from_json(self, text: str) -> OwfKeyPair:
        return OwfKeyPair(PrfKey(hex_to_bits(json.loads(text)["dk"], self.cfg.lambda_toy)))


@dataclass(frozen=True)
class BitKeyPair:
    dk0: PrfKey
    dk1: PrfKey


@dataclass(frozen=True)
class BitPublicKey:
    state0: StateVector
    state1: StateVector

    def joint(self) -> StateVector:
        """Both branches as one dense state (branch 0 most significant)."""
        return tensor(self.state0, self.state1)


@dataclass(frozen=True)
class BitRecycledKey:
    """Post-encryption residue: measured branches collapse to their outcome."""

    collapsed: tuple[tuple[str, str] | None, tuple[str, str] | None]
    states: tuple[StateVector | None, StateVector | None]


@dataclass(frozen=True)
class BitCiphertext:
    x: str
    y: str


class BitScheme:
    """Single-bit scheme with one function-graph state per message bit."""

    classical_ciphertexts = True
    reusable = False

    def __init__(self, cfg: PrimitiveConfig, key_bits_each: int | None = None):
        self.cfg = cfg
        self.key_bits_each = key_bits_each if key_bits_each is not None else cfg.lambda_toy

    def gen(self, rng: SeededRng) -> BitKeyPair:
        return BitKeyPair(
            PrfKey(random_bits(self.key_bits_each, rng)),
            PrfKey(random_bits(self.key_bits_each, rng)),
        )

    def qpk_gen(self, kp: BitKeyPair) -> BitPublicKey:
        lam = self.cfg.lambda_toy
        return BitPublicKey(
            _function_state(self.cfg, kp.dk0, lam), _function_state(self.cfg, kp.dk1, lam)
        )

    def encrypt(
        self, key: BitPublicKey | BitRecycledKey, m: int, rng: SeededRng
    ) -> tuple[BitRecycledKey, BitCiphertext]:
        """Measure the branch selected by the message bit.

        A fresh key measures one branch and carries the other; a recycled key
        whose branch already collapsed returns the same ciphertext again (the
        encryption is derandomized after the first use).
        """
        if m not in (0, 1):
            raise ContractError("bit scheme messages are 0 or 1")
        if isinstance(key, BitPublicKey):
            key = BitRecycledKey((None, None), (key.state0, key.state1))
        collapsed = list(key.collapsed)
        states = list(key.states)
        if collapsed[m] is None:
            state = states[m]
            if state is None:
                raise ContractError("branch state was already consumed")
            record = measure_computational(state, list(range(state.num_qubits)), rng)
            lam = self.cfg.lambda_toy
            collapsed[m] = (record.outcome[:lam], record.outcome[lam:])
            states[m] = None
        x, y = collapsed[m]
        return BitRecycledKey(tuple(collapsed), tuple(states)), BitCiphertext(x, y)

    def decrypt(self, kp: BitKeyPair, ct: BitCiphertext):
        """0 when (x, y) lies on branch 0, else 1 on branch 1, else REJECT."""
        if prf_eval(self.cfg, kp.dk0, ct.x) == ct.y:
            return 0
        if prf_eval(self.cfg, kp.dk1, ct.x) == ct.y:
            return 1
        return REJECT

    def agreement_fraction(self, kp: BitKeyPair) -> float:
        """Fraction of inputs where the two branch functions collide."""
        lam = self.cfg.lambda_toy
        hits = sum(
            prf_eval(self.cfg, kp.dk0, int_to_bits(x, lam))
            == prf_eval(self.cfg, kp.dk1, int_to_bits(x, lam))
            for x in range(1 << lam)
        )
        return hits / (1 << lam)

    def ranges_disjoint(self, kp: BitKeyPair) -> bool:
        lam = self.cfg.lambda_toy
        r0 = {prf_eval(self.cfg, kp.dk0, int_to_bits(x, lam)) for x in range(1 << lam)}
        r1 = {prf_eval(self.cfg, kp.dk1, int_to_bits(x, lam)) for x in range(1 << lam)}
        return not (r0 & r1)

    def exact_error_rate(self, kp: BitKeyPair) -> float:
        """Exact decryption-error probability for a uniform bit and fresh key.

        Encryptions of 0 always decrypt to 0 (branch 0 is checked first);
        encryptions of 1 fail exactly on the pointwise collisions, so the
        uniform-bit error is half the agreement fraction.
        """
        return self.agreement_fraction(kp) / 2.0

    def challenge_pair(self) -> tuple[int, int]:
        return 0, 1

    def random_message(self, rng: SeededRng, length: int = 1) -> int:
        return int(rng.integers(0, 2))

    def ciphertext_to_json(self, ct: BitCiphertext) -> str:
        return json.dumps({"x": bits_to_hex(ct.x), "y": bits_to_hex(ct.y)}, sort_keys=True)

    def ciphertext_from_json(self, text: str) -> BitCiphertext:
        obj = json.loads(text)
        return BitCiphertext(
            hex_to_bits(obj["x"], self.cfg.lambda_toy),
            hex_to_bits(obj["y"], self.cfg.prf_out_bits),
        )

    def keypair_to_json(self, kp: BitKeyPair) -> str:
        return json.dumps(
            {"dk0": bits_to_hex(kp.dk0.bits), "dk1": bits_to_hex(kp.dk1.bits)}, sort_keys=True
        )

    def keypair_from_json(self, text: str) -> BitKeyPair:
        obj = json.loads(text)
        w = self.key_bits_each
        return BitKeyPair(PrfKey(hex_to_bits(obj["dk0"], w)), PrfKey(hex_to_bits(obj["dk1"], w)))
