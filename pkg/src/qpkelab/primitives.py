"""Desk-scale building blocks: PRF, authenticated SKE, PRFS, PRFSPD.

These are statistical stand-ins sized for exact simulation, not hardened
cryptography.  The keyed function is a counter-mode stream generator keyed
by a digest of (key, input); the symmetric scheme is encrypt-then-MAC over
that stream; the function-like state families are built from the keyed
function as binary-phase states (PRFS) and as basis-superposition function
states with measure-and-check proofs of destruction (PRFSPD).

All widths live in one :class:`PrimitiveConfig` record.  Every operation is
a pure function of (config, key, input, explicit rng).
"""

from __future__ import annotations

import functools
import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from .bitstrings import bits_to_int, int_to_bits, random_bits
from .rng import SeededRng
from .sim import ContractError, MeasurementRecord, StateVector, measure_computational


class _RejectType:
    """Sentinel for authentication / decryption failure (the ⊥ outcome)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "REJECT"

    def __bool__(self) -> bool:
        return False


REJECT = _RejectType()


@dataclass(frozen=True)
class PrimitiveConfig:
    """All primitive widths, in bits, plus the experiment root seed."""

    lambda_toy: int = 8
    prfs_d: int = 3
    prfs_m: int = 3
    prfspd_dprime: int = 3
    prf_out_bits: int = 12
    tag_bits: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("lambda_toy", "prfs_d", "prfs_m", "prfspd_dprime", "prf_out_bits"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be positive")
        if self.tag_bits < 8 or self.tag_bits % 8:
            raise ContractError("tag_bits must be a positive multiple of 8")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "PrimitiveConfig":
        return PrimitiveConfig(**json.loads(text))


@dataclass(frozen=True)
class PrfKey:
    bits: str


@dataclass(frozen=True)
class SkeKey:
    bits: str


@dataclass(frozen=True)
class SkeCiphertext:
    """Nonce-prefixed stream ciphertext body plus its authentication tag."""

    body: bytes
    tag: bytes


@dataclass(frozen=True)
class PodProof:
    """Classical proof of destruction: measured input half and function half."""

    y: str
    z: str


def _digest(*parts: bytes, size: int = 32) -> bytes:
    h = hashlib.blake2b(digest_size=size)
    for p in parts:
        h.update(len(p).to_bytes(4, "big"))
        h.update(p)
    return h.digest()


def _stream_bits(seed: bytes, nbits: int) -> str:
    """Counter-mode expansion of a digest seed into a bit string."""
    nbytes = (nbits + 7) // 8
    raw = b""
    counter = 0
    while len(raw) < nbytes:
        raw += hashlib.blake2b(counter.to_bytes(8, "big"), key=seed, digest_size=32).digest()
        counter += 1
    value = int.from_bytes(raw[:nbytes], "big") >> (8 * nbytes - nbits)
    return format(value, f"0{nbits}b") if nbits else ""


def _stream_bytes(seed: bytes, nbytes: int) -> bytes:
    out = b""
    counter = 0
    while len(out) < nbytes:
        out += hashlib.blake2b(counter.to_bytes(8, "big"), key=seed, digest_size=32).digest()
        counter += 1
    return out[:nbytes]


def prf_keygen(cfg: PrimitiveConfig, rng: SeededRng, width: int | None = None) -> PrfKey:
    return PrfKey(random_bits(width if width is not None else cfg.lambda_toy, rng))


def prf_eval(cfg: PrimitiveConfig, key: PrfKey, x: str, in_bits: int | None = None) -> str:
    """Deterministic keyed function {0,1}^in -> {0,1}^prf_out_bits.

    ``in_bits`` defaults to lambda_toy, the width used by the key-agreement
    scheme; other callers pass their own domain width.
    """
    expected = cfg.lambda_toy if in_bits is None else in_bits
    if len(x) != expected:
        raise ContractError(f"prf input width {len(x)} != configured {expected}")
    seed = _digest(b"prf", key.bits.encode(), x.encode())
    return _stream_bits(seed, cfg.prf_out_bits)


def prf_bit(cfg: PrimitiveConfig, key: PrfKey, x: str, in_bits: int) -> int:
    """First output bit, the boolean function behind binary-phase states."""
    return int(prf_eval(cfg, key, x, in_bits=in_bits)[0])


@functools.lru_cache(maxsize=4096)
def _prfs_sign_table(cfg: PrimitiveConfig, key: PrfKey) -> np.ndarray:
    """(-1)^f(k, x||y) over the whole (d + m)-bit domain, cached per key.

    Phase-state generation touches this table many times per key (once per
    copy block and once per decryption reference), so the keyed-function
    evaluations are shared.  The array is read-only.
    """
    width = cfg.prfs_d + cfg.prfs_m
    signs = np.empty(1 << width, dtype=np.float64)
    for xy in range(1 << width):
        signs[xy] = -1.0 if prf_bit(cfg, key, int_to_bits(xy, width), in_bits=width) else 1.0
    signs.setflags(write=False)
    return signs


def ske_keygen(cfg: PrimitiveConfig, rng: SeededRng, width: int | None = None) -> SkeKey:
    return SkeKey(random_bits(width if width is not None else cfg.prf_out_bits, rng))


def ske_encrypt(cfg: PrimitiveConfig, sk: SkeKey, pt: bytes, rng: SeededRng) -> SkeCiphertext:
    """Encrypt-then-MAC: stream cipher under a fresh 64-bit nonce, then tag."""
    nonce = rng.integers(0, 256, size=8, dtype=np.uint8).tobytes()
    stream = _stream_bytes(_digest(b"ske-stream", sk.bits.encode(), nonce), len(pt))
    body = nonce + bytes(a ^ b for a, b in zip(pt, stream))
    tag = _mac(cfg, sk, body)
    return SkeCiphertext(body, tag)


def _mac(cfg: PrimitiveConfig, sk: SkeKey, body: bytes) -> bytes:
    key = _digest(b"ske-mac", sk.bits.encode())
    return hashlib.blake2b(body, key=key, digest_size=cfg.tag_bits // 8).digest()


def ske_decrypt(cfg: PrimitiveConfig, sk: SkeKey, ct: SkeCiphertext):
    """Returns the plaintext, or REJECT when the tag does not verify."""
    if len(ct.body) < 8 or _mac(cfg, sk, ct.body) != ct.tag:
        return REJECT
    nonce, payload = ct.body[:8], ct.body[8:]
    stream = _stream_bytes(_digest(b"ske-stream", sk.bits.encode(), nonce), len(payload))
    return bytes(a ^ b for a, b in zip(payload, stream))


def prfs_gen(cfg: PrimitiveConfig, key: PrfKey, x: str) -> StateVector:
    """Binary-phase state 2^(-m/2) sum_y (-1)^f(k, x||y) |y> on m qubits."""
    if len(x) != cfg.prfs_d:
        raise ContractError(f"prfs input width {len(x)} != {cfg.prfs_d}")
    m = cfg.prfs_m
    dim = 1 << m
    scale = 1.0 / np.sqrt(dim)
    signs = _prfs_sign_table(cfg, key)
    offset = bits_to_int(x) << m
    return StateVector(m, scale * signs[offset : offset + dim].astype(np.complex128))


def prfs_gen_superposed(cfg: PrimitiveConfig, key: PrfKey, input_state: StateVector) -> StateVector:
    """Coherent generation: sum_x a_x |x>|rest> -> sum_x a_x |x>|rest>|psi_{k,x}>.

    The input register is the first prfs_d qubits of ``input_state``; a fresh
    m-qubit block is appended and phased.  Applying this n times builds the
    n-copy entangled public keys.
    """
    d, m = cfg.prfs_d, cfg.prfs_m
    if input_state.num_qubits < d:
        raise ContractError("input state does not span the prfs input register")
    base = input_state.num_qubits
    scale = 1.0 / np.sqrt(1 << m)
    joint = np.repeat(input_state.amplitudes, 1 << m) * scale
    # The appended block's sign depends on the top d qubits and the new m
    # qubits only; broadcast the (x, y) table across the middle register.
    signs = _prfs_sign_table(cfg, key).reshape(1 << d, 1 << m)
    mid = 1 << (base - d)
    pattern = np.broadcast_to(signs[:, None, :], (1 << d, mid, 1 << m)).reshape(-1)
    return StateVector(base + m, joint * pattern)


def prfspd_gen(cfg: PrimitiveConfig, key: PrfKey, x: str) -> StateVector:
    """Function state 2^(-d'/2) sum_y |y>|f(k, x||y)> on d' + out qubits."""
    if len(x) != cfg.prfs_d:
        raise ContractError(f"prfspd input width {len(x)} != {cfg.prfs_d}")
    dp, out = cfg.prfspd_dprime, cfg.prf_out_bits
    amps = np.zeros(1 << (dp + out), dtype=np.complex128)
    scale = 1.0 / np.sqrt(1 << dp)
    width = cfg.prfs_d + dp
    for y in range(1 << dp):
        z = prf_eval(cfg, key, x + int_to_bits(y, dp), in_bits=width)
        amps[(y << out) | bits_to_int(z)] = scale
    return StateVector(dp + out, amps)


def prfspd_destruct(cfg: PrimitiveConfig, state: StateVector, rng: SeededRng) -> PodProof:
    """Measure the whole state; the outcome is the classical proof.

    The input state is consumed; callers must not reuse it afterwards.
    """
    dp, out = cfg.prfspd_dprime, cfg.prf_out_bits
    if state.num_qubits != dp + out:
        raise ContractError("state width does not match the prfspd registers")
    record: MeasurementRecord = measure_computational(state, list(range(dp + out)), rng)
    return PodProof(record.outcome[:dp], record.outcome[dp:])


def prfspd_verify(cfg: PrimitiveConfig, key: PrfKey, x: str, proof: PodProof) -> int:
    """1 iff the proof's function half matches the keyed function at (x, y)."""
    if len(x) != cfg.prfs_d or len(proof.y) != cfg.prfspd_dprime:
        raise ContractError("proof widths do not match the configuration")
    if len(proof.z) != cfg.prf_out_bits:
        raise ContractError("proof widths do not match the configuration")
    width = cfg.prfs_d + cfg.prfspd_dprime
    return 1 if prf_eval(cfg, key, x + proof.y, in_bits=width) == proof.z else 0
