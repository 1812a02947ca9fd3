"""Exact dense statevector simulator.

States are vectors of 2**n complex amplitudes.  Qubit 0 is the most
significant bit of the basis-state index, so the amplitude of |q0 q1 ... >
sits at index q0*2**(n-1) + q1*2**(n-2) + ...  Measurement outcomes are bit
strings in the same order.

Everything is immutable after construction: operations return fresh states
and never mutate their inputs.  Randomness always comes from an explicitly
passed generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bitstrings import bits_to_int, int_to_bits
from .rng import SeededRng

# Hard resource limit for dense simulation; 2**22 amplitudes = 64 MiB.
QUBIT_CAP = 22

# Tolerances used across the package.
ATOL_AMPLITUDE = 1e-12
ATOL_NORM = 1e-9

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class ContractError(ValueError):
    """An operation was called outside its contract (dimension mismatch etc.)."""


class ResourceError(RuntimeError):
    """A dense state would exceed the configured qubit cap."""


def _check_cap(num_qubits: int, cap: int) -> None:
    if num_qubits > cap:
        raise ResourceError(f"{num_qubits} qubits exceeds the dense cap of {cap}")


@dataclass(frozen=True)
class StateVector:
    """Pure state of ``num_qubits`` qubits as a dense amplitude array."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ContractError("a state needs at least one qubit")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != 1 << self.num_qubits:
            raise ContractError(
                f"expected {1 << self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def norm_error(self) -> float:
        return abs(float(np.sum(np.abs(self.amplitudes) ** 2)) - 1.0)

    def require_normalized(self, atol: float = ATOL_NORM) -> "StateVector":
        if self.norm_error() > atol:
            raise ContractError(f"state is not normalized (error {self.norm_error():.3e})")
        return self

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @staticmethod
    def basis(bits: str) -> "StateVector":
        """Computational basis state |bits>."""
        n = len(bits)
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[bits_to_int(bits)] = 1.0
        return StateVector(n, amps)

    @staticmethod
    def uniform(num_qubits: int) -> "StateVector":
        """Uniform superposition (|+>)^n."""
        dim = 1 << num_qubits
        return StateVector(num_qubits, np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128))

    @staticmethod
    def random(num_qubits: int, rng: SeededRng) -> "StateVector":
        """Haar-random pure state."""
        dim = 1 << num_qubits
        raw = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return StateVector(num_qubits, raw / np.linalg.norm(raw))


@dataclass(frozen=True)
class StructuredState:
    """Product state kept as an ordered list of independent factors.

    Exact representation for public keys of the form |qpk_1> ⊗ ... ⊗ |qpk_k>
    whose joint dense form would be unnecessary or too large.
    """

    factors: tuple[StateVector, ...]

    def __post_init__(self) -> None:
        if not self.factors:
            raise ContractError("a structured state needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def num_qubits(self) -> int:
        return sum(f.num_qubits for f in self.factors)


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of a computational-basis measurement.

    ``post_state`` keeps all qubits; the measured ones are collapsed to the
    basis state given by ``outcome`` (bit i of the outcome corresponds to
    ``qubit_indices[i]``).
    """

    qubit_indices: tuple[int, ...]
    outcome: str
    post_state: StateVector

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubit_indices", tuple(self.qubit_indices))


def tensor(a: StateVector, b: StateVector, cap: int = QUBIT_CAP) -> StateVector:
    """Tensor product a ⊗ b; a's qubits become the most significant block."""
    _check_cap(a.num_qubits + b.num_qubits, cap)
    return StateVector(a.num_qubits + b.num_qubits, np.kron(a.amplitudes, b.amplitudes))


def densify(s: StructuredState, cap: int = QUBIT_CAP) -> StateVector:
    """Dense tensor of all factors in order."""
    _check_cap(s.num_qubits, cap)
    out = s.factors[0]
    for f in s.factors[1:]:
        out = tensor(out, f, cap=cap)
    return out


def factor_split(s: StateVector, sizes: list[int]) -> StructuredState:
    """Split a product state into factors of the given qubit counts.

    Inverse of :func:`densify` for exact product states; raises
    ``ContractError`` when the state is entangled across a requested cut.
    """
    if sum(sizes) != s.num_qubits or any(k < 1 for k in sizes):
        raise ContractError("factor sizes must be positive and sum to the qubit count")
    factors = []
    rest = s.amplitudes
    for k in sizes[:-1]:
        rest_dim = rest.shape[0] >> k
        mat = rest.reshape(1 << k, rest_dim)
        # Rank-1 check and extraction: rows of a product state are all
        # proportional, so the largest-norm row is the remainder factor.
        row_norms = np.linalg.norm(mat, axis=1)
        i0 = int(np.argmax(row_norms))
        tail = mat[i0] / row_norms[i0]
        head = mat @ tail.conj()
        if not np.allclose(np.outer(head, tail), mat, atol=1e-10):
            raise ContractError("state is not a product across the requested cut")
        factors.append(StateVector(k, head))
        rest = tail
    factors.append(StateVector(sizes[-1], rest))
    return StructuredState(tuple(factors))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> = sum of conj(a_i) * b_i."""
    if a.num_qubits != b.num_qubits:
        raise ContractError("inner product of states with different qubit counts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def trace_distance_pure(a: StateVector, b: StateVector) -> float:
    """Trace distance between two pure states: sqrt(1 - |<a|b>|^2)."""
    overlap_sq = abs(inner_product(a.require_normalized(), b.require_normalized())) ** 2
    return float(np.sqrt(max(0.0, 1.0 - overlap_sq)))


def _validate_indices(indices: list[int], num_qubits: int) -> None:
    if len(set(indices)) != len(indices):
        raise ContractError("qubit indices must be distinct")
    if any(q < 0 or q >= num_qubits for q in indices):
        raise ContractError("qubit index out of range")


def _marginal_probabilities(s: StateVector, qubit_indices: list[int]) -> np.ndarray:
    """Probabilities of outcomes on the given qubits, in qubit_indices order."""
    n = s.num_qubits
    probs = s.probabilities().reshape([2] * n)
    other = [q for q in range(n) if q not in qubit_indices]
    marg = probs.sum(axis=tuple(other)) if other else probs
    # Axes of marg follow ascending qubit index; reorder to qubit_indices.
    sorted_qubits = sorted(qubit_indices)
    perm = [sorted_qubits.index(q) for q in qubit_indices]
    return np.transpose(marg, axes=perm).reshape(-1)


def measure_computational(
    s: StateVector, qubit_indices: list[int], rng: SeededRng
) -> MeasurementRecord:
    """Measure the given qubits in the computational basis.

    The outcome is sampled from the exact marginal distribution and the
    post-measurement state is the renormalized projection, with all qubits
    retained.
    """
    _validate_indices(qubit_indices, s.num_qubits)
    k = len(qubit_indices)
    marg = _marginal_probabilities(s, qubit_indices)
    total = marg.sum()
    pick = rng.random() * total
    idx = int(np.searchsorted(np.cumsum(marg), pick, side="right"))
    idx = min(idx, (1 << k) - 1)
    outcome = int_to_bits(idx, k)

    n = s.num_qubits
    amps = s.amplitudes.reshape([2] * n).copy()
    for bit, q in zip(outcome, qubit_indices):
        sel = [slice(None)] * n
        sel[q] = 1 - int(bit)
        amps[tuple(sel)] = 0.0
    amps = amps.reshape(-1)
    amps = amps / np.linalg.norm(amps)
    return MeasurementRecord(tuple(qubit_indices), outcome, StateVector(n, amps))


def project_out(s: StateVector, qubit_indices: list[int], outcome: str) -> StateVector:
    """Drop qubits that are exactly in the basis state ``outcome``.

    Used to peel measured registers off a post-measurement state; requires
    that all amplitude weight sits in the given outcome slice.
    """
    _validate_indices(qubit_indices, s.num_qubits)
    if len(outcome) != len(qubit_indices):
        raise ContractError("outcome width must match the number of dropped qubits")
    n = s.num_qubits
    amps = s.amplitudes.reshape([2] * n)
    sel = [slice(None)] * n
    for bit, q in zip(outcome, qubit_indices):
        sel[q] = int(bit)
    kept = amps[tuple(sel)].reshape(-1)
    norm = np.linalg.norm(kept)
    if abs(norm - 1.0) > 1e-6:
        raise ContractError("dropped qubits are not in the stated basis state")
    return StateVector(n - len(qubit_indices), kept / norm)


def _oracle_table(f, width_in: int, width_out: int) -> np.ndarray:
    """Tabulate a classical function f: {0,1}^in -> {0,1}^out as integers."""
    table = np.empty(1 << width_in, dtype=np.int64)
    for x in range(1 << width_in):
        y = f(int_to_bits(x, width_in))
        if len(y) != width_out:
            raise ContractError(
                f"oracle output width {len(y)} does not match register width {width_out}"
            )
        table[x] = bits_to_int(y)
    return table


def _gather_bits(indices: np.ndarray, qubits: list[int], n: int) -> np.ndarray:
    """Extract the bits of the given qubits from every basis index."""
    vals = np.zeros_like(indices)
    for pos, q in enumerate(qubits):
        bit = (indices >> (n - 1 - q)) & 1
        vals |= bit << (len(qubits) - 1 - pos)
    return vals


def apply_xor_oracle(
    s: StateVector, f, input_qubits: list[int], output_qubits: list[int]
) -> StateVector:
    """Apply |x>|y> -> |x>|y XOR f(x)> on the given registers.

    ``f`` maps bit strings of the input width to bit strings of the output
    width; it is tabulated once, so the input register must stay small.
    """
    _validate_indices(list(input_qubits) + list(output_qubits), s.num_qubits)
    n = s.num_qubits
    table = _oracle_table(f, len(input_qubits), len(output_qubits))
    indices = np.arange(s.dim, dtype=np.int64)
    x_vals = _gather_bits(indices, list(input_qubits), n)
    y_flip = table[x_vals]
    target = indices.copy()
    for pos, q in enumerate(output_qubits):
        bit = (y_flip >> (len(output_qubits) - 1 - pos)) & 1
        target ^= bit << (n - 1 - q)
    new_amps = np.empty_like(s.amplitudes)
    new_amps[target] = s.amplitudes
    return StateVector(n, new_amps)


def apply_phase_oracle(s: StateVector, g, input_qubits: list[int]) -> StateVector:
    """Multiply the amplitude at |x> by (-1)^g(x) on the given register."""
    _validate_indices(list(input_qubits), s.num_qubits)
    n = s.num_qubits
    width = len(input_qubits)
    signs_table = np.empty(1 << width, dtype=np.float64)
    for x in range(1 << width):
        signs_table[x] = -1.0 if g(int_to_bits(x, width)) else 1.0
    indices = np.arange(s.dim, dtype=np.int64)
    x_vals = _gather_bits(indices, list(input_qubits), n)
    return StateVector(n, s.amplitudes * signs_table[x_vals])


def swap_test(a: StateVector, b: StateVector, rng: SeededRng, circuit: bool = False) -> int:
    """Two-state comparison test; returns 0 with probability 1/2 + |<a|b>|^2 / 2.

    The default computes that acceptance probability exactly from the inner
    product and samples the outcome.  With ``circuit=True`` the
    ancilla/controlled-swap circuit is simulated instead (small states only),
    for cross-validation.
    """
    if a.num_qubits != b.num_qubits:
        raise ContractError("swap test requires equal qubit counts")
    if circuit:
        return _swap_test_circuit(a, b, rng)
    overlap_sq = abs(inner_product(a, b)) ** 2
    p_accept = min(1.0, 0.5 + 0.5 * overlap_sq)
    return 0 if rng.random() < p_accept else 1


def _swap_test_circuit(a: StateVector, b: StateVector, rng: SeededRng) -> int:
    """Ancilla-based swap-test circuit on the joint dense state."""
    n = a.num_qubits
    if 1 + 2 * n > 16:
        raise ResourceError("circuit-level swap test is limited to small states")
    joint = tensor(tensor(StateVector.basis("0"), a, cap=QUBIT_CAP), b, cap=QUBIT_CAP)
    amps = joint.amplitudes.reshape(2, 1 << n, 1 << n).copy()
    # H on the ancilla.
    top, bot = amps[0].copy(), amps[1].copy()
    amps[0] = (top + bot) * _INV_SQRT2
    amps[1] = (top - bot) * _INV_SQRT2
    # Controlled swap of the two registers.
    amps[1] = amps[1].T.copy()
    # H on the ancilla again.
    top, bot = amps[0].copy(), amps[1].copy()
    amps[0] = (top + bot) * _INV_SQRT2
    amps[1] = (top - bot) * _INV_SQRT2
    p0 = float(np.sum(np.abs(amps[0]) ** 2))
    return 0 if rng.random() < min(1.0, p0) else 1
