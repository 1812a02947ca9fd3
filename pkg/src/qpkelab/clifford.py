"""Uniform Clifford-group sampling with explicit gate decompositions.

A Clifford element is represented by its stabilizer tableau: rows 0..n-1
hold the images of X_0..X_{n-1} under conjugation, rows n..2n-1 the images
of Z_0..Z_{n-1}.  Each row is a Pauli given by n x-bits, n z-bits and a sign
bit; the 2n x 2n binary part is symplectic.  Internally rows are packed into
integers ((x << n) | z), which keeps the samplers and the Gaussian
elimination fast at small n.

Sampling draws the symplectic part row pair by row pair.  Each row is a
uniform solution of the linear commutation constraints imposed by the rows
already chosen, produced rejection-free from an incrementally maintained
reduced row echelon form of the constraint system, followed by uniform sign
bits.  This is uniform over the group; the tests pin it against the group
orders 24 at n=1 and 11520 at n=2.

The gate decomposition reduces the tableau to the identity with conjugation
moves, Gaussian-elimination style, and emits the inverted move sequence, so
applying ``generators`` to a dense state realizes the tableau exactly, signs
included.  Dense application is the hot path of shadow collection; it runs
through a numba kernel when numba is importable and through equivalent numpy
slicing otherwise.
"""

from __future__ import annotations

import numpy as np

from .rng import SeededRng
from .sim import ContractError, StateVector

try:  # pragma: no cover - exercised only when numba is installed
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

_INV_SQRT2 = 1.0 / np.sqrt(2.0)

# Gate opcodes used in packed gate arrays.  Only H, S, CX appear in the
# public generator list; SDG/Z/X are internal shorthands kept packed for
# fewer passes over the amplitudes.
_OP_H = 0
_OP_S = 1
_OP_CX = 2
_OP_SDG = 3
_OP_Z = 4
_OP_X = 5

_MAX_GATES_COEFF = (20, 60, 60)  # gates <= 20*n^2 + 60*n + 60, generous bound


class _GF2Rref:
    """Incremental reduced row echelon form over GF(2) on packed int rows.

    Each inserted row carries a tag identifying which original constraints
    it combines, so right-hand sides can be supplied per query.
    """

    __slots__ = ("width", "rows", "tags", "pivots", "count")

    def __init__(self, width: int):
        self.width = width
        self.rows: list[int] = []
        self.tags: list[int] = []
        self.pivots: list[int] = []
        self.count = 0  # original constraints inserted

    def insert(self, a: int) -> None:
        tag = 1 << self.count
        self.count += 1
        for r, p in enumerate(self.pivots):
            if (a >> p) & 1:
                a ^= self.rows[r]
                tag ^= self.tags[r]
        if a == 0:
            return
        p = a.bit_length() - 1
        for r in range(len(self.rows)):
            if (self.rows[r] >> p) & 1:
                self.rows[r] ^= a
                self.tags[r] ^= tag
        self.rows.append(a)
        self.tags.append(tag)
        self.pivots.append(p)

    def free_dim(self) -> int:
        return self.width - len(self.rows)

    def sample_solution(self, rhs_bits: int, rnd: int) -> int:
        """Solution of the system with the given per-constraint right-hand
        sides; ``rnd`` selects the nullspace component (uniform if uniform)."""
        u = 0
        pos = 0
        pivot_set = 0
        for p in self.pivots:
            pivot_set |= 1 << p
        for b in range(self.width):
            if not (pivot_set >> b) & 1:
                if (rnd >> pos) & 1:
                    u |= 1 << b
                pos += 1
        for r, p in enumerate(self.pivots):
            want = ((self.tags[r] & rhs_bits).bit_count() & 1) ^ (
                ((self.rows[r] ^ (1 << p)) & u).bit_count() & 1
            )
            if want:
                u |= 1 << p
        return u


def _symplectic_dual(row: int, n: int) -> int:
    """Swap the x and z halves, so symp(u, row) == parity(popcount(u & dual))."""
    mask = (1 << n) - 1
    return ((row & mask) << n) | (row >> n)


def _symp(u: int, v: int, n: int) -> int:
    return (u & _symplectic_dual(v, n)).bit_count() & 1


def _sample_symplectic_rows(n: int, rng: SeededRng) -> list[int]:
    """Uniform symplectic basis: rows 0..n-1 x-images, n..2n-1 z-images."""
    width = 2 * n
    rref = _GF2Rref(width)
    x_rows: list[int] = []
    z_rows: list[int] = []
    for i in range(n):
        # Image of X_i: nonzero, commutes with everything chosen so far.
        d = rref.free_dim()
        rnd = int(rng.integers(1, 1 << d))
        xi = rref.sample_solution(0, rnd)
        # Image of Z_i: commutes with all previous rows, anticommutes with X_i.
        x_constraint_index = rref.count
        rref.insert(_symplectic_dual(xi, n))
        d = rref.free_dim()
        rnd = int(rng.integers(0, 1 << d)) if d else 0
        zi = rref.sample_solution(1 << x_constraint_index, rnd)
        rref.insert(_symplectic_dual(zi, n))
        x_rows.append(xi)
        z_rows.append(zi)
    return x_rows + z_rows


def _tab_apply_py(rows: np.ndarray, signs: np.ndarray, n: int, op: int, a: int, b: int) -> None:
    """Conjugate every tableau row by one gate (standard update rules)."""
    nrows = 2 * n
    if op == _OP_H:
        for r in range(nrows):
            x = (rows[r] >> (n + a)) & 1
            z = (rows[r] >> a) & 1
            signs[r] ^= x & z
            if x != z:
                rows[r] ^= (1 << (n + a)) | (1 << a)
    elif op == _OP_S:
        for r in range(nrows):
            x = (rows[r] >> (n + a)) & 1
            z = (rows[r] >> a) & 1
            signs[r] ^= x & z
            if x:
                rows[r] ^= 1 << a
    else:  # CX with control a, target b
        for r in range(nrows):
            v = rows[r]
            xc = (v >> (n + a)) & 1
            zc = (v >> a) & 1
            xt = (v >> (n + b)) & 1
            zt = (v >> b) & 1
            signs[r] ^= xc & zt & (xt ^ zc ^ 1)
            if xc:
                v ^= 1 << (n + b)
            if zt:
                v ^= 1 << a
            rows[r] = v


_tab_apply = _tab_apply_py


def _decompose_core(rows: np.ndarray, signs: np.ndarray, n: int, gates: np.ndarray) -> int:
    """Reduce a tableau to the identity, emitting the inverse move list.

    ``rows``/``signs`` are int64 working copies (mutated); ``gates`` is a
    preallocated (max, 3) output array.  Returns the number of gates written.
    Written with flat loops and int arithmetic only, so the same body can be
    JIT compiled.
    """
    # Applied-move log (opcode, a, b); inverted and emitted at the end.
    log = np.empty((gates.shape[0], 3), dtype=np.int64)
    nlog = 0

    for i in range(n):
        # Pivot: give the X-image row an x-entry on qubit i.
        if (rows[i] >> (n + i)) & 1 == 0:
            found = -1
            for j in range(i + 1, n):
                if (rows[i] >> (n + j)) & 1 == 1:
                    found = j
                    break
            if found >= 0:
                for c, t in ((i, found), (found, i), (i, found)):
                    _tab_apply(rows, signs, n, _OP_CX, c, t)
                    log[nlog, 0] = _OP_CX
                    log[nlog, 1] = c
                    log[nlog, 2] = t
                    nlog += 1
            else:
                for j in range(i, n):
                    if (rows[i] >> j) & 1 == 1:
                        _tab_apply(rows, signs, n, _OP_H, j, 0)
                        log[nlog, 0] = _OP_H
                        log[nlog, 1] = j
                        log[nlog, 2] = 0
                        nlog += 1
                        if j != i:
                            for c, t in ((i, j), (j, i), (i, j)):
                                _tab_apply(rows, signs, n, _OP_CX, c, t)
                                log[nlog, 0] = _OP_CX
                                log[nlog, 1] = c
                                log[nlog, 2] = t
                                nlog += 1
                        break
        # Clear the rest of the X-image row.
        for j in range(i + 1, n):
            if (rows[i] >> (n + j)) & 1 == 1:
                _tab_apply(rows, signs, n, _OP_CX, i, j)
                log[nlog, 0] = _OP_CX
                log[nlog, 1] = i
                log[nlog, 2] = j
                nlog += 1
        zrest = 0
        for j in range(i, n):
            zrest |= (rows[i] >> j) & 1
        if zrest:
            if (rows[i] >> i) & 1 == 0:
                _tab_apply(rows, signs, n, _OP_S, i, 0)
                log[nlog, 0] = _OP_S
                log[nlog, 1] = i
                log[nlog, 2] = 0
                nlog += 1
            for j in range(i + 1, n):
                if (rows[i] >> j) & 1 == 1:
                    _tab_apply(rows, signs, n, _OP_CX, j, i)
                    log[nlog, 0] = _OP_CX
                    log[nlog, 1] = j
                    log[nlog, 2] = i
                    nlog += 1
            _tab_apply(rows, signs, n, _OP_S, i, 0)
            log[nlog, 0] = _OP_S
            log[nlog, 1] = i
            log[nlog, 2] = 0
            nlog += 1
        # Clear the Z-image row (row n + i); its z-entry at i is now forced.
        for j in range(i + 1, n):
            if (rows[n + i] >> j) & 1 == 1:
                _tab_apply(rows, signs, n, _OP_CX, j, i)
                log[nlog, 0] = _OP_CX
                log[nlog, 1] = j
                log[nlog, 2] = i
                nlog += 1
        xrest = 0
        for j in range(i, n):
            xrest |= (rows[n + i] >> (n + j)) & 1
        if xrest:
            _tab_apply(rows, signs, n, _OP_H, i, 0)
            log[nlog, 0] = _OP_H
            log[nlog, 1] = i
            log[nlog, 2] = 0
            nlog += 1
            for j in range(i + 1, n):
                if (rows[n + i] >> (n + j)) & 1 == 1:
                    _tab_apply(rows, signs, n, _OP_CX, i, j)
                    log[nlog, 0] = _OP_CX
                    log[nlog, 1] = i
                    log[nlog, 2] = j
                    nlog += 1
            if (rows[n + i] >> i) & 1 == 1:
                _tab_apply(rows, signs, n, _OP_S, i, 0)
                log[nlog, 0] = _OP_S
                log[nlog, 1] = i
                log[nlog, 2] = 0
                nlog += 1
            _tab_apply(rows, signs, n, _OP_H, i, 0)
            log[nlog, 0] = _OP_H
            log[nlog, 1] = i
            log[nlog, 2] = 0
            nlog += 1

    # Emit inverse sequence: leading Pauli sign fixes, then reversed moves
    # with S inverted to SDG (H and CX are self-inverse).
    k = 0
    for i in range(n):
        if signs[i] == 1:
            gates[k, 0] = _OP_Z
            gates[k, 1] = i
            gates[k, 2] = 0
            k += 1
        if signs[n + i] == 1:
            gates[k, 0] = _OP_X
            gates[k, 1] = i
            gates[k, 2] = 0
            k += 1
    for idx in range(nlog - 1, -1, -1):
        op = log[idx, 0]
        gates[k, 0] = _OP_SDG if op == _OP_S else op
        gates[k, 1] = log[idx, 1]
        gates[k, 2] = log[idx, 2]
        k += 1
    return k


def _apply_gates_core(amps: np.ndarray, gates: np.ndarray, n: int) -> None:
    """Apply a packed gate sequence to a dense amplitude array in place.

    Qubit q acts on bit position n-1-q of the basis index (qubit 0 is the
    most significant bit).  Flat-loop body, JIT compiled when available.
    """
    dim = amps.shape[0]
    for g in range(gates.shape[0]):
        op = gates[g, 0]
        qa = gates[g, 1]
        m = 1 << (n - 1 - qa)
        if op == _OP_H:
            for base in range(0, dim, m << 1):
                for off in range(m):
                    i = base + off
                    j = i + m
                    a0 = amps[i]
                    a1 = amps[j]
                    amps[i] = (a0 + a1) * _INV_SQRT2
                    amps[j] = (a0 - a1) * _INV_SQRT2
        elif op == _OP_S:
            for base in range(0, dim, m << 1):
                for off in range(m):
                    j = base + off + m
                    amps[j] = amps[j] * 1j
        elif op == _OP_SDG:
            for base in range(0, dim, m << 1):
                for off in range(m):
                    j = base + off + m
                    amps[j] = amps[j] * (-1j)
        elif op == _OP_Z:
            for base in range(0, dim, m << 1):
                for off in range(m):
                    j = base + off + m
                    amps[j] = -amps[j]
        elif op == _OP_X:
            for base in range(0, dim, m << 1):
                for off in range(m):
                    i = base + off
                    j = i + m
                    tmp = amps[i]
                    amps[i] = amps[j]
                    amps[j] = tmp
        else:  # CX with control qa, target qb
            qb = gates[g, 2]
            mt = 1 << (n - 1 - qb)
            hi = m if m > mt else mt
            lo = mt if m > mt else m
            for a in range(0, dim, hi << 1):
                for b in range(0, hi, lo << 1):
                    for c in range(lo):
                        x = a + b + c
                        i = x | m
                        j = i | mt
                        tmp = amps[i]
                        amps[i] = amps[j]
                        amps[j] = tmp


if _HAVE_NUMBA:
    _tab_apply = njit(cache=True)(_tab_apply_py)
    _decompose_jit = njit(cache=True)(_decompose_core)
    _apply_gates_jit = njit(cache=True, nogil=True)(_apply_gates_core)
else:  # pragma: no cover
    _decompose_jit = None
    _apply_gates_jit = None


def _decompose(rows: list[int], signs: list[int], n: int) -> np.ndarray:
    rows_arr = np.array(rows, dtype=np.int64)
    signs_arr = np.array(signs, dtype=np.int64)
    c2, c1, c0 = _MAX_GATES_COEFF
    out = np.empty((c2 * n * n + c1 * n + c0, 3), dtype=np.int64)
    if _decompose_jit is not None and n <= 31:
        k = _decompose_jit(rows_arr, signs_arr, n, out)
    else:
        k = _decompose_core(rows_arr, signs_arr, n, out)
    return out[:k].copy()


def apply_gate_array(amps: np.ndarray, gates: np.ndarray, n: int) -> None:
    """Apply a packed gate sequence to an amplitude array in place."""
    if _apply_gates_jit is not None:
        _apply_gates_jit(amps, gates, n)
    else:
        _apply_gates_core(amps, gates, n)


def _invert_gate_array(gates: np.ndarray) -> np.ndarray:
    """Packed gate sequence of the inverse unitary."""
    inv = gates[::-1].copy()
    s_mask = inv[:, 0] == _OP_S
    sdg_mask = inv[:, 0] == _OP_SDG
    inv[s_mask, 0] = _OP_SDG
    inv[sdg_mask, 0] = _OP_S
    return inv


class CliffordElement:
    """An n-qubit Clifford with tableau and gate decomposition.

    ``generators`` lists Hadamard / phase / CNOT moves whose dense
    application realizes the tableau; ``tableau`` is the 2n x (2n+1) binary
    matrix with x-columns, z-columns and the sign column, X-image rows first.
    """

    __slots__ = ("num_qubits", "_rows", "_signs", "_gates", "_tableau")

    def __init__(self, num_qubits: int, rows: list[int], signs: list[int], gates: np.ndarray):
        self.num_qubits = num_qubits
        self._rows = tuple(int(r) for r in rows)
        self._signs = tuple(int(s) for s in signs)
        self._gates = gates
        self._tableau = None

    @staticmethod
    def identity(num_qubits: int) -> "CliffordElement":
        n = num_qubits
        rows = [1 << (n + i) for i in range(n)] + [1 << i for i in range(n)]
        return CliffordElement(n, rows, [0] * (2 * n), np.empty((0, 3), dtype=np.int64))

    @property
    def generators(self) -> list[tuple]:
        """Decomposition over Hadamard ('h'), phase ('s') and CNOT ('cx')."""
        out: list[tuple] = []
        for op, a, b in self._gates:
            a, b = int(a), int(b)
            if op == _OP_H:
                out.append(("h", a))
            elif op == _OP_S:
                out.append(("s", a))
            elif op == _OP_CX:
                out.append(("cx", a, b))
            elif op == _OP_SDG:
                out.extend([("s", a)] * 3)
            elif op == _OP_Z:
                out.extend([("s", a)] * 2)
            else:  # X = H S S H
                out.extend([("h", a), ("s", a), ("s", a), ("h", a)])
        return out

    @property
    def tableau(self) -> np.ndarray:
        if self._tableau is None:
            n = self.num_qubits
            tab = np.zeros((2 * n, 2 * n + 1), dtype=np.uint8)
            for r, v in enumerate(self._rows):
                for q in range(n):
                    tab[r, q] = (v >> (n + q)) & 1
                    tab[r, n + q] = (v >> q) & 1
                tab[r, 2 * n] = self._signs[r]
            self._tableau = tab
        return self._tableau

    def key(self) -> tuple:
        """Canonical hashable identity of the group element."""
        return (self.num_qubits, self._rows, self._signs)

    def is_symplectic(self) -> bool:
        """Check that the binary part preserves the symplectic form exactly."""
        n = self.num_qubits
        for i in range(2 * n):
            for j in range(i, 2 * n):
                want = 1 if j == i + n else 0
                if _symp(self._rows[i], self._rows[j], n) != want:
                    return False
        return True

    def apply(self, state: StateVector) -> StateVector:
        if state.num_qubits != self.num_qubits:
            raise ContractError("clifford and state qubit counts differ")
        amps = state.amplitudes.copy()
        apply_gate_array(amps, self._gates, self.num_qubits)
        return StateVector(self.num_qubits, amps)

    def apply_to_amplitudes(self, amps: np.ndarray) -> None:
        """In-place dense application (hot path; no copies, no checks)."""
        apply_gate_array(amps, self._gates, self.num_qubits)

    def apply_inverse_to_basis(self, index: int) -> np.ndarray:
        """Amplitudes of U^dagger |index>, used by shadow estimators."""
        amps = np.zeros(1 << self.num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        apply_gate_array(amps, _invert_gate_array(self._gates), self.num_qubits)
        return amps


def sample_clifford(num_qubits: int, rng: SeededRng) -> CliffordElement:
    """Sample a uniformly random n-qubit Clifford element.

    Returns the element with both its tableau and an explicit generator
    decomposition over {H, S, CNOT}.
    """
    if num_qubits < 1:
        raise ContractError("need at least one qubit")
    n = num_qubits
    rows = _sample_symplectic_rows(n, rng)
    signs = [int(b) for b in rng.integers(0, 2, size=2 * n)]
    gates = _decompose(rows, signs, n)
    return CliffordElement(n, rows, signs, gates)


def _pauli_dense(x_bits, z_bits, n: int) -> np.ndarray:
    """Hermitian Pauli i^{x.z} X^x Z^z as a dense matrix (tests, small n)."""
    X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    I = np.eye(2, dtype=np.complex128)
    out = np.array([[1.0 + 0j]])
    for x, z in zip(x_bits, z_bits):
        if x and z:
            m = 1j * (X @ Z)
        elif x:
            m = X
        elif z:
            m = Z
        else:
            m = I
        out = np.kron(out, m)
    return out


def dense_unitary(element: CliffordElement) -> np.ndarray:
    """Dense matrix of the element (small n only)."""
    n = element.num_qubits
    dim = 1 << n
    U = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        col = np.zeros(dim, dtype=np.complex128)
        col[j] = 1.0
        apply_gate_array(col, element._gates, n)
        U[:, j] = col
    return U


def generators_match_tableau(element: CliffordElement, atol: float = 1e-9) -> bool:
    """Cross-check that the dense gate action reproduces the tableau rows.

    Verifies U P U^dagger == (-1)^sign * row_pauli for every X_i and Z_i,
    which ties the generator decomposition, the sign convention and the
    symplectic data together.  Intended for n <= 6.
    """
    n = element.num_qubits
    U = dense_unitary(element)
    tab = element.tableau
    for i in range(2 * n):
        src_x = [1 if (i < n and q == i) else 0 for q in range(n)]
        src_z = [1 if (i >= n and q == i - n) else 0 for q in range(n)]
        P_src = _pauli_dense(src_x, src_z, n)
        P_img = _pauli_dense(list(tab[i, :n]), list(tab[i, n : 2 * n]), n)
        sign = -1.0 if tab[i, 2 * n] else 1.0
        if not np.allclose(U @ P_src @ U.conj().T, sign * P_img, atol=atol):
            return False
    return True
