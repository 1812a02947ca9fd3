"""Classical shadows from random Clifford measurements.

A snapshot is one (Clifford, outcome) record from measuring a state copy in
a uniformly random Clifford basis.  For a rank-1 target |t><t| the single
snapshot estimate is (2^n + 1) |<b|U|t>|^2 - 1, which is unbiased for
tr(|t><t| rho); batches of snapshots are combined by median of means to get
the usual (epsilon, delta) guarantee for many targets at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitstrings import bits_to_int, int_to_bits
from .clifford import CliffordElement, sample_clifford
from .rng import SeededRng
from .sim import ContractError, StateVector


@dataclass(frozen=True)
class ShadowSnapshot:
    """One random-Clifford measurement record: basis choice and outcome."""

    clifford: CliffordElement
    outcome: str

    def __post_init__(self) -> None:
        if len(self.outcome) != self.clifford.num_qubits:
            raise ContractError("outcome width must match the Clifford width")


@dataclass(frozen=True)
class OverlapEstimate:
    """Median-of-means estimate of tr(|t><t| rho) for one target.

    ``value`` is clamped to [0, 1]; ``raw_value`` keeps the unclamped median
    so statistical tests can see the unbiased quantity.
    """

    value: float
    raw_value: float
    observable_id: object
    num_snapshots: int


def snapshot(state: StateVector, rng: SeededRng) -> ShadowSnapshot:
    """Measure one copy of ``state`` in a fresh uniformly random Clifford basis.

    The copy is consumed: callers must not reuse the state they passed in for
    further copies-limited protocols.
    """
    state.require_normalized()
    u = sample_clifford(state.num_qubits, rng)
    amps = state.amplitudes.copy()
    u.apply_to_amplitudes(amps)
    probs = amps.real**2 + amps.imag**2
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    idx = min(idx, probs.shape[0] - 1)
    return ShadowSnapshot(u, int_to_bits(idx, state.num_qubits))


def collect_snapshots(state: StateVector, count: int, rng: SeededRng) -> list[ShadowSnapshot]:
    """Take ``count`` independent snapshots of identically prepared copies."""
    return [snapshot(state, rng) for _ in range(count)]


def default_batches(num_targets: int, delta: float = 0.01) -> int:
    """Median-of-means batch count 2*ceil(ln(2M/delta))."""
    return 2 * math.ceil(math.log(2 * max(1, num_targets) / delta))


def single_snapshot_estimates(snapshots: list[ShadowSnapshot], target: StateVector) -> np.ndarray:
    """Raw per-snapshot estimator values for one rank-1 target."""
    return _estimator_matrix(snapshots, [target])[:, 0]


def _estimator_matrix(snapshots: list[ShadowSnapshot], targets: list[StateVector]) -> np.ndarray:
    """(num_snapshots, num_targets) matrix of single-snapshot estimates."""
    n = snapshots[0].clifford.num_qubits
    dim = 1 << n
    for t in targets:
        if t.num_qubits != n:
            raise ContractError("target qubit count differs from snapshots")
    phi = np.empty((len(snapshots), dim), dtype=np.complex128)
    for i, snap in enumerate(snapshots):
        if snap.clifford.num_qubits != n:
            raise ContractError("snapshots have mixed qubit counts")
        phi[i] = snap.clifford.apply_inverse_to_basis(bits_to_int(snap.outcome))
    tmat = np.stack([t.amplitudes for t in targets])  # (M, dim)
    overlaps = phi.conj() @ tmat.T  # <b|U|t> for every pair
    return (dim + 1) * (overlaps.real**2 + overlaps.imag**2) - 1.0


def _batch_bounds(count: int, batches: int) -> list[tuple[int, int]]:
    """Equal batches; the last batch absorbs any remainder."""
    size = count // batches
    bounds = [(k * size, (k + 1) * size) for k in range(batches - 1)]
    bounds.append(((batches - 1) * size, count))
    return bounds


def estimate_overlaps(
    snapshots: list[ShadowSnapshot],
    targets: list[StateVector],
    batches: int | None = None,
    delta: float = 0.01,
    ids: list | None = None,
) -> list[OverlapEstimate]:
    """Median-of-means overlap estimates for rank-1 projectors onto ``targets``.

    ``batches`` defaults to 2*ceil(ln(2M/delta)) and is clipped to the number
    of snapshots.  Estimates come back in target order, each carrying the
    clamped and the raw median value.
    """
    if not snapshots:
        raise ContractError("cannot estimate from an empty snapshot list")
    if not targets:
        return []
    if batches is None:
        batches = default_batches(len(targets), delta)
    if batches < 1:
        raise ContractError("batch count must be at least 1")
    batches = min(batches, len(snapshots))
    if ids is None:
        ids = list(range(len(targets)))

    est = _estimator_matrix(snapshots, targets)
    means = np.stack([est[lo:hi].mean(axis=0) for lo, hi in _batch_bounds(len(snapshots), batches)])
    medians = np.median(means, axis=0)
    return [
        OverlapEstimate(
            value=float(min(1.0, max(0.0, med))),
            raw_value=float(med),
            observable_id=ids[m],
            num_snapshots=len(snapshots),
        )
        for m, med in enumerate(medians)
    ]


@dataclass(frozen=True)
class AccuracyRun:
    """Result of one (epsilon, delta) accuracy benchmark."""

    num_qubits: int
    num_targets: int
    epsilon: float
    delta: float
    t_snapshots: int
    runs: int
    successes: int
    worst_error: float


def accuracy_benchmark(
    num_qubits: int,
    num_targets: int,
    epsilon: float,
    delta: float,
    t_snapshots: int,
    runs: int,
    rng_factory,
) -> AccuracyRun:
    """Fraction of seeded runs where every target estimate lands within epsilon.

    Each run draws a fresh random pure state rho, fresh random pure targets,
    takes ``t_snapshots`` snapshots and checks
    max_i |estimate_i - tr(O_i rho)| <= epsilon.
    """
    successes = 0
    worst = 0.0
    for run in range(runs):
        rng = rng_factory(run)
        rho = StateVector.random(num_qubits, rng)
        targets = [StateVector.random(num_qubits, rng) for _ in range(num_targets)]
        truth = np.array(
            [abs(np.vdot(t.amplitudes, rho.amplitudes)) ** 2 for t in targets]
        )
        snaps = collect_snapshots(rho, t_snapshots, rng)
        ests = estimate_overlaps(snaps, targets, delta=delta)
        errs = np.abs(np.array([e.raw_value for e in ests]) - truth)
        run_err = float(errs.max())
        worst = max(worst, run_err)
        if run_err <= epsilon:
            successes += 1
    return AccuracyRun(
        num_qubits, num_targets, epsilon, delta, t_snapshots, runs, successes, worst
    )
