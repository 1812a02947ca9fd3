import numpy as np
import pytest
from scipy import stats

import qpkelab.shadows as shadows_mod
from qpkelab.clifford import CliffordElement
from qpkelab.rng import derive_rng, make_rng
from qpkelab.shadows import (
    ShadowSnapshot,
    _batch_bounds,
    collect_snapshots,
    default_batches,
    estimate_overlaps,
    single_snapshot_estimates,
    snapshot,
)
from qpkelab.sim import ContractError, StateVector, inner_product


class TestSnapshot:
    def test_identity_basis_measurement(self, monkeypatch):
        monkeypatch.setattr(
            shadows_mod, "sample_clifford", lambda n, rng: CliffordElement.identity(n)
        )
        snap = snapshot(StateVector.basis("0"), make_rng(0))
        assert snap.outcome == "0"

    def test_outcome_distribution_matches_per_snapshot_resimulation(self):
        # chi-square of the pooled outcomes against the pooled Born
        # distributions of each snapshot's own sampled Clifford.
        rng = make_rng(301)
        state = StateVector.basis("00")
        trials = 10_000
        observed = np.zeros(4)
        expected = np.zeros(4)
        for _ in range(trials):
            snap = snapshot(state, rng)
            observed[int(snap.outcome, 2)] += 1
            resim = snap.clifford.apply(state)
            expected += resim.probabilities()
        chi2 = float(np.sum((observed - expected) ** 2 / expected))
        assert stats.chi2.sf(chi2, df=3) > 0.001

    def test_outcome_width_contract(self):
        with pytest.raises(ContractError):
            ShadowSnapshot(CliffordElement.identity(2), "0")


class TestEstimator:
    def test_single_snapshot_at_its_own_basis_state(self):
        rng = make_rng(302)
        state = StateVector.random(2, rng)
        snap = snapshot(state, rng)
        target = StateVector(2, snap.clifford.apply_inverse_to_basis(int(snap.outcome, 2)))
        est = estimate_overlaps([snap], [target], batches=1)[0]
        assert est.raw_value == pytest.approx(4.0)  # (2^n + 1) - 1 at n = 2
        assert est.value == 1.0

    def test_known_overlaps_zero_and_one(self):
        # rho = |0><0|: estimates for targets |0> and |1> land within 1/6 of
        # 1 and 0 in at least 99 of 100 seeded repetitions.
        state = StateVector.basis("0")
        t_zero = StateVector.basis("0")
        t_one = StateVector.basis("1")
        good = 0
        for rep in range(100):
            rng = derive_rng(303, "rep", rep)
            snaps = collect_snapshots(state, 2000, rng)
            est = estimate_overlaps(snaps, [t_zero, t_one], batches=10)
            if abs(est[0].raw_value - 1.0) <= 1 / 6 and abs(est[1].raw_value - 0.0) <= 1 / 6:
                good += 1
        assert good >= 99

    def test_unbiasedness_within_four_standard_errors(self):
        rng = make_rng(304)
        state = StateVector.random(3, rng)
        target = StateVector.random(3, rng)
        truth = abs(inner_product(target, state)) ** 2
        snaps = collect_snapshots(state, 100_000, rng)
        values = single_snapshot_estimates(snaps, target)
        se = values.std(ddof=1) / np.sqrt(len(values))
        assert abs(values.mean() - truth) < 4 * se

    def test_raw_value_retained_next_to_clamped(self):
        rng = make_rng(305)
        state = StateVector.basis("1")
        snaps = collect_snapshots(state, 50, rng)
        ests = estimate_overlaps(snaps, [StateVector.basis("1")], batches=1)
        assert ests[0].value == min(1.0, max(0.0, ests[0].raw_value))

    def test_empty_snapshots_rejected(self):
        with pytest.raises(ContractError):
            estimate_overlaps([], [StateVector.basis("0")])

    def test_mixed_qubit_counts_rejected(self):
        rng = make_rng(306)
        snaps = collect_snapshots(StateVector.basis("0"), 3, rng)
        with pytest.raises(ContractError):
            estimate_overlaps(snaps, [StateVector.basis("00")])


class TestBatching:
    def test_default_batches_formula(self):
        assert default_batches(64, 0.01) == 2 * int(np.ceil(np.log(2 * 64 / 0.01)))

    def test_last_batch_absorbs_remainder(self):
        assert _batch_bounds(7, 3) == [(0, 2), (2, 4), (4, 7)]
        assert _batch_bounds(6, 3) == [(0, 2), (2, 4), (4, 6)]

    def test_batch_count_clipped_to_snapshots(self):
        rng = make_rng(307)
        snaps = collect_snapshots(StateVector.basis("0"), 4, rng)
        ests = estimate_overlaps(snaps, [StateVector.basis("0")], batches=64)
        assert ests[0].num_snapshots == 4
