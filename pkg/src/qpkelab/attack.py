"""Unbounded-adversary key recovery against the bit scheme via shadows.

The adversary receives many copies of the public key, groups them N at a
time into joint states, measures each group in a random Clifford basis, and
uses the resulting classical shadows to estimate, for every candidate
decryption key, the overlap of the unknown key state with the candidate's
N-fold key state.  Any candidate whose estimate clears the threshold
decrypts well (the overlap-to-decryption lemma), so the attacker decides the
indistinguishability challenge by decrypting with the recovered key.

The same module verifies the lemma itself by exhaustive enumeration: for
sampled key pairs it computes the exact public-key overlap and the exact
cross-decryption probability and checks the advertised lower bound.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

from .bitstrings import int_to_bits
from .games import GameStats
from .primitives import PrfKey, PrimitiveConfig, prf_eval
from .rng import derive_rng
from .scheme_owf import BitCiphertext, BitKeyPair, BitScheme
from .shadows import collect_snapshots, estimate_overlaps
from .sim import QUBIT_CAP, ContractError, StateVector, inner_product, tensor


@dataclass(frozen=True)
class AttackConfig:
    """Shadow-attack parameters; the key space is 2**key_bits candidates."""

    key_bits: int = 8
    copies_per_estimate: int = 1200
    repeats_N: int = 2
    epsilon: float = 1.0 / 6.0
    delta: float = 0.01
    threshold: float = 0.5
    game_trials: int = 200
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < 0.5):
            raise ContractError("epsilon must lie in (0, 1/2)")
        if not (self.epsilon < self.threshold < 1.0 - self.epsilon):
            raise ContractError("threshold must lie in (epsilon, 1 - epsilon)")
        if self.key_bits < 2 or self.key_bits % 2:
            raise ContractError("key_bits must be even (two per-branch keys)")
        if self.repeats_N < 1 or self.copies_per_estimate < 1:
            raise ContractError("N and T must be positive")


@dataclass(frozen=True)
class AttackResult:
    """Outcome of the attack experiment.

    ``recovered_dk`` and ``estimate_table`` describe the first trial;
    ``copies_used`` is the per-trial public-key copy count N*T, audited
    against the generation-oracle call counter; ``game_stats`` aggregates the
    challenge-decision wins over all trials.
    """

    recovered_dk: str | None
    estimate_table: dict[str, float]
    copies_used: int
    game_stats: GameStats
    failures_no_candidate: int
    config: AttackConfig


def candidate_keys(key_bits: int) -> list[BitKeyPair]:
    """All decryption keys of the 2**key_bits key space, in index order."""
    half = key_bits // 2
    out = []
    for v in range(1 << key_bits):
        bits = int_to_bits(v, key_bits)
        out.append(BitKeyPair(PrfKey(bits[:half]), PrfKey(bits[half:])))
    return out


def _key_id(kp: BitKeyPair) -> str:
    return kp.dk0.bits + kp.dk1.bits


def _n_fold(state: StateVector, n: int) -> StateVector:
    out = state
    for _ in range(n - 1):
        out = tensor(out, state)
    return out


def _key_state_overlap(scheme: BitScheme, kp_star: BitKeyPair, kp: BitKeyPair) -> complex:
    """<qpk_dk | qpk*> as the product of the two branch inner products.

    The joint key state is a tensor of its branches, so the overlap factors;
    working per branch keeps wide instances inside the dense qubit cap.
    """
    pk_star = scheme.qpk_gen(kp_star)
    pk = scheme.qpk_gen(kp)
    return inner_product(pk.state0, pk_star.state0) * inner_product(pk.state1, pk_star.state1)


def exact_projection_value(scheme: BitScheme, kp_star: BitKeyPair, kp: BitKeyPair, n: int) -> float:
    """tr of the candidate's N-fold projector against the true N-fold key state."""
    return abs(_key_state_overlap(scheme, kp_star, kp)) ** (2 * n)


def shadow_break(scheme_cfg: PrimitiveConfig, atk_cfg: AttackConfig, seed: int | None = None) -> AttackResult:
    """Run the shadow-tomography attack end to end.

    Per trial: fresh true key, N*T public-key copies measured in random
    Clifford bases, median-of-means estimates for every candidate's N-fold
    projector, lowest-indexed candidate above the threshold, and one
    challenge decision with the recovered key.  Trials without any candidate
    above the threshold count as losses.
    """
    root_seed = atk_cfg.seed if seed is None else seed
    scheme = BitScheme(scheme_cfg, key_bits_each=atk_cfg.key_bits // 2)
    per_key_qubits = 2 * (scheme_cfg.lambda_toy + scheme_cfg.prf_out_bits)
    joint_qubits = atk_cfg.repeats_N * per_key_qubits
    if joint_qubits > QUBIT_CAP:
        raise ContractError(
            f"N-fold snapshot state needs {joint_qubits} qubits, above the cap"
        )

    candidates = candidate_keys(atk_cfg.key_bits)
    targets = [_n_fold(scheme.qpk_gen(kp).joint(), atk_cfg.repeats_N) for kp in candidates]
    ids = [_key_id(kp) for kp in candidates]

    def trial(index: int):
        rng = derive_rng(root_seed, "attack-trial", index)
        kp_star = scheme.gen(rng)
        copies = 0
        snaps = []
        for _ in range(atk_cfg.copies_per_estimate):
            parts = []
            for _ in range(atk_cfg.repeats_N):
                parts.append(scheme.qpk_gen(kp_star).joint())
                copies += 1
            rho = parts[0]
            for p in parts[1:]:
                rho = tensor(rho, p)
            snaps.extend(collect_snapshots(rho, 1, rng))
        assert copies == atk_cfg.repeats_N * atk_cfg.copies_per_estimate
        estimates = estimate_overlaps(snaps, targets, delta=atk_cfg.delta, ids=ids)
        table = {e.observable_id: e.raw_value for e in estimates}
        recovered = None
        for kp, est in zip(candidates, estimates):
            if est.value > atk_cfg.threshold:
                recovered = kp
                break
        # Challenge phase of the chosen-plaintext game, decided by decryption.
        b = int(rng.integers(0, 2))
        pk = scheme.qpk_gen(kp_star)
        _, ct_star = scheme.encrypt(pk, b, rng)
        if recovered is None:
            return False, True, None, table, copies
        m_hat = scheme.decrypt(recovered, ct_star)
        guess = m_hat if m_hat in (0, 1) else int(rng.integers(0, 2))
        return guess == b, False, _key_id(recovered), table, copies

    indices = range(atk_cfg.game_trials)
    if atk_cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=atk_cfg.threads) as pool:
            results = list(pool.map(trial, indices))
    else:
        results = [trial(i) for i in indices]

    wins = sum(1 for won, *_ in results if won)
    failures = sum(1 for _, failed, *_ in results if failed)
    first = results[0]
    return AttackResult(
        recovered_dk=first[2],
        estimate_table=first[3],
        copies_used=first[4],
        game_stats=GameStats.from_counts(wins, atk_cfg.game_trials),
        failures_no_candidate=failures,
        config=atk_cfg,
    )


@dataclass(frozen=True)
class LemmaSample:
    """One exhaustively evaluated key pair of the overlap-decryption bound."""

    dk_star: str
    dk: str
    overlap: float          # F = |<qpk* | qpk_dk>|
    epsilon: float          # 1 - F
    p_dk: float             # exact cross-decryption probability
    own_error: float        # exact own-key decryption error of dk
    bound: float            # 1 - sqrt(3 epsilon)
    holds: bool             # p_dk >= bound (the advertised form)
    holds_exact: bool       # p_dk >= 1 - own_error - sqrt(1 - F^2)
    vacuous: bool           # bound < 0


@dataclass(frozen=True)
class LemmaReport:
    samples: tuple[LemmaSample, ...]

    @property
    def all_hold(self) -> bool:
        return all(s.holds for s in self.samples)

    @property
    def all_hold_exact(self) -> bool:
        return all(s.holds_exact for s in self.samples)

    @property
    def num_vacuous(self) -> int:
        return sum(1 for s in self.samples if s.vacuous)


def _cross_decryption_probability(scheme: BitScheme, kp_star: BitKeyPair, kp: BitKeyPair) -> float:
    """Exact probability that kp decrypts kp_star's encryption of a uniform bit.

    Enumerates every measurement outcome x and both message bits; the bit
    scheme's ciphertext for message b is (x, f_{dk*_b}(x)) with x uniform.
    """
    cfg = scheme.cfg
    lam = cfg.lambda_toy
    hits = 0
    for b, dk_b in ((0, kp_star.dk0), (1, kp_star.dk1)):
        for x in range(1 << lam):
            xb = int_to_bits(x, lam)
            y = prf_eval(cfg, dk_b, xb)
            if scheme.decrypt(kp, BitCiphertext(xb, y)) == b:
                hits += 1
    return hits / (2 << lam)


def verify_pk_distance_lemma(
    scheme_cfg: PrimitiveConfig, num_samples: int, seed: int, key_bits_each: int | None = None
) -> LemmaReport:
    """Check p_dk >= 1 - sqrt(3 eps) on sampled key pairs, exhaustively.

    For each pair the overlap is computed from the dense key states and the
    decryption probability by full enumeration.  Alongside the advertised
    bound, the exact finite-size form with the own-key correctness offset
    (p_dk >= 1 - own_error - sqrt(1 - F^2)) is checked with zero tolerance.
    """
    scheme = BitScheme(scheme_cfg, key_bits_each=key_bits_each)
    samples = []
    for i in range(num_samples):
        rng = derive_rng(seed, "lemma-pair", i)
        kp_star = scheme.gen(rng)
        kp = scheme.gen(rng)
        overlap = abs(_key_state_overlap(scheme, kp_star, kp))
        eps = 1.0 - overlap
        p_dk = _cross_decryption_probability(scheme, kp_star, kp)
        own_error = scheme.exact_error_rate(kp)
        bound = 1.0 - sqrt(3.0 * eps) if eps > 0 else 1.0
        exact_bound = 1.0 - own_error - sqrt(max(0.0, 1.0 - overlap * overlap))
        samples.append(
            LemmaSample(
                dk_star=_key_id(kp_star),
                dk=_key_id(kp),
                overlap=overlap,
                epsilon=eps,
                p_dk=p_dk,
                own_error=own_error,
                bound=bound,
                holds=p_dk + 1e-12 >= bound,
                holds_exact=p_dk + 1e-12 >= exact_bound,
                vacuous=bound < 0.0,
            )
        )
    return LemmaReport(tuple(samples))
