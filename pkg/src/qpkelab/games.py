"""Executable indistinguishability and unclonability games.

Each game runs many independent trials from per-trial derived seeds.  A
trial builds fresh keys, hands the adversary the declared oracles through a
narrow environment object, enforces the oracle windows of the chosen attack
model, and records a win, a loss or a protocol violation (violations abort
the trial and never count as wins).  Identical (scheme config, adversary,
seed) triples produce identical statistics.

Three games are provided: the encryption-oracle indistinguishability game
for schemes with classical ciphertexts (chosen-plaintext / non-adaptive and
adaptive chosen-ciphertext variants), the plain indistinguishability game
for schemes with quantum ciphertexts (chosen-plaintext / non-adaptive
variants), and the proof-of-destruction cloning game.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

from .bitstrings import random_bits
from .primitives import (
    REJECT,
    PodProof,
    PrfKey,
    PrimitiveConfig,
    prfspd_destruct,
    prfspd_gen,
    prfspd_verify,
)
from .rng import SeededRng, derive_rng
from .sim import ContractError

ATTACKS = ("CPA", "CCA1", "CCA2")


@dataclass(frozen=True)
class GameConfig:
    atk: str = "CPA"
    with_encryption_oracle: bool = True
    trials: int = 1000
    seed: int = 0
    qpk_copy_cap: int = 64
    threads: int = 1
    transcript_path: str | None = None

    def __post_init__(self) -> None:
        if self.atk not in ATTACKS:
            raise ContractError(f"atk must be one of {ATTACKS}")
        if self.trials < 1:
            raise ContractError("need at least one trial")


@dataclass(frozen=True)
class GameStats:
    """Win counts with a two-sided 95% Wilson interval."""

    wins: int
    trials: int
    violations: int
    win_rate: float
    ci95: tuple[float, float]

    @staticmethod
    def from_counts(wins: int, trials: int, violations: int = 0) -> "GameStats":
        rate = wins / trials
        z = 1.96
        denom = 1.0 + z * z / trials
        center = (rate + z * z / (2 * trials)) / denom
        half = z * sqrt(rate * (1.0 - rate) / trials + z * z / (4 * trials * trials)) / denom
        return GameStats(wins, trials, violations, rate, (center - half, center + half))

    @property
    def looks_secure(self) -> bool:
        """Win rate statistically indistinguishable from a coin flip.

        Evidence only: |rate - 1/2| below the interval half-width.
        """
        half = (self.ci95[1] - self.ci95[0]) / 2.0
        return abs(self.win_rate - 0.5) < half


class GameViolation(Exception):
    """Adversary broke the game protocol; the trial aborts and is recorded."""


class Adversary:
    """Base adversary; subclasses drive the game through the environment.

    ``prepare`` runs before the challenge with the pre-challenge oracles,
    ``finish`` runs after it with the post-challenge oracles.
    """

    def prepare(self, env) -> None:
        pass

    def choose_challenge(self):
        raise NotImplementedError

    def receive_challenge(self, ct) -> None:
        self.challenge = ct

    def finish(self, env) -> None:
        pass

    def guess(self) -> int:
        raise NotImplementedError


def _decrypt(scheme, kp, ct, rng: SeededRng):
    if scheme.classical_ciphertexts:
        return scheme.decrypt(kp, ct)
    return scheme.decrypt(kp, ct, rng)


def _messages_compatible(m0, m1) -> bool:
    if isinstance(m0, bytes) and isinstance(m1, bytes):
        return len(m0) == len(m1)
    if isinstance(m0, int) and isinstance(m1, int):
        return m0 in (0, 1) and m1 in (0, 1)
    return False


class _EoEnv:
    """Oracle surface of the encryption-oracle game; enforces windows.

    Exposes exactly the declared callbacks and nothing else: key copies,
    encryption queries that thread the challenger's recycled key, and the
    two decryption oracles of the attack table.
    """

    def __init__(self, scheme, kp, cfg: GameConfig, rng: SeededRng, events: list):
        self._scheme = scheme
        self._kp = kp
        self._cfg = cfg
        self._rng = rng
        self._events = events
        self._phase = "pre"
        self._copies = 0
        self._chain = scheme.qpk_gen(kp)
        self._challenge_key = None

    def request_qpk_copy(self):
        if self._phase == "closed":
            raise GameViolation("qpk oracle used after the game ended")
        if self._copies >= self._cfg.qpk_copy_cap:
            raise GameViolation("qpk copy cap exceeded")
        self._copies += 1
        self._events.append({"event": "qpk_copy"})
        return self._scheme.qpk_gen(self._kp)

    def submit_encryption_query(self, m):
        if self._phase == "closed":
            raise GameViolation("encryption oracle used after the game ended")
        recycled, ct = self._scheme.encrypt(self._chain, m, self._rng)
        self._chain = recycled
        self._events.append({"event": "enc_query", "phase": self._phase})
        return ct

    def oracle_O1(self, ct):
        if self._phase != "pre" or self._cfg.atk == "CPA":
            raise GameViolation("O1 is not available in this phase")
        self._events.append({"event": "o1"})
        return _decrypt(self._scheme, self._kp, ct, self._rng)

    def oracle_O2(self, ct):
        if self._phase != "post" or self._cfg.atk != "CCA2":
            raise GameViolation("O2 is not available in this phase")
        self._events.append({"event": "o2"})
        if self._challenge_key is not None and self._scheme.ciphertext_to_json(ct) == self._challenge_key:
            return REJECT
        return _decrypt(self._scheme, self._kp, ct, self._rng)

    # Challenger-side hooks (not part of the adversary surface).

    def _encrypt_challenge(self, m):
        recycled, ct = self._scheme.encrypt(self._chain, m, self._rng)
        self._chain = recycled
        self._challenge_key = self._scheme.ciphertext_to_json(ct)
        self._phase = "post"
        return ct

    def _close(self):
        self._phase = "closed"


def run_ind_atk_eo(scheme, adversary_factory, cfg: GameConfig) -> GameStats:
    """Indistinguishability game with an encryption oracle (classical ciphertexts).

    ``adversary_factory(scheme, kp, rng)`` builds a fresh adversary per trial;
    the key pair argument exists for diagnostic adversaries only.
    """
    if cfg.atk == "CCA2" and not scheme.classical_ciphertexts:
        raise ContractError("the adaptive attack is defined only for classical ciphertexts")

    def trial(index: int, rng: SeededRng):
        events: list = []
        kp = scheme.gen(rng)
        adversary = adversary_factory(scheme, kp, rng)
        env = _EoEnv(scheme, kp, cfg, rng, events)
        try:
            adversary.prepare(env)
            m0, m1 = adversary.choose_challenge()
            if not _messages_compatible(m0, m1):
                raise GameViolation("challenge messages are not the same length")
            b = int(rng.integers(0, 2))
            ct_star = env._encrypt_challenge(m1 if b else m0)
            adversary.receive_challenge(ct_star)
            adversary.finish(env)
            env._close()
            won = int(adversary.guess()) == b
            return won, False, events
        except GameViolation as exc:
            events.append({"event": "violation", "detail": str(exc)})
            return False, True, events

    return _aggregate(trial, cfg)


class _AtkEnv:
    """Oracle surface of the quantum-ciphertext game (no encryption-oracle
    threading: every encryption query consumes a fresh public key)."""

    def __init__(self, scheme, kp, cfg: GameConfig, rng: SeededRng, events: list):
        self._scheme = scheme
        self._kp = kp
        self._cfg = cfg
        self._rng = rng
        self._events = events
        self._phase = "pre"
        self._copies = 0

    def request_qpk_copy(self):
        if self._phase == "closed":
            raise GameViolation("qpk oracle used after the game ended")
        if self._copies >= self._cfg.qpk_copy_cap:
            raise GameViolation("qpk copy cap exceeded")
        self._copies += 1
        self._events.append({"event": "qpk_copy"})
        return self._scheme.qpk_gen(self._kp)

    def submit_encryption_query(self, m):
        if self._phase == "closed":
            raise GameViolation("encryption oracle used after the game ended")
        pk = self._scheme.qpk_gen(self._kp)
        _, ct = self._scheme.encrypt(pk, m, self._rng)
        self._events.append({"event": "enc_query", "phase": self._phase})
        return ct

    def oracle_O1(self, ct):
        if self._phase != "pre" or self._cfg.atk == "CPA":
            raise GameViolation("O1 is not available in this phase")
        self._events.append({"event": "o1"})
        return _decrypt(self._scheme, self._kp, ct, self._rng)


def run_ind_atk(scheme, adversary_factory, cfg: GameConfig) -> GameStats:
    """Indistinguishability game for schemes with quantum ciphertexts.

    Only the chosen-plaintext and non-adaptive chosen-ciphertext models are
    defined here; the pre-challenge decryption oracle closes at challenge
    time while key copies and encryption queries remain available.
    """
    if cfg.atk == "CCA2":
        raise ContractError("the adaptive attack is not defined for quantum ciphertexts")

    def trial(index: int, rng: SeededRng):
        events: list = []
        kp = scheme.gen(rng)
        adversary = adversary_factory(scheme, kp, rng)
        env = _AtkEnv(scheme, kp, cfg, rng, events)
        try:
            adversary.prepare(env)
            m0, m1 = adversary.choose_challenge()
            if not _messages_compatible(m0, m1):
                raise GameViolation("challenge messages are not the same length")
            b = int(rng.integers(0, 2))
            pk = scheme.qpk_gen(kp)
            _, ct_star = scheme.encrypt(pk, m1 if b else m0, rng)
            env._phase = "post"
            adversary.receive_challenge(ct_star)
            adversary.finish(env)
            env._phase = "closed"
            won = int(adversary.guess()) == b
            return won, False, events
        except GameViolation as exc:
            events.append({"event": "violation", "detail": str(exc)})
            return False, True, events

    return _aggregate(trial, cfg)


def _aggregate(trial, cfg: GameConfig) -> GameStats:
    indices = range(cfg.trials)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(
                pool.map(lambda i: trial(i, derive_rng(cfg.seed, "trial", i)), indices)
            )
    else:
        results = [trial(i, derive_rng(cfg.seed, "trial", i)) for i in indices]
    if cfg.transcript_path:
        with open(cfg.transcript_path, "w", encoding="utf-8") as fh:
            for i, (_, _, events) in enumerate(results):
                for event in events:
                    fh.write(json.dumps({"trial": i, **event}, sort_keys=True) + "\n")
    wins = sum(1 for won, _, _ in results if won)
    violations = sum(1 for _, violated, _ in results if violated)
    return GameStats.from_counts(wins, cfg.trials, violations)


# ---------------------------------------------------------------------------
# Proof-of-destruction cloning game.


class _CloningEnv:
    """Generation and verification oracles with per-input copy counting."""

    def __init__(self, cfg: PrimitiveConfig, key: PrfKey, rng: SeededRng):
        self._cfg = cfg
        self._key = key
        self._rng = rng
        self.counts: dict[str, int] = {}

    def gen_query(self, x: str):
        self.counts[x] = self.counts.get(x, 0) + 1
        return prfspd_gen(self._cfg, self._key, x)

    def ver_query(self, x: str, proof: PodProof) -> int:
        return prfspd_verify(self._cfg, self._key, x, proof)


class CloningAdversary:
    """Base cloning-game adversary: returns (x, list of proofs)."""

    def run(self, env: _CloningEnv) -> tuple[str, list[PodProof]]:
        raise NotImplementedError


def run_cloning_game(
    cfg: PrimitiveConfig,
    adversary_factory,
    trials: int,
    seed: int,
    threads: int = 1,
) -> GameStats:
    """Unclonability game: t copies must not yield t+1 distinct valid proofs.

    The challenger counts generation queries per input; the adversary must
    finally present one more distinct proof than it received copies for its
    chosen input, and wins only if every proof verifies.  Duplicate proofs
    are rejected outright.
    """

    def trial(index: int, rng: SeededRng):
        key = PrfKey(random_bits(cfg.lambda_toy, rng))
        env = _CloningEnv(cfg, key, rng)
        adversary = adversary_factory(cfg, rng)
        x, proofs = adversary.run(env)
        t_x = env.counts.get(x, 0)
        if len(proofs) != t_x + 1:
            return False, False, []
        seen = {(p.y, p.z) for p in proofs}
        if len(seen) != len(proofs):
            return False, False, []
        won = all(prfspd_verify(cfg, key, x, p) for p in proofs)
        return won, False, []

    game_cfg = GameConfig(atk="CPA", trials=trials, seed=seed, threads=threads)
    return _aggregate(trial, game_cfg)


# ---------------------------------------------------------------------------
# Built-in adversaries.


class RandomGuessAdversary(Adversary):
    """Baseline: canonical challenge pair, uniformly random guess."""

    def __init__(self, scheme, kp, rng: SeededRng):
        self._scheme = scheme
        self._rng = rng

    def choose_challenge(self):
        return self._scheme.challenge_pair()

    def guess(self) -> int:
        return int(self._rng.integers(0, 2))


class KeyReaderAdversary(Adversary):
    """Diagnostic ceiling: holds the decryption key out of band.

    Wins at the scheme's correctness rate; used to sanity-check that the
    game plumbing transmits enough information to decide the challenge.
    """

    def __init__(self, scheme, kp, rng: SeededRng):
        self._scheme = scheme
        self._kp = kp
        self._rng = rng
        self._pair = scheme.challenge_pair()

    def choose_challenge(self):
        return self._pair

    def guess(self) -> int:
        m = _decrypt(self._scheme, self._kp, self.challenge, self._rng)
        if m == self._pair[0]:
            return 0
        if m == self._pair[1]:
            return 1
        return int(self._rng.integers(0, 2))


class ReplayAdversary(Adversary):
    """Submits the challenge ciphertext to the post-challenge oracle.

    The filtered oracle answers with the reject symbol, so this degrades to
    a coin flip; the recorded replies let tests verify the filter fires on
    every probe.
    """

    def __init__(self, scheme, kp, rng: SeededRng):
        self._scheme = scheme
        self._rng = rng
        self.replay_replies: list = []

    def choose_challenge(self):
        return self._scheme.challenge_pair()

    def finish(self, env) -> None:
        self.replay_replies.append(env.oracle_O2(self.challenge))

    def guess(self) -> int:
        return int(self._rng.integers(0, 2))


class HonestDestructorForger(CloningAdversary):
    """Destructs its honestly obtained copies, then guesses one extra proof."""

    def __init__(self, cfg: PrimitiveConfig, rng: SeededRng, copies: int = 1):
        self._cfg = cfg
        self._rng = rng
        self._copies = copies

    def run(self, env: _CloningEnv):
        cfg = self._cfg
        x = random_bits(cfg.prfs_d, self._rng)
        proofs: list[PodProof] = []
        for _ in range(self._copies):
            state = env.gen_query(x)
            proofs.append(prfspd_destruct(cfg, state, self._rng))
        seen = {(p.y, p.z) for p in proofs}
        proofs = [PodProof(y, z) for y, z in seen]
        # Forge distinct extras up to copies + 1 by guessing function values.
        while len(proofs) < self._copies + 1:
            y = random_bits(cfg.prfspd_dprime, self._rng)
            z = random_bits(cfg.prf_out_bits, self._rng)
            if (y, z) not in {(p.y, p.z) for p in proofs}:
                proofs.append(PodProof(y, z))
        return x, proofs


class DuplicateSubmitter(CloningAdversary):
    """Pads its submission with a duplicate; always rejected."""

    def __init__(self, cfg: PrimitiveConfig, rng: SeededRng):
        self._cfg = cfg
        self._rng = rng

    def run(self, env: _CloningEnv):
        cfg = self._cfg
        x = random_bits(cfg.prfs_d, self._rng)
        proof = prfspd_destruct(cfg, env.gen_query(x), self._rng)
        return x, [proof, proof]


class BlindForger(CloningAdversary):
    """No copies at all: submits one guessed proof for an unqueried input."""

    def __init__(self, cfg: PrimitiveConfig, rng: SeededRng):
        self._cfg = cfg
        self._rng = rng

    def run(self, env: _CloningEnv):
        cfg = self._cfg
        x = random_bits(cfg.prfs_d, self._rng)
        proof = PodProof(
            random_bits(cfg.prfspd_dprime, self._rng), random_bits(cfg.prf_out_bits, self._rng)
        )
        return x, [proof]
