"""Batch experiment driver.

Every experiment is a pure function of its command-line (or JSON) spec: a
single root seed fans out to labeled child generators, results are written
as CSV or JSON with a fixed per-command schema, and a run manifest records
the parameters, seed labels, package versions and a digest of the results
so reruns can be compared byte for byte.

Exit codes: 0 on success, 1 when --check finds a threshold miss, 2 on spec
validation errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .attack import AttackConfig, shadow_break, verify_pk_distance_lemma
from .games import (
    GameConfig,
    KeyReaderAdversary,
    RandomGuessAdversary,
    ReplayAdversary,
    run_cloning_game,
    run_ind_atk,
    run_ind_atk_eo,
)
from .games import BlindForger, DuplicateSubmitter, HonestDestructorForger
from .primitives import REJECT, PrimitiveConfig
from .rng import derive_rng
from .scheme_owf import BitScheme, OwfScheme
from .scheme_prfs import PrfsScheme
from .scheme_prfspd import PrfspdScheme
from .shadows import accuracy_benchmark

OUTPUT_DIR_ENV = "QPKELAB_OUTPUT_DIR"

COMMANDS = ("correctness", "game", "attack", "shadows-bench", "lemma61", "vectors", "decrypt")
SCHEMES = ("owf", "owf-bit", "prfs", "prfspd")

GAME_ADVERSARIES = {
    "random": RandomGuessAdversary,
    "key-reader": KeyReaderAdversary,
    "replay": ReplayAdversary,
}

CLONING_ADVERSARIES = {
    "honest-destructor": HonestDestructorForger,
    "duplicate": DuplicateSubmitter,
    "blind": BlindForger,
}


class SpecError(ValueError):
    """Invalid experiment specification."""


def _build_scheme(name: str, cfg: PrimitiveConfig, args):
    if name == "owf":
        return OwfScheme(cfg)
    if name == "owf-bit":
        return BitScheme(cfg)
    if name == "prfs":
        return PrfsScheme(cfg, n_copies=args.prfs_copies)
    if name == "prfspd":
        return PrfspdScheme(cfg, num_instances=args.instances)
    raise SpecError(f"unknown scheme {name!r}")


def _load_config(args) -> PrimitiveConfig:
    fields = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            fields.update(json.load(fh))
    for name in ("lambda_toy", "prfs_d", "prfs_m", "prfspd_dprime", "prf_out_bits", "tag_bits"):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    fields["seed"] = args.seed
    return PrimitiveConfig(**fields)


def _rows_to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(args, header: list[str], rows: list[list], extra_manifest: dict) -> str:
    """Write the results table and its manifest; returns the results text."""
    if args.format == "csv":
        text = _rows_to_csv(header, rows)
    else:
        text = json.dumps([dict(zip(header, row)) for row in rows], indent=2, sort_keys=True) + "\n"
    digest = hashlib.sha256(text.encode()).hexdigest()
    out_path = args.output
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        manifest = {
            "command": args.command,
            "parameters": extra_manifest,
            "seed": args.seed,
            "seed_derivation": "blake2b-labeled children of the root seed",
            "results_sha256": digest,
            "package_version": __version__,
            "python_version": platform.python_version(),
            "numpy_version": np.__version__,
            "wall_time_s": round(time.time() - args._start_time, 3),
        }
        with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(text)
    return text


def _cmd_correctness(args) -> int:
    cfg = _load_config(args)
    scheme = _build_scheme(args.scheme, cfg, args)
    rng = derive_rng(args.seed, "correctness")
    successes = 0
    rejects = 0
    for _ in range(args.trials):
        kp = scheme.gen(rng)
        pk = scheme.qpk_gen(kp)
        m = scheme.random_message(rng)
        if args.scheme == "prfs":
            _, ct = scheme.encrypt(pk, m, rng)
            out = scheme.decrypt(kp, ct, rng)
        else:
            _, ct = scheme.encrypt(pk, m, rng)
            out = scheme.decrypt(kp, ct)
        if out == m:
            successes += 1
        elif out is REJECT:
            rejects += 1
    reuse_ok = ""
    if getattr(scheme, "reusable", False):
        kp = scheme.gen(rng)
        key = scheme.qpk_gen(kp)
        good = 0
        for _ in range(args.reuse_chain):
            m = scheme.random_message(rng)
            key, ct = scheme.encrypt(key, m, rng)
            good += scheme.decrypt(kp, ct) == m
        reuse_ok = good / args.reuse_chain
    header = ["scheme", "trials", "seed", "metric", "value"]
    rows = [
        [args.scheme, args.trials, args.seed, "roundtrip_success_rate", successes / args.trials],
        [args.scheme, args.trials, args.seed, "reject_rate", rejects / args.trials],
    ]
    if reuse_ok != "":
        rows.append([args.scheme, args.reuse_chain, args.seed, "reusability_success_rate", reuse_ok])
    _emit(args, header, rows, {"scheme": args.scheme, "trials": args.trials,
                               "config": json.loads(cfg.to_json())})
    if args.check and successes != args.trials:
        return 1
    if args.check and reuse_ok != "" and reuse_ok != 1.0:
        return 1
    return 0


def _cmd_game(args) -> int:
    cfg = _load_config(args)
    scheme = _build_scheme(args.scheme, cfg, args)
    adversary = GAME_ADVERSARIES[args.adversary]
    game_cfg = GameConfig(
        atk=args.atk.upper(),
        with_encryption_oracle=args.eo,
        trials=args.trials,
        seed=args.seed,
        threads=args.threads,
        transcript_path=args.transcript,
    )
    if args.eo:
        if not scheme.classical_ciphertexts:
            raise SpecError("the encryption-oracle game needs classical ciphertexts")
        stats = run_ind_atk_eo(scheme, adversary, game_cfg)
    else:
        stats = run_ind_atk(scheme, adversary, game_cfg)
    header = [
        "scheme", "atk", "eo", "adversary", "trials", "seed",
        "wins", "violations", "win_rate", "ci_low", "ci_high", "looks_secure",
    ]
    rows = [[
        args.scheme, game_cfg.atk, int(args.eo), args.adversary, args.trials, args.seed,
        stats.wins, stats.violations, stats.win_rate,
        stats.ci95[0], stats.ci95[1], int(stats.looks_secure),
    ]]
    _emit(args, header, rows, {"scheme": args.scheme, "atk": game_cfg.atk, "eo": args.eo,
                               "adversary": args.adversary, "trials": args.trials,
                               "config": json.loads(cfg.to_json())})
    if args.check and args.adversary == "random" and not (0.45 <= stats.win_rate <= 0.55):
        return 1
    return 0


def _cmd_attack(args) -> int:
    cfg = _load_config(args)
    atk_cfg = AttackConfig(
        key_bits=args.key_bits,
        copies_per_estimate=args.snapshots,
        repeats_N=args.repeats,
        epsilon=args.epsilon,
        delta=args.delta,
        threshold=args.threshold,
        game_trials=args.trials,
        seed=args.seed,
        threads=args.threads,
    )
    result = shadow_break(cfg, atk_cfg)
    header = [
        "key_bits", "lambda_scheme", "prf_out_bits", "n_repeats", "t_snapshots",
        "trials", "seed", "wins", "win_rate", "ci_low", "ci_high",
        "copies_per_trial", "failures_no_candidate",
    ]
    stats = result.game_stats
    rows = [[
        args.key_bits, cfg.lambda_toy, cfg.prf_out_bits, args.repeats, args.snapshots,
        args.trials, args.seed, stats.wins, stats.win_rate,
        stats.ci95[0], stats.ci95[1], result.copies_used, result.failures_no_candidate,
    ]]
    extra = {"attack": {"key_bits": args.key_bits, "N": args.repeats, "T": args.snapshots,
                        "epsilon": args.epsilon, "delta": args.delta,
                        "threshold": args.threshold, "copies_per_trial": result.copies_used},
             "config": json.loads(cfg.to_json())}
    _emit(args, header, rows, extra)
    if args.check and stats.win_rate < 0.9:
        return 1
    return 0


def _cmd_shadows_bench(args) -> int:
    ladder = [args.snapshots] if not args.calibrate else sorted(
        {max(200, args.snapshots // 4), args.snapshots // 2, args.snapshots}
    )
    rows = []
    passed_t = None
    for t in ladder:
        bench = accuracy_benchmark(
            num_qubits=args.qubits,
            num_targets=args.targets,
            epsilon=args.epsilon,
            delta=args.delta,
            t_snapshots=t,
            runs=args.runs,
            rng_factory=lambda run, _t=t: derive_rng(args.seed, "shadow-bench", _t, run),
        )
        rows.append([
            args.qubits, args.targets, args.epsilon, args.delta, t,
            args.runs, args.seed, bench.successes, bench.worst_error,
        ])
        if bench.successes >= args.runs - 1 and passed_t is None:
            passed_t = t
    header = [
        "num_qubits", "num_targets", "epsilon", "delta", "t_snapshots",
        "runs", "seed", "successes", "worst_error",
    ]
    _emit(args, header, rows, {"qubits": args.qubits, "targets": args.targets,
                               "epsilon": args.epsilon, "delta": args.delta,
                               "ladder": ladder, "calibrated_t": passed_t})
    if args.check and passed_t is None:
        return 1
    return 0


def _cmd_lemma61(args) -> int:
    cfg = _load_config(args)
    report = verify_pk_distance_lemma(cfg, args.pairs, args.seed)
    header = ["lambda_toy", "prf_out_bits", "pairs", "seed", "all_hold",
              "all_hold_exact", "num_vacuous"]
    rows = [[cfg.lambda_toy, cfg.prf_out_bits, args.pairs, args.seed,
             int(report.all_hold), int(report.all_hold_exact), report.num_vacuous]]
    _emit(args, header, rows, {"pairs": args.pairs, "config": json.loads(cfg.to_json())})
    if args.check and not (report.all_hold and report.all_hold_exact):
        return 1
    return 0


def _cmd_vectors(args) -> int:
    cfg = _load_config(args)
    scheme = _build_scheme(args.scheme, cfg, args)
    if args.scheme not in ("owf", "owf-bit"):
        raise SpecError("vectors are defined for the classical-ciphertext key schemes")
    rng = derive_rng(args.seed, "vectors")
    vectors = []
    for _ in range(args.count):
        kp = scheme.gen(rng)
        pk = scheme.qpk_gen(kp)
        m = scheme.random_message(rng)
        _, ct = scheme.encrypt(pk, m, rng)
        vectors.append({
            "scheme": args.scheme,
            "keypair": json.loads(scheme.keypair_to_json(kp)),
            "ciphertext": json.loads(scheme.ciphertext_to_json(ct)),
            "plaintext": m.hex() if isinstance(m, bytes) else m,
        })
    text = json.dumps({"config": json.loads(cfg.to_json()), "vectors": vectors},
                      indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_decrypt(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg = PrimitiveConfig(**doc["config"])
    failures = 0
    for vec in doc["vectors"]:
        scheme = _build_scheme(vec["scheme"], cfg, args)
        kp = scheme.keypair_from_json(json.dumps(vec["keypair"]))
        ct = scheme.ciphertext_from_json(json.dumps(vec["ciphertext"]))
        out = scheme.decrypt(kp, ct)
        want = bytes.fromhex(vec["plaintext"]) if isinstance(vec["plaintext"], str) else vec["plaintext"]
        if out != want:
            failures += 1
    print(f"decrypted {len(doc['vectors'])} vectors, {failures} failures")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpke-lab",
        description="Experiment driver for the quantum-public-key encryption laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scheme=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", default=None,
                       help=f"output file (default stdout; directory from ${OUTPUT_DIR_ENV})")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--check", action="store_true",
                       help="turn acceptance thresholds into the exit code")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--config", default=None, help="JSON file with primitive widths")
        for name in ("lambda_toy", "prfs_d", "prfs_m", "prfspd_dprime",
                     "prf_out_bits", "tag_bits"):
            p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, default=None)
        p.add_argument("--prfs-copies", type=int, default=4,
                       help="payload copies per bit for the quantum-ciphertext scheme")
        p.add_argument("--instances", type=int, default=8,
                       help="parallel instances for the proof-of-destruction scheme")
        if scheme:
            p.add_argument("--scheme", choices=SCHEMES, required=True)

    p = sub.add_parser("correctness", help="round-trip and reusability statistics")
    common(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--reuse-chain", type=int, default=100)

    p = sub.add_parser("game", help="indistinguishability game experiments")
    common(p)
    p.add_argument("--atk", choices=("cpa", "cca1", "cca2"), default="cpa")
    p.add_argument("--eo", action="store_true",
                   help="encryption-oracle game (classical ciphertexts)")
    p.add_argument("--adversary", choices=sorted(GAME_ADVERSARIES), default="random")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--transcript", default=None, help="JSON-lines oracle transcript path")

    p = sub.add_parser("attack", help="shadow-tomography key recovery experiment")
    common(p, scheme=False)
    p.add_argument("--key-bits", type=int, default=8)
    p.add_argument("--snapshots", type=int, default=800, help="T, copies per estimate")
    p.add_argument("--repeats", type=int, default=1, help="N, joint copies per observable")
    p.add_argument("--epsilon", type=float, default=1.0 / 6.0)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=200)

    p = sub.add_parser("shadows-bench", help="shadow estimation accuracy benchmark")
    common(p, scheme=False)
    p.add_argument("--qubits", type=int, default=3)
    p.add_argument("--targets", type=int, default=64)
    p.add_argument("--epsilon", type=float, default=1.0 / 6.0)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--snapshots", type=int, default=6000)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--calibrate", action="store_true",
                   help="try a ladder of snapshot counts up to --snapshots")

    p = sub.add_parser("lemma61", help="overlap-to-decryption bound verification")
    common(p, scheme=False)
    p.add_argument("--pairs", type=int, default=100)

    p = sub.add_parser("vectors", help="emit key/ciphertext vectors as JSON")
    common(p)
    p.add_argument("--count", type=int, default=5)

    p = sub.add_parser("decrypt", help="round-trip previously emitted vectors")
    p.add_argument("--input", required=True)
    p.add_argument("--prfs-copies", type=int, default=4)
    p.add_argument("--instances", type=int, default=8)

    return parser


_HANDLERS = {
    "correctness": _cmd_correctness,
    "game": _cmd_game,
    "attack": _cmd_attack,
    "shadows-bench": _cmd_shadows_bench,
    "lemma61": _cmd_lemma61,
    "vectors": _cmd_vectors,
    "decrypt": _cmd_decrypt,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._start_time = time.time()
    if getattr(args, "output", None) and not os.path.isabs(args.output):
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base:
            os.makedirs(base, exist_ok=True)
            args.output = os.path.join(base, args.output)
    try:
        return _HANDLERS[args.command](args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
