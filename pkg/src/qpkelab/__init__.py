"""Desk-scale laboratory for public-key encryption with quantum public keys.

Exact statevector simulation of three encryption schemes whose public keys
are pure quantum states, the indistinguishability and unclonability games
that probe them, and the shadow-tomography adversary that recovers keys from
polynomially many public-key copies.
"""

from .attack import AttackConfig, AttackResult, shadow_break, verify_pk_distance_lemma
from .clifford import CliffordElement, sample_clifford
from .games import (
    Adversary,
    GameConfig,
    GameStats,
    KeyReaderAdversary,
    RandomGuessAdversary,
    ReplayAdversary,
    run_cloning_game,
    run_ind_atk,
    run_ind_atk_eo,
)
from .primitives import (
    REJECT,
    PodProof,
    PrfKey,
    PrimitiveConfig,
    SkeCiphertext,
    SkeKey,
    prf_eval,
    prfs_gen,
    prfs_gen_superposed,
    prfspd_destruct,
    prfspd_gen,
    prfspd_verify,
    ske_decrypt,
    ske_encrypt,
)
from .rng import derive_rng, make_rng
from .scheme_owf import BitScheme, OwfScheme
from .scheme_prfs import PrfsScheme
from .scheme_prfspd import PrfspdScheme
from .shadows import OverlapEstimate, ShadowSnapshot, estimate_overlaps, snapshot
from .sim import (
    QUBIT_CAP,
    ContractError,
    MeasurementRecord,
    ResourceError,
    StateVector,
    StructuredState,
    apply_phase_oracle,
    apply_xor_oracle,
    densify,
    inner_product,
    measure_computational,
    swap_test,
    tensor,
    trace_distance_pure,
)

__version__ = "0.1.0"
