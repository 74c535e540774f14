"""qpke: simulator and analysis toolkit for a rotation-based quantum
public-key cryptosystem with exact dyadic-angle bookkeeping.

The top-level namespace re-exports the working surface: exact angle/state
primitives (`quantum_core`), the key lifecycle and cipher operations
(`protocol`), entropy and leakage accounting (`security_analysis`), the
adversary harness (`attacks`), and labeled deterministic random streams
(`seeding`).  The `qpke` console script lives in `qpke.cli`.
"""

from .attacks import (
    CcaSessionResult,
    CpaReport,
    ForwardSearchReport,
    KeyRecoveryReport,
    OracleSubmission,
    ScenarioStats,
    SingleUseCheckResult,
    chosen_ciphertext_session,
    chosen_plaintext_distinguishability,
    enumerate_forward_search_success,
    forward_search_trial,
    identify_rotations,
    key_recovery_baseline,
    parity_from_fails,
    run_forward_search,
    single_use_constraint_check,
)
from .protocol import (
    AccessDeniedError,
    CipherState,
    CopyCapExceededError,
    DecryptionOracle,
    KeyRegistry,
    LowPrecisionWarning,
    MessageTooLongError,
    OracleDeactivatedError,
    PrivateKey,
    PublicKey,
    QuantumRegister,
    TamperedRegisterError,
    decrypt,
    describe_register,
    encode_redundant,
    encrypt,
    key_fingerprint,
    key_id_of,
    keygen,
    load_private_key,
    prepare_register,
    save_private_key,
    swap_test_registers,
)
from .quantum_core import (
    MAX_PRECISION_BITS,
    AngleIndex,
    DensityMatrix,
    MeasurementOutcome,
    PrecisionMismatchError,
    PureState,
    SwapTestResult,
    apply_rotation,
    density_from_ensemble,
    index_add,
    measure_in_rotated_basis,
    measure_z,
    overlap,
    partial_trace,
    prepare_state,
    swap_test,
    swap_test_joint,
    trace_distance,
    von_neumann_entropy,
)
from .security_analysis import (
    KeyParams,
    MeasurementStrategy,
    MutualInfoEstimate,
    PublicKeyDensity,
    SecrecyReport,
    ensemble_density,
    estimate_mutual_information,
    holevo_cap,
    permuted_key_entropy,
    private_key_entropy,
    public_key_density_description,
    secrecy_condition,
)
from .seeding import rng_stream, seed_sequence

__version__ = "0.1.0"

__all__ = [
    "AccessDeniedError",
    "AngleIndex",
    "CcaSessionResult",
    "CipherState",
    "CopyCapExceededError",
    "CpaReport",
    "DecryptionOracle",
    "DensityMatrix",
    "ForwardSearchReport",
    "KeyParams",
    "KeyRecoveryReport",
    "KeyRegistry",
    "LowPrecisionWarning",
    "MAX_PRECISION_BITS",
    "MeasurementOutcome",
    "MeasurementStrategy",
    "MessageTooLongError",
    "MutualInfoEstimate",
    "OracleDeactivatedError",
    "OracleSubmission",
    "PrecisionMismatchError",
    "PrivateKey",
    "PublicKey",
    "PublicKeyDensity",
    "PureState",
    "QuantumRegister",
    "ScenarioStats",
    "SecrecyReport",
    "SingleUseCheckResult",
    "SwapTestResult",
    "TamperedRegisterError",
    "apply_rotation",
    "chosen_ciphertext_session",
    "chosen_plaintext_distinguishability",
    "decrypt",
    "density_from_ensemble",
    "describe_register",
    "encode_redundant",
    "encrypt",
    "ensemble_density",
    "enumerate_forward_search_success",
    "estimate_mutual_information",
    "forward_search_trial",
    "holevo_cap",
    "identify_rotations",
    "index_add",
    "key_fingerprint",
    "key_id_of",
    "key_recovery_baseline",
    "keygen",
    "load_private_key",
    "measure_in_rotated_basis",
    "measure_z",
    "overlap",
    "parity_from_fails",
    "partial_trace",
    "permuted_key_entropy",
    "prepare_register",
    "prepare_state",
    "private_key_entropy",
    "public_key_density_description",
    "rng_stream",
    "run_forward_search",
    "save_private_key",
    "secrecy_condition",
    "seed_sequence",
    "single_use_constraint_check",
    "swap_test",
    "swap_test_joint",
    "swap_test_registers",
    "trace_distance",
    "von_neumann_entropy",
]
