"""Information-theoretic security accounting for the rotation cryptosystem.

Closed-form entropy bookkeeping for the private key, the Holevo ceiling on
what any measurement of the public copies can reveal, and the resulting
secrecy margin.  Alongside the exact accounting, this module builds the
mixed-state ensembles an eavesdropper actually faces and estimates, by
simulated measurement, how much key information concrete strategies
extract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantum_core import DensityMatrix

ENSEMBLE_ENUMERATION_CAP = 16
MI_PRECISION_CAP = 16
DEFAULT_MARGIN_THRESHOLD = 100.0
BOOTSTRAP_RESAMPLES = 32
POVM_ATOL = 1e-10
DEFAULT_RANDOM_BASIS_ANGLES = tuple(j * math.pi / 8 for j in range(8))

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class KeyParams:
    """Distribution parameters of a private key draw.

    The precision of each key entry is uniform on [n_l, n_u] and the entry
    itself uniform on [0, 2**n).  Entropy accounting stays closed-form, so
    n_u may exceed the simulator's representable precision.
    """

    n_l: int
    n_u: int
    N: int
    k: int

    def __post_init__(self) -> None:
        for name in ("n_l", "n_u", "N", "k"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer")
        if self.n_l < 1:
            raise ValueError("n_l must be at least 1")
        if self.n_u < self.n_l:
            raise ValueError("n_u must be at least n_l")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.k < 0:
            raise ValueError("k must be non-negative")

    @property
    def mean_precision(self) -> float:
        return (self.n_l + self.n_u) / 2.0


def private_key_entropy(params: KeyParams) -> float:
    """Shannon entropy in bits of the private key distribution.

    The precision choice contributes log2(n_u - n_l + 1) bits and each of
    the N entries contributes the mean precision in expectation.
    """
    choices = params.n_u - params.n_l + 1
    return math.log2(choices) + params.N * params.mean_precision


def permuted_key_entropy(params: KeyParams) -> float:
    """Entropy in bits when a secret qubit permutation augments the key."""
    return private_key_entropy(params) + math.lgamma(params.N + 1) / _LN2


def holevo_cap(params: KeyParams) -> float:
    """Upper bound in bits on key information extractable from k copies.

    Each public-key copy carries N qubits, and the accessible information
    from any measurement of all copies is at most one bit per qubit held.
    """
    return float(params.N * params.k)


@dataclass(frozen=True)
class SecrecyReport:
    """Entropy ledger comparing key uncertainty against the Holevo cap."""

    params: KeyParams
    key_entropy_bits: float
    permuted_key_entropy_bits: float
    holevo_cap_bits: float
    margin: float
    threshold: float
    satisfied: bool
    residual_key_entropy_bits: float

    def to_records(self) -> list[dict]:
        """Flat analysis records, one per reported quantity."""
        params = {
            "n_l": self.params.n_l,
            "n_u": self.params.n_u,
            "N": self.params.N,
            "k": self.params.k,
        }

        def record(quantity: str, value: float, satisfied: bool | None = None) -> dict:
            return {
                "quantity": quantity,
                "value_bits": value,
                "stderr_bits": None,
                "params": params,
                "satisfied": satisfied,
            }

        return [
            record("private_key_entropy", self.key_entropy_bits),
            record("permuted_key_entropy", self.permuted_key_entropy_bits),
            record("holevo_cap", self.holevo_cap_bits),
            record("secrecy_margin", self.margin, self.satisfied),
            record("residual_key_entropy", self.residual_key_entropy_bits),
        ]


def secrecy_condition(
    params: KeyParams, threshold: float = DEFAULT_MARGIN_THRESHOLD
) -> SecrecyReport:
    """Evaluate the key-entropy-to-leakage margin against a threshold.

    The margin is H(d) / (N k); secrecy by a wide margin means the key
    retains essentially all its entropy even if the adversary extracts the
    full Holevo bound.  With no copies issued the cap is zero and the
    margin infinite.  The residual entropy H(d|x) lower-bounds what stays
    hidden after the best possible measurement.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    h_key = private_key_entropy(params)
    cap = holevo_cap(params)
    margin = math.inf if cap == 0.0 else h_key / cap
    return SecrecyReport(
        params=params,
        key_entropy_bits=h_key,
        permuted_key_entropy_bits=permuted_key_entropy(params),
        holevo_cap_bits=cap,
        margin=margin,
        threshold=threshold,
        satisfied=margin >= threshold,
        residual_key_entropy_bits=h_key - min(h_key, cap),
    )


def ensemble_density(n: int) -> DensityMatrix:
    """Average single-qubit state over a uniform key entry at precision n.

    Enumerates all 2**n rotation states up to ENSEMBLE_ENUMERATION_CAP
    bits; beyond that the average is the maximally mixed state exactly
    (the off-diagonal sums telescope to zero for every n >= 1), so the
    closed form is returned directly.
    """
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("n must be an integer")
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > ENSEMBLE_ENUMERATION_CAP:
        return DensityMatrix(np.eye(2) / 2.0)
    half = np.pi * np.arange(1 << n, dtype=np.float64) / float(1 << n)
    c, s = np.cos(half), np.sin(half)
    rho = np.empty((2, 2), dtype=np.complex128)
    rho[0, 0] = np.mean(c * c)
    rho[0, 1] = rho[1, 0] = np.mean(c * s)
    rho[1, 1] = np.mean(s * s)
    return DensityMatrix(rho)


def ensemble_density_method(n: int) -> str:
    """Which route ensemble_density takes at precision n."""
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("n must be an integer")
    if n < 1:
        raise ValueError("n must be at least 1")
    return "enumerated" if n <= ENSEMBLE_ENUMERATION_CAP else "analytic"


@dataclass(frozen=True)
class PublicKeyDensity:
    """Eavesdropper's view of a public key with unknown private indices.

    Averaged over the key distribution, each qubit is maximally mixed and
    the qubits are independent, so the state factorizes and its entropy is
    one bit per qubit.
    """

    num_qubits: int
    per_qubit: DensityMatrix
    entropy_bits: float
    factorized: bool = True

    def materialize(self, max_qubits: int = 8) -> DensityMatrix:
        """Explicit tensor-product density matrix, for small registers."""
        if self.num_qubits > max_qubits:
            raise ValueError(
                f"materializing {self.num_qubits} qubits exceeds the "
                f"{max_qubits}-qubit limit"
            )
        out = self.per_qubit.entries
        for _ in range(self.num_qubits - 1):
            out = np.kron(out, self.per_qubit.entries)
        return DensityMatrix(out)


def public_key_density_description(params: KeyParams) -> PublicKeyDensity:
    """Average state of one public-key copy under the key distribution."""
    return PublicKeyDensity(
        num_qubits=params.N,
        per_qubit=DensityMatrix(np.eye(2) / 2.0),
        entropy_bits=float(params.N),
    )


@dataclass(frozen=True)
class MeasurementStrategy:
    """A repeatable single-qubit measurement an eavesdropper applies.

    kind "fixed-basis" measures every copy in the rotated basis at
    basis_angle; "random-basis" draws the angle per trial from
    basis_angles; "custom-two-outcome" applies a two-element POVM.
    """

    kind: str
    basis_angle: float = 0.0
    basis_angles: tuple[float, ...] = DEFAULT_RANDOM_BASIS_ANGLES
    povm: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("fixed-basis", "random-basis", "custom-two-outcome"):
            raise ValueError(f"unknown strategy kind: {self.kind!r}")
        if self.kind == "random-basis" and len(self.basis_angles) == 0:
            raise ValueError("random-basis strategy needs at least one angle")
        if self.kind == "custom-two-outcome":
            if self.povm is None or len(self.povm) != 2:
                raise ValueError("custom-two-outcome strategy needs two POVM elements")
            elements = []
            for e in self.povm:
                e = np.asarray(e, dtype=np.complex128)
                if e.shape != (2, 2):
                    raise ValueError("POVM elements must be 2x2 matrices")
                if not np.allclose(e, e.conj().T, atol=POVM_ATOL):
                    raise ValueError("POVM elements must be Hermitian")
                if np.linalg.eigvalsh(e).min() < -POVM_ATOL:
                    raise ValueError("POVM elements must be positive semidefinite")
                elements.append(e)
            if not np.allclose(elements[0] + elements[1], np.eye(2), atol=POVM_ATOL):
                raise ValueError("POVM elements must sum to the identity")
            object.__setattr__(self, "povm", (elements[0], elements[1]))

    @staticmethod
    def fixed(angle: float = 0.0) -> "MeasurementStrategy":
        return MeasurementStrategy(kind="fixed-basis", basis_angle=angle)

    @staticmethod
    def random(angles: tuple[float, ...] | None = None) -> "MeasurementStrategy":
        if angles is None:
            angles = DEFAULT_RANDOM_BASIS_ANGLES
        return MeasurementStrategy(kind="random-basis", basis_angles=tuple(angles))

    @staticmethod
    def two_outcome(e0: np.ndarray, e1: np.ndarray) -> "MeasurementStrategy":
        return MeasurementStrategy(kind="custom-two-outcome", povm=(e0, e1))


@dataclass(frozen=True)
class MutualInfoEstimate:
    """Estimated information a measurement strategy gains about a key entry."""

    value_bits: float
    stderr_bits: float
    trials: int
    copies_per_trial: int
    n: int
    strategy_kind: str
    undersampled: bool

    def to_record(self) -> dict:
        return {
            "quantity": "mutual_information",
            "value_bits": self.value_bits,
            "stderr_bits": self.stderr_bits,
            "params": {
                "n": self.n,
                "copies_per_trial": self.copies_per_trial,
                "trials": self.trials,
                "strategy": self.strategy_kind,
            },
            "satisfied": None,
        }


def _outcome_probability(
    s: np.ndarray, n: int, strategy: MeasurementStrategy, basis_choice: np.ndarray | None
) -> np.ndarray:
    """P(outcome 1) per trial for key entries s measured under the strategy."""
    half = s.astype(np.float64) * (np.pi / float(1 << n))
    if strategy.kind == "custom-two-outcome":
        e1 = strategy.povm[1]
        a, b = np.cos(half), np.sin(half)
        p1 = (
            a * a * e1[0, 0].real
            + 2.0 * a * b * e1[0, 1].real
            + b * b * e1[1, 1].real
        )
    else:
        if strategy.kind == "fixed-basis":
            phi = strategy.basis_angle
        else:
            phi = np.asarray(strategy.basis_angles, dtype=np.float64)[basis_choice]
        p1 = np.square(np.sin(half - phi / 2.0))
    return np.clip(p1, 0.0, 1.0)


def _entropy_from_counts(counts: np.ndarray, total: int) -> float:
    return math.log2(total) - float(counts @ np.log2(counts)) / total


def _mutual_info_miller_madow(
    s: np.ndarray, y: np.ndarray, y_card: int
) -> tuple[float, int]:
    """Bias-corrected plug-in mutual information and joint support size."""
    total = s.size
    _, s_counts = np.unique(s, return_counts=True)
    _, y_counts = np.unique(y, return_counts=True)
    _, joint_counts = np.unique(s.astype(np.int64) * y_card + y, return_counts=True)
    plugin = (
        _entropy_from_counts(s_counts, total)
        + _entropy_from_counts(y_counts, total)
        - _entropy_from_counts(joint_counts, total)
    )
    correction = (
        (s_counts.size - 1) + (y_counts.size - 1) - (joint_counts.size - 1)
    ) / (2.0 * total * _LN2)
    return plugin + correction, joint_counts.size


def _stratified_mutual_info(
    s: np.ndarray, y: np.ndarray, strata: np.ndarray | None, y_card: int
) -> tuple[float, int]:
    """Mutual information averaged over measurement-setting strata.

    With a per-trial random setting the relevant quantity is the gain
    conditional on the setting, so the estimator runs per stratum and
    weights by stratum frequency.
    """
    if strata is None:
        return _mutual_info_miller_madow(s, y, y_card)
    total = s.size
    value = 0.0
    support = 0
    for label in np.unique(strata):
        pick = strata == label
        count = int(pick.sum())
        mi, sup = _mutual_info_miller_madow(s[pick], y[pick], y_card)
        value += (count / total) * mi
        support += sup
    return value, support


def estimate_mutual_information(
    strategy: MeasurementStrategy,
    n: int,
    copies_per_trial: int,
    trials: int,
    rng: np.random.Generator,
) -> MutualInfoEstimate:
    """Simulate key-entry measurements and estimate the information gained.

    Each trial draws a uniform key entry at precision n, measures
    copies_per_trial independent copies of its rotation state under the
    strategy, and records the number of 1 outcomes (a sufficient statistic
    when every copy uses the same setting).  The mutual information
    between entry and count is estimated with the bias-corrected plug-in
    estimator; the standard error comes from bootstrap resampling.  The
    estimate is flagged undersampled when trials are scarce relative to
    the observed joint support.
    """
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("n must be an integer")
    if not 1 <= n <= MI_PRECISION_CAP:
        raise ValueError(f"n must be in [1, {MI_PRECISION_CAP}] for estimation")
    if copies_per_trial < 1:
        raise ValueError("copies_per_trial must be at least 1")
    if trials < 2:
        raise ValueError("trials must be at least 2")

    s = rng.integers(0, 1 << n, size=trials, dtype=np.int64)
    if strategy.kind == "random-basis":
        strata = rng.integers(0, len(strategy.basis_angles), size=trials)
    else:
        strata = None
    p1 = _outcome_probability(s, n, strategy, strata)
    y = rng.binomial(copies_per_trial, p1).astype(np.int64)
    y_card = copies_per_trial + 1

    value, support = _stratified_mutual_info(s, y, strata, y_card)

    resamples = np.empty(BOOTSTRAP_RESAMPLES)
    for i in range(BOOTSTRAP_RESAMPLES):
        pick = rng.integers(0, trials, size=trials)
        resamples[i] = _stratified_mutual_info(
            s[pick], y[pick], None if strata is None else strata[pick], y_card
        )[0]
    stderr = float(np.std(resamples, ddof=1))

    return MutualInfoEstimate(
        value_bits=float(value),
        stderr_bits=stderr,
        trials=trials,
        copies_per_trial=copies_per_trial,
        n=n,
        strategy_kind=strategy.kind,
        undersampled=trials < 10 * support,
    )
