"""Adversary harness: concrete attacks and their measured success rates.

Every attack here plays by the rules an eavesdropper actually faces: it
touches registers only through public operations (symmetry tests, rotations,
measurements, oracle queries) and never reads hidden descriptors.  Each
harness reports the observed rate next to the exact prediction so deviations
are visible at a glance.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .protocol import (
    CipherState,
    DecryptionOracle,
    OracleDeactivatedError,
    PrivateKey,
    PublicKey,
    apply_encryption_flags,
    decrypt,
    encode_redundant,
    key_id_of,
    prepare_register,
    swap_test_registers,
)
from .quantum_core import MAX_PRECISION_BITS, DensityMatrix, trace_distance
from .security_analysis import (
    MeasurementStrategy,
    MutualInfoEstimate,
    estimate_mutual_information,
)

FORWARD_SEARCH_RULES = ("identify-all", "parity-aware")
CPA_PRECISION_CAP = 12
CPA_TOTAL_QUBIT_CAP = 8
DEFAULT_ATTACK_PRECISION = 8


# --- forward search over public-key copies ---


def identify_rotations(fails: Sequence[bool]) -> tuple[int, ...]:
    """Identify-all decision rule: claim a pi rotation exactly where a
    symmetry test failed.  A failure certifies the rotation; a pass leaves
    the more likely unrotated explanation."""
    return tuple(int(bool(f)) for f in fails)


def parity_from_fails(fails: Sequence[bool]) -> int:
    """Parity-aware decision rule: guess the message bit as the parity of
    observed failures, ignoring which qubits produced them."""
    return sum(bool(f) for f in fails) & 1


def forward_search_trial(
    key: PrivateKey, bit: int, alpha: int, rng: np.random.Generator
) -> tuple[list[bool], tuple[int, ...]]:
    """One interception trial: encrypt bit, test each ciphertext qubit
    against a fresh public copy, and return (failure pattern, true flags).

    The true flags are returned for scoring only; the decision rules see
    nothing but the failure pattern.
    """
    flags = encode_redundant(bit, alpha, rng)
    carrier = PublicKey(
        key_id=key_id_of(key),
        N=alpha,
        register=prepare_register(key),
        copy_index=1,
    )
    cipher = apply_encryption_flags(carrier, flags, alpha)
    reference = prepare_register(key)
    fails = [
        not swap_test_registers(cipher.register, q, reference, q, rng)
        for q in range(alpha)
    ]
    return fails, flags


@dataclass(frozen=True)
class ForwardSearchReport:
    """Observed vs predicted success of one forward-search decision rule."""

    rule: str
    alpha: int
    trials: int
    successes: int
    success_rate: float
    predicted_rate: float
    stderr: float
    deviation: float

    def to_record(self) -> dict:
        return {
            "attack": "forward_search",
            "rule": self.rule,
            "alpha": self.alpha,
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "predicted_rate": self.predicted_rate,
            "stderr": self.stderr,
            "deviation": self.deviation,
        }


def _forward_report(
    rule: str, alpha: int, trials: int, successes: int
) -> ForwardSearchReport:
    rate = successes / trials
    predicted = float(enumerate_forward_search_success(alpha, rule))
    stderr = math.sqrt(max(rate * (1.0 - rate), 1e-12) / trials)
    return ForwardSearchReport(
        rule=rule,
        alpha=alpha,
        trials=trials,
        successes=successes,
        success_rate=rate,
        predicted_rate=predicted,
        stderr=stderr,
        deviation=rate - predicted,
    )


def run_forward_search(
    alpha: int,
    trials: int,
    rng: np.random.Generator,
    *,
    precision: int = DEFAULT_ATTACK_PRECISION,
) -> dict[str, ForwardSearchReport]:
    """Monte Carlo forward search, scoring both decision rules per trial.

    identify-all succeeds when every per-qubit rotation flag is guessed
    correctly; parity-aware succeeds when the recovered message bit is
    correct.  Both rules consume the same symmetry-test outcomes, so the
    comparison is paired.
    """
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    key = PrivateKey(
        n=precision, s=tuple(int(v) for v in rng.integers(0, 1 << precision, size=alpha))
    )
    identify_hits = 0
    parity_hits = 0
    for _ in range(trials):
        bit = int(rng.integers(0, 2))
        fails, flags = forward_search_trial(key, bit, alpha, rng)
        if identify_rotations(fails) == flags:
            identify_hits += 1
        if parity_from_fails(fails) == bit:
            parity_hits += 1
    return {
        "identify-all": _forward_report("identify-all", alpha, trials, identify_hits),
        "parity-aware": _forward_report("parity-aware", alpha, trials, parity_hits),
    }


def enumerate_forward_search_success(alpha: int, rule: str) -> Fraction:
    """Exact success probability of a decision rule by branch enumeration.

    Walks every flag configuration (uniform given a uniform message bit)
    and every symmetry-test branch: unrotated qubits always pass, rotated
    qubits fail with probability exactly 1/2.
    """
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if rule not in FORWARD_SEARCH_RULES:
        raise ValueError(f"unknown rule: {rule!r}")
    total = Fraction(0)
    flag_weight = Fraction(1, 1 << alpha)
    for flags in product((0, 1), repeat=alpha):
        ones = [q for q, f in enumerate(flags) if f]
        branch_weight = flag_weight * Fraction(1, 1 << len(ones))
        bit = len(ones) & 1
        for fail_choice in product((False, True), repeat=len(ones)):
            fails = [False] * alpha
            for q, failed in zip(ones, fail_choice):
                fails[q] = failed
            if rule == "identify-all":
                success = identify_rotations(fails) == flags
            else:
                success = parity_from_fails(fails) == bit
            if success:
                total += branch_weight
    return total


# --- repeated symmetry tests on one pair ---


@dataclass(frozen=True)
class ScenarioStats:
    """Pass statistics for repeated symmetry tests at one overlap."""

    overlap: float
    trials: int
    first_pass_rate: float
    predicted_first_pass: float
    second_pass_given_pass: float
    second_pass_given_fail: float

    def to_record(self) -> dict:
        return {
            "attack": "repeat_swap_test",
            "overlap": self.overlap,
            "trials": self.trials,
            "first_pass_rate": self.first_pass_rate,
            "predicted_first_pass": self.predicted_first_pass,
            "second_pass_given_pass": self.second_pass_given_pass,
            "second_pass_given_fail": self.second_pass_given_fail,
        }


@dataclass(frozen=True)
class SingleUseCheckResult:
    """Why repeating a symmetry test on the same pair gains nothing."""

    scenarios: tuple[ScenarioStats, ...]

    def to_records(self) -> list[dict]:
        return [s.to_record() for s in self.scenarios]


def single_use_constraint_check(
    trials: int,
    rng: np.random.Generator,
    *,
    precision: int = 3,
    index_offsets: Sequence[int] = (0, 1, 2, 4),
) -> SingleUseCheckResult:
    """Measure first-test and repeat-test pass rates across overlaps.

    Each trial prepares two fresh single-qubit registers whose rotation
    indices differ by the given offset, runs the symmetry test twice on
    the same pair, and tallies the conditional second-test outcomes.  The
    first test follows (1 + overlap^2)/2; the projected pair then answers
    deterministically, so a second test on the same pair is worthless.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    scenarios = []
    for offset in index_offsets:
        key_a = PrivateKey(n=precision, s=(0,))
        key_b = PrivateKey(n=precision, s=(int(offset) % (1 << precision),))
        overlap = math.cos(math.pi * offset / (1 << precision))
        first_passes = 0
        second_given_pass = [0, 0]
        second_given_fail = [0, 0]
        for _ in range(trials):
            reg_a = prepare_register(key_a)
            reg_b = prepare_register(key_b)
            first = swap_test_registers(reg_a, 0, reg_b, 0, rng)
            second = swap_test_registers(reg_a, 0, reg_b, 0, rng)
            if first:
                first_passes += 1
                second_given_pass[int(second)] += 1
            else:
                second_given_fail[int(second)] += 1
        pass_total = sum(second_given_pass)
        fail_total = sum(second_given_fail)
        scenarios.append(
            ScenarioStats(
                overlap=overlap,
                trials=trials,
                first_pass_rate=first_passes / trials,
                predicted_first_pass=(1.0 + overlap * overlap) / 2.0,
                second_pass_given_pass=(
                    second_given_pass[1] / pass_total if pass_total else math.nan
                ),
                second_pass_given_fail=(
                    second_given_fail[1] / fail_total if fail_total else math.nan
                ),
            )
        )
    return SingleUseCheckResult(scenarios=tuple(scenarios))


# --- chosen plaintext ---


@dataclass(frozen=True)
class CpaReport:
    """Trace distances between ciphertext ensembles for two chosen messages."""

    n: int
    num_bits: int
    alpha: int
    message_0: tuple[int, ...]
    message_1: tuple[int, ...]
    distance_between_messages: float
    distance_m0_to_public: float
    distance_m1_to_public: float

    def to_record(self) -> dict:
        return {
            "attack": "chosen_plaintext",
            "n": self.n,
            "num_bits": self.num_bits,
            "alpha": self.alpha,
            "message_0": "".join(str(b) for b in self.message_0),
            "message_1": "".join(str(b) for b in self.message_1),
            "distance_between_messages": self.distance_between_messages,
            "distance_m0_to_public": self.distance_m0_to_public,
            "distance_m1_to_public": self.distance_m1_to_public,
        }


def _uniform_shifted_density(n: int, flag_probability: float) -> np.ndarray:
    """Average qubit state: uniform index, rotated by pi with the given
    probability.  Enumerated directly rather than simplified."""
    period = 1 << n
    half = np.pi * np.arange(period, dtype=np.float64) / period
    shifted = np.pi * ((np.arange(period) + (period >> 1)) % period) / period
    rho = np.zeros((2, 2), dtype=np.complex128)
    for weight, angles in (
        (1.0 - flag_probability, half),
        (flag_probability, shifted),
    ):
        if weight == 0.0:
            continue
        c, s = np.cos(angles), np.sin(angles)
        rho[0, 0] += weight * np.mean(c * c)
        rho[0, 1] += weight * np.mean(c * s)
        rho[1, 1] += weight * np.mean(s * s)
    rho[1, 0] = rho[0, 1]
    return rho


def _message_density(n: int, message: Sequence[int], alpha: int) -> DensityMatrix:
    """Ciphertext density for a fixed message, averaged over key and mask.

    Key entries are independent, so the register density is the tensor
    product of per-qubit averages; within a block the mask positions are
    parity-correlated, but each per-qubit average is identical for either
    flag value, so the product form is exact.
    """
    out = np.ones((1, 1), dtype=np.complex128)
    for bit in message:
        for position in range(alpha):
            if alpha == 1:
                p_flag = float(bit)
            else:
                p_flag = 0.5
            out = np.kron(out, _uniform_shifted_density(n, p_flag))
    return DensityMatrix(out)


def chosen_plaintext_distinguishability(
    n: int,
    message_0: Sequence[int],
    message_1: Sequence[int],
    alpha: int = 1,
) -> CpaReport:
    """Exact distinguishability of two chosen plaintexts without the key.

    Builds the full ciphertext density matrix of each message averaged
    over the key distribution, plus the unencrypted public-key density,
    and reports the pairwise trace distances.  All three states coincide,
    so every distance is numerically zero: encryption is a phase-free
    relabeling of an already maximally mixed ensemble.
    """
    if not 1 <= n <= CPA_PRECISION_CAP:
        raise ValueError(f"n must be in [1, {CPA_PRECISION_CAP}] for exact enumeration")
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    m0 = tuple(int(b) for b in message_0)
    m1 = tuple(int(b) for b in message_1)
    if len(m0) != len(m1) or len(m0) < 1:
        raise ValueError("messages must be non-empty and of equal length")
    for bit in m0 + m1:
        if bit not in (0, 1):
            raise ValueError("message bits must be 0 or 1")
    total_qubits = len(m0) * alpha
    if total_qubits > CPA_TOTAL_QUBIT_CAP:
        raise ValueError(
            f"exact enumeration is limited to {CPA_TOTAL_QUBIT_CAP} qubits, "
            f"got {total_qubits}"
        )
    rho_0 = _message_density(n, m0, alpha)
    rho_1 = _message_density(n, m1, alpha)
    rho_public = _message_density(n, (0,) * total_qubits, 1)
    return CpaReport(
        n=n,
        num_bits=len(m0),
        alpha=alpha,
        message_0=m0,
        message_1=m1,
        distance_between_messages=trace_distance(rho_0, rho_1),
        distance_m0_to_public=trace_distance(rho_0, rho_public),
        distance_m1_to_public=trace_distance(rho_1, rho_public),
    )


# --- chosen ciphertext sessions against the bounded oracle ---


@dataclass(frozen=True)
class OracleSubmission:
    """Transcript entry for one decryption request."""

    label: str
    label_digest: str
    accepted: bool
    result: tuple[int, ...] | None
    error: str | None


@dataclass(frozen=True)
class CcaSessionResult:
    """Outcome of a bounded-use chosen-ciphertext session."""

    key_length: int
    uses_allowed: int
    uses_consumed: int
    transcript: tuple[OracleSubmission, ...]
    bits_received: int
    information_ceiling_bits: float

    def to_record(self) -> dict:
        return {
            "attack": "chosen_ciphertext",
            "key_length": self.key_length,
            "uses_allowed": self.uses_allowed,
            "uses_consumed": self.uses_consumed,
            "submissions": len(self.transcript),
            "accepted": sum(1 for s in self.transcript if s.accepted),
            "bits_received": self.bits_received,
            "information_ceiling_bits": self.information_ceiling_bits,
        }


def chosen_ciphertext_session(
    key: PrivateKey,
    uses_allowed: int,
    submissions: Iterable[tuple[str, CipherState]],
    rng: np.random.Generator,
) -> CcaSessionResult:
    """Run labeled decryption requests against a fresh bounded oracle.

    Every submission is recorded; requests after exhaustion are rejected,
    and malformed requests are rejected without consuming a use.  The
    information ceiling is the total classical capacity of the allowed
    responses: the key length times the use budget.
    """
    oracle = DecryptionOracle(key, uses_allowed=uses_allowed)
    transcript: list[OracleSubmission] = []
    bits_received = 0
    for label, cipher in submissions:
        digest = hashlib.sha256(label.encode()).hexdigest()[:16]
        try:
            result = decrypt(oracle, cipher, rng)
        except OracleDeactivatedError as exc:
            transcript.append(
                OracleSubmission(label, digest, False, None, str(exc))
            )
        except ValueError as exc:
            transcript.append(
                OracleSubmission(label, digest, False, None, str(exc))
            )
        else:
            bits_received += len(result)
            transcript.append(OracleSubmission(label, digest, True, result, None))
    return CcaSessionResult(
        key_length=key.length,
        uses_allowed=uses_allowed,
        uses_consumed=uses_allowed - oracle.remaining_uses,
        transcript=tuple(transcript),
        bits_received=bits_received,
        information_ceiling_bits=float(key.length * uses_allowed),
    )


# --- direct key recovery from intercepted copies ---


@dataclass(frozen=True)
class KeyRecoveryReport:
    """Measured information gain and disturbance of a key-recovery attempt."""

    n: int
    copies: int
    info: MutualInfoEstimate | None
    information_bits: float
    residual_entropy_bits: float
    disturbance_trials: int
    mean_forward_fidelity: float
    predicted_forward_fidelity: float

    def to_record(self) -> dict:
        return {
            "attack": "key_recovery",
            "n": self.n,
            "copies": self.copies,
            "information_bits": self.information_bits,
            "stderr_bits": None if self.info is None else self.info.stderr_bits,
            "residual_entropy_bits": self.residual_entropy_bits,
            "mean_forward_fidelity": self.mean_forward_fidelity,
            "predicted_forward_fidelity": self.predicted_forward_fidelity,
        }


def _predicted_forward_fidelity(n: int, basis_angle: float) -> float:
    # E_s[cos^4 x + sin^4 x] with x = s*pi/2**n - phi/2; the cross term
    # averages out over a full period except at n = 1
    if n >= 2:
        return 0.75
    return 1.0 - 0.5 * math.sin(basis_angle) ** 2


def key_recovery_baseline(
    n: int,
    copies: int,
    trials: int,
    rng: np.random.Generator,
    *,
    strategy: MeasurementStrategy | None = None,
    disturbance_trials: int = 10000,
) -> KeyRecoveryReport:
    """Baseline intercept-and-measure attack on one key entry.

    Estimates the information extracted from the given number of copies
    (zero copies means zero bits by definition) and simulates the
    measure-and-forward disturbance: the eavesdropper measures a copy in a
    rotated basis and forwards the collapsed state, whose fidelity to the
    original averages 3/4 at any usable precision.  Low forward fidelity
    is what makes interception detectable.
    """
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("n must be an integer")
    if not 1 <= n <= MAX_PRECISION_BITS:
        raise ValueError(f"n must be in [1, {MAX_PRECISION_BITS}]")
    if copies < 0:
        raise ValueError("copies must be non-negative")
    if disturbance_trials < 1:
        raise ValueError("disturbance_trials must be at least 1")
    if strategy is None:
        strategy = MeasurementStrategy.fixed(0.0)
    if copies == 0:
        info = None
        information_bits = 0.0
    else:
        info = estimate_mutual_information(strategy, n, copies, trials, rng)
        information_bits = info.value_bits

    basis_angle = strategy.basis_angle if strategy.kind == "fixed-basis" else 0.0
    s = rng.integers(0, 1 << n, size=disturbance_trials, dtype=np.int64)
    x = s.astype(np.float64) * (math.pi / float(1 << n)) - basis_angle / 2.0
    p1 = np.square(np.sin(x))
    outcome = rng.random(disturbance_trials) < p1
    fidelity = np.where(outcome, p1, 1.0 - p1)
    mean_fidelity = float(fidelity.mean())

    return KeyRecoveryReport(
        n=n,
        copies=copies,
        info=info,
        information_bits=information_bits,
        residual_entropy_bits=max(0.0, float(n) - information_bits),
        disturbance_trials=disturbance_trials,
        mean_forward_fidelity=mean_fidelity,
        predicted_forward_fidelity=_predicted_forward_fidelity(n, basis_angle),
    )
