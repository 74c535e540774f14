"""Simulation kernel for qubits prepared by dyadic y-axis rotations.

States that arise in the protocol all live on the x-z great circle of the
Bloch sphere: starting from |0>, a rotation R(theta) = exp(-i theta Y / 2)
by theta = s * pi / 2**(n-1) produces the state with amplitudes
(cos(s pi / 2**n), sin(s pi / 2**n)).  Because adjacent states differ by an
angle far below double precision once n is large, protocol-path states are
tracked as exact integer indices (:class:`AngleIndex`) and only converted
to floating-point amplitudes at measurement or analysis boundaries.

Amplitude-index convention: qubit 0 is the leftmost tensor factor, i.e. the
most significant bit of the amplitude index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt

ATOL = 1e-12
EIGENVALUE_FLOOR = -1e-12
MAX_PRECISION_BITS = 62


class PrecisionMismatchError(ValueError):
    """Raised when index arithmetic mixes two different precisions n."""


# --- exact rotation indices ---


@dataclass(frozen=True)
class AngleIndex:
    """Exact rotation index: the state R(s * step_angle)|0> at precision n.

    The index s is reduced modulo 2**n; a full period of 2**n steps
    corresponds to a rotation by 2*pi.
    """

    s: int
    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise TypeError("precision n must be an integer")
        if not 1 <= self.n <= MAX_PRECISION_BITS:
            raise ValueError(
                f"precision n must be in [1, {MAX_PRECISION_BITS}], got {self.n}"
            )
        if not isinstance(self.s, int) or isinstance(self.s, bool):
            raise TypeError("index s must be an integer")
        object.__setattr__(self, "s", self.s % (1 << self.n))

    @property
    def period(self) -> int:
        """Number of distinct indices at this precision (2**n)."""
        return 1 << self.n

    @property
    def step_angle(self) -> float:
        """Angular resolution theta_n = pi / 2**(n-1)."""
        return math.pi * 2.0 ** (1 - self.n)

    @property
    def angle(self) -> float:
        """Rotation angle s * theta_n in radians (float approximation)."""
        return math.pi * (self.s / (1 << (self.n - 1)))

    @property
    def half_angle(self) -> float:
        """Half the rotation angle, s * pi / 2**n; the amplitude argument."""
        return math.pi * (self.s / (1 << self.n))

    def inverse(self) -> "AngleIndex":
        """Index of the inverse rotation, so index_add(a, a.inverse()) == 0."""
        return AngleIndex((-self.s) % self.period, self.n)


def index_add(a: AngleIndex, b: AngleIndex) -> AngleIndex:
    """Compose two rotations exactly: (a.s + b.s) mod 2**n at shared n."""
    if a.n != b.n:
        raise PrecisionMismatchError(
            f"cannot add indices at different precisions (n={a.n} vs n={b.n})"
        )
    return AngleIndex((a.s + b.s) % a.period, a.n)


# --- pure states and density matrices ---


@dataclass(frozen=True)
class PureState:
    """Normalized state vector over k qubits (length 2**k, complex)."""

    amplitudes: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise ValueError("amplitude vector length must be a power of two >= 2")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state vector norm {norm} deviates from 1 beyond {ATOL}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def fidelity(self, other: "PureState") -> float:
        """|<self|other>|^2; equality up to global phase means fidelity 1."""
        if self.amplitudes.size != other.amplitudes.size:
            raise ValueError("fidelity requires states of equal dimension")
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix over k qubits."""

    entries: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        mat = np.array(self.entries, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density matrix must be square")
        dim = mat.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError("density matrix dimension must be a power of two >= 2")
        if not np.allclose(mat, mat.conj().T, atol=ATOL):
            raise ValueError("density matrix must be Hermitian within 1e-12")
        trace = complex(np.trace(mat))
        if abs(trace - 1.0) > ATOL:
            raise ValueError(f"density matrix trace {trace} deviates from 1")
        if float(np.linalg.eigvalsh(mat).min()) < EIGENVALUE_FLOOR:
            raise ValueError("density matrix has an eigenvalue below -1e-12")
        mat.flags.writeable = False
        object.__setattr__(self, "entries", mat)

    @property
    def num_qubits(self) -> int:
        return int(self.entries.shape[0]).bit_length() - 1

    def eigenvalues(self) -> npt.NDArray[np.float64]:
        """Ascending eigenvalues with tiny negatives clamped to zero."""
        eigs = np.linalg.eigvalsh(self.entries)
        return np.where((eigs < 0.0) & (eigs >= EIGENVALUE_FLOOR), 0.0, eigs)

    def purity(self) -> float:
        """tr(rho^2); equals 1 exactly for pure states."""
        return float(np.trace(self.entries @ self.entries).real)


@dataclass(frozen=True)
class MeasurementOutcome:
    """Realized outcome of a projective measurement on one qubit."""

    outcome: int
    post_state: PureState
    probability: float


@dataclass(frozen=True)
class SwapTestResult:
    """Outcome of a two-state symmetry (SWAP) test.

    outcome is "pass" or "fail"; post_joint is the normalized projection of
    the joint two-qubit state onto the symmetric (pass) or antisymmetric
    (fail) subspace; pass_probability is (1 + |<a|b>|^2) / 2 for pure
    product inputs.
    """

    outcome: str
    post_joint: PureState
    pass_probability: float

    @property
    def passed(self) -> bool:
        return self.outcome == "pass"


# --- state preparation and unitaries ---


def rotation_matrix(theta: float) -> npt.NDArray[np.float64]:
    """Real 2x2 matrix of R(theta) = exp(-i theta Y / 2).

    [[cos(theta/2), -sin(theta/2)],
     [sin(theta/2),  cos(theta/2)]]
    """
    half = 0.5 * theta
    c, s = math.cos(half), math.sin(half)
    return np.array([[c, -s], [s, c]])


def prepare_state(index: AngleIndex) -> PureState:
    """Single-qubit state R(s * theta_n)|0> with amplitudes (cos, sin)."""
    half = index.half_angle
    return PureState(np.array([math.cos(half), math.sin(half)], dtype=np.complex128))


def apply_rotation(state: PureState, qubit: int, theta: float) -> PureState:
    """Apply R(theta) to one qubit of a multi-qubit pure state."""
    k = state.num_qubits
    if not 0 <= qubit < k:
        raise ValueError(f"qubit {qubit} out of range for {k}-qubit state")
    arr = state.amplitudes.reshape((2,) * k)
    rotated = np.tensordot(rotation_matrix(theta), arr, axes=([1], [qubit]))
    rotated = np.moveaxis(rotated, 0, qubit)
    return PureState(rotated.reshape(-1))


def overlap(a: AngleIndex, b: AngleIndex) -> float:
    """Inner product <psi_a|psi_b> = cos((a.s - b.s) * pi / 2**n), exactly.

    Antipodal indices (difference 2**(n-1)) are orthogonal; a unit
    difference gives cos(pi / 2**n), approaching 1 as n grows.
    """
    if a.n != b.n:
        raise PrecisionMismatchError(
            f"cannot compare indices at different precisions (n={a.n} vs n={b.n})"
        )
    return math.cos(math.pi * ((a.s - b.s) / (1 << a.n)))


# --- measurements ---


def sample_outcome(probabilities: Sequence[float], rng: np.random.Generator) -> int:
    """Draw an outcome label by cumulative probability.

    Zero-probability branches are never selected; an exact hit on a
    cumulative boundary resolves to the lower label.
    """
    u = float(rng.random())
    cumulative = 0.0
    last = -1
    for label, p in enumerate(probabilities):
        if p <= 0.0:
            continue
        cumulative += float(p)
        last = label
        if u <= cumulative:
            return label
    if last < 0:
        raise ValueError("no outcome has positive probability")
    return last


def measure_z(state: PureState, qubit: int, rng: np.random.Generator) -> MeasurementOutcome:
    """Projective z-basis measurement of one qubit.

    Returns the sampled outcome, the renormalized post-measurement state,
    and the Born probability of the realized outcome.
    """
    k = state.num_qubits
    if not 0 <= qubit < k:
        raise ValueError(f"qubit {qubit} out of range for {k}-qubit state")
    moved = np.moveaxis(state.amplitudes.reshape((2,) * k), qubit, 0)
    weights = [float(np.sum(np.abs(moved[b]) ** 2)) for b in (0, 1)]
    outcome = sample_outcome(weights, rng)
    post = np.zeros_like(moved)
    post[outcome] = moved[outcome] / math.sqrt(weights[outcome])
    post = np.moveaxis(post, 0, qubit).reshape(-1)
    return MeasurementOutcome(outcome=outcome, post_state=PureState(post), probability=weights[outcome])


def measure_in_rotated_basis(
    state: PureState, qubit: int, phi: float, rng: np.random.Generator
) -> MeasurementOutcome:
    """Measure one qubit in the basis {R(phi)|0>, R(phi)|1>}.

    Implemented as the equivalent sequence: apply R(phi)^-1, then measure
    in the z basis.  Outcome 0 therefore means "aligned with R(phi)|0>".
    """
    return measure_z(apply_rotation(state, qubit, -phi), qubit, rng)


# --- ensemble and entropy tools ---


def density_from_ensemble(members: Iterable[tuple[float, PureState]]) -> DensityMatrix:
    """Mix an ensemble {(p_i, |psi_i>)} into sum_i p_i |psi_i><psi_i|."""
    total = 0.0
    acc: npt.NDArray[np.complex128] | None = None
    for p, state in members:
        if p < 0.0:
            raise ValueError("ensemble probabilities must be non-negative")
        amps = state.amplitudes
        if acc is None:
            acc = np.zeros((amps.size, amps.size), dtype=np.complex128)
        elif acc.shape[0] != amps.size:
            raise ValueError("ensemble members must share one dimension")
        acc += p * np.outer(amps, amps.conj())
        total += p
    if acc is None:
        raise ValueError("ensemble must contain at least one member")
    if abs(total - 1.0) > ATOL:
        raise ValueError(f"ensemble probabilities sum to {total}, not 1")
    return DensityMatrix(acc)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -sum_i lambda_i log2 lambda_i in bits (0 log 0 = 0)."""
    eigs = rho.eigenvalues()
    positive = eigs[eigs > 0.0]
    return float(-np.sum(positive * np.log2(positive)))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """D(a, b) = 0.5 * sum |eigenvalues(a - b)|, in [0, 1]."""
    if a.entries.shape != b.entries.shape:
        raise ValueError("trace distance requires matrices of equal dimension")
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a.entries - b.entries))))


def partial_trace(rho: DensityMatrix, keep: int, num_qubits: int) -> DensityMatrix:
    """Reduced 2x2 state of qubit `keep` after tracing out the rest."""
    if rho.entries.shape[0] != 1 << num_qubits:
        raise ValueError("density matrix dimension does not match qubit count")
    if not 0 <= keep < num_qubits:
        raise ValueError(f"qubit {keep} out of range for {num_qubits} qubits")
    perm_rows = [keep] + [q for q in range(num_qubits) if q != keep]
    perm = perm_rows + [num_qubits + q for q in perm_rows]
    arr = rho.entries.reshape((2,) * (2 * num_qubits)).transpose(perm)
    arr = arr.reshape(2, 1 << (num_qubits - 1), 2, 1 << (num_qubits - 1))
    return DensityMatrix(np.einsum("ajbj->ab", arr))


# --- symmetry (SWAP) test ---

_SWAP_PERMUTATION = np.array([0, 2, 1, 3])


def swap_test_joint(joint: PureState, rng: np.random.Generator) -> SwapTestResult:
    """Run the symmetry test on an existing (possibly entangled) qubit pair.

    Projects onto the symmetric subspace on "pass" and the antisymmetric
    subspace on "fail"; the realized branch always has positive
    probability, so the projection never has zero norm.
    """
    if joint.num_qubits != 2:
        raise ValueError("swap test operates on a two-qubit joint state")
    arr = joint.amplitudes
    swapped = arr[_SWAP_PERMUTATION]
    symmetric = 0.5 * (arr + swapped)
    antisymmetric = 0.5 * (arr - swapped)
    p_pass = float(np.vdot(symmetric, symmetric).real)
    p_fail = float(np.vdot(antisymmetric, antisymmetric).real)
    label = sample_outcome([p_pass, p_fail], rng)
    if label == 0:
        post = PureState(symmetric / math.sqrt(p_pass))
        return SwapTestResult(outcome="pass", post_joint=post, pass_probability=p_pass)
    post = PureState(antisymmetric / math.sqrt(p_fail))
    return SwapTestResult(outcome="fail", post_joint=post, pass_probability=p_pass)


def swap_test(a: PureState, b: PureState, rng: np.random.Generator) -> SwapTestResult:
    """Symmetry test of two single-qubit states; passes with (1+|<a|b>|^2)/2.

    The returned post_joint state is entangled whenever 0 < |<a|b>| < 1,
    which is what makes a passed test unusable as a fresh copy of either
    input.
    """
    if a.num_qubits != 1 or b.num_qubits != 1:
        raise ValueError("swap test takes two single-qubit states")
    return swap_test_joint(PureState(np.kron(a.amplitudes, b.amplitudes)), rng)
