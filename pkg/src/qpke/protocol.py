"""Key generation, encryption, and decryption over rotation-indexed qubits.

A private key is the classical tuple (n, s_1..s_N, optional permutation);
the matching public key is a register of N qubits, qubit pi(j) prepared in
the state with exact rotation index s_j at precision n.  Encryption flips
qubits by R(pi) according to a parity-redundant encoding of the message;
decryption undoes the secret rotations and reads the z basis.

Registers are opaque: holders may rotate, measure, and run symmetry tests,
but the hidden descriptors are only readable through describe_register,
which demands the generating private key as the owner credential.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .quantum_core import (
    AngleIndex,
    MAX_PRECISION_BITS,
    PureState,
    rotation_matrix,
    sample_outcome,
)

DEFAULT_PRECISION_RANGE = (32, 62)
DEFAULT_KEY_LENGTH = 256
DEFAULT_COPY_CAP = 16
RECOMMENDED_MIN_PRECISION = 32
KEY_FILE_VERSION = 1


class LowPrecisionWarning(UserWarning):
    """Key generated with precision n below the recommended minimum."""


class MessageTooLongError(ValueError):
    """Message needs more qubits than the public key provides."""


class CopyCapExceededError(RuntimeError):
    """Public-key copy issuance attempted beyond the configured cap."""


class OracleDeactivatedError(RuntimeError):
    """Decryption attempted after the device exhausted its allowed uses."""


class AccessDeniedError(PermissionError):
    """Register descriptors requested without the owner credential."""


class TamperedRegisterError(RuntimeError):
    """Register descriptors requested after non-index operations."""


# --- classical key material ---


@dataclass(frozen=True)
class PrivateKey:
    """Classical key: precision n, indices s_1..s_N, optional permutation."""

    n: int
    s: tuple[int, ...]
    perm: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_PRECISION_BITS:
            raise ValueError(
                f"precision n must be in [1, {MAX_PRECISION_BITS}], got {self.n}"
            )
        if len(self.s) < 1:
            raise ValueError("key must contain at least one index")
        if not all(type(v) is int for v in self.s):
            raise TypeError("key indices must be integers")
        try:
            arr = np.fromiter(self.s, dtype=np.int64, count=len(self.s))
        except OverflowError:
            raise ValueError(f"key index outside [0, 2**{self.n})") from None
        if bool(np.any((arr < 0) | (arr >> self.n != 0))):
            raise ValueError(f"key index outside [0, 2**{self.n})")
        if self.perm is not None and sorted(self.perm) != list(range(len(self.s))):
            raise ValueError("perm must be a permutation of the qubit positions")
        arr.flags.writeable = False
        object.__setattr__(self, "_index_array", arr)

    @property
    def length(self) -> int:
        """Number of qubits N in the matching public key."""
        return len(self.s)

    def angle_indices(self) -> tuple[AngleIndex, ...]:
        return tuple(AngleIndex(v, self.n) for v in self.s)


def private_key_to_json(key: PrivateKey) -> dict:
    """Serializable form; indices as decimal strings to stay bit-exact."""
    payload: dict = {
        "version": KEY_FILE_VERSION,
        "n": key.n,
        "s": [str(v) for v in key.s],
    }
    if key.perm is not None:
        payload["perm"] = list(key.perm)
    return payload


def private_key_from_json(payload: dict) -> PrivateKey:
    if payload.get("version") != KEY_FILE_VERSION:
        raise ValueError(f"unsupported key file version {payload.get('version')!r}")
    perm = payload.get("perm")
    return PrivateKey(
        n=int(payload["n"]),
        s=tuple(int(v) for v in payload["s"]),
        perm=None if perm is None else tuple(int(v) for v in perm),
    )


def save_private_key(key: PrivateKey, path: str | Path) -> None:
    Path(path).write_text(json.dumps(private_key_to_json(key), indent=2) + "\n")


def load_private_key(path: str | Path) -> PrivateKey:
    return private_key_from_json(json.loads(Path(path).read_text()))


def _canonical_key_bytes(key: PrivateKey) -> bytes:
    cached = key.__dict__.get("_canonical_bytes")
    if cached is None:
        cached = json.dumps(
            private_key_to_json(key), sort_keys=True, separators=(",", ":")
        ).encode()
        object.__setattr__(key, "_canonical_bytes", cached)
    return cached


def _key_tag(key: PrivateKey) -> bytes:
    cached = key.__dict__.get("_owner_tag")
    if cached is None:
        cached = hashlib.sha256(b"qpke:owner-tag:" + _canonical_key_bytes(key)).digest()
        object.__setattr__(key, "_owner_tag", cached)
    return cached


def key_id_of(key: PrivateKey) -> str:
    """Short stable identifier; reveals nothing beyond a hash."""
    return hashlib.sha256(b"qpke:key-id:" + _canonical_key_bytes(key)).hexdigest()[:16]


def key_fingerprint(key: PrivateKey) -> str:
    """Full-length hash of the key material, safe to publish."""
    return hashlib.sha256(b"qpke:fingerprint:" + _canonical_key_bytes(key)).hexdigest()


# --- simulated qubit storage ---
#
# Each register qubit is either an exact rotation index (the protocol path)
# or a member of an amplitude group: a shared, possibly entangled state over
# every qubit that float operations have coupled together.  Groups may span
# registers, which is how symmetry tests entangle a ciphertext qubit with an
# adversary's public-key copy.


class _Slot:
    __slots__ = ("group", "axis")

    def __init__(self) -> None:
        self.group: _Group | None = None
        self.axis = 0


class _Group:
    __slots__ = ("slots", "amps")

    def __init__(self, slots: list[_Slot], amps: np.ndarray) -> None:
        self.slots = slots
        self.amps = amps


def _make_singleton(slot: _Slot, amps: np.ndarray) -> None:
    slot.group = _Group([slot], np.asarray(amps, dtype=np.complex128))
    slot.axis = 0


def _merge_groups(target: _Group, other: _Group) -> None:
    target.amps = np.multiply.outer(target.amps, other.amps).reshape(-1)
    base = len(target.slots)
    for slot in other.slots:
        slot.group = target
        slot.axis += base
    target.slots.extend(other.slots)


def _apply_slot_unitary(slot: _Slot, matrix: np.ndarray) -> None:
    group = slot.group
    arr = group.amps.reshape((2,) * len(group.slots))
    rotated = np.tensordot(matrix, arr, axes=([1], [slot.axis]))
    group.amps = np.moveaxis(rotated, 0, slot.axis).reshape(-1)


def _measure_slot_z(slot: _Slot, rng: np.random.Generator) -> int:
    group = slot.group
    arr = group.amps.reshape((2,) * len(group.slots))
    moved = np.moveaxis(arr, slot.axis, 0)
    weights = [float(np.sum(np.abs(moved[b]) ** 2)) for b in (0, 1)]
    outcome = sample_outcome(weights, rng)
    remainder = moved[outcome] / math.sqrt(weights[outcome])
    axis = slot.axis
    group.slots.pop(axis)
    for survivor in group.slots[axis:]:
        survivor.axis -= 1
    basis = np.zeros(2, dtype=np.complex128)
    basis[outcome] = 1.0
    _make_singleton(slot, basis)
    if group.slots:
        group.amps = remainder.reshape(-1)
    return outcome


def _swap_project(slot_a: _Slot, slot_b: _Slot, rng: np.random.Generator) -> bool:
    if slot_a is slot_b:
        raise ValueError("cannot run a symmetry test of a qubit against itself")
    if slot_a.group is not slot_b.group:
        _merge_groups(slot_a.group, slot_b.group)
    group = slot_a.group
    arr = group.amps.reshape((2,) * len(group.slots))
    swapped = np.swapaxes(arr, slot_a.axis, slot_b.axis)
    symmetric = 0.5 * (arr + swapped)
    antisymmetric = 0.5 * (arr - swapped)
    p_pass = float(np.sum(symmetric.real**2 + symmetric.imag**2))
    p_fail = max(1.0 - p_pass, 0.0)
    label = sample_outcome([p_pass, p_fail], rng)
    branch, p = (symmetric, p_pass) if label == 0 else (antisymmetric, p_fail)
    group.amps = (branch / math.sqrt(p)).reshape(-1)
    return label == 0


class QuantumRegister:
    """Opaque register of simulated qubits.

    Holders can count qubits, apply rotations, measure, and take part in
    symmetry tests.  Nothing on the public surface reveals the hidden
    descriptors; see describe_register for the owner-credential path.
    """

    def __init__(self) -> None:
        raise TypeError(
            "use QuantumRegister.from_pure_state or QuantumRegister.of_computational"
        )

    @classmethod
    def _blank(cls) -> "QuantumRegister":
        reg = object.__new__(cls)
        reg._n = None
        reg._indices = None
        reg._exact = None
        reg._slots = {}
        reg._owner_tag = None
        reg._retired = False
        return reg

    @classmethod
    def _from_indices(
        cls, indices: np.ndarray, n: int, owner_tag: bytes | None
    ) -> "QuantumRegister":
        reg = cls._blank()
        reg._n = n
        reg._indices = np.array(indices, dtype=np.int64)
        reg._exact = np.ones(reg._indices.size, dtype=bool)
        reg._owner_tag = owner_tag
        return reg

    @classmethod
    def from_pure_state(cls, state: PureState) -> "QuantumRegister":
        """Register initialized to an arbitrary (possibly entangled) state."""
        k = state.num_qubits
        reg = cls._blank()
        reg._exact = np.zeros(k, dtype=bool)
        slots = [_Slot() for _ in range(k)]
        group = _Group(slots, np.array(state.amplitudes, dtype=np.complex128))
        for axis, slot in enumerate(slots):
            slot.group = group
            slot.axis = axis
        reg._slots = dict(enumerate(slots))
        return reg

    @classmethod
    def of_computational(cls, bits: Sequence[int]) -> "QuantumRegister":
        """Register of unentangled z-basis states |b_0>...|b_k-1>."""
        if len(bits) < 1:
            raise ValueError("register needs at least one qubit")
        reg = cls._blank()
        reg._exact = np.zeros(len(bits), dtype=bool)
        for pos, bit in enumerate(bits):
            if bit not in (0, 1):
                raise ValueError("computational bits must be 0 or 1")
            slot = _Slot()
            amps = np.zeros(2, dtype=np.complex128)
            amps[bit] = 1.0
            _make_singleton(slot, amps)
            reg._slots[pos] = slot
        return reg

    def __repr__(self) -> str:
        return f"QuantumRegister(qubits={self.qubit_count})"

    @property
    def qubit_count(self) -> int:
        return int(self._exact.size)

    def _check_live(self) -> None:
        if self._retired:
            raise ValueError("register was partitioned; use the partition results")

    def _check_qubit(self, qubit: int) -> None:
        self._check_live()
        if not 0 <= qubit < self.qubit_count:
            raise ValueError(f"qubit {qubit} out of range for {self.qubit_count} qubits")

    def _promote(self, qubit: int) -> _Slot:
        """Convert an exact qubit to amplitude form (analysis/attack path)."""
        slot = self._slots.get(qubit)
        if slot is None:
            half = math.pi * (int(self._indices[qubit]) / (1 << self._n))
            slot = _Slot()
            _make_singleton(slot, np.array([math.cos(half), math.sin(half)]))
            self._slots[qubit] = slot
            self._exact[qubit] = False
        return slot

    def apply_rotation(self, qubit: int, theta: float) -> None:
        """Rotate one qubit by R(theta).

        Angles that are integer multiples of the register's angular step
        stay on the exact index path; anything else moves the qubit to
        floating-point amplitudes.
        """
        self._check_qubit(qubit)
        if not math.isfinite(theta):
            raise ValueError("rotation angle must be finite")
        if self._indices is not None and self._exact[qubit]:
            ratio = theta / (math.pi * 2.0 ** (1 - self._n))
            nearest = round(ratio)
            if abs(ratio - nearest) <= 1e-9:
                period = 1 << self._n
                self._indices[qubit] = (int(self._indices[qubit]) + nearest) % period
                return
        _apply_slot_unitary(self._promote(qubit), rotation_matrix(theta))

    def apply_bit_rotations(self, flags: Sequence[int]) -> None:
        """Apply R(flag * pi) across the leading qubits in one pass."""
        self._check_live()
        flag_arr = np.asarray(flags, dtype=np.int64)
        if flag_arr.ndim != 1 or flag_arr.size > self.qubit_count:
            raise ValueError("flag vector longer than the register")
        if flag_arr.size and not np.all((flag_arr == 0) | (flag_arr == 1)):
            raise ValueError("flags must be 0 or 1")
        length = flag_arr.size
        if self._indices is not None:
            zone = self._exact[:length]
            period = 1 << self._n
            shifted = (self._indices[:length] + flag_arr * (period >> 1)) % period
            self._indices[:length] = np.where(zone, shifted, self._indices[:length])
        for pos in range(length):
            if flag_arr[pos] and pos in self._slots:
                _apply_slot_unitary(self._slots[pos], rotation_matrix(math.pi))

    @staticmethod
    def _exact_p1(index: int, period: int) -> float:
        if index == 0:
            return 0.0
        if index == period >> 1:
            return 1.0
        return math.sin(math.pi * (index / period)) ** 2

    def measure_z(self, qubit: int, rng: np.random.Generator) -> int:
        """Projective z measurement of one qubit; returns 0 or 1."""
        self._check_qubit(qubit)
        if self._indices is not None and self._exact[qubit]:
            period = 1 << self._n
            p1 = self._exact_p1(int(self._indices[qubit]), period)
            outcome = sample_outcome([1.0 - p1, p1], rng)
            self._indices[qubit] = outcome * (period >> 1)
            return outcome
        return _measure_slot_z(self._slots[qubit], rng)

    def measure_in_rotated_basis(self, qubit: int, phi: float, rng: np.random.Generator) -> int:
        """Undo R(phi), then measure in z; returns 0 for the R(phi)|0> ray."""
        self.apply_rotation(qubit, -phi)
        return self.measure_z(qubit, rng)

    def _measure_all_z(self, rng: np.random.Generator) -> np.ndarray:
        """Measure every qubit in z; used by the decryption device."""
        self._check_live()
        count = self.qubit_count
        outcomes = np.zeros(count, dtype=np.int64)
        if self._indices is not None:
            period = 1 << self._n
            idx = self._indices
            half = np.pi * (idx.astype(np.float64) / period)
            p1 = np.square(np.sin(half))
            p1 = np.where(idx == 0, 0.0, np.where(idx == period >> 1, 1.0, p1))
            u = rng.random(count)
            sampled = np.where(
                p1 <= 0.0, 0, np.where(p1 >= 1.0, 1, (u > 1.0 - p1).astype(np.int64))
            )
            outcomes = np.where(self._exact, sampled, outcomes)
            self._indices[self._exact] = outcomes[self._exact] * (period >> 1)
        for pos in sorted(self._slots):
            outcomes[pos] = _measure_slot_z(self._slots[pos], rng)
        return outcomes

    def _apply_index_steps(self, steps: np.ndarray, step_precision: int) -> None:
        """Shift each qubit by steps[j] units of pi / 2**(step_precision - 1).

        Steps must already be reduced, |steps[j]| < 2**step_precision.
        Exact qubits stay exact when their own grid is at least as fine as
        the step grid; otherwise they are demoted to amplitudes first.
        """
        self._check_live()
        if self._indices is not None and self._n < step_precision:
            for pos in np.flatnonzero(self._exact):
                self._promote(int(pos))
        if self._indices is not None and np.any(self._exact):
            period = 1 << self._n
            scaled = steps * (1 << (self._n - step_precision))
            shifted = (self._indices + scaled) % period
            self._indices = np.where(self._exact, shifted, self._indices)
        for pos, slot in self._slots.items():
            angle = math.pi * (int(steps[pos]) / (1 << (step_precision - 1)))
            _apply_slot_unitary(slot, rotation_matrix(angle))

    def partition(self, first_count: int) -> tuple["QuantumRegister", "QuantumRegister"]:
        """Split into two registers over the same qubits; retires the original.

        The front register gets qubits [0, first_count), the back the rest.
        Entanglement between the parts survives: the split only changes the
        bookkeeping, not the joint state.
        """
        self._check_live()
        if not 0 < first_count < self.qubit_count:
            raise ValueError("partition point must be strictly inside the register")
        front = QuantumRegister._blank()
        back = QuantumRegister._blank()
        for child, lo, hi in ((front, 0, first_count), (back, first_count, self.qubit_count)):
            child._n = self._n
            child._exact = self._exact[lo:hi].copy()
            if self._indices is not None:
                child._indices = self._indices[lo:hi].copy()
            child._owner_tag = self._owner_tag
            child._slots = {
                pos - lo: slot for pos, slot in self._slots.items() if lo <= pos < hi
            }
        self._retired = True
        return front, back


@dataclass(frozen=True)
class PublicKey:
    """Quantum public key: an opaque register plus issuance metadata."""

    key_id: str
    N: int
    register: QuantumRegister
    copy_index: int


@dataclass(frozen=True)
class CipherState:
    """Encrypted message: the transformed register plus framing metadata."""

    register: QuantumRegister
    num_bits: int
    alpha: int

    def __post_init__(self) -> None:
        if self.num_bits < 1 or self.alpha < 1:
            raise ValueError("cipher needs at least one message bit and alpha >= 1")
        if self.num_bits * self.alpha > self.register.qubit_count:
            raise ValueError("message framing exceeds the register size")


# --- protocol operations ---


def _position_indices(key: PrivateKey) -> np.ndarray:
    """Rotation index prepared at each register position (perm applied)."""
    arr = key.__dict__["_index_array"]
    if key.perm is None:
        return arr.copy()
    placed = np.empty_like(arr)
    placed[np.fromiter(key.perm, dtype=np.int64, count=len(key.perm))] = arr
    return placed


def prepare_register(key: PrivateKey) -> QuantumRegister:
    """Owner-side preparation of a fresh public-key register."""
    return QuantumRegister._from_indices(_position_indices(key), key.n, _key_tag(key))


def keygen(
    n: int | tuple[int, int],
    N: int = DEFAULT_KEY_LENGTH,
    *,
    permute: bool = False,
    rng: np.random.Generator,
) -> tuple[PrivateKey, PublicKey]:
    """Draw a fresh key pair.

    n may be a fixed precision or an inclusive range [n_l, n_u] to sample
    from.  Returns the classical private key and the owner's master public
    register (copy index 0); circulating copies go through KeyRegistry.
    """
    if isinstance(n, tuple):
        lo, hi = n
        if not 1 <= lo <= hi <= MAX_PRECISION_BITS:
            raise ValueError(f"precision range must satisfy 1 <= n_l <= n_u <= {MAX_PRECISION_BITS}")
        n = int(rng.integers(lo, hi + 1))
    if not 1 <= n <= MAX_PRECISION_BITS:
        raise ValueError(f"precision n must be in [1, {MAX_PRECISION_BITS}], got {n}")
    if N < 1:
        raise ValueError("key length N must be at least 1")
    if n < RECOMMENDED_MIN_PRECISION:
        warnings.warn(
            f"precision n={n} is below the recommended minimum "
            f"{RECOMMENDED_MIN_PRECISION}; fine for experiments, weak as a key",
            LowPrecisionWarning,
            stacklevel=2,
        )
    s = tuple(rng.integers(0, 1 << n, size=N, dtype=np.int64).tolist())
    perm = tuple(rng.permutation(N).tolist()) if permute else None
    key = PrivateKey(n=n, s=s, perm=perm)
    public = PublicKey(
        key_id=key_id_of(key), N=N, register=prepare_register(key), copy_index=0
    )
    return key, public


def describe_register(register: QuantumRegister, credential: PrivateKey) -> tuple[AngleIndex, ...]:
    """Owner-only view of the hidden descriptors.

    The credential must be the private key whose preparation produced the
    register; anything else is denied.  Raises TamperedRegisterError if
    non-index operations already moved qubits off the exact path.
    """
    register._check_live()
    if (
        not isinstance(credential, PrivateKey)
        or register._owner_tag is None
        or _key_tag(credential) != register._owner_tag
    ):
        raise AccessDeniedError("register descriptors require the generating private key")
    if register._indices is None or not bool(np.all(register._exact)):
        raise TamperedRegisterError("register no longer carries exact index descriptors")
    return tuple(AngleIndex(int(v), register._n) for v in register._indices)


def swap_test_registers(
    reg_a: QuantumRegister,
    pos_a: int,
    reg_b: QuantumRegister,
    pos_b: int,
    rng: np.random.Generator,
) -> bool:
    """Symmetry test between one qubit of each register.

    Returns True on "pass".  The tested pair is left in the projected
    joint state, entangled across the two registers whenever the inputs
    were neither identical nor orthogonal.
    """
    reg_a._check_qubit(pos_a)
    reg_b._check_qubit(pos_b)
    return _swap_project(reg_a._promote(pos_a), reg_b._promote(pos_b), rng)


def encode_redundant(bit: int, alpha: int, rng: np.random.Generator | None) -> tuple[int, ...]:
    """Uniform alpha-bit mask whose parity equals the message bit."""
    if bit not in (0, 1):
        raise ValueError("message bit must be 0 or 1")
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if alpha == 1:
        return (bit,)
    if rng is None:
        raise ValueError("redundant encoding with alpha > 1 needs an rng")
    head = [int(v) for v in rng.integers(0, 2, size=alpha - 1)]
    parity = 0
    for v in head:
        parity ^= v
    return tuple(head) + (bit ^ parity,)


def apply_encryption_flags(pk: PublicKey, flags: Sequence[int], alpha: int = 1) -> CipherState:
    """Deterministic encryption core: rotate qubit j by flag_j * pi.

    flags is the already-masked per-qubit vector; its block parities are
    the message.  Qubits beyond the flag vector are left untouched.
    """
    if alpha < 1 or len(flags) % alpha:
        raise ValueError("flag vector length must be a positive multiple of alpha")
    if len(flags) > pk.register.qubit_count:
        raise MessageTooLongError(
            f"message needs {len(flags)} qubits but the public key has "
            f"{pk.register.qubit_count}; ask Alice to increase the length of "
            f"her public key"
        )
    pk.register.apply_bit_rotations(flags)
    return CipherState(register=pk.register, num_bits=len(flags) // alpha, alpha=alpha)


def encrypt(
    pk: PublicKey,
    message: Sequence[int],
    alpha: int = 1,
    *,
    rng: np.random.Generator | None = None,
) -> CipherState:
    """Encrypt message bits onto a public-key register.

    Each bit is expanded to a uniformly random alpha-qubit parity mask
    (rng required when alpha > 1), and masked qubits are flipped with
    R(pi).  The input register is consumed: its qubits become the cipher.
    """
    bits = [int(b) for b in message]
    if any(b not in (0, 1) for b in bits):
        raise ValueError("message must be a sequence of bits")
    if not bits:
        raise ValueError("message must contain at least one bit")
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if len(bits) * alpha > pk.register.qubit_count:
        raise MessageTooLongError(
            f"message of {len(bits)} bits at redundancy {alpha} needs "
            f"{len(bits) * alpha} qubits but the public key has "
            f"{pk.register.qubit_count}; ask Alice to increase the length of "
            f"her public key"
        )
    if alpha > 1 and rng is None:
        raise ValueError("encryption with alpha > 1 needs an rng for the parity masks")
    if alpha == 1:
        flags = np.fromiter(bits, dtype=np.int64, count=len(bits))
    else:
        head = rng.integers(0, 2, size=(len(bits), alpha - 1), dtype=np.int64)
        last = np.bitwise_xor.reduce(head, axis=1) ^ np.fromiter(
            bits, dtype=np.int64, count=len(bits)
        )
        flags = np.concatenate([head, last[:, np.newaxis]], axis=1).reshape(-1)
    return apply_encryption_flags(pk, flags, alpha)


# --- issuance and decryption services ---


class _RegistryEntry:
    __slots__ = ("key", "copy_cap", "issued")

    def __init__(self, key: PrivateKey, copy_cap: int) -> None:
        self.key = key
        self.copy_cap = copy_cap
        self.issued = 0


class KeyRegistry:
    """Issues up to a fixed number of public-key copies per registered key."""

    def __init__(self) -> None:
        self._entries: dict[str, _RegistryEntry] = {}
        self._lock = threading.Lock()

    def add(self, key: PrivateKey, copy_cap: int = DEFAULT_COPY_CAP) -> str:
        if copy_cap < 1:
            raise ValueError("copy cap must be at least 1")
        key_id = key_id_of(key)
        with self._lock:
            if key_id in self._entries:
                raise ValueError(f"key {key_id} already registered")
            self._entries[key_id] = _RegistryEntry(key, copy_cap)
        return key_id

    def _entry(self, key_id: str) -> _RegistryEntry:
        try:
            return self._entries[key_id]
        except KeyError:
            raise ValueError(f"unknown key id {key_id!r}") from None

    def issue_copy(self, key_id: str) -> PublicKey:
        """Freshly prepared public-key copy; fails beyond the cap."""
        with self._lock:
            entry = self._entry(key_id)
            if entry.issued >= entry.copy_cap:
                raise CopyCapExceededError(
                    f"key {key_id} already issued {entry.issued} of {entry.copy_cap} copies"
                )
            entry.issued += 1
            copy_index = entry.issued
        return PublicKey(
            key_id=key_id,
            N=entry.key.length,
            register=prepare_register(entry.key),
            copy_index=copy_index,
        )

    def issued_count(self, key_id: str) -> int:
        with self._lock:
            return self._entry(key_id).issued

    def copy_cap(self, key_id: str) -> int:
        with self._lock:
            return self._entry(key_id).copy_cap


class DecryptionOracle:
    """Decryption device bound to one private key, good for k uses total.

    Every accepted decryption call consumes one use, successful or not;
    after the last one the device is permanently inactive.
    """

    def __init__(self, key: PrivateKey, uses_allowed: int = DEFAULT_COPY_CAP) -> None:
        if uses_allowed < 1:
            raise ValueError("uses_allowed must be at least 1")
        self.__key = key
        self._remaining = uses_allowed
        self._uses_allowed = uses_allowed
        self._lock = threading.Lock()

    @property
    def uses_allowed(self) -> int:
        return self._uses_allowed

    @property
    def remaining_uses(self) -> int:
        return self._remaining

    @property
    def active(self) -> bool:
        return self._remaining > 0

    @property
    def key_length(self) -> int:
        return self.__key.length

    def _consume(self) -> PrivateKey:
        with self._lock:
            if self._remaining <= 0:
                raise OracleDeactivatedError("decryption device is permanently inactive")
            self._remaining -= 1
            return self.__key


def decrypt(oracle: DecryptionOracle, cipher: CipherState, rng: np.random.Generator) -> tuple[int, ...]:
    """Decrypt a cipher register: undo the key rotations, measure z, and
    decode block parities.

    Consumes one oracle use per accepted call.  A register whose qubit
    count differs from the key length is rejected before any use is spent.
    """
    if cipher.register.qubit_count != oracle.key_length:
        raise ValueError(
            f"cipher has {cipher.register.qubit_count} qubits but the key expects "
            f"{oracle.key_length}"
        )
    key = oracle._consume()
    cipher.register._apply_index_steps(-_position_indices(key), key.n)
    outcomes = cipher.register._measure_all_z(rng)
    used = outcomes[: cipher.num_bits * cipher.alpha].reshape(cipher.num_bits, cipher.alpha)
    return tuple(np.bitwise_xor.reduce(used, axis=1).tolist())
