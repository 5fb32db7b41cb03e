"""Circuits mixing digital and pulse gates, statevector execution, and the
shot-sampled expectation device both gradient engines query.

States are plain complex ndarrays of 2**n amplitudes with qubit 0 as the
most significant index bit.  Global phase is never tracked; comparisons in
tests use phase-equivalence metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ode import OdeConfig, evolve
from .paulis import DimMismatchError, PauliSum, PauliWord, _as_word, _parity
from .pulses import ParametrizedHamiltonian


class TauOutOfRangeError(ValueError):
    """Split time must lie strictly inside the pulse window."""


class BadIndexError(IndexError):
    """Gate index does not point at a suitable gate."""


class TooLargeError(ValueError):
    """Dense diagonalization is limited to six qubits."""


def apply_word(psi: np.ndarray, word) -> np.ndarray:
    """Apply a Pauli word to a statevector without building its matrix."""
    w = _as_word(word)
    dim = psi.shape[0]
    cols = np.arange(dim)
    signs = 1.0 - 2.0 * _parity(cols & w.z_mask)
    out = np.empty_like(psi)
    out[cols ^ w.x_mask] = (1j ** w.n_y) * signs * psi
    return out


def word_expectation(psi: np.ndarray, word) -> float:
    """Exact <psi|P|psi> for a Pauli word."""
    w = _as_word(word)
    dim = psi.shape[0]
    cols = np.arange(dim)
    signs = 1.0 - 2.0 * _parity(cols & w.z_mask)
    val = (1j ** w.n_y) * np.sum(psi.conj()[cols ^ w.x_mask] * signs * psi)
    return float(val.real)


@dataclass(frozen=True)
class DigitalRotation:
    """exp(-i*(angle/2)*word): the digital-gate building block."""

    word: PauliWord
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "word", _as_word(self.word))

    @property
    def n_qubits(self) -> int:
        return self.word.n_qubits

    def apply(self, psi: np.ndarray) -> np.ndarray:
        half = self.angle / 2.0
        return math.cos(half) * psi - 1j * math.sin(half) * apply_word(psi, self.word)


@dataclass(frozen=True)
class PauliGate:
    """A literal Pauli-word gate (the echo X, for instance)."""

    word: PauliWord

    def __post_init__(self):
        object.__setattr__(self, "word", _as_word(self.word))

    @property
    def n_qubits(self) -> int:
        return self.word.n_qubits

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return apply_word(psi, self.word)


class FixedUnitary:
    """A constant unitary block."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        n = int(round(math.log2(matrix.shape[0])))
        if matrix.shape != (1 << n, 1 << n):
            raise DimMismatchError(f"not a square power-of-two matrix: {matrix.shape}")
        self.matrix = matrix
        self.n_qubits = n

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.matrix @ psi


class PulseGate:
    """Evolution under a parametrized Hamiltonian on the window [t0, t1].

    ``slots`` maps the Hamiltonian's local parameters to positions in the
    circuit's parameter vector; two pulse gates may deliberately share
    slots (an echoed pair reuses one envelope with opposite sign).
    """

    def __init__(self, ham: ParametrizedHamiltonian, slots, t0: float, t1: float):
        if not t1 > t0:
            raise ValueError("need t1 > t0")
        self.ham = ham
        self.slots = np.asarray(slots, dtype=int)
        if self.slots.shape != (ham.n_params,):
            raise ValueError(
                f"slot map length {self.slots.shape} does not match "
                f"{ham.n_params} Hamiltonian parameters"
            )
        self.t0 = float(t0)
        self.t1 = float(t1)

    @property
    def n_qubits(self) -> int:
        return self.ham.n_qubits

    def local_theta(self, theta: np.ndarray) -> np.ndarray:
        return theta[self.slots]

    def unitary(self, theta: np.ndarray, ode_cfg: OdeConfig) -> np.ndarray:
        return evolve(self.ham, self.local_theta(theta), self.t0, self.t1, ode_cfg).U


class Circuit:
    """Ordered gate list over a shared parameter vector.

    Every parameter slot must feed at least one pulse gate; slot sharing
    between pulse gates is allowed and means the parameter drives both.
    """

    def __init__(self, n_qubits: int, gates, n_params: int = 0):
        self.n_qubits = int(n_qubits)
        self.gates = list(gates)
        self.n_params = int(n_params)
        owned = set()
        for g in self.gates:
            if g.n_qubits != self.n_qubits:
                raise DimMismatchError(
                    f"gate on {g.n_qubits} qubits in a {self.n_qubits}-qubit circuit"
                )
            if isinstance(g, PulseGate):
                if g.slots.size and (g.slots.min() < 0 or g.slots.max() >= n_params):
                    raise ValueError("pulse gate slot outside the parameter vector")
                owned.update(g.slots.tolist())
        if owned != set(range(self.n_params)):
            missing = sorted(set(range(self.n_params)) - owned)
            raise ValueError(f"parameter slots {missing} feed no pulse gate")

    @property
    def pulse_gate_indices(self) -> list:
        return [i for i, g in enumerate(self.gates) if isinstance(g, PulseGate)]

    def with_gates(self, gates) -> "Circuit":
        return Circuit(self.n_qubits, gates, self.n_params)


def run(circuit: Circuit, theta, ode_cfg: OdeConfig | None = None) -> np.ndarray:
    """Apply the circuit to |0...0> and return the final statevector."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {theta.shape}")
    ode_cfg = ode_cfg or OdeConfig()
    psi = np.zeros(1 << circuit.n_qubits, dtype=complex)
    psi[0] = 1.0
    for gate in circuit.gates:
        if isinstance(gate, PulseGate):
            psi = gate.unitary(theta, ode_cfg) @ psi
        else:
            psi = gate.apply(psi)
    return psi


def circuit_unitary(circuit: Circuit, theta, ode_cfg: OdeConfig | None = None) -> np.ndarray:
    """Dense matrix of the whole circuit (pulse gates evolved once)."""
    theta = np.asarray(theta, dtype=float)
    ode_cfg = ode_cfg or OdeConfig()
    dim = 1 << circuit.n_qubits
    total = np.eye(dim, dtype=complex)
    for gate in circuit.gates:
        if isinstance(gate, PulseGate):
            total = gate.unitary(theta, ode_cfg) @ total
        else:
            cols = [gate.apply(col.copy()) for col in np.eye(dim, dtype=complex)]
            total = np.column_stack(cols) @ total
    return total


@dataclass(frozen=True)
class DeviceConfig:
    """shots = 0 means exact expectations; otherwise per-word sampling."""

    shots: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.shots < 0:
            raise ValueError("shots must be nonnegative")


# single-qubit basis changes onto the Z axis: X = H Z H, Y = (H S^dag)^dag' ...
_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
_Y_BASIS = _HADAMARD @ np.diag([1.0, -1j])  # H S^dag


class Device:
    """Expectation-value oracle with a query counter.

    Every call that would consume hardware time (one circuit preparation
    plus one observable estimate) increments ``queries`` by one, whether
    the state arrives as a circuit or as a precomputed vector.  Exact mode
    contracts the observable; shot mode samples each Pauli word in its own
    eigenbasis and averages ``shots`` single-shot outcomes.
    """

    def __init__(self, config: DeviceConfig | None = None):
        self.config = config or DeviceConfig()
        self.rng = np.random.default_rng(self.config.seed)
        self.queries = 0

    def reset_counter(self) -> None:
        self.queries = 0

    def expectation_of_state(self, psi: np.ndarray, observable: PauliSum) -> float:
        if psi.shape != (1 << observable.n_qubits,):
            raise DimMismatchError(
                f"state dim {psi.shape} does not match {observable.n_qubits} qubits"
            )
        self.queries += 1
        if self.config.shots == 0:
            return float(sum(c * word_expectation(psi, w) for c, w in observable.terms))
        total = 0.0
        for c, w in observable.terms:
            total += c * self._sample_word(psi, w)
        return total

    def _sample_word(self, psi: np.ndarray, word: PauliWord) -> float:
        if word.is_identity:
            return 1.0
        n = word.n_qubits
        rotated = psi.reshape((2,) * n)
        support = 0
        for q, ch in enumerate(word.label):
            if ch == "I":
                continue
            support |= 1 << (n - 1 - q)
            if ch == "X":
                rotated = np.moveaxis(
                    np.tensordot(_HADAMARD, rotated, axes=([1], [q])), 0, q
                )
            elif ch == "Y":
                rotated = np.moveaxis(
                    np.tensordot(_Y_BASIS, rotated, axes=([1], [q])), 0, q
                )
        probs = np.abs(rotated.reshape(-1)) ** 2
        probs = probs / probs.sum()
        counts = self.rng.multinomial(self.config.shots, probs)
        signs = 1.0 - 2.0 * _parity(np.arange(probs.size) & support)
        return float(np.dot(counts, signs) / self.config.shots)


def expectation(circuit: Circuit, theta, observable: PauliSum,
                device: Device, ode_cfg: OdeConfig | None = None) -> float:
    """Run the circuit and query the device for <observable>."""
    if observable.n_qubits != circuit.n_qubits:
        raise DimMismatchError("observable and circuit qubit counts differ")
    psi = run(circuit, theta, ode_cfg)
    return device.expectation_of_state(psi, observable)


def split_pulse_gate(circuit: Circuit, gate_index: int, tau: float,
                     inserted) -> Circuit:
    """Cut a pulse gate at tau and place a gate between the two halves."""
    gates = circuit.gates
    if not (0 <= gate_index < len(gates)) or not isinstance(gates[gate_index], PulseGate):
        raise BadIndexError(f"gate {gate_index} is not a pulse gate")
    g = gates[gate_index]
    if not (g.t0 < tau < g.t1):
        raise TauOutOfRangeError(f"tau={tau} not inside ({g.t0}, {g.t1})")
    first = PulseGate(g.ham, g.slots, g.t0, tau)
    second = PulseGate(g.ham, g.slots, tau, g.t1)
    new_gates = gates[:gate_index] + [first, inserted, second] + gates[gate_index + 1:]
    return circuit.with_gates(new_gates)


def insert_before_pulse(circuit: Circuit, gate_index: int, gate) -> Circuit:
    """Insert a gate immediately before the pulse gate at gate_index."""
    gates = circuit.gates
    if not (0 <= gate_index < len(gates)) or not isinstance(gates[gate_index], PulseGate):
        raise BadIndexError(f"gate {gate_index} is not a pulse gate")
    new_gates = gates[:gate_index] + [gate] + gates[gate_index:]
    return circuit.with_gates(new_gates)


def ground_energy(observable: PauliSum) -> float:
    """Minimum eigenvalue of the dense observable matrix (n <= 6)."""
    if observable.n_qubits > 6:
        raise TooLargeError("dense diagonalization supports at most 6 qubits")
    return float(np.linalg.eigvalsh(observable.to_matrix())[0])
