"""Pulse envelopes, drive channels, and parametrized time-dependent Hamiltonians.

A program's real parameter vector is a plain float ndarray; complex envelope
coefficients occupy interleaved (re, im) slot pairs.  Times are nanoseconds
and every frequency or amplitude is angular (rad/ns), so a lab value quoted
as 5 GHz enters as 2*pi*5.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .paulis import PauliSum


class TimeOutOfRangeError(ValueError):
    """Evaluation time lies outside the envelope's [0, T] window."""


class BadQubitIndexError(IndexError):
    """A qubit index is out of range or an edge couples a qubit to itself."""


def normalize(z: complex) -> complex:
    """Squash a complex number into the open unit disk, keeping its argument.

    The modulus |z| maps to (1 - exp(-|z|)) / (1 + exp(-|z|)) = tanh(|z|/2),
    which is strictly below 1 and linear with slope 1/2 near the origin.
    """
    z = complex(z)
    r = abs(z)
    if r == 0.0:
        return 0j
    w = math.tanh(r / 2.0) * (z / r)
    a = abs(w)
    if a >= 1.0 - 1e-15:
        # tanh saturates to 1.0 in floats; keep the modulus strictly inside
        w *= (1.0 - 1e-15) / a
    return w


def normalize_slopes(z: complex) -> tuple[complex, complex]:
    """Partial derivatives of :func:`normalize` along Re(z) and Im(z).

    The map is not holomorphic, so the two real directions carry independent
    complex slopes.  At the origin both limits are finite: (1/2, i/2).
    """
    z = complex(z)
    r = abs(z)
    if r < 1e-8:
        return 0.5 + 0j, 0.5j
    g = math.tanh(r / 2.0)
    gp = 0.5 * (1.0 - g * g)
    h = g / r
    hp = (gp * r - g) / (r * r)
    a = h + 0.5 * r * hp          # holomorphic part
    b = z * z * hp / (2.0 * r)    # conjugate part
    return a + b, 1j * (a - b)


def legendre_all(x: float, degree: int) -> np.ndarray:
    """Values of the Legendre polynomials P_0..P_degree at x (Bonnet recurrence)."""
    out = np.empty(degree + 1)
    out[0] = 1.0
    if degree >= 1:
        out[1] = x
    for l in range(1, degree):
        out[l + 1] = ((2 * l + 1) * x * out[l] - l * out[l - 1]) / (l + 1)
    return out


def _check_window(t: float, duration: float) -> None:
    slack = 1e-9 * max(duration, 1.0)
    if t < -slack or t > duration + slack:
        raise TimeOutOfRangeError(f"t={t} outside [0, {duration}]")


class Envelope:
    """Base class: a scalar complex signal on [0, T] with owned parameter slots."""

    n_slots: int = 0
    duration: float | None = None

    def value(self, theta_own: np.ndarray, t: float) -> complex:
        raise NotImplementedError

    def param_grad(self, theta_own: np.ndarray, t: float) -> np.ndarray:
        """d(value)/d(slot_k) for each owned real slot, as a complex array."""
        raise NotImplementedError


class ConstantEnvelope(Envelope):
    """One amplitude slot with an optional fixed phase: u = theta_0 * exp(i*phi)."""

    def __init__(self, phase: float = 0.0):
        self.phase = float(phase)
        self.n_slots = 1
        self._unit = cmath.exp(1j * self.phase)

    def value(self, theta_own, t):
        return theta_own[0] * self._unit

    def param_grad(self, theta_own, t):
        return np.array([self._unit])


class PiecewiseConstantEnvelope(Envelope):
    """n_bins equal bins on [0, T]; each bin owns (amplitude, phase) slots.

    The signal is amp_k * exp(i * phase_k) on bin k and jumps at bin edges;
    integrators must restart there (see the discontinuities helper).
    """

    def __init__(self, n_bins: int, duration: float):
        if n_bins < 1:
            raise ValueError("need at least one bin")
        if duration <= 0:
            raise ValueError("duration must be positive")
        self.n_bins = n_bins
        self.duration = float(duration)
        self.n_slots = 2 * n_bins

    def _bin(self, t: float) -> int:
        _check_window(t, self.duration)
        k = int(t / self.duration * self.n_bins)
        return min(max(k, 0), self.n_bins - 1)

    def value(self, theta_own, t):
        k = self._bin(t)
        return theta_own[2 * k] * cmath.exp(1j * theta_own[2 * k + 1])

    def param_grad(self, theta_own, t):
        k = self._bin(t)
        out = np.zeros(self.n_slots, dtype=complex)
        phase = cmath.exp(1j * theta_own[2 * k + 1])
        out[2 * k] = phase
        out[2 * k + 1] = 1j * theta_own[2 * k] * phase
        return out

    def edges(self) -> np.ndarray:
        """Interior bin boundaries, where the signal is discontinuous."""
        return self.duration * np.arange(1, self.n_bins) / self.n_bins


class LegendreEnvelope(Envelope):
    """Truncated Legendre series in rescaled time, squashed into the unit disk.

    The series z(t) = sum_l (theta_{2l} + i theta_{2l+1}) P_l(2t/T - 1) runs
    over degrees 0..d, giving 2(d+1) real slots.  With normalization on, the
    envelope is normalize(z), so its modulus never reaches 1.
    """

    def __init__(self, degree: int, duration: float, normalized: bool = True):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        if duration <= 0:
            raise ValueError("duration must be positive")
        self.degree = degree
        self.duration = float(duration)
        self.normalized = normalized
        self.n_slots = 2 * (degree + 1)

    def _series(self, theta_own, t):
        _check_window(t, self.duration)
        x = 2.0 * t / self.duration - 1.0
        p = legendre_all(x, self.degree)
        z = complex(np.dot(theta_own[0::2], p), np.dot(theta_own[1::2], p))
        return z, p

    def value(self, theta_own, t):
        z, _ = self._series(theta_own, t)
        return normalize(z) if self.normalized else z

    def param_grad(self, theta_own, t):
        z, p = self._series(theta_own, t)
        out = np.empty(self.n_slots, dtype=complex)
        if self.normalized:
            d_re, d_im = normalize_slopes(z)
        else:
            d_re, d_im = 1.0 + 0j, 1j
        out[0::2] = d_re * p
        out[1::2] = d_im * p
        return out


class NegatedEnvelope(Envelope):
    """Sign-flipped view of another envelope, sharing its parameter slots."""

    def __init__(self, inner: Envelope):
        self.inner = inner
        self.n_slots = inner.n_slots
        self.duration = inner.duration

    def value(self, theta_own, t):
        return -self.inner.value(theta_own, t)

    def param_grad(self, theta_own, t):
        return -self.inner.param_grad(theta_own, t)

    def edges(self):
        return self.inner.edges() if hasattr(self.inner, "edges") else np.array([])


def envelope_value(env: Envelope, theta_own, t: float) -> complex:
    return env.value(np.asarray(theta_own, dtype=float), t)


def envelope_param_grad(env: Envelope, theta_own, t: float) -> np.ndarray:
    return env.param_grad(np.asarray(theta_own, dtype=float), t)


@dataclass(frozen=True)
class DriveChannel:
    """A modulated drive line on one qubit.

    The channel turns its envelope into the real coefficient of a generator.
    Two modulation forms are supported:

    - "re":  f = omega_max * Re(exp(i*nu*t) * u(theta, t)) with complex u;
      any carrier phase lives inside the envelope coefficients.
    - "sin": f = omega_max * Re(u(theta, t)) * sin(nu*t + phase) for real
      envelopes.

    Both describe the same physics: the sin form with phase phi matches the
    re form driven by u' = -i * u * exp(i*phi).
    """

    qubit: int
    omega_max: float
    nu: float
    envelope: Envelope
    phase: float = 0.0
    form: str = "re"

    def __post_init__(self):
        if self.omega_max < 0:
            raise ValueError("maximum amplitude must be nonnegative")
        if self.form not in ("re", "sin"):
            raise ValueError(f"unknown drive form {self.form!r}")

    def coefficient(self, theta_own, t: float) -> float:
        u = self.envelope.value(theta_own, t)
        if self.form == "re":
            return self.omega_max * (cmath.exp(1j * self.nu * t) * u).real
        return self.omega_max * u.real * math.sin(self.nu * t + self.phase)

    def coefficient_grad(self, theta_own, t: float) -> np.ndarray:
        du = self.envelope.param_grad(theta_own, t)
        if self.form == "re":
            return self.omega_max * (cmath.exp(1j * self.nu * t) * du).real
        return self.omega_max * du.real * math.sin(self.nu * t + self.phase)


class DriveTerm:
    """One driven term f_j(theta, t) * H_j of a parametrized Hamiltonian.

    ``slots`` lists the indices of the real parameters the coefficient reads,
    in the order the gradient callable reports them.
    """

    def __init__(self, generator: PauliSum, value_fn, grad_fn, slots):
        self.generator = generator
        self.gen_matrix = generator.to_matrix()
        self.value_fn = value_fn
        self.grad_fn = grad_fn
        self.slots = np.asarray(slots, dtype=int)

    def value(self, theta: np.ndarray, t: float) -> float:
        return float(self.value_fn(theta[self.slots], t))

    def slot_grad(self, theta: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(self.grad_fn(theta[self.slots], t), dtype=float)


class ParametrizedHamiltonian:
    """H(theta, t) = drift + sum_j f_j(theta, t) H_j on n qubits."""

    def __init__(self, drift: PauliSum, drives, n_params: int, duration: float | None = None):
        self.drift = drift
        self.drives = list(drives)
        self.n_qubits = drift.n_qubits
        self.n_params = int(n_params)
        self.dim = 1 << self.n_qubits
        self.drift_matrix = drift.to_matrix()
        for term in self.drives:
            if term.gen_matrix.shape != (self.dim, self.dim):
                raise ValueError("drive generator acts on a different qubit count")
            if len(term.slots) and (term.slots.min() < 0 or term.slots.max() >= n_params):
                raise ValueError("drive slot index outside the parameter vector")
        if duration is None:
            durations = [
                term.duration_hint for term in self.drives
                if getattr(term, "duration_hint", None) is not None
            ]
            duration = min(durations) if durations else None
        self.duration = duration
        self.generator_stack = (
            np.stack([term.gen_matrix for term in self.drives])
            if self.drives
            else np.zeros((0, self.dim, self.dim), dtype=complex)
        )

    @property
    def n_drives(self) -> int:
        return len(self.drives)

    def _check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(
                f"expected {self.n_params} parameters, got shape {theta.shape}"
            )
        return theta

    def coefficients(self, theta, t: float) -> np.ndarray:
        """All drive coefficients f_j(theta, t) as a float vector."""
        theta = self._check_theta(theta)
        return np.array([term.value(theta, t) for term in self.drives])

    def evaluate(self, theta, t: float) -> np.ndarray:
        """Dense Hamiltonian matrix at (theta, t)."""
        theta = self._check_theta(theta)
        h = self.drift_matrix.copy()
        for term in self.drives:
            h += term.value(theta, t) * term.gen_matrix
        return h

    def evaluate_param_derivative(self, theta, t: float, j: int) -> np.ndarray:
        """dH/d(theta_j) at (theta, t); zero if slot j feeds no drive."""
        theta = self._check_theta(theta)
        if j < 0 or j >= self.n_params:
            raise ValueError(f"slot {j} outside 0..{self.n_params - 1}")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for term in self.drives:
            hits = np.nonzero(term.slots == j)[0]
            if hits.size:
                g = term.slot_grad(theta, t)
                out += g[hits].sum() * term.gen_matrix
        return out

    def slot_coefficient_grads(self, theta, t: float):
        """Per-drive (slots, d f_j/d theta_slots) pairs; fast path for solvers."""
        theta = self._check_theta(theta)
        return [(term.slots, term.slot_grad(theta, t)) for term in self.drives]

    def discontinuities(self) -> np.ndarray:
        """Sorted interior times where any drive coefficient jumps."""
        times = []
        for term in self.drives:
            env = getattr(term, "envelope", None)
            if env is not None and hasattr(env, "edges"):
                times.extend(env.edges())
        return np.unique(np.asarray(times, dtype=float))


@dataclass(frozen=True)
class TransmonSpec:
    """Qubit frequencies and exchange couplings of a fixed-frequency device.

    ``couplings`` is a sequence of (q, p, J) triples over distinct qubits.
    """

    omegas: tuple
    couplings: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(
            self, "couplings", tuple((int(q), int(p), float(j)) for q, p, j in self.couplings)
        )
        n = len(self.omegas)
        for q, p, _ in self.couplings:
            if not (0 <= q < n and 0 <= p < n):
                raise BadQubitIndexError(f"coupling ({q},{p}) outside 0..{n - 1}")
            if q == p:
                raise BadQubitIndexError(f"coupling ({q},{p}) must join distinct qubits")

    @property
    def n_qubits(self) -> int:
        return len(self.omegas)


def _word_on(n: int, positions: dict) -> str:
    chars = ["I"] * n
    for q, c in positions.items():
        chars[q] = c
    return "".join(chars)


def transmon_hamiltonian(spec: TransmonSpec, channels) -> ParametrizedHamiltonian:
    """Build the driven-transmon Hamiltonian for a device and its drive lines.

    The drift is -sum_q (omega_q/2) Z_q plus J_qp (X_q X_p + Y_q Y_p) for each
    coupled pair; every channel contributes one drive term with generator Y_q
    on its target qubit.  Channel parameter slots are laid out consecutively
    in channel order.

    Raises:
        BadQubitIndexError: if a channel targets a qubit outside the device.
    """
    n = spec.n_qubits
    terms = [(-w / 2.0, _word_on(n, {q: "Z"})) for q, w in enumerate(spec.omegas)]
    for q, p, j in spec.couplings:
        terms.append((j, _word_on(n, {q: "X", p: "X"})))
        terms.append((j, _word_on(n, {q: "Y", p: "Y"})))
    drift = PauliSum(terms)

    drives = []
    offset = 0
    for ch in channels:
        if not (0 <= ch.qubit < n):
            raise BadQubitIndexError(f"drive qubit {ch.qubit} outside 0..{n - 1}")
        gen = PauliSum([(1.0, _word_on(n, {ch.qubit: "Y"}))])
        slots = range(offset, offset + ch.envelope.n_slots)
        term = DriveTerm(gen, ch.coefficient, ch.coefficient_grad, slots)
        term.envelope = ch.envelope
        term.duration_hint = ch.envelope.duration
        drives.append(term)
        offset += ch.envelope.n_slots
    return ParametrizedHamiltonian(drift, drives, n_params=offset)
