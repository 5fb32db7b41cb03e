"""Gradient engines for pulse circuits, plus oracles and resource accounting.

Two hardware-style engines are provided.  The analytic engine ("odegen")
integrates forward sensitivities, reads off each parameter's effective
generator, expands it in Pauli words and reconstructs the derivative from
one pair of shifted expectation values per word.  The stochastic engine
("sps") splits the evolution at sampled times and inserts fixed pi/4
rotations of the drive generators, Monte-Carlo averaging the two-point
differences.  Both report how many device expectation values they consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import BadIndexError, Circuit, Device, PulseGate, apply_word
from .ode import OdeConfig, PropagatorResult, evolve, evolve_with_sensitivity
from .paulis import DLAResult, PauliSum, dla_closure, pauli_decompose


class MissingSensitivitiesError(ValueError):
    """The propagator result does not carry parameter sensitivities."""


class GeneratorNotHermitianError(ValueError):
    """An effective generator's anti-Hermitian residue exceeds tolerance."""


class NonPauliGeneratorError(ValueError):
    """A drive generator is not a single Pauli word (stochastic rule only
    covers the single-word case)."""


#: Anti-Hermiticity budget for effective generators, calibrated for
#: integrator tolerance rtol = 1e-8.  Scale linearly for other tolerances.
DEFAULT_GEN_TOL = 1e-6


def generator_tolerance(ode_cfg: OdeConfig | None) -> float:
    """Effective-generator residue budget matched to an integrator config."""
    rtol = (ode_cfg or OdeConfig()).rtol
    return DEFAULT_GEN_TOL * (rtol / 1e-8)


@dataclass(frozen=True)
class EffectiveGenerator:
    """Hermitian generator of the parameter-j derivative of a propagator.

    Satisfies dU/dtheta_j = -i U matrix up to the recorded residue, which
    is the max-abs of the discarded anti-Hermitian part.
    """

    j: int
    matrix: np.ndarray
    residue: float


def effective_generators(
    prop: PropagatorResult, gen_tol: float = DEFAULT_GEN_TOL
) -> list[EffectiveGenerator]:
    """Extract one effective generator per parameter from a sensitivity run.

    Each generator is i U^dag (dU/dtheta_j), symmetrized.  Raises
    MissingSensitivitiesError if the propagation was run without
    sensitivities, and GeneratorNotHermitianError if the anti-Hermitian
    residue of any generator exceeds gen_tol (a sign the integration was
    too loose for the downstream shift-rule reconstruction).
    """
    if prop.sensitivities is None:
        raise MissingSensitivitiesError(
            "propagator carries no sensitivities; use evolve_with_sensitivity"
        )
    udag = prop.U.conj().T
    out = []
    for j, du in enumerate(prop.sensitivities):
        h = 1j * (udag @ du)
        anti = (h - h.conj().T) / 2.0
        residue = float(np.max(np.abs(anti)))
        if residue > gen_tol:
            raise GeneratorNotHermitianError(
                f"generator {j}: anti-Hermitian residue {residue:.3e} "
                f"exceeds {gen_tol:.3e}"
            )
        out.append(EffectiveGenerator(j, (h + h.conj().T) / 2.0, residue))
    return out


@dataclass(frozen=True)
class OdegenPlan:
    """Measurement plan for the analytic gradient of one pulse gate.

    ``words`` are the unique shift words in first-occurrence order;
    ``coeffs`` maps (local parameter index, word position) to the real
    expansion coefficient.  Identity words and coefficients of magnitude
    at most ``atol_coeff`` are never retained.
    """

    gate_index: int
    words: tuple[str, ...]
    coeffs: dict = field(default_factory=dict)
    atol_coeff: float = 0.0

    @property
    def expected_queries(self) -> int:
        return 2 * len(self.words)


def build_odegen_plan(
    generators: list[EffectiveGenerator],
    atol_coeff: float = 0.0,
    gate_index: int = 0,
) -> OdegenPlan:
    """Decompose effective generators into a shared shift-word plan.

    Words are deduplicated across parameters so each is measured once per
    shift sign.  The identity word is dropped outright: conjugating by it
    never moves the loss.
    """
    if atol_coeff < 0:
        raise ValueError("atol_coeff must be nonnegative")
    words: list[str] = []
    position: dict[str, int] = {}
    coeffs: dict = {}
    for gen in generators:
        dim = gen.matrix.shape[0]
        n = dim.bit_length() - 1
        dec = pauli_decompose(gen.matrix, n, herm_tol=1e-7, drop_tol=atol_coeff)
        for label, c in dec.coeffs.items():
            if label == "I" * n:
                continue
            if label not in position:
                position[label] = len(words)
                words.append(label)
            coeffs[(gen.j, position[label])] = c
    return OdegenPlan(gate_index, tuple(words), coeffs, atol_coeff)


def odegen_plans(
    circuit: Circuit,
    theta,
    atol_coeff: float = 0.0,
    ode_cfg: OdeConfig | None = None,
) -> list[OdegenPlan]:
    """Build one analytic-gradient plan per pulse gate of a circuit."""
    cfg = ode_cfg or OdeConfig()
    theta = np.asarray(theta, dtype=float)
    tol = generator_tolerance(cfg)
    plans = []
    for i in circuit.pulse_gate_indices:
        gate = circuit.gates[i]
        prop = evolve_with_sensitivity(
            gate.ham, gate.local_theta(theta), gate.t0, gate.t1, cfg
        )
        gens = effective_generators(prop, tol)
        plans.append(build_odegen_plan(gens, atol_coeff, gate_index=i))
    return plans


@dataclass(frozen=True)
class SpsConfig:
    """Settings for the stochastic parameter-shift engine.

    monte_carlo mode draws n_samples split times uniformly from the pulse
    window; dense_grid replaces sampling with the midpoint rule on a
    uniform grid of the same size (a deterministic quadrature, useful as
    an oracle).
    """

    n_samples: int
    seed: int = 0
    split_mode: str = "monte_carlo"

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.split_mode not in ("monte_carlo", "dense_grid"):
            raise ValueError(f"unknown split_mode {self.split_mode!r}")


@dataclass(frozen=True)
class ResourceCount:
    """Device expectation values consumed by one gradient call."""

    expectation_values: int
    breakdown: dict = field(default_factory=dict)


def resources_sps(n_samples: int, n_generators: int, r: int = 1) -> int:
    """Expectation values per stochastic gradient: n_samples * n_gen * 2r."""
    if n_samples < 1 or n_generators < 1 or r < 1:
        raise ValueError("resource inputs must be positive")
    return n_samples * n_generators * 2 * r


def resources_odegen(plan: OdegenPlan) -> int:
    """Expectation values per analytic gradient: two per unique shift word."""
    return 2 * len(plan.words)


def _pulse_unitaries(circuit: Circuit, theta, cfg: OdeConfig) -> dict:
    return {
        i: circuit.gates[i].unitary(theta, cfg)
        for i in circuit.pulse_gate_indices
    }


def _prefix_states(circuit: Circuit, theta, unitaries: dict) -> list:
    """State entering each gate, plus the final state, index i = before gate i."""
    psi = np.zeros(1 << circuit.n_qubits, dtype=complex)
    psi[0] = 1.0
    states = [psi]
    for i, gate in enumerate(circuit.gates):
        psi = unitaries[i] @ psi if i in unitaries else gate.apply(psi)
        states.append(psi)
    return states


def _apply_tail(circuit: Circuit, start: int, psi, unitaries: dict):
    for k in range(start, len(circuit.gates)):
        psi = unitaries[k] @ psi if k in unitaries else circuit.gates[k].apply(psi)
    return psi


def odegen_gradient(
    circuit: Circuit,
    theta,
    observable: PauliSum,
    device: Device,
    plan,
    ode_cfg: OdeConfig | None = None,
):
    """Analytic shift-rule gradient of <observable> for a pulse circuit.

    ``plan`` is one OdegenPlan or a sequence of them (one per pulse gate,
    built at the same theta).  For each unique word P the two rotated
    losses L(+pi/2), L(-pi/2) are measured once, with the rotation
    exp(-i (x/2) P) inserted immediately before the planned pulse gate,
    and every parameter's derivative is assembled from the cached pair.
    Returns (gradient, ResourceCount); the count equals two queries per
    unique word, independent of the parameter count.
    """
    plans = [plan] if isinstance(plan, OdegenPlan) else list(plan)
    theta = np.asarray(theta, dtype=float)
    cfg = ode_cfg or OdeConfig()
    for p in plans:
        if not 0 <= p.gate_index < len(circuit.gates) or not isinstance(
            circuit.gates[p.gate_index], PulseGate
        ):
            raise BadIndexError(f"plan targets gate {p.gate_index}, not a pulse gate")

    unitaries = _pulse_unitaries(circuit, theta, cfg)
    states = _prefix_states(circuit, theta, unitaries)
    grad = np.zeros(circuit.n_params)
    queries = 0
    half = math.sqrt(0.5)  # cos(pi/4) = sin(pi/4)
    for p in plans:
        gate = circuit.gates[p.gate_index]
        pre = states[p.gate_index]
        diffs = np.zeros(len(p.words))
        for pos, label in enumerate(p.words):
            rotated_word = apply_word(pre, label)
            pair = []
            for sign in (1.0, -1.0):
                shifted = half * (pre - 1j * sign * rotated_word)
                out = _apply_tail(circuit, p.gate_index, shifted, unitaries)
                pair.append(device.expectation_of_state(out, observable))
                queries += 1
            diffs[pos] = pair[0] - pair[1]
        for (j, pos), w in p.coeffs.items():
            grad[gate.slots[j]] += w * diffs[pos]
    return grad, ResourceCount(queries, {"shift_evaluations": queries})


def sps_gradient(
    circuit: Circuit,
    theta,
    observable: PauliSum,
    device: Device,
    cfg: SpsConfig,
    ode_cfg: OdeConfig | None = None,
):
    """Stochastic parameter-shift gradient of <observable>.

    For each split time tau and each drive generator P_j the evolution is
    cut at tau and exp(-i (+-pi/4) P_j) inserted; the scaled two-point
    differences average to the exact derivative.  Every drive generator
    must be a single Pauli word.  Returns (gradient, ResourceCount) with
    exactly n_samples * n_drives * 2 queries per pulse gate.
    """
    theta = np.asarray(theta, dtype=float)
    odecfg = ode_cfg or OdeConfig()
    pulse_indices = circuit.pulse_gate_indices
    for i in pulse_indices:
        for term in circuit.gates[i].ham.drives:
            if len(term.generator.terms) != 1:
                raise NonPauliGeneratorError(
                    "stochastic rule needs single-Pauli-word drive generators, "
                    f"got {term.generator!r}"
                )

    rng = np.random.default_rng(cfg.seed)
    unitaries = {}
    taus_by_gate = {}
    props = {}
    for i in pulse_indices:
        gate = circuit.gates[i]
        if cfg.split_mode == "monte_carlo":
            taus = np.sort(rng.uniform(gate.t0, gate.t1, cfg.n_samples))
        else:
            h = (gate.t1 - gate.t0) / cfg.n_samples
            taus = gate.t0 + (np.arange(cfg.n_samples) + 0.5) * h
        prop = evolve(
            gate.ham, gate.local_theta(theta), gate.t0, gate.t1, odecfg, t_eval=taus
        )
        taus_by_gate[i] = taus
        props[i] = prop
        unitaries[i] = prop.U
    states = _prefix_states(circuit, theta, unitaries)

    grad = np.zeros(circuit.n_params)
    queries = 0
    half = math.sqrt(0.5)  # cos(pi/4) = sin(pi/4)
    for i in pulse_indices:
        gate = circuit.gates[i]
        prop = props[i]
        local_theta = gate.local_theta(theta)
        span = gate.t1 - gate.t0
        lookup = dict(zip(prop.checkpoint_times, prop.checkpoint_unitaries))
        pre = states[i]
        for tau in taus_by_gate[i]:
            u_tau = lookup[tau]
            u_after = prop.U @ u_tau.conj().T
            mid = u_tau @ pre
            for term in gate.ham.drives:
                coeff, word = term.generator.terms[0]
                word_mid = apply_word(mid, word)
                pair = []
                for sign in (1.0, -1.0):
                    shifted = half * (mid - 1j * sign * word_mid)
                    out = _apply_tail(circuit, i + 1, u_after @ shifted, unitaries)
                    pair.append(device.expectation_of_state(out, observable))
                    queries += 1
                delta = pair[0] - pair[1]
                slot_grad = coeff * term.slot_grad(local_theta, tau)
                np.add.at(
                    grad,
                    gate.slots[term.slots],
                    span / cfg.n_samples * slot_grad * delta,
                )
    return grad, ResourceCount(queries, {"split_evaluations": queries})


def two_term_shift(loss, theta, j: int) -> float:
    """Two-term parameter-shift derivative of a scalar loss in direction j.

    Exact when parameter j enters only as the angle of a Pauli-word
    rotation: (loss(theta + pi/2 e_j) - loss(theta - pi/2 e_j)) / 2.
    """
    theta = np.asarray(theta, dtype=float)
    step = np.zeros_like(theta)
    step[j] = math.pi / 2
    return (loss(theta + step) - loss(theta - step)) / 2.0


def exact_gradient(
    circuit: Circuit, theta, observable: PauliSum, ode_cfg: OdeConfig | None = None
) -> np.ndarray:
    """Chain-rule gradient through integrator sensitivities (oracle).

    Evaluates d<H>/dtheta_k = <psi_pre| (dU/dtheta)^dag S^dag H S U |psi_pre>
    plus its conjugate for every pulse gate, where S collects the gates
    after it.  Makes no shift-rule assumptions and queries no device.
    """
    theta = np.asarray(theta, dtype=float)
    cfg = ode_cfg or OdeConfig()
    props = {}
    unitaries = {}
    for i in circuit.pulse_gate_indices:
        gate = circuit.gates[i]
        props[i] = evolve_with_sensitivity(
            gate.ham, gate.local_theta(theta), gate.t0, gate.t1, cfg
        )
        unitaries[i] = props[i].U
    states = _prefix_states(circuit, theta, unitaries)
    chi = observable.to_matrix() @ states[-1]
    grad = np.zeros(circuit.n_params)
    for i, prop in props.items():
        gate = circuit.gates[i]
        for j, du in enumerate(prop.sensitivities):
            dpsi = _apply_tail(circuit, i + 1, du @ states[i], unitaries)
            grad[gate.slots[j]] += 2.0 * float(np.vdot(dpsi, chi).real)
    return grad


def finite_difference_gradient(loss, theta, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar loss (oracle)."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        bump = np.zeros_like(theta)
        bump[k] = step
        grad[k] = (loss(theta + bump) - loss(theta - bump)) / (2.0 * step)
    return grad


def hamiltonian_dla(ham, include_drift: bool = True) -> DLAResult:
    """Commutator closure of a Hamiltonian's generator words.

    With include_drift the drift's support words join the drive generator
    words before closing; this is the set that bounds the analytic
    engine's shift words.  Identity words are skipped.
    """
    labels = []
    for term in ham.drives:
        for _, w in term.generator.terms:
            if not w.is_identity:
                labels.append(w.label)
    if include_drift:
        for _, w in ham.drift.terms:
            if not w.is_identity:
                labels.append(w.label)
    return dla_closure(labels)


def words_outside_closure(plan: OdegenPlan, ham, include_drift: bool = True):
    """Shift words of a plan not contained in the Hamiltonian's closure.

    Meant as a diagnostic: with include_drift=False this flags words the
    drive-only algebra cannot explain (the drift direction can still
    produce them), without failing the plan.
    """
    closure = set(hamiltonian_dla(ham, include_drift).basis)
    return tuple(w for w in plan.words if w not in closure)
