import math

import numpy as np
import pytest

from program_builders import default_observable, transmon_program
from pulsegrad.circuits import Circuit, Device, DeviceConfig, DigitalRotation, PulseGate, expectation
from pulsegrad.gradients import (
    EffectiveGenerator,
    GeneratorNotHermitianError,
    MissingSensitivitiesError,
    NonPauliGeneratorError,
    OdegenPlan,
    SpsConfig,
    build_odegen_plan,
    effective_generators,
    exact_gradient,
    finite_difference_gradient,
    hamiltonian_dla,
    odegen_gradient,
    odegen_plans,
    resources_odegen,
    resources_sps,
    sps_gradient,
    two_term_shift,
)
from pulsegrad.ode import OdeConfig, evolve, evolve_with_sensitivity
from pulsegrad.paulis import PauliSum, to_matrix
from pulsegrad.pulses import DriveTerm, ParametrizedHamiltonian


def _linear_drive_ham(label="X", drift=None):
    """H = theta_0 * P with a trivial drift, one parameter."""
    term = DriveTerm(PauliSum([(1.0, label)]),
                     lambda th, t: th[0], lambda th, t: np.array([1.0]), [0])
    zero = PauliSum([(0.0, "I" * len(label))]) if drift is None else drift
    return ParametrizedHamiltonian(zero, [term], n_params=1)


def _single_drive_circuit(omega=0.9, T=3.0):
    """One qubit, H = theta_0 * (omega/2) X over [0, T]."""
    term = DriveTerm(PauliSum([(omega / 2.0, "X")]),
                     lambda th, t: th[0], lambda th, t: np.array([1.0]), [0])
    ham = ParametrizedHamiltonian(PauliSum([(0.0, "I")]), [term], n_params=1)
    gate = PulseGate(ham, [0], 0.0, T)
    return Circuit(1, [gate], n_params=1)


# ---------------------------------------------------------------------------
# effective generators


def test_zero_sensitivity_gives_zero_generator():
    from pulsegrad.ode import PropagatorResult
    prop = PropagatorResult(U=np.eye(2, dtype=complex),
                            sensitivities=[np.zeros((2, 2), dtype=complex)],
                            steps_accepted=0, steps_rejected=0)
    gens = effective_generators(prop)
    assert len(gens) == 1
    assert gens[0].residue == 0.0
    np.testing.assert_allclose(gens[0].matrix, 0.0, atol=0)


def test_missing_sensitivities_rejected():
    ham = _linear_drive_ham()
    prop = evolve(ham, np.array([0.4]), 0.0, 1.0)
    with pytest.raises(MissingSensitivitiesError):
        effective_generators(prop)


def test_commuting_drive_generator_is_time_integral():
    # H(theta, t) = (theta_0 + theta_1 t) X commutes with itself at all
    # times, so the effective generator is the plain time integral of H.
    term = DriveTerm(PauliSum([(1.0, "X")]),
                     lambda th, t: th[0] + th[1] * t,
                     lambda th, t: np.array([1.0, t]), [0, 1])
    ham = ParametrizedHamiltonian(PauliSum([(0.0, "I")]), [term], n_params=2)
    T = 2.0
    cfg = OdeConfig(rtol=1e-10, atol_ode=1e-10)
    prop = evolve_with_sensitivity(ham, np.array([0.7, -0.3]), 0.0, T, cfg)
    gens = effective_generators(prop, gen_tol=1e-8)
    x = to_matrix("X")
    np.testing.assert_allclose(gens[0].matrix, T * x, atol=1e-8)
    np.testing.assert_allclose(gens[1].matrix, T * T / 2.0 * x, atol=1e-8)


def test_generators_reconstruct_sensitivities():
    circuit, theta = transmon_program(seed=12, n_qubits=2)
    gate = circuit.gates[0]
    prop = evolve_with_sensitivity(gate.ham, theta, gate.t0, gate.t1)
    gens = effective_generators(prop)
    for gen, du in zip(gens, prop.sensitivities):
        assert gen.residue < 1e-6
        rebuilt = -1j * prop.U @ gen.matrix
        assert np.max(np.abs(rebuilt - du)) < 1e-6


def test_residue_gate_trips_on_tiny_tolerance():
    circuit, theta = transmon_program(seed=3, n_qubits=2)
    gate = circuit.gates[0]
    prop = evolve_with_sensitivity(gate.ham, theta, gate.t0, gate.t1)
    with pytest.raises(GeneratorNotHermitianError):
        effective_generators(prop, gen_tol=1e-18)


# ---------------------------------------------------------------------------
# plans


def test_plan_empty_for_zero_generators():
    gens = [EffectiveGenerator(0, np.zeros((2, 2)), 0.0)]
    plan = build_odegen_plan(gens)
    assert plan.words == ()
    assert plan.expected_queries == 0
    assert resources_odegen(plan) == 0


def test_plan_shares_words_across_parameters():
    x = to_matrix("X")
    gens = [EffectiveGenerator(0, 0.3 * x, 0.0), EffectiveGenerator(1, 0.7 * x, 0.0)]
    plan = build_odegen_plan(gens)
    assert plan.words == ("X",)
    assert plan.coeffs == {(0, 0): pytest.approx(0.3), (1, 0): pytest.approx(0.7)}
    assert plan.expected_queries == 2


def test_plan_drops_identity_and_small_coefficients():
    mat = 0.3 * to_matrix("X") + 5e-15 * to_matrix("Z") + 0.2 * to_matrix("I")
    plan = build_odegen_plan([EffectiveGenerator(0, mat, 0.0)], atol_coeff=1e-14)
    assert plan.words == ("X",)
    loose = build_odegen_plan([EffectiveGenerator(0, mat, 0.0)], atol_coeff=0.0)
    assert set(loose.words) == {"X", "Z"}


def test_generic_two_qubit_plan_covers_all_words():
    circuit, theta = transmon_program(seed=5, n_qubits=2)
    (plan,) = odegen_plans(circuit, theta)
    assert len(plan.words) == 15
    assert resources_odegen(plan) == 30


def test_shift_words_live_in_drift_inclusive_closure():
    for seed, n in ((5, 2), (9, 1)):
        circuit, theta = transmon_program(seed=seed, n_qubits=n)
        (plan,) = odegen_plans(circuit, theta)
        closure = set(hamiltonian_dla(circuit.gates[0].ham).basis)
        assert set(plan.words) <= closure


# ---------------------------------------------------------------------------
# analytic engine


def test_odegen_closed_form_rotation():
    omega, T = 0.9, 3.0
    circuit = _single_drive_circuit(omega, T)
    obs = PauliSum([(1.0, "Z")])
    theta = np.array([0.63])
    plans = odegen_plans(circuit, theta)
    dev = Device()
    grad, count = odegen_gradient(circuit, theta, obs, dev, plans)
    expected = -omega * T * math.sin(theta[0] * omega * T)
    assert abs(grad[0] - expected) < 1e-6
    assert count.expectation_values == dev.queries == 2


def test_odegen_empty_plan_zero_queries():
    term = DriveTerm(PauliSum([(1.0, "X")]),
                     lambda th, t: 0.0, lambda th, t: np.array([0.0]), [0])
    ham = ParametrizedHamiltonian(PauliSum([(0.0, "I")]), [term], n_params=1)
    circuit = Circuit(1, [PulseGate(ham, [0], 0.0, 1.0)], n_params=1)
    theta = np.array([1.3])
    plans = odegen_plans(circuit, theta)
    assert plans[0].words == ()
    dev = Device()
    grad, count = odegen_gradient(circuit, theta, PauliSum([(1.0, "Z")]), dev, plans)
    assert grad[0] == 0.0
    assert count.expectation_values == dev.queries == 0


def test_oracle_triangle_on_random_programs():
    cfg = OdeConfig()
    for seed, n in ((0, 1), (1, 2), (2, 2), (3, 1)):
        circuit, theta = transmon_program(seed=seed, n_qubits=n)
        obs = default_observable(n)
        exact = exact_gradient(circuit, theta, obs, cfg)

        plans = odegen_plans(circuit, theta, ode_cfg=cfg)
        grad_o, _ = odegen_gradient(circuit, theta, obs, Device(), plans, cfg)
        assert np.max(np.abs(grad_o - exact)) < 1e-6

        grad_s, _ = sps_gradient(circuit, theta, obs, Device(),
                                 SpsConfig(512, split_mode="dense_grid"), cfg)
        assert np.max(np.abs(grad_s - exact)) < 1e-3

        def loss(th):
            return expectation(circuit, th, obs, Device(), cfg)

        fd = finite_difference_gradient(loss, theta, step=1e-3)
        assert np.max(np.abs(fd - exact)) < 1e-4


def test_odegen_queries_do_not_scale_with_parameters():
    counts = {}
    for degree in (1, 4):
        circuit, theta = transmon_program(seed=7, n_qubits=2, degree=degree)
        plans = odegen_plans(circuit, theta)
        dev = Device()
        _, count = odegen_gradient(circuit, theta, default_observable(2), dev, plans)
        assert dev.queries == count.expectation_values == resources_odegen(plans[0])
        counts[degree] = dev.queries
    # 8 parameters vs 20 parameters, same measurement budget
    assert counts[1] == counts[4] == 30


def test_odegen_atol_invariance_on_true_zeros():
    circuit, theta = transmon_program(seed=11, n_qubits=2)
    obs = default_observable(2)
    grads = []
    for atol in (0.0, 1e-14):
        plans = odegen_plans(circuit, theta, atol_coeff=atol)
        grad, _ = odegen_gradient(circuit, theta, obs, Device(), plans)
        grads.append(grad)
    assert np.max(np.abs(grads[0] - grads[1])) < 1e-12


def test_odegen_sandwiched_circuit():
    inner, theta = transmon_program(seed=21, n_qubits=2)
    circuit = Circuit(2, [DigitalRotation("YI", 0.7), inner.gates[0],
                          DigitalRotation("XZ", -0.4)], n_params=inner.n_params)
    obs = default_observable(2)
    exact = exact_gradient(circuit, theta, obs)
    plans = odegen_plans(circuit, theta)
    assert plans[0].gate_index == 1
    grad, _ = odegen_gradient(circuit, theta, obs, Device(), plans)
    assert np.max(np.abs(grad - exact)) < 1e-6


def test_odegen_multiple_pulse_gates():
    a, _ = transmon_program(seed=31, n_qubits=1, degree=1, T=5.0)
    b, _ = transmon_program(seed=32, n_qubits=1, degree=1, T=5.0)
    ga, gb = a.gates[0], b.gates[0]
    p = ga.ham.n_params
    circuit = Circuit(1, [
        PulseGate(ga.ham, list(range(p)), ga.t0, ga.t1),
        DigitalRotation("X", 0.3),
        PulseGate(gb.ham, list(range(p, 2 * p)), gb.t0, gb.t1),
    ], n_params=2 * p)
    theta = np.random.default_rng(33).normal(size=2 * p)
    obs = PauliSum([(1.0, "Z")])
    exact = exact_gradient(circuit, theta, obs)
    plans = odegen_plans(circuit, theta)
    dev = Device()
    grad, count = odegen_gradient(circuit, theta, obs, dev, plans)
    assert np.max(np.abs(grad - exact)) < 1e-6
    assert dev.queries == sum(resources_odegen(pl) for pl in plans)


# ---------------------------------------------------------------------------
# stochastic engine


def test_sps_zero_gradient_envelope():
    # drive present but independent of the parameter: integrand vanishes
    term = DriveTerm(PauliSum([(1.0, "Y")]),
                     lambda th, t: 0.2, lambda th, t: np.array([0.0]), [0])
    ham = ParametrizedHamiltonian(PauliSum([(0.3, "Z")]), [term], n_params=1)
    circuit = Circuit(1, [PulseGate(ham, [0], 0.0, 4.0)], n_params=1)
    for seed in (0, 1, 2):
        grad, count = sps_gradient(circuit, np.array([0.9]), PauliSum([(1.0, "Z")]),
                                   Device(), SpsConfig(4, seed=seed))
        assert grad[0] == 0.0
        assert count.expectation_values == 8


def test_sps_rejects_multi_word_generators():
    term = DriveTerm(PauliSum([(1.0, "X"), (0.5, "Z")]),
                     lambda th, t: th[0], lambda th, t: np.array([1.0]), [0])
    ham = ParametrizedHamiltonian(PauliSum([(0.0, "I")]), [term], n_params=1)
    circuit = Circuit(1, [PulseGate(ham, [0], 0.0, 1.0)], n_params=1)
    with pytest.raises(NonPauliGeneratorError):
        sps_gradient(circuit, np.array([0.1]), PauliSum([(1.0, "Z")]),
                     Device(), SpsConfig(2))


def test_sps_generator_coefficient_absorbed():
    # generator 0.5*Y with envelope f equals generator Y with envelope f/2
    def build(scale):
        term = DriveTerm(PauliSum([(scale, "Y")]),
                         lambda th, t: th[0] * (0.5 / scale) * math.sin(t),
                         lambda th, t: np.array([(0.5 / scale) * math.sin(t)]), [0])
        ham = ParametrizedHamiltonian(PauliSum([(0.2, "Z")]), [term], n_params=1)
        return Circuit(1, [PulseGate(ham, [0], 0.0, 3.0)], n_params=1)

    obs = PauliSum([(1.0, "X")])
    theta = np.array([0.8])
    grads = [sps_gradient(build(s), theta, obs, Device(), SpsConfig(16, seed=4))[0]
             for s in (0.5, 1.0)]
    assert abs(grads[0][0] - grads[1][0]) < 1e-10


def test_sps_query_count_and_determinism():
    circuit, theta = transmon_program(seed=40, n_qubits=2, degree=2)
    obs = default_observable(2)
    dev = Device()
    g1, count = sps_gradient(circuit, theta, obs, dev, SpsConfig(8, seed=5))
    assert dev.queries == count.expectation_values == resources_sps(8, 2, 1) == 32
    g2, _ = sps_gradient(circuit, theta, obs, Device(), SpsConfig(8, seed=5))
    assert np.array_equal(g1, g2)
    g3, _ = sps_gradient(circuit, theta, obs, Device(), SpsConfig(8, seed=6))
    assert not np.array_equal(g1, g3)


def test_sps_monte_carlo_unbiased():
    circuit, theta = transmon_program(seed=50, n_qubits=1, degree=1, T=6.0)
    obs = PauliSum([(1.0, "Z")])
    exact = exact_gradient(circuit, theta, obs)
    samples = np.array([
        sps_gradient(circuit, theta, obs, Device(), SpsConfig(4, seed=s))[0]
        for s in range(300)
    ])
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])
    assert np.all(np.abs(mean - exact) <= 4.0 * se + 1e-12)


def test_sps_variance_shrinks_with_samples():
    circuit, theta = transmon_program(seed=51, n_qubits=1, degree=1, T=6.0)
    obs = PauliSum([(1.0, "Z")])
    stds = []
    for n_s in (4, 64):
        batch = np.array([
            sps_gradient(circuit, theta, obs, Device(),
                         SpsConfig(n_s, seed=1000 + s))[0]
            for s in range(60)
        ])
        stds.append(np.median(batch.std(axis=0, ddof=1)))
    assert stds[1] < 0.5 * stds[0]


def test_sps_with_shot_noise_counts_queries():
    circuit, theta = transmon_program(seed=52, n_qubits=1, degree=1, T=6.0)
    dev = Device(DeviceConfig(shots=200, seed=7))
    grad, count = sps_gradient(circuit, theta, PauliSum([(1.0, "Z")]), dev,
                               SpsConfig(4, seed=1))
    assert dev.queries == count.expectation_values == 8
    assert np.all(np.isfinite(grad))


# ---------------------------------------------------------------------------
# shift rule, oracles, resource formulas


def test_two_term_shift_cosine():
    loss = lambda th: math.cos(th[0])
    assert two_term_shift(loss, np.array([0.0]), 0) == pytest.approx(0.0)
    assert two_term_shift(loss, np.array([math.pi / 2]), 0) == pytest.approx(-1.0)


def test_two_term_shift_on_rotation_circuit():
    rng = np.random.default_rng(8)
    for _ in range(3):
        angle = rng.uniform(-math.pi, math.pi)

        def loss(th):
            c = Circuit(1, [DigitalRotation("Y", float(th[0]))])
            return expectation(c, np.zeros(0), PauliSum([(1.0, "Z")]), Device())

        got = two_term_shift(loss, np.array([angle]), 0)
        assert abs(got - (-math.sin(angle))) < 1e-12


def test_finite_difference_oracle():
    loss = lambda th: math.sin(th[0]) * th[1] ** 2
    theta = np.array([0.4, 1.3])
    grad = finite_difference_gradient(loss, theta, step=1e-6)
    expected = [math.cos(0.4) * 1.3 ** 2, math.sin(0.4) * 2 * 1.3]
    np.testing.assert_allclose(grad, expected, atol=1e-7)


def test_resource_formulas():
    assert resources_sps(8, 2, 1) == 32
    assert resources_sps(20, 2, 1) == 80
    assert resources_sps(1, 1, 1) == 2
    plan = OdegenPlan(0, tuple(f"W{i}" for i in range(15)))
    assert resources_odegen(plan) == 30
    with pytest.raises(ValueError):
        resources_sps(0, 2, 1)
    with pytest.raises(ValueError):
        resources_sps(8, 2, 0)


def test_sps_config_validation():
    with pytest.raises(ValueError):
        SpsConfig(0)
    with pytest.raises(ValueError):
        SpsConfig(4, split_mode="adaptive")
