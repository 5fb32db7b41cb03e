"""Three routes to the same pulse gradient.

The same two-qubit pulse program is differentiated three ways:

- odegen: integrate the propagator with sensitivities, Pauli-decompose
  the effective generators, and evaluate two shifted expectations per
  retained word.
- sps: split the evolution at sampled times and Monte-Carlo average the
  shifted expectations (stochastic, but unbiased).
- exact: the integrator's own chain-rule gradient, free of device
  queries; it serves as ground truth.

The table shows each method's first few components and its device-query
count.

Run:  python3 demos/gradient_methods.py
"""

import math

import numpy as np

from pulsegrad.circuits import Circuit, Device, PulseGate
from pulsegrad.gradients import (
    SpsConfig,
    exact_gradient,
    odegen_gradient,
    odegen_plans,
    sps_gradient,
)
from pulsegrad.paulis import PauliSum
from pulsegrad.pulses import (
    DriveChannel,
    LegendreEnvelope,
    TransmonSpec,
    transmon_hamiltonian,
)

TWO_PI = 2.0 * math.pi


def build_program(seed=0, duration=10.0):
    omegas = (TWO_PI * 0.25, TWO_PI * 0.28)
    spec = TransmonSpec(omegas=omegas, couplings=((0, 1, TWO_PI * 0.02),))
    channels = [
        DriveChannel(q, TWO_PI * 0.08, omegas[q], LegendreEnvelope(4, duration))
        for q in range(2)
    ]
    ham = transmon_hamiltonian(spec, channels)
    gate = PulseGate(ham, list(range(ham.n_params)), 0.0, duration)
    circuit = Circuit(2, [gate], n_params=ham.n_params)
    theta = np.random.default_rng(seed).normal(size=ham.n_params)
    return circuit, theta


def main():
    circuit, theta = build_program()
    observable = PauliSum([(0.5, "ZI"), (0.25, "ZZ"), (0.3, "XX")])

    reference = exact_gradient(circuit, theta, observable)

    device = Device()
    plans = odegen_plans(circuit, theta)
    analytic, _ = odegen_gradient(circuit, theta, observable, device, plans)
    analytic_queries = device.queries

    device = Device()
    stochastic, _ = sps_gradient(
        circuit, theta, observable, device, SpsConfig(n_samples=8, seed=1)
    )
    stochastic_queries = device.queries

    shown = 5
    print(f"{'method':>8}  {'queries':>7}  first {shown} gradient components")
    for name, queries, grad in (
        ("exact", 0, reference),
        ("odegen", analytic_queries, analytic),
        ("sps", stochastic_queries, stochastic),
    ):
        head = "  ".join(f"{g:+8.5f}" for g in grad[:shown])
        print(f"{name:>8}  {queries:7d}  {head}")

    print(f"\nmax |odegen - exact| = {np.max(np.abs(analytic - reference)):.3e}")
    print(f"max |sps    - exact| = {np.max(np.abs(stochastic - reference)):.3e}")
    print("(the stochastic error shrinks as 1/sqrt(n_samples);")
    print(" see demos/sps_noise_scaling.py)")


if __name__ == "__main__":
    main()
