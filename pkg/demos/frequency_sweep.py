"""Calibrate an X gate on resonance, then detune the carrier.

First a 20 ns Legendre pulse on a single transmon is tuned with adam
until its propagator matches the X gate.  Then the same pulse is replayed
with the carrier frequency swept across the qubit line: infidelity is
lowest at the calibration point and grows toward the edges of the scan.

Run:  python3 demos/frequency_sweep.py   (about half a minute)
"""

import math

import numpy as np

from pulsegrad.experiments import OptimizerConfig, calibrate_pulse, frequency_sweep
from pulsegrad.paulis import PauliSum
from pulsegrad.pulses import TransmonSpec

TWO_PI = 2.0 * math.pi


def main():
    omega = TWO_PI * 0.25
    spec = TransmonSpec(omegas=(omega,))
    target = PauliSum([(1.0, "X")]).to_matrix()

    opt = OptimizerConfig(kind="adam", learning_rate=0.05, epochs=250, seed=1)
    cal = calibrate_pulse(spec, target, nu=omega, T=20.0, degree=3, opt=opt)
    print(f"calibrated X infidelity at resonance: {cal.infidelity:.3e}")

    nu_grid = omega * np.linspace(0.7, 1.3, 13)
    sweep = frequency_sweep(spec, target, nu_grid, cal.theta, T=20.0, degree=3)

    print(f"\n{'nu / omega':>10}  {'infidelity':>11}")
    for nu, infid in zip(sweep.nus, sweep.infidelities):
        bar = "#" * int(round(40 * infid))
        print(f"{nu / omega:10.3f}  {infid:11.3e}  {bar}")
    print(f"\nbest carrier: nu/omega = {sweep.best_nu / omega:.3f}")


if __name__ == "__main__":
    main()
