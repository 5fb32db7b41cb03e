"""How fast does the stochastic gradient sharpen with more samples?

Repeating the stochastic parameter-shift estimate over many seeds gives a
per-parameter mean and spread.  Averaging independent split-time samples
should shrink the spread as 1/sqrt(N_s); the log-log slope printed at the
end sits near -0.5 when it does.

Run:  python3 demos/sps_noise_scaling.py   (about half a minute)
"""

import numpy as np

from pulsegrad.experiments import snr_study
from pulsegrad.gradients import exact_gradient
from pulsegrad.paulis import PauliSum

from gradient_methods import build_program


def main():
    circuit, _ = build_program()
    observable = PauliSum([(0.5, "ZI"), (0.25, "ZZ"), (0.3, "XX")])
    sample_grid = (4, 8, 16, 32, 64)

    study = snr_study(
        circuit, observable, sample_grid, batches=40, seed=7
    )
    exact = exact_gradient(circuit, study.theta, observable)

    print(f"{'N_s':>5}  {'mean std':>10}  {'mean snr':>10}  {'p90 snr':>10}")
    stds = []
    for n_s, mean_snr, p90_snr in study.aggregates:
        rows = [r for r in study.rows if r[0] == n_s]
        std = float(np.mean([r[3] for r in rows]))
        stds.append(std)
        print(f"{n_s:5d}  {std:10.5f}  {mean_snr:10.3f}  {p90_snr:10.3f}")

    slope = np.polyfit(np.log(sample_grid), np.log(stds), 1)[0]
    print(f"\nlog-log std slope: {slope:+.3f}  (Monte-Carlo rate is -0.5)")

    largest = sample_grid[-1]
    bias = max(
        abs(r[2] - exact[r[1]]) for r in study.rows if r[0] == largest
    )
    print(f"worst |batch mean - exact| at N_s={largest}: {bias:.3e}")
    print("(the estimator is unbiased; this gap is batch noise, not bias)")


if __name__ == "__main__":
    main()
