"""Command-line front end: propagate, differentiate, train, tabulate.

Subcommands:

- evolve: propagate a program; one qubit emits a Bloch-trajectory CSV,
  more qubits print the propagator matrix.
- grad: gradient of <observable> by one or more methods, with the device
  query count per method.
- vqe: gradient-based energy minimization, emitting the training trace.
- snr: batch statistics of the stochastic gradient estimator.
- sweep: calibrate a target gate on resonance, then scan the drive
  frequency and emit the infidelity curve.
- validate: self-test comparing all gradient routes on built-in programs.

Result tables are CSV on stdout (or --output); the resolved configuration
is echoed to stderr.  Exit codes: 0 success, 1 usage error, 2 runtime
error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .circuits import Circuit, Device, DeviceConfig, PulseGate, expectation
from .experiments import (
    OptimizerConfig,
    bloch_trajectory,
    calibrate_pulse,
    frequency_sweep,
    snr_study,
    toy_hamiltonian,
    vqe_run,
)
from .fileio import (
    load_hamiltonian,
    load_program,
    parse_angular,
    write_csv,
)
from .gradients import (
    SpsConfig,
    exact_gradient,
    finite_difference_gradient,
    odegen_gradient,
    odegen_plans,
    sps_gradient,
)
from .ode import OdeConfig, evolve
from .paulis import PauliSum
from .pulses import (
    DriveChannel,
    LegendreEnvelope,
    TransmonSpec,
    transmon_hamiltonian,
)

TWO_PI = 2.0 * np.pi


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        raise SystemExit(1 if status else 0)


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be a positive integer")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be nonnegative")
    return value


def _positive_float(text: str) -> float:
    value = parse_angular(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return value


def _nonnegative_float(text: str) -> float:
    value = parse_angular(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be nonnegative")
    return value


def _int_list(text: str) -> tuple:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("sample counts must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pulsegrad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, program=True, observable=False, output=True):
        if program:
            p.add_argument("--program", required=True, help="TOML pulse program")
        if observable:
            p.add_argument("--observable", help="Hamiltonian text file")
        p.add_argument("--rtol", type=_positive_float, default=1e-8)
        p.add_argument("--atol", type=_positive_float, default=1e-8)
        if output:
            p.add_argument("--output", help="write the CSV here instead of stdout")

    p = sub.add_parser("evolve", help="propagate and report the state path")
    common(p)
    p.add_argument("--theta", help="comma-separated parameter values")
    p.add_argument("--seed", type=_nonnegative_int, default=None)
    p.add_argument("--samples", type=_positive_int, default=201)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("grad", help="gradient of the observable by method")
    common(p, observable=True)
    p.add_argument(
        "--method",
        action="append",
        choices=("odegen", "sps", "exact"),
        help="repeatable; default odegen",
    )
    p.add_argument("--theta", help="comma-separated parameter values")
    p.add_argument("--seed", type=_nonnegative_int, default=None)
    p.add_argument("--ns", type=_positive_int, default=8, help="SPS sample count")
    p.add_argument(
        "--split-mode",
        choices=("monte_carlo", "dense_grid"),
        default="monte_carlo",
    )
    p.add_argument("--shots", type=_nonnegative_int, default=0)
    p.add_argument("--atol-coeff", type=_nonnegative_float, default=0.0)
    p.set_defaults(func=_cmd_grad)

    p = sub.add_parser("vqe", help="minimize the observable energy")
    common(p, observable=True)
    p.add_argument("--method", choices=("odegen", "sps", "exact"), default="odegen")
    p.add_argument("--optimizer", choices=("adam", "gradient_descent"), default="adam")
    p.add_argument("--lr", type=_positive_float, default=0.02)
    p.add_argument("--epochs", type=_nonnegative_int, default=100)
    p.add_argument("--seed", type=_nonnegative_int, default=0)
    p.add_argument("--ns", type=_positive_int, default=8)
    p.add_argument(
        "--split-mode",
        choices=("monte_carlo", "dense_grid"),
        default="monte_carlo",
    )
    p.add_argument("--shots", type=_nonnegative_int, default=0)
    p.add_argument("--atol-coeff", type=_nonnegative_float, default=0.0)
    p.set_defaults(func=_cmd_vqe)

    p = sub.add_parser("snr", help="stochastic-gradient batch statistics")
    common(p, observable=True)
    p.add_argument("--ns-list", type=_int_list, default=(4, 8, 16, 32, 64, 128))
    p.add_argument("--batches", type=_positive_int, default=100)
    p.add_argument("--seed", type=_nonnegative_int, required=True)
    p.add_argument(
        "--split-mode",
        choices=("monte_carlo", "dense_grid"),
        default="monte_carlo",
    )
    p.set_defaults(func=_cmd_snr)

    p = sub.add_parser("sweep", help="calibrate, then scan the drive frequency")
    common(p)
    p.add_argument("--target", default="X", help="target gate as a Pauli word")
    p.add_argument("--points", type=_positive_int, default=21)
    p.add_argument("--span", type=_positive_float, default=0.4,
                   help="scan nu in omega*(1 +/- span)")
    p.add_argument("--degree", type=_nonnegative_int, default=3)
    p.add_argument("--omega-max", type=_positive_float, default=TWO_PI * 0.08)
    p.add_argument("--cal-epochs", type=_positive_int, default=250)
    p.add_argument("--lr", type=_positive_float, default=0.05)
    p.add_argument("--seed", type=_nonnegative_int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="gradient-route self-test")
    common(p, program=False, output=False)
    p.set_defaults(func=_cmd_validate)

    return parser


def _echo_config(args) -> None:
    pairs = sorted((k, v) for k, v in vars(args).items() if k != "func")
    print("config: " + " ".join(f"{k}={v}" for k, v in pairs), file=sys.stderr)


def _usage_problem(args) -> str | None:
    if getattr(args, "shots", 0) and getattr(args, "seed", None) is None:
        return "--seed is required when --shots > 0"
    return None


def _ode_cfg(args) -> OdeConfig:
    return OdeConfig(rtol=args.rtol, atol_ode=args.atol)


def _resolve_theta(args, n_params: int) -> np.ndarray:
    if getattr(args, "theta", None) is not None:
        toks = [t for t in args.theta.replace("−", "-").split(",") if t.strip()]
        theta = np.array([float(t) for t in toks], dtype=float)
        if theta.size != n_params:
            raise ValueError(
                f"--theta has {theta.size} entries, the program has {n_params} parameters"
            )
        return theta
    seed = args.seed if getattr(args, "seed", None) is not None else 0
    return np.random.default_rng(seed).normal(size=n_params)


def _resolve_observable(args, n_qubits: int) -> PauliSum:
    if getattr(args, "observable", None):
        obs = load_hamiltonian(args.observable)
        if obs.n_qubits != n_qubits:
            raise ValueError(
                f"observable acts on {obs.n_qubits} qubits, program has {n_qubits}"
            )
        return obs
    if n_qubits == 2:
        return toy_hamiltonian()
    return PauliSum([(1.0, "Z" + "I" * (n_qubits - 1))])


def _emit(args, header, rows) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            write_csv(fh, header, rows)
    else:
        write_csv(sys.stdout, header, rows)


def _cmd_evolve(args) -> int:
    program = load_program(args.program)
    theta = _resolve_theta(args, program.n_params)
    cfg = _ode_cfg(args)
    if program.n_qubits == 1:
        times = np.linspace(0.0, program.t1, args.samples)
        coords = bloch_trajectory(program.ham, theta, times[1:], ode_cfg=cfg)
        rows = [(0.0, 0.0, 0.0, 1.0)]
        rows += [
            (t, c[0], c[1], c[2]) for t, c in zip(times[1:], coords)
        ]
        _emit(args, ("t", "x", "y", "z"), rows)
        return 0
    prop = evolve(program.ham, theta, 0.0, program.t1, cfg)
    lines = []
    for row in prop.U:
        lines.append(" ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row))
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _gradient_by_method(method, circuit, theta, observable, args, cfg):
    seed = args.seed if args.seed is not None else 0
    if method == "exact":
        grad = exact_gradient(circuit, theta, observable, ode_cfg=cfg)
        return grad, 0
    device = Device(DeviceConfig(shots=args.shots, seed=seed))
    if method == "odegen":
        plans = odegen_plans(circuit, theta, atol_coeff=args.atol_coeff, ode_cfg=cfg)
        grad, res = odegen_gradient(circuit, theta, observable, device, plans, ode_cfg=cfg)
    else:
        sps = SpsConfig(args.ns, seed=seed, split_mode=args.split_mode)
        grad, res = sps_gradient(circuit, theta, observable, device, sps, ode_cfg=cfg)
    return grad, res.expectation_values


def _cmd_grad(args) -> int:
    program = load_program(args.program)
    observable = _resolve_observable(args, program.n_qubits)
    theta = _resolve_theta(args, program.n_params)
    cfg = _ode_cfg(args)
    methods = args.method or ["odegen"]
    header = ["method", "resources"] + [f"grad_{k}" for k in range(program.n_params)]
    rows = []
    for method in methods:
        grad, resources = _gradient_by_method(
            method, program.circuit, theta, observable, args, cfg
        )
        rows.append([method, resources] + [float(g) for g in grad])
    _emit(args, header, rows)
    return 0


def _cmd_vqe(args) -> int:
    program = load_program(args.program)
    observable = _resolve_observable(args, program.n_qubits)
    cfg = _ode_cfg(args)
    opt = OptimizerConfig(
        kind=args.optimizer,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
    )
    device = Device(DeviceConfig(shots=args.shots, seed=args.seed))
    sps = SpsConfig(args.ns, seed=args.seed, split_mode=args.split_mode)
    trace = vqe_run(
        program.circuit,
        observable,
        grad_method=args.method,
        opt=opt,
        device=device,
        ode_cfg=cfg,
        sps=sps,
        atol_coeff=args.atol_coeff,
    )
    rows = [
        (epoch, trace.energies[epoch], trace.grad_norms[epoch],
         int(trace.cumulative_queries[epoch]))
        for epoch in range(len(trace))
    ]
    _emit(args, ("epoch", "energy", "grad_norm", "cumulative_expvals"), rows)
    return 0


def _cmd_snr(args) -> int:
    program = load_program(args.program)
    observable = _resolve_observable(args, program.n_qubits)
    study = snr_study(
        program.circuit,
        observable,
        args.ns_list,
        batches=args.batches,
        seed=args.seed,
        split_mode=args.split_mode,
        ode_cfg=_ode_cfg(args),
    )
    _emit(args, ("n_samples", "param_index", "mean", "std", "snr"), study.rows)
    for n_s, mean_snr, p90_snr in study.aggregates:
        print(
            f"aggregate: n_samples={n_s} mean_snr={mean_snr:.6g} p90_snr={p90_snr:.6g}",
            file=sys.stderr,
        )
    return 0


def _cmd_sweep(args) -> int:
    program = load_program(args.program)
    if program.n_qubits != 1:
        raise ValueError("sweep needs a single-qubit program")
    label = args.target.upper()
    if len(label) != 1 or label not in "XYZ":
        raise ValueError(f"target must be a single-qubit Pauli, got {args.target!r}")
    target = PauliSum([(1.0, label)]).to_matrix()
    omega = program.spec.omegas[0]
    cfg = _ode_cfg(args)
    opt = OptimizerConfig(
        kind="adam", learning_rate=args.lr, epochs=args.cal_epochs, seed=args.seed
    )
    cal = calibrate_pulse(
        program.spec,
        target,
        nu=omega,
        T=program.t1,
        degree=args.degree,
        omega_max=args.omega_max,
        opt=opt,
        ode_cfg=cfg,
    )
    print(f"calibration: infidelity={cal.infidelity:.6g}", file=sys.stderr)
    nu_grid = np.linspace((1 - args.span) * omega, (1 + args.span) * omega, args.points)
    sweep = frequency_sweep(
        program.spec,
        target,
        nu_grid,
        cal.theta,
        T=program.t1,
        degree=args.degree,
        omega_max=args.omega_max,
        ode_cfg=cfg,
    )
    _emit(args, ("nu", "infidelity"), list(zip(sweep.nus, sweep.infidelities)))
    print(f"best: nu={sweep.best_nu:.17g}", file=sys.stderr)
    return 0


def _validation_program(seed: int, n_qubits: int):
    """Random transmon program with Legendre envelopes for the self-test."""
    rng = np.random.default_rng(seed)
    omegas = tuple(TWO_PI * (0.25 + 0.03 * q) for q in range(n_qubits))
    couplings = tuple((q, q + 1, TWO_PI * 0.02) for q in range(n_qubits - 1))
    spec = TransmonSpec(omegas=omegas, couplings=couplings)
    duration = 10.0
    channels = [
        DriveChannel(q, TWO_PI * 0.08, omegas[q], LegendreEnvelope(4, duration))
        for q in range(n_qubits)
    ]
    ham = transmon_hamiltonian(spec, channels)
    gate = PulseGate(ham, list(range(ham.n_params)), 0.0, duration)
    circuit = Circuit(n_qubits, [gate], n_params=ham.n_params)
    theta = rng.normal(size=ham.n_params)
    if n_qubits == 1:
        observable = PauliSum([(1.0, "Z")])
    else:
        pad = "I" * (n_qubits - 2)
        observable = PauliSum(
            [(0.5, "ZI" + pad), (0.25, "ZZ" + pad), (0.3, "XX" + pad)]
        )
    return circuit, theta, observable


def _cmd_validate(args) -> int:
    cfg = _ode_cfg(args)
    checks = []
    for seed, n_qubits in ((0, 1), (1, 2), (2, 2)):
        circuit, theta, observable = _validation_program(seed, n_qubits)
        reference = exact_gradient(circuit, theta, observable, ode_cfg=cfg)

        plans = odegen_plans(circuit, theta, ode_cfg=cfg)
        grad_o, _ = odegen_gradient(circuit, theta, observable, Device(), plans, ode_cfg=cfg)
        checks.append(
            (f"odegen vs exact (seed {seed}, {n_qubits}q)",
             float(np.max(np.abs(grad_o - reference))), 1e-6)
        )

        sps = SpsConfig(512, seed=0, split_mode="dense_grid")
        grad_s, _ = sps_gradient(circuit, theta, observable, Device(), sps, ode_cfg=cfg)
        checks.append(
            (f"sps dense grid vs exact (seed {seed}, {n_qubits}q)",
             float(np.max(np.abs(grad_s - reference))), 1e-3)
        )

        def loss(th):
            return expectation(circuit, th, observable, Device(), ode_cfg=cfg)

        grad_f = finite_difference_gradient(loss, theta, step=1e-3)
        checks.append(
            (f"finite differences vs exact (seed {seed}, {n_qubits}q)",
             float(np.max(np.abs(grad_f - reference))), 1e-4)
        )
    failed = 0
    for name, err, tol in checks:
        ok = err <= tol
        failed += 0 if ok else 1
        print(f"check {name}: {'PASS' if ok else 'FAIL'} ({err:.3g} vs {tol:g})")
    return 0 if failed == 0 else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    problem = _usage_problem(args)
    if problem:
        print(f"usage error: {problem}", file=sys.stderr)
        return 1
    _echo_config(args)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
