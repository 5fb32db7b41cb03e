"""Hamiltonian text files, TOML program configs, and CSV emission.

The Hamiltonian format is line-oriented: a `qubits N` header, then one
`<coefficient> <word>` pair per line, with `#` comments and blank lines
ignored and duplicate words merged.  Program files are TOML with a
[system] section (qubit frequencies, couplings), a [window] section, and
one [[drives]] table per drive line; angular-frequency fields accept a
"2pi*" prefix so values can be written in cycle units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .circuits import Circuit, PulseGate
from .paulis import PauliSum
from .pulses import (
    ConstantEnvelope,
    DriveChannel,
    LegendreEnvelope,
    ParametrizedHamiltonian,
    PiecewiseConstantEnvelope,
    TransmonSpec,
    transmon_hamiltonian,
)


class ParseError(ValueError):
    """Input rejected, with the 1-based line (0 when not line-addressable)."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}" if line else reason)
        self.line = line
        self.reason = reason


def parse_hamiltonian(text: str) -> PauliSum:
    """Parse the `qubits N` + `<coefficient> <word>` Hamiltonian format."""
    n_qubits = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n_qubits is None:
            if len(parts) != 2 or parts[0] != "qubits":
                raise ParseError(lineno, "expected header 'qubits N'")
            try:
                n_qubits = int(parts[1])
            except ValueError:
                raise ParseError(lineno, f"bad qubit count {parts[1]!r}") from None
            if n_qubits < 1:
                raise ParseError(lineno, "qubit count must be positive")
            continue
        if len(parts) != 2:
            raise ParseError(lineno, "expected '<coefficient> <word>'")
        try:
            coeff = float(parts[0].replace("−", "-"))
        except ValueError:
            raise ParseError(lineno, f"bad coefficient {parts[0]!r}") from None
        word = parts[1].upper()
        if len(word) != n_qubits:
            raise ParseError(
                lineno, f"word {parts[1]!r} must have length {n_qubits}"
            )
        if any(ch not in "IXYZ" for ch in word):
            raise ParseError(lineno, f"invalid Pauli characters in {parts[1]!r}")
        terms.append((coeff, word))
    if n_qubits is None:
        raise ParseError(0, "missing 'qubits N' header")
    if not terms:
        raise ParseError(0, "no Hamiltonian terms")
    return PauliSum(terms)


def serialize_hamiltonian(observable: PauliSum) -> str:
    """Canonical text form: lexicographic words, 17 significant digits."""
    lines = [f"qubits {observable.n_qubits}"]
    for coeff, word in sorted(observable.terms, key=lambda cw: cw[1].label):
        lines.append(f"{coeff:.17g} {word.label}")
    return "\n".join(lines) + "\n"


def load_hamiltonian(path) -> PauliSum:
    with open(path, encoding="utf-8") as fh:
        return parse_hamiltonian(fh.read())


def parse_angular(value) -> float:
    """Read a frequency field: plain number, or '2pi*x' meaning 2*pi*x."""
    if isinstance(value, bool):
        raise ParseError(0, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    s = str(value).strip().replace("−", "-")
    try:
        if s.lower().startswith("2pi*"):
            return 2.0 * math.pi * float(s[4:])
        return float(s)
    except ValueError:
        raise ParseError(0, f"bad numeric value {value!r}") from None


@dataclass(frozen=True)
class LoadedProgram:
    """A pulse program read from TOML: one pulse gate over [0, t1]."""

    circuit: Circuit
    spec: TransmonSpec
    ham: ParametrizedHamiltonian
    t1: float

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    @property
    def n_params(self) -> int:
        return self.circuit.n_params


def _build_envelope(drive: dict, duration: float):
    kind = drive.get("envelope", "constant")
    if kind == "constant":
        return ConstantEnvelope(phase=float(drive.get("envelope_phase", 0.0)))
    if kind == "legendre":
        degree = int(drive.get("degree", 3))
        if degree < 0:
            raise ParseError(0, "legendre degree must be nonnegative")
        return LegendreEnvelope(degree, duration)
    if kind == "piecewise":
        bins = int(drive.get("bins", 10))
        if bins < 1:
            raise ParseError(0, "piecewise envelope needs at least one bin")
        return PiecewiseConstantEnvelope(bins, duration)
    raise ParseError(0, f"unknown envelope kind {kind!r}")


def parse_program(text: str) -> LoadedProgram:
    """Build a single-pulse-gate circuit from TOML program text."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(0, f"bad TOML: {exc}") from None

    system = data.get("system")
    if not isinstance(system, dict) or "omegas" not in system:
        raise ParseError(0, "missing [system] section with 'omegas'")
    omegas = tuple(parse_angular(w) for w in system["omegas"])
    couplings = []
    for entry in system.get("couplings", []):
        if len(entry) != 3:
            raise ParseError(0, f"coupling {entry!r} is not [q, p, J]")
        couplings.append((int(entry[0]), int(entry[1]), parse_angular(entry[2])))
    spec = TransmonSpec(omegas=omegas, couplings=tuple(couplings))

    window = data.get("window", {})
    t0 = float(window.get("t0", 0.0))
    t1 = parse_angular(window.get("t1", 10.0))
    if t0 != 0.0:
        raise ParseError(0, "window must start at t0 = 0")
    if t1 <= t0:
        raise ParseError(0, "window must have positive length")

    channels = []
    for drive in data.get("drives", []):
        qubit = int(drive.get("qubit", 0))
        if not 0 <= qubit < len(omegas):
            raise ParseError(0, f"drive qubit {qubit} outside the system")
        omega_max = parse_angular(drive.get("omega_max", 0.0))
        if omega_max < 0:
            raise ParseError(0, "omega_max must be nonnegative")
        nu = parse_angular(drive.get("nu", omegas[qubit]))
        form = str(drive.get("form", "re"))
        phase = float(drive.get("phase", 0.0))
        envelope = _build_envelope(drive, t1)
        channels.append(
            DriveChannel(qubit, omega_max, nu, envelope, phase=phase, form=form)
        )
    ham = transmon_hamiltonian(spec, channels)
    gate = PulseGate(ham, list(range(ham.n_params)), 0.0, t1)
    circuit = Circuit(len(omegas), [gate], n_params=ham.n_params)
    return LoadedProgram(circuit, spec, ham, t1)


def load_program(path) -> LoadedProgram:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def format_cell(value) -> str:
    """One CSV cell: strings verbatim, integers bare, floats at 17 digits."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans have no CSV representation here")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(fh, header, rows) -> None:
    """Write a deterministic CSV table to an open text file."""
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(format_cell(v) for v in row) + "\n")


def csv_text(header, rows) -> str:
    import io

    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue()
