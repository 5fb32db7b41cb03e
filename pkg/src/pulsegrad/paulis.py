"""Pauli-word algebra on few qubits.

Dense operators are plain complex numpy arrays of shape (2**n, 2**n).
Convention used throughout the package: qubit 0 is the leftmost character
of a word label and the most significant bit of a statevector index.
"""

from __future__ import annotations

import itertools

import numpy as np

_ALPHABET = frozenset("IXYZ")

# (x_bit, z_bit) -> character, with Y = X*Z up to phase
_XZ_CHAR = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


class NotHermitianError(ValueError):
    """Operator has an anti-Hermitian part larger than the tolerance."""


class DimMismatchError(ValueError):
    """Operator or word dimensions are incompatible."""


class IdentityGeneratorError(ValueError):
    """The all-identity word was supplied where a rotation generator is required."""


class PauliWord:
    """A tensor product of single-qubit Pauli matrices, e.g. ``"XIZ"``.

    Internally the word is encoded by two bit masks (X-type and Z-type
    support) so that products, commutation checks and matrix elements
    reduce to integer arithmetic.
    """

    __slots__ = ("label", "n_qubits", "x_mask", "z_mask", "n_y")

    def __init__(self, label: str):
        if not label or not _ALPHABET.issuperset(label):
            raise ValueError(f"invalid Pauli label {label!r}")
        self.label = label
        self.n_qubits = len(label)
        x = 0
        z = 0
        for c in label:
            x = (x << 1) | (c in "XY")
            z = (z << 1) | (c in "ZY")
        self.x_mask = x
        self.z_mask = z
        self.n_y = label.count("Y")

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def weight(self) -> int:
        """Number of non-identity tensor factors."""
        return (self.x_mask | self.z_mask).bit_count()

    def commutes_with(self, other: "PauliWord") -> bool:
        """Two Pauli words either commute or anticommute; True if they commute."""
        crossings = (self.x_mask & other.z_mask).bit_count() + (
            other.x_mask & self.z_mask
        ).bit_count()
        return crossings % 2 == 0

    def product_word(self, other: "PauliWord") -> "PauliWord":
        """The Pauli word of the product self*other, scalar phase stripped."""
        if self.n_qubits != other.n_qubits:
            raise DimMismatchError(
                f"word lengths differ: {self.n_qubits} vs {other.n_qubits}"
            )
        x = self.x_mask ^ other.x_mask
        z = self.z_mask ^ other.z_mask
        n = self.n_qubits
        chars = [
            _XZ_CHAR[((x >> (n - 1 - q)) & 1, (z >> (n - 1 - q)) & 1)]
            for q in range(n)
        ]
        return PauliWord("".join(chars))

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliWord) and self.label == other.label

    def __hash__(self) -> int:
        return hash(self.label)

    def __repr__(self) -> str:
        return f"PauliWord({self.label!r})"


def _as_word(word) -> PauliWord:
    return word if isinstance(word, PauliWord) else PauliWord(word)


def _parity(values: np.ndarray) -> np.ndarray:
    """Parity (0 or 1) of the set bits of each integer entry."""
    v = values.copy()
    out = np.zeros_like(v)
    while v.any():
        out ^= v & 1
        v >>= 1
    return out


def to_matrix(word) -> np.ndarray:
    """Dense matrix of a Pauli word, qubit 0 as the leftmost tensor factor.

    A word has exactly one nonzero entry per column: column j maps to row
    j XOR x_mask with value i**n_y * (-1)**parity(j AND z_mask).
    """
    w = _as_word(word)
    dim = 1 << w.n_qubits
    cols = np.arange(dim)
    rows = cols ^ w.x_mask
    signs = 1.0 - 2.0 * _parity(cols & w.z_mask)
    m = np.zeros((dim, dim), dtype=complex)
    m[rows, cols] = (1j ** w.n_y) * signs
    return m


def word_trace_product(word, op: np.ndarray) -> complex:
    """trace(P * op) without materializing the word matrix."""
    w = _as_word(word)
    dim = op.shape[0]
    cols = np.arange(dim)
    signs = 1.0 - 2.0 * _parity(cols & w.z_mask)
    return (1j ** w.n_y) * np.sum(signs * op[cols, cols ^ w.x_mask])


class PauliDecomposition:
    """Real Pauli-word coefficients of a Hermitian operator."""

    __slots__ = ("n_qubits", "coeffs")

    def __init__(self, n_qubits: int, coeffs: dict):
        self.n_qubits = n_qubits
        self.coeffs = dict(coeffs)

    def reconstruct(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for label, c in self.coeffs.items():
            out += c * to_matrix(label)
        return out

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        inner = ", ".join(f"{lab}: {c:+.6g}" for lab, c in self.coeffs.items())
        return f"PauliDecomposition({{{inner}}})"


def all_words(n_qubits: int):
    """All 4**n Pauli labels for n qubits, in a fixed deterministic order."""
    for chars in itertools.product("IXYZ", repeat=n_qubits):
        yield "".join(chars)


def pauli_decompose(
    op: np.ndarray,
    n_qubits: int,
    herm_tol: float = 1e-9,
    drop_tol: float = 1e-12,
) -> PauliDecomposition:
    """Expand a Hermitian operator in the Pauli-word basis.

    Each coefficient is trace(P * op) / 2**n.  The operator must be
    Hermitian up to ``herm_tol`` (max-abs of the anti-Hermitian part);
    coefficients of magnitude at most ``drop_tol`` are dropped.

    Args:
        op: square complex matrix of dimension 2**n_qubits.
        n_qubits: number of qubits; must be at most 6 (dense enumeration).
        herm_tol: largest tolerated anti-Hermitian residue.
        drop_tol: coefficients with |c| <= drop_tol are omitted.

    Raises:
        DimMismatchError: if op is not square of dimension 2**n_qubits.
        NotHermitianError: if the anti-Hermitian residue exceeds herm_tol.
    """
    if n_qubits < 1 or n_qubits > 6:
        raise DimMismatchError(f"dense decomposition supports 1..6 qubits, got {n_qubits}")
    op = np.asarray(op, dtype=complex)
    dim = 1 << n_qubits
    if op.shape != (dim, dim):
        raise DimMismatchError(f"expected shape {(dim, dim)}, got {op.shape}")
    residue = np.max(np.abs(op - op.conj().T)) / 2.0
    if residue > herm_tol:
        raise NotHermitianError(
            f"anti-Hermitian residue {residue:.3e} exceeds tolerance {herm_tol:.3e}"
        )
    h = (op + op.conj().T) / 2.0
    coeffs = {}
    for label in all_words(n_qubits):
        c = word_trace_product(label, h).real / dim
        if abs(c) > drop_tol:
            coeffs[label] = c
    return PauliDecomposition(n_qubits, coeffs)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix commutator a@b - b@a."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatchError(f"incompatible shapes {a.shape} and {b.shape}")
    return a @ b - b @ a


class DLAResult:
    """Basis (phase-stripped Pauli words) of a dynamical Lie algebra."""

    __slots__ = ("basis", "dimension")

    def __init__(self, basis):
        self.basis = tuple(basis)
        self.dimension = len(self.basis)

    def __repr__(self) -> str:
        return f"DLAResult(dimension={self.dimension}, basis={list(self.basis)})"


def dla_closure(generators) -> DLAResult:
    """Close a set of Pauli words under commutation.

    The commutator of two Pauli words is either zero or a single Pauli
    word times a scalar, so the closure can be computed on labels alone.
    Scalar prefactors are stripped; only word identity is tracked.

    Raises:
        IdentityGeneratorError: if a generator is the all-identity word.
        DimMismatchError: if generators act on different qubit counts.
    """
    words = [_as_word(g) for g in generators]
    if not words:
        raise IdentityGeneratorError("no generators supplied")
    n = words[0].n_qubits
    for w in words:
        if w.n_qubits != n:
            raise DimMismatchError("generators must share a qubit count")
        if w.is_identity:
            raise IdentityGeneratorError(f"identity word {w.label!r} generates nothing")

    basis = []
    seen = set()
    for w in words:
        if w.label not in seen:
            seen.add(w.label)
            basis.append(w)
    # Worklist closure: commute every new word against the current basis.
    i = 0
    while i < len(basis):
        current = basis[i]
        for other in basis[: i + 1]:
            if current.commutes_with(other):
                continue
            prod = current.product_word(other)
            if prod.label not in seen:
                seen.add(prod.label)
                basis.append(prod)
        i += 1
    return DLAResult(w.label for w in basis)


class PauliSum:
    """Real linear combination of Pauli words; Hermitian by construction.

    Accepts an iterable of (coefficient, label-or-word) pairs or a mapping
    label -> coefficient.  Duplicate words are merged by summing; exact
    zeros produced by merging are dropped.
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        if isinstance(terms, dict):
            terms = [(c, lab) for lab, c in terms.items()]
        merged: dict[str, float] = {}
        order: list[str] = []
        n = None
        for c, word in terms:
            w = _as_word(word)
            if n is None:
                n = w.n_qubits
            elif w.n_qubits != n:
                raise DimMismatchError("all words in a sum must share a qubit count")
            if w.label not in merged:
                merged[w.label] = 0.0
                order.append(w.label)
            merged[w.label] += float(c)
        if n is None:
            raise ValueError("empty Pauli sum")
        self.terms = tuple(
            (merged[lab], PauliWord(lab)) for lab in order if merged[lab] != 0.0
        )
        if not self.terms:
            # Keep an explicit zero so n_qubits stays well defined.
            self.terms = ((0.0, PauliWord("I" * n)),)

    @property
    def n_qubits(self) -> int:
        return self.terms[0][1].n_qubits

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for c, w in self.terms:
            out += c * to_matrix(w)
        return out

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return PauliSum(list(self.terms) + list(other.terms))

    def __mul__(self, scalar) -> "PauliSum":
        return PauliSum([(c * scalar, w) for c, w in self.terms])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        inner = " ".join(f"{c:+g}*{w.label}" for c, w in self.terms)
        return f"PauliSum({inner})"
