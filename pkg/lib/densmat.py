# densmat.py
"""
Dense complex linear algebra over one- and two-qubit Hilbert spaces.

Operators are plain ``numpy`` complex128 arrays of shape (2, 2) or (4, 4).
States are wrapped in :class:`DensityMatrix`, which validates the physical
invariants on construction and is immutable afterwards.

Qubit ordering: qubit 1 is the left (most significant) tensor factor, so the
computational basis is |00>, |01>, |10>, |11> with the first digit on qubit 1.
"""

import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import InvalidInputError, InvariantViolationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
UNITARY_TOL = 1e-12
KRAUS_TOL = 1e-10
PURE_STATE_PURITY = 1 - 1e-9

SUPPORTED_DIMS = (2, 4)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def _as_matrix(m, name="matrix"):
    """Coerce to a complex square array with a supported dimension."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] not in SUPPORTED_DIMS:
        raise InvalidInputError(f"{name} must be 2x2 or 4x4, got shape {arr.shape}")
    return arr


def dagger(m):
    return np.conj(np.transpose(m))


def is_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u, dtype=complex)
    return np.max(np.abs(u @ dagger(u) - np.eye(u.shape[0]))) <= tol


def is_hermitian(m, tol=HERMITIAN_TOL):
    m = np.asarray(m, dtype=complex)
    return np.max(np.abs(m - dagger(m))) <= tol


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Hermitian, positive semidefinite, unit-trace state of one or two qubits.

    Construction validates all three invariants; a violation raises
    :class:`InvariantViolationError`. The stored array is read-only.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.matrix, "density matrix").copy()
        herm_err = np.max(np.abs(m - dagger(m)))
        if herm_err > HERMITIAN_TOL:
            raise InvariantViolationError(
                f"density matrix not Hermitian (deviation {herm_err:.3e})"
            )
        trace = np.trace(m)
        if abs(trace - 1) > TRACE_TOL:
            raise InvariantViolationError(f"density matrix trace is {trace.real:.15f}, expected 1")
        min_eig = np.min(np.linalg.eigvalsh((m + dagger(m)) / 2))
        if min_eig < PSD_TOL:
            raise InvariantViolationError(f"density matrix not PSD (min eigenvalue {min_eig:.3e})")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def n_qubits(self):
        return 1 if self.dim == 2 else 2

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits}, purity={purity(self):.6f})"


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm_sq = self.x ** 2 + self.y ** 2 + self.z ** 2
        if norm_sq > 1 + 1e-10:
            raise InvalidInputError(f"Bloch vector norm^2 {norm_sq:.12f} exceeds 1")

    def as_array(self):
        return np.array([self.x, self.y, self.z])


def tensor(a, b):
    """Kronecker product of two single-qubit operators."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise InvalidInputError(f"tensor expects two 2x2 operators, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def pauli_matrix(label):
    """Matrix of a Pauli string such as ``"Z"`` or ``"XY"`` (qubit 1 first)."""
    label = str(label).upper()
    if len(label) not in (1, 2) or any(c not in PAULIS for c in label):
        raise InvalidInputError(f"unsupported Pauli label: {label!r}")
    return reduce(np.kron, [PAULIS[c] for c in label])


def from_state_vector(psi):
    """Pure state |psi><psi| from a normalized 2- or 4-component vector."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape[0] not in SUPPORTED_DIMS:
        raise InvalidInputError(f"state vector must have 2 or 4 components, got {psi.shape[0]}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > 1e-10:
        raise InvalidInputError(f"state vector not normalized (norm {norm:.12f})")
    psi = psi / norm
    return DensityMatrix(np.outer(psi, np.conj(psi)))


def basis_state(bits):
    """Computational basis state, e.g. ``basis_state("01")``."""
    bits = str(bits)
    if len(bits) not in (1, 2) or any(b not in "01" for b in bits):
        raise InvalidInputError(f"invalid basis label: {bits!r}")
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1
    return from_state_vector(psi)


def maximally_mixed(n_qubits):
    if n_qubits not in (1, 2):
        raise InvalidInputError(f"n_qubits must be 1 or 2, got {n_qubits}")
    dim = 2 ** n_qubits
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def from_bloch(vector):
    """Single-qubit state (I + r.sigma) / 2 for a Bloch vector r with |r| <= 1."""
    if not isinstance(vector, BlochVector):
        vector = BlochVector(*map(float, vector))
    return DensityMatrix((I2 + vector.x * X + vector.y * Y + vector.z * Z) / 2)


def purity(rho):
    m = rho.matrix
    return float(np.real(np.trace(m @ m)))


def apply_unitary(rho, u):
    """Conjugate the state: U rho U^dagger."""
    u = _as_matrix(u, "unitary")
    if u.shape != rho.matrix.shape:
        raise InvalidInputError(
            f"unitary shape {u.shape} does not match state shape {rho.matrix.shape}"
        )
    if not is_unitary(u):
        raise InvalidInputError("operator is not unitary to 1e-12")
    out = u @ rho.matrix @ dagger(u)
    return DensityMatrix((out + dagger(out)) / 2)


def kraus_completeness_residual(kraus):
    """Sum_i K_i^dagger K_i - I for a Kraus list."""
    ops = [_as_matrix(k, "Kraus operator") for k in kraus]
    if not ops:
        raise InvalidInputError("empty Kraus set")
    dim = ops[0].shape[0]
    if any(k.shape != (dim, dim) for k in ops):
        raise InvalidInputError("Kraus operators have mixed shapes")
    return sum(dagger(k) @ k for k in ops) - np.eye(dim)


def apply_kraus(rho, kraus):
    """
    Apply a CPTP map given by its Kraus operators: sum_i K_i rho K_i^dagger.

    Raises:
        InvalidInputError: if the set is not complete to 1e-10. The message
            carries the max-abs completeness residual.
    """
    residual = kraus_completeness_residual(kraus)
    residual_norm = float(np.max(np.abs(residual)))
    if residual_norm > KRAUS_TOL:
        raise InvalidInputError(
            f"Kraus set incomplete: max |sum K^dag K - I| = {residual_norm:.3e}"
        )
    if residual.shape[0] != rho.dim:
        raise InvalidInputError(
            f"Kraus dimension {residual.shape[0]} does not match state dimension {rho.dim}"
        )
    m = rho.matrix
    out = sum(k @ m @ dagger(k) for k in map(np.asarray, kraus))
    out = (out + dagger(out)) / 2
    # absorb completeness slack allowed above
    return DensityMatrix(out / np.real(np.trace(out)))


def expectation(rho, obs):
    """Tr(rho * obs) for a Hermitian observable."""
    obs = _as_matrix(obs, "observable")
    if obs.shape != rho.matrix.shape:
        raise InvalidInputError(
            f"observable shape {obs.shape} does not match state shape {rho.matrix.shape}"
        )
    if not is_hermitian(obs):
        raise InvalidInputError("observable is not Hermitian")
    value = np.trace(rho.matrix @ obs)
    if abs(value.imag) > 1e-12:
        raise InvariantViolationError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def bloch_vector(rho):
    if rho.n_qubits != 1:
        raise InvalidInputError("bloch_vector requires a single-qubit state")
    return BlochVector(expectation(rho, X), expectation(rho, Y), expectation(rho, Z))


def _check_same_dim(rho, sigma):
    if rho.dim != sigma.dim:
        raise InvalidInputError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")


def trace_distance(rho, sigma):
    """T = 1/2 ||rho - sigma||_1 from the eigenvalues of the Hermitian difference."""
    _check_same_dim(rho, sigma)
    diff = rho.matrix - sigma.matrix
    eigs = np.linalg.eigvalsh((diff + dagger(diff)) / 2)
    return float(np.clip(0.5 * np.sum(np.abs(eigs)), 0.0, 1.0))


def _pure_overlap(rho, sigma):
    """<psi|rho|psi> with psi the dominant eigenvector of sigma."""
    _, vecs = np.linalg.eigh(sigma.matrix)
    psi = vecs[:, -1]
    return float(np.real(np.conj(psi) @ rho.matrix @ psi))


def _psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ dagger(v)


def fidelity(rho, sigma):
    """
    Uhlmann fidelity F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    When either argument is pure to 1e-9 in purity the overlap form
    <psi|rho|psi> is used instead of matrix square roots.
    """
    _check_same_dim(rho, sigma)
    if purity(sigma) > PURE_STATE_PURITY:
        value = _pure_overlap(rho, sigma)
    elif purity(rho) > PURE_STATE_PURITY:
        value = _pure_overlap(sigma, rho)
    else:
        root = _psd_sqrt(rho.matrix)
        inner = root @ sigma.matrix @ root
        eigs = np.linalg.eigvalsh((inner + dagger(inner)) / 2)
        value = float(np.sum(np.sqrt(np.clip(eigs, 0, None))) ** 2)
    if value > 1 + 1e-9:
        logging.debug(f"fidelity {value:.12f} clipped to 1")
    return float(np.clip(value, 0.0, 1.0))


def random_density_matrix(dim, rng, rank=None):
    """Ginibre-distributed random state of the given dimension and rank (full by default)."""
    if dim not in SUPPORTED_DIMS:
        raise InvalidInputError(f"dimension must be 2 or 4, got {dim}")
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ dagger(g)
    m = (m + dagger(m)) / 2
    return DensityMatrix(m / np.real(np.trace(m)))
