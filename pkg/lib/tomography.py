# tomography.py
"""
Simulated Pauli state tomography: shot-level projective measurement and
linear-inversion reconstruction with a PSD projection.

Measurement settings are Pauli strings without identities ("X", "ZY", ...).
X and Y are measured by rotating into the Z basis first: rho -> H rho H for X
and rho -> (H S^dagger) rho (S H) for Y.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np

from .densmat import DensityMatrix, H, I2, S, dagger, pauli_matrix
from .errors import InvalidInputError
from .utils import log_jamming

_BASIS_ROTATIONS = {"Z": I2, "X": H, "Y": H @ dagger(S)}
# smallest reference value a curve is divided by
SPAM_REFERENCE_TOL = 1e-9


def measurement_settings(n_qubits):
    """All 3^n informationally complete Pauli settings."""
    return ["".join(p) for p in itertools.product("XYZ", repeat=n_qubits)]


def pauli_labels(n_qubits):
    """All 4^n - 1 non-identity Pauli strings."""
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits) if set(p) != {"I"}]


def outcome_labels(n_qubits):
    return ["".join(bits) for bits in itertools.product("01", repeat=n_qubits)]


@dataclass(frozen=True)
class TomographyRecord:
    """Outcome histograms for every measured setting."""

    basis_settings: tuple
    shots_per_setting: int
    counts: dict = field(hash=False)
    seed: int = None

    def __post_init__(self):
        if not self.basis_settings:
            raise InvalidInputError("a tomography record needs at least one measurement setting")
        for setting in self.basis_settings:
            histogram = self.counts.get(setting)
            if histogram is None:
                raise InvalidInputError(f"no counts recorded for setting {setting}")
            total = sum(histogram.values())
            if total != self.shots_per_setting:
                raise InvalidInputError(
                    f"counts for {setting} sum to {total}, expected {self.shots_per_setting}"
                )

    @property
    def n_qubits(self):
        return len(self.basis_settings[0])


@dataclass(frozen=True, eq=False)
class ReconstructedState:
    rho: DensityMatrix
    raw_expectations: dict
    psd_projection_distance: float


def _check_setting(setting, n_qubits):
    setting = str(setting).upper()
    if len(setting) != n_qubits or any(c not in _BASIS_ROTATIONS for c in setting):
        raise InvalidInputError(f"invalid measurement setting {setting!r} for {n_qubits} qubit(s)")
    return setting


def outcome_probabilities(rho, setting):
    """Born probabilities of the Z-basis outcomes after rotating into ``setting``."""
    setting = _check_setting(setting, rho.n_qubits)
    rot = reduce(np.kron, [_BASIS_ROTATIONS[c] for c in setting])
    probs = np.real(np.diag(rot @ rho.matrix @ dagger(rot)))
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def simulate_measurement(rho, basis, shots, rng):
    """
    Multinomial shot histogram for measuring ``rho`` in the Pauli setting ``basis``.

    Returns:
        dict: outcome bitstring -> count, with every outcome present.
    """
    if int(shots) < 1:
        raise InvalidInputError(f"shots must be at least 1, got {shots}")
    probs = outcome_probabilities(rho, basis)
    draws = rng.multinomial(int(shots), probs)
    return dict(zip(outcome_labels(rho.n_qubits), (int(c) for c in draws)))


def measure_all_settings(rho, shots, rng, seed=None):
    settings = measurement_settings(rho.n_qubits)
    counts = {s: simulate_measurement(rho, s, shots, rng) for s in settings}
    return TomographyRecord(tuple(settings), int(shots), counts, seed)


def _parity_value(outcome, label):
    sign = 1
    for bit, p in zip(outcome, label):
        if p != "I" and bit == "1":
            sign = -sign
    return sign


def expectations_from_counts(record):
    """
    Linear estimates of every non-identity Pauli expectation.

    A Pauli string with identities is estimated from every setting that agrees
    on its non-identity positions, and those estimates are averaged.
    """
    n = record.n_qubits
    values = {}
    for label in pauli_labels(n):
        estimates = []
        for setting in record.basis_settings:
            if all(p == "I" or p == s for p, s in zip(label, setting)):
                histogram = record.counts[setting]
                total = sum(histogram.values())
                estimates.append(
                    sum(_parity_value(o, label) * c for o, c in histogram.items()) / total
                )
        values[label] = float(np.mean(estimates))
    return values


@lru_cache(maxsize=None)
def pauli_stack(n_qubits):
    """Read-only (4^n - 1, 2^n, 2^n) array of the Pauli matrices in pauli_labels order."""
    stack = np.array([pauli_matrix(label) for label in pauli_labels(n_qubits)])
    stack.flags.writeable = False
    return stack


def pauli_expectation_vector(rho):
    """Every non-identity Pauli expectation of ``rho`` in pauli_labels order."""
    return np.einsum("kij,ji->k", pauli_stack(rho.n_qubits), rho.matrix).real


def pauli_expectations(rho):
    return dict(zip(pauli_labels(rho.n_qubits), pauli_expectation_vector(rho).tolist()))


def reconstruct_from_expectations(expectations, n_qubits):
    """
    rho = 2^-n (I + sum_P <P> P), then projected onto the PSD unit-trace set
    by clipping negative eigenvalues and renormalizing.
    """
    labels = pauli_labels(n_qubits)
    missing = [label for label in labels if label not in expectations]
    if missing:
        raise InvalidInputError(f"incomplete Pauli expectation set, missing {missing}")
    dim = 2 ** n_qubits
    raw = np.eye(dim, dtype=complex)
    for label in labels:
        raw = raw + float(expectations[label]) * pauli_matrix(label)
    raw = raw / dim
    raw = (raw + dagger(raw)) / 2

    w, v = np.linalg.eigh(raw)
    distance = 0.0
    matrix = raw
    if w.min() < 0:
        clipped = np.clip(w, 0.0, None)
        clipped = clipped / clipped.sum()
        matrix = (v * clipped) @ dagger(v)
        matrix = (matrix + dagger(matrix)) / 2
        distance = float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(raw - matrix))))
        logging.debug(log_jamming(
            f"PSD projection engaged: eigenvalues {np.round(w, 6)}, distance {distance:.3e}"
        ))
    return ReconstructedState(DensityMatrix(matrix), dict(expectations), distance)


def reconstruct(record):
    """
    Reconstruct a state from a complete tomography record.

    Raises:
        InvalidInputError: if any of the 3^n Pauli settings is missing.
    """
    n = record.n_qubits
    missing = sorted(set(measurement_settings(n)) - set(record.basis_settings))
    if missing:
        raise InvalidInputError(
            f"tomography record is not informationally complete, missing settings {missing}"
        )
    return reconstruct_from_expectations(expectations_from_counts(record), n)


def spam_normalize(curve):
    """
    Divide every value of a curve by its reference value (the point with the
    smallest x).

    Args:
        curve (list): (x, value) pairs.

    Returns:
        list: (x, value / reference) pairs in the input order.

    Raises:
        InvalidInputError: if the curve is empty or the reference is not above
            SPAM_REFERENCE_TOL.
    """
    curve = list(curve)
    if not curve:
        raise InvalidInputError("cannot normalize an empty curve")
    _, reference = min(curve, key=lambda point: point[0])
    if not reference > SPAM_REFERENCE_TOL:
        raise InvalidInputError(
            f"reference value {reference:.3e} is not above {SPAM_REFERENCE_TOL:g}"
        )
    return [(x, value / reference) for x, value in curve]
