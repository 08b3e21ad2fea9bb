# channels.py
"""
Measurement channels, generalized dephasing channels and the QME sampler.

Quantum measurement emulation (QME) applies a stabilizer unitary S with
probability 1/2 and the identity otherwise. Averaged over the ensemble this is
the dephasing channel rho -> (rho + S rho S^dagger) / 2, which is the same map
as a non-selective projective measurement of S.
"""

import enum
import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .densmat import (
    DensityMatrix,
    I2,
    PAULIS,
    X,
    Y,
    Z,
    apply_kraus,
    apply_unitary,
    dagger,
    is_hermitian,
    is_unitary,
    pauli_matrix,
)
from .errors import InvalidInputError

INVOLUTION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StabilizerObservable:
    """
    A unitary, Hermitian, involutive observable S with its +/-1 eigenprojectors.

    ``gate_list`` holds one 2x2 gate per qubit whose tensor product equals S;
    it is what a QME stabilizer branch physically applies.
    """

    unitary: np.ndarray
    projector_plus: np.ndarray
    projector_minus: np.ndarray
    label: str
    gate_list: tuple

    def __post_init__(self):
        s = self.unitary
        dim = s.shape[0]
        if not is_unitary(s, INVOLUTION_TOL) or not is_hermitian(s, INVOLUTION_TOL):
            raise InvalidInputError(f"stabilizer {self.label} must be unitary and Hermitian")
        if np.max(np.abs(s @ s - np.eye(dim))) > INVOLUTION_TOL:
            raise InvalidInputError(f"stabilizer {self.label} is not an involution")
        completeness = self.projector_plus + self.projector_minus - np.eye(dim)
        if np.max(np.abs(completeness)) > INVOLUTION_TOL:
            raise InvalidInputError(f"projectors of {self.label} do not sum to identity")
        if np.max(np.abs(self.projector_plus - self.projector_minus - s)) > INVOLUTION_TOL:
            raise InvalidInputError(f"projectors of {self.label} do not reproduce S")
        product = reduce(np.kron, self.gate_list)
        if np.max(np.abs(product - s)) > INVOLUTION_TOL:
            raise InvalidInputError(f"gate decomposition of {self.label} does not equal S")

    @property
    def dim(self):
        return self.unitary.shape[0]

    @property
    def n_qubits(self):
        return len(self.gate_list)


def _from_unitary(s, label, gate_list):
    s = np.asarray(s, dtype=complex)
    identity = np.eye(s.shape[0], dtype=complex)
    return StabilizerObservable(
        unitary=s,
        projector_plus=(identity + s) / 2,
        projector_minus=(identity - s) / 2,
        label=label,
        gate_list=tuple(np.asarray(g, dtype=complex) for g in gate_list),
    )


def _axis_label(nx, ny, nz):
    for name, axis in (("X", (1, 0, 0)), ("Y", (0, 1, 0)), ("Z", (0, 0, 1))):
        if np.allclose((nx, ny, nz), axis, atol=1e-12):
            return name
    polar = np.arccos(np.clip(nz, -1, 1))
    azimuth = np.arctan2(ny, nx)
    return f"axis({polar:.4f},{azimuth:.4f})"


def stabilizer_from_axis(nx, ny, nz):
    """
    Single-qubit observable S = n.sigma for a unit vector n.

    Projectors are the closed form (I +/- S) / 2, exact for involutions.
    """
    n = np.array([nx, ny, nz], dtype=float)
    norm = np.linalg.norm(n)
    if abs(norm - 1) > 1e-10:
        raise InvalidInputError(f"axis must be a unit vector, |n| = {norm:.12f}")
    s = n[0] * X + n[1] * Y + n[2] * Z
    return _from_unitary(s, _axis_label(*n), (s,))


def pauli_string(labels):
    """
    Pauli-string stabilizer, e.g. ``pauli_string("ZZ")`` or ``pauli_string(["X", "X"])``.

    Each qubit receives its own Pauli factor as its QME gate.
    """
    labels = [str(c).upper() for c in labels]
    if len(labels) not in (1, 2):
        raise InvalidInputError(f"Pauli strings of length {len(labels)} are not supported")
    if any(c not in PAULIS for c in labels):
        raise InvalidInputError(f"invalid Pauli labels: {labels}")
    label = "".join(labels)
    return _from_unitary(pauli_matrix(label), label, [PAULIS[c] for c in labels])


def _check_dims(rho, s):
    if rho.dim != s.dim:
        raise InvalidInputError(
            f"state dimension {rho.dim} does not match stabilizer {s.label} ({s.dim})"
        )


def measurement_channel(rho, s):
    """Non-selective measurement of S: P+ rho P+ + P- rho P-."""
    _check_dims(rho, s)
    return apply_kraus(rho, [s.projector_plus, s.projector_minus])


def dephasing_channel(rho, s):
    """Generalized dephasing: (rho + S rho S^dagger) / 2."""
    _check_dims(rho, s)
    m = rho.matrix
    out = 0.5 * m + 0.5 * s.unitary @ m @ dagger(s.unitary)
    return DensityMatrix((out + dagger(out)) / 2)


class BranchChoice(enum.Enum):
    IDENTITY = "identity"
    STABILIZER = "stabilizer"


@dataclass(frozen=True, eq=False)
class QmeBranch:
    """One stochastic QME outcome and the per-qubit gates that realize it."""

    choice: BranchChoice
    gate_list: tuple

    @property
    def unitary(self):
        return reduce(np.kron, self.gate_list)


def branch_for(s, choice):
    if choice is BranchChoice.STABILIZER:
        return QmeBranch(choice, s.gate_list)
    return QmeBranch(choice, tuple(I2 for _ in s.gate_list))


def qme_sample(s, rng):
    """
    Draw one QME branch: stabilizer with probability 1/2, identity otherwise.

    Consumes exactly one uniform draw from ``rng`` (a numpy Generator).
    """
    choice = BranchChoice.STABILIZER if rng.random() < 0.5 else BranchChoice.IDENTITY
    return branch_for(s, choice)


def branch_channel(rho, branch):
    """Apply a single sampled branch to one trajectory."""
    if branch.choice is BranchChoice.IDENTITY:
        return rho
    return apply_unitary(rho, branch.unitary)


def qme_trajectory_average(rho, s, n_samples, rng=None, branches=None):
    """
    Empirical mean of ``n_samples`` QME trajectories started from ``rho``.

    Only two distinct per-trajectory states exist, so the mean is the
    branch-count-weighted mix of rho and S rho S^dagger. ``branches`` forces
    a specific sequence of choices instead of sampling.
    """
    _check_dims(rho, s)
    if branches is None:
        if n_samples < 1:
            raise InvalidInputError("n_samples must be at least 1")
        if rng is None:
            raise InvalidInputError("a random generator is required when branches are sampled")
        draws = rng.random(n_samples)
        n_stab = int(np.count_nonzero(draws < 0.5))
    else:
        choices = [b.choice if isinstance(b, QmeBranch) else BranchChoice(b) for b in branches]
        n_samples = len(choices)
        if n_samples < 1:
            raise InvalidInputError("n_samples must be at least 1")
        n_stab = choices.count(BranchChoice.STABILIZER)
    logging.debug(f"QME {s.label}: {n_stab}/{n_samples} stabilizer branches")
    m = rho.matrix
    flipped = s.unitary @ m @ dagger(s.unitary)
    out = ((n_samples - n_stab) * m + n_stab * flipped) / n_samples
    return DensityMatrix((out + dagger(out)) / 2)


def projective_measurement_sample(rho, s, rng):
    """
    Selective measurement of S: returns (outcome, post-measurement state).

    Outcome is +1 or -1 drawn with Born probabilities from one uniform draw.
    """
    _check_dims(rho, s)
    p_plus = float(np.clip(np.real(np.trace(s.projector_plus @ rho.matrix)), 0.0, 1.0))
    if rng.random() < p_plus:
        outcome, proj, p = 1, s.projector_plus, p_plus
    else:
        outcome, proj, p = -1, s.projector_minus, 1.0 - p_plus
    post = proj @ rho.matrix @ proj / p
    return outcome, DensityMatrix((post + dagger(post)) / 2)
