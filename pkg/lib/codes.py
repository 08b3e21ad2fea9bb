# codes.py
"""
The two Bell-state stabilizer codes, their logical-state preparation and
transversal coherent-error injectors.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channels import pauli_string
from .densmat import H, I2, X, Z, apply_unitary, from_state_vector, tensor
from .errors import InvalidInputError
from .noise import cz_ideal, rotation, step_decoherence

SQRT_HALF = 1 / math.sqrt(2)


class CodeName(enum.Enum):
    ZZ_CODE = "ZZ_code"
    XX_CODE = "XX_code"


@dataclass(frozen=True, eq=False)
class BellCode:
    name: CodeName
    stabilizer: object
    logical_zero: object
    logical_one: object
    zero_vector: np.ndarray
    one_vector: np.ndarray

    def __post_init__(self):
        s = self.stabilizer.unitary
        for label, psi in (("|0~>", self.zero_vector), ("|1~>", self.one_vector)):
            if np.max(np.abs(s @ psi - psi)) > 1e-12:
                raise InvalidInputError(
                    f"{label} of {self.name.value} is not a +1 eigenstate"
                    f" of {self.stabilizer.label}"
                )
        if abs(np.vdot(self.zero_vector, self.one_vector)) > 1e-12:
            raise InvalidInputError(f"logical states of {self.name.value} are not orthogonal")

    def logical(self, which):
        if which not in (0, 1):
            raise InvalidInputError(f"logical bit must be 0 or 1, got {which!r}")
        return self.logical_one if which else self.logical_zero

    def logical_vector(self, which):
        return self.one_vector if which else self.zero_vector


_BELL_VECTORS = {
    "00+11": np.array([1, 0, 0, 1], dtype=complex) * SQRT_HALF,
    "00-11": np.array([1, 0, 0, -1], dtype=complex) * SQRT_HALF,
    "01+10": np.array([0, 1, 1, 0], dtype=complex) * SQRT_HALF,
}


def make_code(name):
    """
    Build a Bell code.

    ZZ_code: |1~> = (|00> + |11>)/sqrt2, |0~> = (|00> - |11>)/sqrt2, S = ZZ.
    XX_code: |1~> = (|00> + |11>)/sqrt2, |0~> = (|01> + |10>)/sqrt2, S = XX.
    """
    name = CodeName(name) if not isinstance(name, CodeName) else name
    if name is CodeName.ZZ_CODE:
        zero, one, stabilizer = _BELL_VECTORS["00-11"], _BELL_VECTORS["00+11"], pauli_string("ZZ")
    else:
        zero, one, stabilizer = _BELL_VECTORS["01+10"], _BELL_VECTORS["00+11"], pauli_string("XX")
    return BellCode(
        name=name,
        stabilizer=stabilizer,
        logical_zero=from_state_vector(zero),
        logical_one=from_state_vector(one),
        zero_vector=zero,
        one_vector=one,
    )


def codespace_population(rho, code):
    """Tr(P+ rho): weight of the state inside the +1 eigenspace of the stabilizer."""
    return float(np.real(np.trace(code.stabilizer.projector_plus @ rho.matrix)))


@dataclass(frozen=True)
class TransversalError:
    """U1 x U2 with U_k = exp(-i theta n_k.sigma / 2)."""

    axes: tuple
    theta: float

    def __post_init__(self):
        if len(self.axes) != 2:
            raise InvalidInputError("a transversal error needs one axis per qubit")
        for axis in self.axes:
            if abs(np.linalg.norm(axis) - 1) > 1e-10:
                raise InvalidInputError(f"axis {axis} is not a unit vector")

    def unitary(self):
        return tensor(rotation(self.axes[0], self.theta), rotation(self.axes[1], self.theta))


def apply_transversal_error(rho, err):
    if rho.n_qubits != 2:
        raise InvalidInputError("transversal errors act on two-qubit states")
    return apply_unitary(rho, err.unitary())


_TILT = math.pi / 8
TRANSVERSAL_AXES = {
    "XX": ((1.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
    "YY": ((0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
    "XY": ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    # tilted inside the x-y plane so both factors anticommute with Z
    "tilted_xy": ((math.cos(_TILT), math.sin(_TILT), 0.0), (math.cos(_TILT), math.sin(_TILT), 0.0)),
}


def transversal_error_family(theta):
    """Representative transversal errors of strength ``theta``, keyed by label."""
    return {label: TransversalError(axes, theta) for label, axes in TRANSVERSAL_AXES.items()}


def preparation_gates(code, which):
    """
    Gate layers that prepare a logical state from |00>.

    H x H, CZ, then one single-qubit layer: H on qubit 2 gives (|00>+|11>)/sqrt2;
    the logical |0~> adds Z on qubit 1 (ZZ_code) or X on qubit 2 (XX_code).
    """
    if which not in (0, 1):
        raise InvalidInputError(f"logical bit must be 0 or 1, got {which!r}")
    last_q1, last_q2, names = I2, H, ("I", "H")
    if which == 0 and code.name is CodeName.ZZ_CODE:
        last_q1, names = Z, ("Z", "H")
    elif which == 0:
        last_q2, names = X @ H, ("I", "X.H")
    return [
        ("single", tensor(H, H), "H x H"),
        ("cz", cz_ideal(), "CZ"),
        ("single", tensor(last_q1, last_q2), f"{names[0]} x {names[1]}"),
    ]


def prepare_logical(code, which, via_circuit=False, noise=None):
    """
    Logical state of ``code``.

    With ``via_circuit`` the state is produced by the gate layers of
    :func:`preparation_gates`, each followed by its decoherence step when
    ``noise`` is given and has decoherence enabled.
    """
    if not via_circuit:
        return code.logical(which)
    rho = from_state_vector(np.array([1, 0, 0, 0], dtype=complex))
    for kind, unitary, _ in preparation_gates(code, which):
        rho = apply_unitary(rho, unitary)
        if noise is not None and noise.decoherence:
            rho = step_decoherence(rho, noise.device, kind)
    return rho
