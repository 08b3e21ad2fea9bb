# noise.py
"""
Device noise model: amplitude damping, dephasing and leakage Kraus channels,
per-gate decoherence, and the imperfect CZ gate.

Units: coherence times and decoherence durations are in microseconds, gate
times in :class:`GateTiming` are in nanoseconds (as quoted for the device)
and are converted with the ``*_us`` properties.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .densmat import I2, X, Y, Z, apply_kraus, apply_unitary
from .errors import InvalidInputError

NS_PER_US = 1000.0

# Error factors inside one CZ, in application order. The first three are
# diagonal and commute.
CZ_ERROR_ORDER = ("ideal", "cphase", "rz_rz", "leakage")
LEAKAGE_PLACEMENT = "sqrt(lam)|10><11|"


def ns_to_us(t_ns):
    return float(t_ns) / NS_PER_US


@dataclass(frozen=True)
class QubitCoherence:
    """Coherence times of one qubit in µs, at idle and along the CZ trajectory."""

    t1: float
    t2r: float
    t1_cz: float = None
    t2r_cz: float = None

    def __post_init__(self):
        # CZ-trajectory values default to the idle ones
        if self.t1_cz is None:
            object.__setattr__(self, "t1_cz", self.t1)
        if self.t2r_cz is None:
            object.__setattr__(self, "t2r_cz", self.t2r)
        for name in ("t1", "t2r", "t1_cz", "t2r_cz"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be a positive number of µs, got {value!r}")
        if self.t2r > 2 * self.t1:
            raise InvalidInputError(
                f"t2r ({self.t2r}) exceeds 2*t1 ({2 * self.t1}); dephasing rate would be negative"
            )
        if self.t2r_cz > 2 * self.t1_cz:
            raise InvalidInputError(f"t2r_cz ({self.t2r_cz}) exceeds 2*t1_cz ({2 * self.t1_cz})")

    def times(self, during_cz=False):
        return (self.t1_cz, self.t2r_cz) if during_cz else (self.t1, self.t2r)


@dataclass(frozen=True)
class GateTiming:
    """Gate durations in ns."""

    t_1qb: float = 30.0
    t_cz: float = 60.0
    gap: float = 5.0

    def __post_init__(self):
        for name in ("t_1qb", "t_cz", "gap"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise InvalidInputError(
                    f"{name} must be a non-negative number of ns, got {value!r}"
                )

    @property
    def single_step_us(self):
        return ns_to_us(self.t_1qb + self.gap)

    @property
    def cz_step_us(self):
        return ns_to_us(self.t_cz + self.gap)


@dataclass(frozen=True)
class CzErrorParams:
    """CPHASE over-rotation phi, single-qubit Z over-rotations theta1/theta2, leakage rate lam."""

    phi: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        for name in ("phi", "theta1", "theta2", "lam"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise InvalidInputError(f"{name} must be a finite number, got {value!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidInputError(f"lam must lie in [0, 1], got {self.lam}")

    def as_tuple(self):
        return (self.phi, self.theta1, self.theta2, self.lam)


@dataclass(frozen=True)
class DeviceParams:
    qubit1: QubitCoherence = field(default_factory=lambda: QubitCoherence(23.0, 13.0, 17.0, 5.0))
    qubit2: QubitCoherence = field(default_factory=lambda: QubitCoherence(39.0, 25.0))
    timing: GateTiming = field(default_factory=GateTiming)

    def coherence(self, qubit_index):
        return (self.qubit1, self.qubit2)[qubit_index]


@dataclass(frozen=True)
class NoiseModel:
    """
    Everything the circuit simulator needs to know about the hardware.

    ``qme_gate_duration`` assigns QME gates a single-qubit gate duration and
    its decoherence; by default they are ideal and instantaneous.
    """

    device: DeviceParams = field(default_factory=DeviceParams)
    cz_errors: CzErrorParams = field(default_factory=CzErrorParams)
    decoherence: bool = True
    qme_gate_duration: bool = False


def cz_errors_for_relative_phase(delta):
    """Z over-rotations that imprint relative phase ``delta`` between |01> and |10> per CZ pair."""
    return CzErrorParams(0.0, delta / 4, -delta / 4, 0.0)


def gamma1(t1):
    if t1 <= 0:
        raise InvalidInputError(f"t1 must be positive, got {t1}")
    return 1.0 / t1


def gamma_phi(t1, t2r):
    """Pure dephasing rate 1/T2R - 1/(2 T1)."""
    if t1 <= 0 or t2r <= 0:
        raise InvalidInputError(f"coherence times must be positive, got t1={t1}, t2r={t2r}")
    if t2r > 2 * t1:
        raise InvalidInputError(f"t2r={t2r} > 2*t1={2 * t1} gives a negative dephasing rate")
    return max(1.0 / t2r - 1.0 / (2.0 * t1), 0.0)


def _check_rate_time(rate, t):
    if rate < 0 or t < 0:
        raise InvalidInputError(f"rate and time must be non-negative, got rate={rate}, t={t}")


def amp_damp_kraus(g1, t):
    _check_rate_time(g1, t)
    decay = math.exp(-g1 * t)
    a1 = np.array([[1, 0], [0, math.sqrt(decay)]], dtype=complex)
    a2 = np.array([[0, math.sqrt(1 - decay)], [0, 0]], dtype=complex)
    return [a1, a2]


def dephase_kraus(gphi, t):
    _check_rate_time(gphi, t)
    decay = math.exp(-gphi * t)
    loss = math.sqrt(1 - decay)
    d1 = math.sqrt(decay) * I2
    d2 = np.array([[loss, 0], [0, 0]], dtype=complex)
    d3 = np.array([[0, 0], [0, loss]], dtype=complex)
    return [d1, d2, d3]


def embed(op, qubit_index, n_qubits):
    """Place a single-qubit operator on qubit ``qubit_index`` of an n-qubit register."""
    if qubit_index not in range(n_qubits):
        raise InvalidInputError(
            f"qubit index {qubit_index} invalid for a {n_qubits}-qubit register"
        )
    if n_qubits == 1:
        return np.asarray(op, dtype=complex)
    return np.kron(op, I2) if qubit_index == 0 else np.kron(I2, op)


def decoherence_kraus(coh, t, during_cz=False):
    """Single-qubit Kraus set A_i D_j: dephasing first, then amplitude damping."""
    t1, t2r = coh.times(during_cz)
    amp = amp_damp_kraus(gamma1(t1), t)
    deph = dephase_kraus(gamma_phi(t1, t2r), t)
    return [a @ d for a in amp for d in deph]


def decoherence_channel(rho, qubit_index, coh, t, during_cz=False):
    """
    Amplitude damping and dephasing for time ``t`` (µs) on one qubit of ``rho``.

    Args:
        rho (DensityMatrix): One- or two-qubit state.
        qubit_index (int): 0 for qubit 1, 1 for qubit 2.
        coh (QubitCoherence): Coherence times of that qubit.
        t (float): Duration in µs.
        during_cz (bool): Use the effective CZ-trajectory coherence times.
    """
    if t < 0:
        raise InvalidInputError(f"duration must be non-negative, got {t}")
    ops = [embed(k, qubit_index, rho.n_qubits) for k in decoherence_kraus(coh, t, during_cz)]
    return apply_kraus(rho, ops)


def step_decoherence(rho, device, gate):
    """
    Decoherence after one circuit time step, applied to every qubit.

    ``gate`` is ``"single"`` or ``"cz"``; the duration is the gate time plus
    the inter-pulse gap.
    """
    if gate not in ("single", "cz"):
        raise InvalidInputError(f"unknown gate kind: {gate!r}")
    during_cz = gate == "cz"
    t = device.timing.cz_step_us if during_cz else device.timing.single_step_us
    for k in range(rho.n_qubits):
        rho = decoherence_channel(rho, k, device.coherence(k), t, during_cz)
    return rho


def leakage_kraus(lam):
    """
    Effective leakage |11> -> |10> with probability ``lam``.

    L1 = diag(1, 1, 1, sqrt(1 - lam)), L2 = sqrt(lam) |10><11|.
    """
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError(f"lam must lie in [0, 1], got {lam}")
    l1 = np.diag([1, 1, 1, math.sqrt(1 - lam)]).astype(complex)
    l2 = np.zeros((4, 4), dtype=complex)
    l2[2, 3] = math.sqrt(lam)
    return [l1, l2]


def rotation(axis, theta):
    """exp(-i theta n.sigma / 2) for a unit vector n."""
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if abs(norm - 1) > 1e-10:
        raise InvalidInputError(f"rotation axis must be a unit vector, |n| = {norm:.12f}")
    generator = n[0] * X + n[1] * Y + n[2] * Z
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * generator


def rx(theta):
    return rotation((1, 0, 0), theta)


def ry(theta):
    return rotation((0, 1, 0), theta)


def rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def cphase(phi):
    return np.diag([1, 1, 1, np.exp(1j * phi)]).astype(complex)


def cz_ideal():
    return np.diag([1, 1, 1, -1]).astype(complex)


def cz_unitary_with_errors(p):
    """Unitary part of the imperfect CZ: (Rz(theta1) x Rz(theta2)) . CPHASE(phi) . CZ."""
    return np.kron(rz(p.theta1), rz(p.theta2)) @ cphase(p.phi) @ cz_ideal()


def cz_with_errors(rho, p):
    """Ideal CZ, CPHASE(phi), Rz(theta1) x Rz(theta2), then the leakage channel."""
    if rho.n_qubits != 2:
        raise InvalidInputError("cz_with_errors requires a two-qubit state")
    if not isinstance(p, CzErrorParams):
        p = CzErrorParams(*p)
    rho = apply_unitary(rho, cz_unitary_with_errors(p))
    if p.lam > 0:
        rho = apply_kraus(rho, leakage_kraus(p.lam))
    return rho


def noisy_cz_step(rho, noise):
    """One CZ of the sequence followed by its decoherence step."""
    rho = cz_with_errors(rho, noise.cz_errors)
    if noise.decoherence:
        rho = step_decoherence(rho, noise.device, "cz")
    return rho


def describe(noise):
    """Flat summary of a noise model for logs and result headers."""
    d = noise.device
    summary = {
        "qubit1": [d.qubit1.t1, d.qubit1.t2r, d.qubit1.t1_cz, d.qubit1.t2r_cz],
        "qubit2": [d.qubit2.t1, d.qubit2.t2r, d.qubit2.t1_cz, d.qubit2.t2r_cz],
        "timing_ns": [d.timing.t_1qb, d.timing.t_cz, d.timing.gap],
        "cz_errors": list(noise.cz_errors.as_tuple()),
        "decoherence": noise.decoherence,
        "qme_gate_duration": noise.qme_gate_duration,
    }
    logging.debug(f"Noise model: {summary}")
    return summary
