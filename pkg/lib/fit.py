# fit.py
"""
Least-squares estimation of the CZ error parameters (phi, theta1, theta2, lam)
from tomography snapshots taken along a sequence of CZ pairs.

One circuit step is two imperfect CZ gates, each followed by its decoherence
step, and optionally the QME dephasing channel of a stabilizer. The forward
model is deterministic, so the objective is a pure function of the four
parameters.
"""

import functools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.special import expit, logit

from .channels import pauli_string
from .densmat import DensityMatrix
from .errors import InvalidInputError
from .noise import (
    CzErrorParams,
    DeviceParams,
    GateTiming,
    QubitCoherence,
    cz_unitary_with_errors,
    decoherence_kraus,
    embed,
    leakage_kraus,
)
from .tomography import (
    TomographyRecord,
    expectations_from_counts,
    measure_all_settings,
    pauli_expectations,
    pauli_labels,
    pauli_stack,
)
from .utils import log_jamming, message_processor, worker_count

LAM_FLOOR = 1e-14
START_OFFSET = 0.05
# (phi, theta1, theta2) offsets of the extra deterministic starts
START_CORNERS = ((1, 1, -1), (1, -1, 1), (-1, 1, 1), (-1, -1, -1))
TIE_TOL = 1e-15
# lowest leakage rate a start is placed at; the objective is flat in logit lam below it
START_LAM = 1e-3
POLISH_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Measured state after ``step`` CZ pairs: exact expectations or a tomography record."""

    step: int
    expectations: dict = None
    record: TomographyRecord = None

    def __post_init__(self):
        if int(self.step) != self.step or self.step < 0:
            raise InvalidInputError(
                f"snapshot step must be a non-negative integer, got {self.step!r}"
            )
        if (self.expectations is None) == (self.record is None):
            raise InvalidInputError("a snapshot needs exactly one of expectations or record")

    def measured(self):
        if self.expectations is not None:
            return dict(self.expectations)
        return expectations_from_counts(self.record)


@dataclass(frozen=True, eq=False)
class FitProblem:
    """
    Snapshots plus everything held fixed during the fit.

    Snapshots are re-sorted by step on construction.
    """

    snapshots: tuple
    initial_state: DensityMatrix
    device: DeviceParams = field(default_factory=DeviceParams)
    decoherence: bool = True
    qme_stabilizer: object = None

    def __post_init__(self):
        ordered = tuple(sorted(self.snapshots, key=lambda s: s.step))
        if len(ordered) < 2:
            raise InvalidInputError(f"a fit needs at least 2 snapshots, got {len(ordered)}")
        steps = [s.step for s in ordered]
        if len(set(steps)) != len(steps):
            raise InvalidInputError(f"snapshot steps must be distinct, got {steps}")
        if self.initial_state.n_qubits != 2:
            raise InvalidInputError("fits run on two-qubit states")
        object.__setattr__(self, "snapshots", ordered)

    @property
    def steps(self):
        return [s.step for s in self.snapshots]

    def targets(self):
        """Measured expectations as an (n_snapshots, 15) array in pauli_labels order."""
        labels = pauli_labels(2)
        rows = []
        for snap in self.snapshots:
            values = snap.measured()
            missing = [label for label in labels if label not in values]
            if missing:
                raise InvalidInputError(f"snapshot at step {snap.step} is missing {missing}")
            rows.append([float(values[label]) for label in labels])
        return np.array(rows)


@dataclass(frozen=True)
class FitResult:
    params: CzErrorParams
    residual_norm: float
    iterations: int
    converged: bool
    start_index: int = 0


def wrap_angle(a):
    """Map an angle into (-pi, pi]."""
    w = math.remainder(a, 2 * math.pi)
    return math.pi if w == -math.pi else w


def _superoperator(kraus):
    """Row-major vectorized channel: vec(K rho K^dagger) = (K kron conj(K)) vec(rho)."""
    return sum(np.kron(k, np.conj(k)) for k in kraus)


@functools.lru_cache(maxsize=32)
def _cz_decoherence_superoperator(device):
    t = device.timing.cz_step_us
    total = np.eye(16, dtype=complex)
    for q in range(2):
        ops = [embed(k, q, 2) for k in decoherence_kraus(device.coherence(q), t, during_cz=True)]
        total = _superoperator(ops) @ total
    total.flags.writeable = False
    return total


def pair_superoperator(params, device=None, decoherence=True, qme_stabilizer=None):
    """
    16x16 map of one circuit step (two noisy CZs, then the optional QME dephasing).

    Composes the same factors as :func:`noisy_cz_step` so the fit can propagate
    vectorized states without re-validating a DensityMatrix at every gate.
    """
    if not isinstance(params, CzErrorParams):
        params = CzErrorParams(*params)
    cz = _superoperator([cz_unitary_with_errors(params)])
    if params.lam > 0:
        cz = _superoperator(leakage_kraus(params.lam)) @ cz
    if decoherence:
        cz = _cz_decoherence_superoperator(device or DeviceParams()) @ cz
    pair = cz @ cz
    if qme_stabilizer is not None:
        s = np.asarray(qme_stabilizer.unitary)
        pair = 0.5 * (np.eye(16) + np.kron(s, np.conj(s))) @ pair
    return pair


def _circuit_inputs(problem_or_steps, initial_state, device, decoherence, qme_stabilizer):
    if isinstance(problem_or_steps, FitProblem):
        p = problem_or_steps
        return p.steps, p.initial_state, p.device, p.decoherence, p.qme_stabilizer
    steps = sorted(int(s) for s in problem_or_steps)
    return steps, initial_state, device, decoherence, qme_stabilizer


def _propagate(params, steps, initial_state, device, decoherence, qme_stabilizer):
    """Vectorized states at each requested step, shape (len(steps), 16)."""
    pair = pair_superoperator(params, device, decoherence, qme_stabilizer)
    wanted = set(steps)
    recorded = {}
    v = initial_state.matrix.reshape(-1)
    for step in range(max(steps) + 1):
        if step in wanted:
            recorded[step] = v
        v = pair @ v
    return np.array([recorded[s] for s in steps])


def simulate_states(params, problem_or_steps, initial_state=None, device=None, decoherence=True,
                    qme_stabilizer=None):
    """
    States after each requested number of CZ pairs.

    Accepts either a :class:`FitProblem` or an explicit list of steps with the
    fixed circuit inputs.
    """
    steps, initial_state, device, decoherence, qme_stabilizer = _circuit_inputs(
        problem_or_steps, initial_state, device, decoherence, qme_stabilizer)
    states = []
    for v in _propagate(params, steps, initial_state, device, decoherence, qme_stabilizer):
        m = v.reshape(4, 4)
        states.append(DensityMatrix((m + m.conj().T) / 2))
    return states


def predict_expectations(params, problem):
    """
    Forward-simulated Pauli expectations at every snapshot step.

    Returns:
        np.ndarray: shape (n_snapshots, 15), columns in pauli_labels(2) order.
    """
    vectors = _propagate(params, *_circuit_inputs(problem, None, None, True, None))
    # Tr(rho P) = sum_ij rho_ij P_ji
    observables = pauli_stack(2).transpose(0, 2, 1).reshape(15, 16)
    return np.real(vectors @ observables.T)


def objective(params, problem, targets=None):
    """Sum of squared differences between measured and predicted expectations."""
    if targets is None:
        targets = problem.targets()
    diff = targets - predict_expectations(params, problem)
    return float(np.sum(diff * diff))


def numerical_gradient(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (f(x + step) - f(x - step)) / (2 * h)
    return grad


def _to_free(params):
    lam = min(max(params.lam, LAM_FLOOR), 1 - LAM_FLOOR)
    return np.array([params.phi, params.theta1, params.theta2, float(logit(lam))])


def _from_free(u):
    lam = float(expit(u[3]))
    return CzErrorParams(float(u[0]), float(u[1]), float(u[2]), min(max(lam, 0.0), 1.0))


def _starting_points(guess, n_starts):
    base = _to_free(replace(guess, lam=max(guess.lam, START_LAM)))
    starts = [base]
    for corner in START_CORNERS[: max(n_starts - 1, 0)]:
        shifted = base.copy()
        shifted[:3] += START_OFFSET * np.array(corner)
        starts.append(shifted)
    return starts


def _initial_simplex(x0):
    simplex = [x0]
    for i, size in enumerate((0.01, 0.01, 0.01, 1.0)):
        vertex = x0.copy()
        vertex[i] += size
        simplex.append(vertex)
    return np.array(simplex)


def _polish(params, problem, targets):
    """Bounded least-squares refinement of the simplex winner in (phi, theta1, theta2, lam)."""
    def residuals(x):
        lam = min(max(float(x[3]), 0.0), 1.0)
        predicted = predict_expectations(CzErrorParams(*map(float, x[:3]), lam), problem)
        return (targets - predicted).ravel()

    res = least_squares(
        residuals,
        np.array(params.as_tuple()),
        jac="3-point",
        bounds=([-np.inf, -np.inf, -np.inf, 0.0], [np.inf, np.inf, np.inf, 1.0]),
        method="trf",
        xtol=POLISH_TOL,
        ftol=POLISH_TOL,
        gtol=POLISH_TOL,
    )
    polished = CzErrorParams(*map(float, res.x[:3]), min(max(float(res.x[3]), 0.0), 1.0))
    return polished, objective(polished, problem, targets)


def fit_cz_params(problem, initial_guess=None, n_starts=5, max_iterations=2000, tolerance=1e-10):
    """
    Fit (phi, theta1, theta2, lam) to the snapshots of ``problem``.

    Nelder-Mead runs over (phi, theta1, theta2, logit lam) from up to five
    deterministic starts: the guess and four corners of a box of half-width
    0.05 rad around it. The lowest residual wins; ties go to the smallest
    parameter norm. The winner is then refined by bounded least squares
    (trust-region reflective) with lam held in [0, 1].

    Args:
        problem (FitProblem): Snapshots and fixed circuit inputs.
        initial_guess (CzErrorParams, optional): Defaults to all zeros.
        n_starts (int): Number of starts, 1 to 5.
        max_iterations (int): Nelder-Mead iteration cap per start.
        tolerance (float): Simplex tolerance on the parameters.

    Returns:
        FitResult: ``converged`` is False when the winning start hit the cap.
    """
    if not 1 <= n_starts <= 1 + len(START_CORNERS):
        raise InvalidInputError(
            f"n_starts must lie in [1, {1 + len(START_CORNERS)}], got {n_starts}"
        )
    guess = initial_guess or CzErrorParams()
    targets = problem.targets()

    def cost(u):
        return objective(_from_free(u), problem, targets)

    def run(start):
        return minimize(
            cost,
            start,
            method="Nelder-Mead",
            options={
                "maxiter": int(max_iterations),
                "xatol": float(tolerance),
                "fatol": float(tolerance),
                "initial_simplex": _initial_simplex(start),
            },
        )

    starts = _starting_points(guess, n_starts)
    logging.info(f"Fitting CZ parameters: {len(problem.snapshots)} snapshots, {len(starts)} starts")
    with ThreadPoolExecutor(max_workers=min(worker_count(), len(starts))) as executor:
        outcomes = list(executor.map(run, starts))

    best_index = 0
    for i, res in enumerate(outcomes):
        logging.debug(
            f"start {i}: residual {res.fun:.3e}, iterations {res.nit}, success {res.success}"
        )
        best = outcomes[best_index]
        if res.fun < best.fun - TIE_TOL:
            best_index = i
        elif abs(res.fun - best.fun) <= TIE_TOL and (
            np.linalg.norm(res.x[:3]) < np.linalg.norm(best.x[:3])
        ):
            best_index = i

    winner = outcomes[best_index]
    raw, fun = _from_free(winner.x), float(winner.fun)
    polished, polished_fun = _polish(raw, problem, targets)
    logging.debug(f"polish: residual {fun:.3e} -> {polished_fun:.3e}")
    if polished_fun <= fun:
        raw, fun = polished, polished_fun
    params = CzErrorParams(
        wrap_angle(raw.phi), wrap_angle(raw.theta1), wrap_angle(raw.theta2), raw.lam
    )
    result = FitResult(
        params=params,
        residual_norm=math.sqrt(max(fun, 0.0)),
        iterations=int(winner.nit),
        converged=bool(winner.success),
        start_index=best_index,
    )
    if not result.converged:
        message_processor(
            f"Fit did not converge within {max_iterations} iterations; returning best-so-far",
            "warning",
        )
    logging.info(log_jamming(f"Fit result: {result}"))
    return result


def default_fit_initial_state():
    """Product state with transverse components on both qubits, so every parameter is visible."""
    q1 = np.array([1, 1], dtype=complex) / math.sqrt(2)
    q2 = np.array([math.cos(0.6), np.exp(0.4j) * math.sin(0.6)], dtype=complex)
    psi = np.kron(q1, q2)
    return DensityMatrix(np.outer(psi, np.conj(psi)))


def synthesize_problem(truth, steps=range(1, 9), initial_state=None, device=None, decoherence=True,
                       qme_stabilizer=None, shots=None, rng=None, seed=None):
    """
    Snapshots generated by the forward model at ``truth``.

    With ``shots`` every snapshot is a full tomography record drawn from ``rng``;
    otherwise exact expectations are stored.
    """
    initial_state = initial_state or default_fit_initial_state()
    device = device or DeviceParams()
    steps = list(steps)
    states = simulate_states(truth, steps, initial_state, device, decoherence, qme_stabilizer)
    snapshots = []
    for step, rho in zip(steps, states):
        if shots is None:
            snapshots.append(Snapshot(step, expectations=pauli_expectations(rho)))
        else:
            if rng is None:
                raise InvalidInputError("a random generator is required for shot-noise snapshots")
            snapshots.append(Snapshot(step, record=measure_all_settings(rho, shots, rng, seed)))
    return FitProblem(tuple(snapshots), initial_state, device, decoherence, qme_stabilizer)


def _coherence_to_dict(coh):
    return {"t1": coh.t1, "t2r": coh.t2r, "t1_cz": coh.t1_cz, "t2r_cz": coh.t2r_cz}


def problem_to_json(problem):
    """JSON-ready dictionary in the ``fit --snapshots`` file format."""
    m = problem.initial_state.matrix
    timing = problem.device.timing
    snapshots = []
    for snap in problem.snapshots:
        entry = {"step": snap.step}
        if snap.expectations is not None:
            entry["expectations"] = {k: float(v) for k, v in snap.expectations.items()}
        else:
            entry["record"] = {
                "shots_per_setting": snap.record.shots_per_setting,
                "counts": snap.record.counts,
                "seed": snap.record.seed,
            }
        snapshots.append(entry)
    return {
        "initial_state": {"real": np.real(m).tolist(), "imag": np.imag(m).tolist()},
        "device": {
            "qubit1": _coherence_to_dict(problem.device.qubit1),
            "qubit2": _coherence_to_dict(problem.device.qubit2),
            "timing": {"t_1qb": timing.t_1qb, "t_cz": timing.t_cz, "gap": timing.gap},
        },
        "decoherence": problem.decoherence,
        "qme_stabilizer": None if problem.qme_stabilizer is None else problem.qme_stabilizer.label,
        "snapshots": snapshots,
    }


def problem_from_json(document):
    """
    Inverse of :func:`problem_to_json`. Accepts a dictionary or a JSON string.

    Raises:
        InvalidInputError: on missing or malformed fields.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise InvalidInputError(f"snapshot file is not valid JSON: {e}") from e
    try:
        state = document["initial_state"]
        matrix = np.array(state["real"], dtype=float) + 1j * np.array(
            state.get("imag", 0.0), dtype=float
        )
        dev = document.get("device", {})
        defaults = DeviceParams()
        device = DeviceParams(
            qubit1=QubitCoherence(**dev["qubit1"]) if "qubit1" in dev else defaults.qubit1,
            qubit2=QubitCoherence(**dev["qubit2"]) if "qubit2" in dev else defaults.qubit2,
            timing=GateTiming(**dev["timing"]) if "timing" in dev else defaults.timing,
        )
        label = document.get("qme_stabilizer")
        snapshots = []
        for entry in document["snapshots"]:
            if "record" in entry:
                rec = entry["record"]
                counts = {k: {o: int(c) for o, c in v.items()} for k, v in rec["counts"].items()}
                record = TomographyRecord(
                    tuple(sorted(counts)), int(rec["shots_per_setting"]), counts, rec.get("seed")
                )
                snapshots.append(Snapshot(int(entry["step"]), record=record))
            else:
                snapshots.append(
                    Snapshot(int(entry["step"]), expectations=dict(entry["expectations"]))
                )
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidInputError(f"malformed snapshot document: missing or invalid {e}") from e
    return FitProblem(
        tuple(snapshots),
        DensityMatrix(matrix),
        device,
        bool(document.get("decoherence", True)),
        pauli_string(label) if label else None,
    )
