# experiments.py
"""
Parameterized sweeps behind the fig1, fig2, fig3, supp-axes and
supp-transversal subcommands.

Every sweep point is evaluated either with exact channels (the reference
curves) or by averaging sampled trajectories, optionally followed by shot-level
tomography of the averaged state. Sampled points draw from substreams keyed by
(curve, arm, x, trajectory), so results do not depend on thread scheduling.
"""

import enum
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .channels import (
    branch_channel,
    dephasing_channel,
    measurement_channel,
    pauli_string,
    projective_measurement_sample,
    qme_sample,
    stabilizer_from_axis,
)
from .codes import (
    CodeName,
    make_code,
    preparation_gates,
    prepare_logical,
    transversal_error_family,
)
from .densmat import (
    DensityMatrix,
    apply_unitary,
    basis_state,
    dagger,
    fidelity,
    from_bloch,
    tensor,
    trace_distance,
)
from .errors import InvalidInputError
from .noise import NoiseModel, describe, noisy_cz_step, rx, step_decoherence
from .tomography import measure_all_settings, pauli_expectations, reconstruct, spam_normalize
from .utils import log_jamming, message_processor, substream, substream_seed, worker_count

TRAJECTORY_STREAM = 0
TOMOGRAPHY_STREAM = 1

LINEAR_FIT_WINDOW = 0.02
LINEAR_FIT_POINTS = 21
LINEAR_FIT_DEGREE = 4


class SweepVariable(enum.Enum):
    INITIAL_STATE_GRID = "initial_state_grid"
    ERROR_ANGLE = "error_angle"
    SEQUENCE_LENGTH = "sequence_length"


class Arm(enum.Enum):
    NONE = "none"
    QME = "qme"
    REAL_MEASUREMENT = "real_measurement"
    IDENTITY_GATE = "identity_gate"
    STABILIZER_GATE = "stabilizer_gate"


class SweepMode(enum.Enum):
    EXACT = "exact"
    SAMPLED = "sampled"


DETERMINISTIC_ARMS = (Arm.NONE, Arm.IDENTITY_GATE, Arm.STABILIZER_GATE)


@dataclass(frozen=True)
class SweepSpec:
    """
    What to sweep and how to evaluate each point.

    ``shots`` of None means exact expectations; otherwise every point is
    reconstructed from that many shots per tomography setting.
    """

    variable: SweepVariable
    values: tuple
    arms: tuple
    mode: SweepMode = SweepMode.EXACT
    n_trajectories: int = 200
    shots: int = None
    master_seed: int = 20210301
    states: tuple = None

    def __post_init__(self):
        if not self.values:
            raise InvalidInputError("sweep values must not be empty")
        if not self.arms:
            raise InvalidInputError("sweep arms must not be empty")
        object.__setattr__(
            self, "arms", tuple(a if isinstance(a, Arm) else Arm(a) for a in self.arms)
        )
        if len(set(self.arms)) != len(self.arms):
            raise InvalidInputError(f"duplicate arms in {[a.value for a in self.arms]}")
        if self.n_trajectories < 1:
            raise InvalidInputError(f"n_trajectories must be at least 1, got {self.n_trajectories}")
        if self.shots is not None and self.shots < 1:
            raise InvalidInputError(f"shots must be at least 1, got {self.shots}")
        if self.variable is SweepVariable.SEQUENCE_LENGTH:
            if any(int(v) != v or v < 0 for v in self.values):
                raise InvalidInputError(
                    f"sequence lengths must be non-negative integers, got {list(self.values)}"
                )

    @property
    def mode_label(self):
        if self.mode is SweepMode.EXACT:
            label = "exact"
        else:
            label = f"sampled({self.n_trajectories})"
        return label if self.shots is None else f"{label};shots={self.shots}"


@dataclass(frozen=True)
class ResultRow:
    curve: str
    arm: str
    x: float
    trace_distance: float
    fidelity: float
    one_minus_t_norm: float
    fidelity_norm: float
    expectations: dict = field(hash=False)
    seed: int
    mode: str


@dataclass
class ExperimentResult:
    experiment: str
    rows: list
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class _PointTask:
    curve: str
    curve_index: int
    arm: Arm
    arm_index: int
    x: float
    x_index: int
    reference: DensityMatrix
    exact: object
    sample: object


def fig1_default_states():
    """12 states on the x-z great circle followed by the 6 axis states."""
    angles = [2 * math.pi * k / 12 for k in range(12)]
    circle = [(math.sin(a), 0.0, math.cos(a)) for a in angles]
    axes = [
        (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0), (0.0, -1.0, 0.0),
        (0.0, 0.0, 1.0), (0.0, 0.0, -1.0),
    ]
    return tuple(circle + axes)


def default_values(experiment):
    if experiment in ("fig1", "supp-axes"):
        return tuple(range(len(fig1_default_states())))
    if experiment == "fig3":
        return tuple(range(41))
    return tuple(float(v) for v in np.linspace(0.0, 1.2, 25))


DEFAULT_ARMS = {
    "fig1": (Arm.IDENTITY_GATE, Arm.STABILIZER_GATE, Arm.QME, Arm.REAL_MEASUREMENT),
    "supp-axes": (Arm.IDENTITY_GATE, Arm.STABILIZER_GATE, Arm.QME, Arm.REAL_MEASUREMENT),
    "fig2": (Arm.NONE, Arm.QME),
    "fig3": (Arm.NONE, Arm.QME),
    "supp-transversal": (Arm.NONE, Arm.QME),
}

VARIABLES = {
    "fig1": SweepVariable.INITIAL_STATE_GRID,
    "supp-axes": SweepVariable.INITIAL_STATE_GRID,
    "fig2": SweepVariable.ERROR_ANGLE,
    "supp-transversal": SweepVariable.ERROR_ANGLE,
    "fig3": SweepVariable.SEQUENCE_LENGTH,
}


def default_sweep(experiment, **overrides):
    """SweepSpec with the default grid and arms of ``experiment``."""
    if experiment not in VARIABLES:
        raise InvalidInputError(f"no sweep defined for experiment {experiment!r}")
    settings = {
        "variable": VARIABLES[experiment],
        "values": default_values(experiment),
        "arms": DEFAULT_ARMS[experiment],
    }
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return SweepSpec(**settings)


def _exact_insertion(rho, arm, s):
    if arm in (Arm.NONE, Arm.IDENTITY_GATE):
        return rho
    if arm is Arm.STABILIZER_GATE:
        return apply_unitary(rho, s.unitary)
    if arm is Arm.QME:
        return dephasing_channel(rho, s)
    return measurement_channel(rho, s)


def _sampled_insertion(rho, arm, s, rng):
    if arm is Arm.QME:
        return branch_channel(rho, qme_sample(s, rng))
    if arm is Arm.REAL_MEASUREMENT:
        _, post = projective_measurement_sample(rho, s, rng)
        return post
    return _exact_insertion(rho, arm, s)


def _insertion_decoherence(rho, arm, noise):
    """QME gates and measurements occupy a single-qubit slot when so configured."""
    if arm is Arm.NONE or noise is None:
        return rho
    if noise.decoherence and noise.qme_gate_duration:
        return step_decoherence(rho, noise.device, "single")
    return rho


def _evaluate(task, sweep):
    """Final state and row seed for one sweep point."""
    if sweep.mode is SweepMode.EXACT:
        rho = task.exact()
        seed = int(sweep.master_seed)
    elif task.arm in DETERMINISTIC_ARMS:
        # every trajectory is identical
        rho = task.exact()
        seed = substream_seed(sweep.master_seed, task.curve_index, task.arm_index, task.x_index)
    else:
        key = (task.curve_index, task.arm_index, task.x_index)
        total = np.zeros_like(task.reference.matrix)
        for t in range(sweep.n_trajectories):
            rng = substream(sweep.master_seed, TRAJECTORY_STREAM, *key, t)
            total = total + task.sample(rng).matrix
        mean = total / sweep.n_trajectories
        rho = DensityMatrix((mean + dagger(mean)) / 2)
        seed = substream_seed(sweep.master_seed, *key)
    if sweep.shots is not None:
        key = (task.curve_index, task.arm_index, task.x_index)
        rng = substream(sweep.master_seed, TOMOGRAPHY_STREAM, *key)
        rho = reconstruct(measure_all_settings(rho, sweep.shots, rng, seed)).rho
    return rho, seed


def _normalized_series(points, key, column):
    """Normalized values by x, or an empty mapping when the reference is too small to divide by."""
    try:
        return dict(spam_normalize(points))
    except InvalidInputError as e:
        curve, arm = key
        logging.warning(f"{column} of curve {curve!r}, arm {arm.value} left unnormalized: {e}")
        return {}


def _run_tasks(tasks, sweep, normalize):
    """
    Evaluate all points in parallel and assemble rows sorted by (curve, arm, x).

    With ``normalize`` each (curve, arm) series is divided by its value at the
    smallest x.
    A series whose reference is at or below SPAM_REFERENCE_TOL gets empty
    normalized columns.
    """
    start = time.perf_counter()
    workers = max(1, min(worker_count(), len(tasks)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        outcomes = list(executor.map(lambda task: _evaluate(task, sweep), tasks))

    def position(item):
        task = item[0]
        return task.curve_index, task.arm_index, task.x_index

    ordered = sorted(zip(tasks, outcomes), key=position)
    raw = []
    for task, (rho, seed) in ordered:
        raw.append(
            (task, rho, seed, trace_distance(rho, task.reference), fidelity(rho, task.reference))
        )

    norm_t, norm_f = {}, {}
    if normalize:
        groups = {}
        for task, _, _, t, f in raw:
            groups.setdefault((task.curve, task.arm), []).append((task.x, t, f))
        for key, points in groups.items():
            norm_t[key] = _normalized_series([(x, 1 - t) for x, t, _ in points], key, "one_minus_t")
            norm_f[key] = _normalized_series([(x, f) for x, _, f in points], key, "fidelity")

    rows = []
    for task, rho, seed, t, f in raw:
        key = (task.curve, task.arm)
        rows.append(
            ResultRow(
                curve=task.curve,
                arm=task.arm.value,
                x=task.x,
                trace_distance=t,
                fidelity=f,
                one_minus_t_norm=norm_t.get(key, {}).get(task.x),
                fidelity_norm=norm_f.get(key, {}).get(task.x),
                expectations=pauli_expectations(rho),
                seed=seed,
                mode=sweep.mode_label,
            )
        )
    elapsed = time.perf_counter() - start
    logging.info(f"Evaluated {len(tasks)} sweep points with {workers} worker(s) in {elapsed:.2f}s")
    return rows


def _base_metadata(experiment, sweep, **extra):
    metadata = {
        "experiment": experiment,
        "variable": sweep.variable.value,
        "arms": [a.value for a in sweep.arms],
        "mode": sweep.mode_label,
        "aggregated": sweep.mode is SweepMode.SAMPLED,
        "master_seed": int(sweep.master_seed),
    }
    metadata.update(extra)
    return metadata


def _single_qubit_tasks(sweep, curves):
    """fig1-style tasks: one curve per stabilizer, one point per initial state."""
    states = sweep.states or fig1_default_states()
    tasks = []
    for ci, (curve, s) in enumerate(curves):
        for ai, arm in enumerate(sweep.arms):
            for xi, value in enumerate(sweep.values):
                index = int(value)
                if index not in range(len(states)):
                    raise InvalidInputError(
                        f"state index {index} outside the {len(states)}-state grid"
                    )
                rho0 = from_bloch(states[index])
                tasks.append(
                    _PointTask(
                        curve, ci, arm, ai, index, xi, rho0,
                        exact=lambda rho0=rho0, arm=arm, s=s: _exact_insertion(rho0, arm, s),
                        sample=lambda rng, rho0=rho0, arm=arm, s=s: _sampled_insertion(
                            rho0, arm, s, rng
                        ),
                    )
                )
    return tasks, states


def run_fig1(sweep):
    """
    Initial states on a Bloch-sphere grid under 1, Z, QME_Z and a non-selective
    Z measurement. Rows report distance to the initial state and the final
    Bloch components.
    """
    if sweep.variable is not SweepVariable.INITIAL_STATE_GRID:
        raise InvalidInputError("fig1 sweeps the initial_state_grid variable")
    message_processor(f"fig1: {len(sweep.values)} initial states x {len(sweep.arms)} arms")
    tasks, states = _single_qubit_tasks(sweep, [("z", pauli_string("Z"))])
    rows = _run_tasks(tasks, sweep, normalize=False)
    return ExperimentResult(
        "fig1", rows, _base_metadata("fig1", sweep, states=[list(s) for s in states])
    )


def run_supp_axes(sweep, axis=None):
    """
    fig1 logic with QME along the x axis and along (x+y)/sqrt2, plus an
    optional extra ``axis`` curve.
    """
    if sweep.variable is not SweepVariable.INITIAL_STATE_GRID:
        raise InvalidInputError("supp-axes sweeps the initial_state_grid variable")
    r = 1 / math.sqrt(2)
    curves = [("x", stabilizer_from_axis(1.0, 0.0, 0.0)), ("xy", stabilizer_from_axis(r, r, 0.0))]
    if axis is not None:
        curves.append(("axis", stabilizer_from_axis(*axis)))
    message_processor(
        f"supp-axes: {len(curves)} axes x {len(sweep.values)} initial states"
        f" x {len(sweep.arms)} arms"
    )
    tasks, states = _single_qubit_tasks(sweep, curves)
    rows = _run_tasks(tasks, sweep, normalize=False)
    metadata = _base_metadata(
        "supp-axes", sweep, states=[list(s) for s in states], axes={c: s.label for c, s in curves}
    )
    return ExperimentResult("supp-axes", rows, metadata)


def _rotation_tasks(sweep, curves):
    """
    Error-angle tasks. ``curves`` holds (name, reference state, stabilizer,
    error unitary factory).
    """
    tasks = []
    for ci, (curve, rho0, s, unitary_for) in enumerate(curves):
        for ai, arm in enumerate(sweep.arms):
            for xi, theta in enumerate(sweep.values):
                u = unitary_for(float(theta))
                rotated = apply_unitary(rho0, u)
                tasks.append(
                    _PointTask(
                        curve, ci, arm, ai, float(theta), xi, rho0,
                        exact=lambda rotated=rotated, arm=arm, s=s: _exact_insertion(
                            rotated, arm, s
                        ),
                        sample=lambda rng, rotated=rotated, arm=arm, s=s: _sampled_insertion(
                            rotated, arm, s, rng
                        ),
                    )
                )
    return tasks


def _curve_value(rho0, s, unitary_for, arm, theta):
    """Exact 1 - T for one error angle."""
    rho = _exact_insertion(apply_unitary(rho0, unitary_for(theta)), arm, s)
    return 1 - trace_distance(rho, rho0)


def _linear_coefficients(curves, arms):
    xs = np.linspace(0.0, LINEAR_FIT_WINDOW, LINEAR_FIT_POINTS)
    table = {}
    for curve, rho0, s, unitary_for in curves:
        table[curve] = {}
        for arm in arms:
            ys = [_curve_value(rho0, s, unitary_for, arm, x) for x in xs]
            table[curve][arm.value] = linear_coefficient(xs, ys)
    return table


def _fig2_curves():
    code = make_code(CodeName.ZZ_CODE)
    return [
        ("1q", basis_state("0"), pauli_string("Z"), rx),
        ("2q", code.logical(1), code.stabilizer, lambda theta: tensor(rx(theta), rx(theta))),
    ]


def run_fig2(sweep):
    """
    Coherent R_x(theta) errors on |0> (QME_Z) and on the ZZ-code |1~>
    (R_x x R_x, QME_ZZ). Rows carry SPAM-normalized 1 - T.
    """
    if sweep.variable is not SweepVariable.ERROR_ANGLE:
        raise InvalidInputError("fig2 sweeps the error_angle variable")
    message_processor(f"fig2: {len(sweep.values)} error angles x {len(sweep.arms)} arms")
    curves = _fig2_curves()
    rows = _run_tasks(_rotation_tasks(sweep, curves), sweep, normalize=True)
    metadata = _base_metadata(
        "fig2",
        sweep,
        code=CodeName.ZZ_CODE.value,
        linear_coefficients=_linear_coefficients(curves, sweep.arms),
    )
    return ExperimentResult("fig2", rows, metadata)


def run_supp_transversal(sweep):
    """fig2 two-qubit curves for every member of the transversal error family on the ZZ code."""
    if sweep.variable is not SweepVariable.ERROR_ANGLE:
        raise InvalidInputError("supp-transversal sweeps the error_angle variable")
    code = make_code(CodeName.ZZ_CODE)
    curves = []
    for label in transversal_error_family(0.0):
        curves.append(
            (label, code.logical(1), code.stabilizer,
             lambda theta, label=label: transversal_error_family(theta)[label].unitary())
        )
    message_processor(
        f"supp-transversal: {len(curves)} error axes x {len(sweep.values)} angles"
        f" x {len(sweep.arms)} arms"
    )
    rows = _run_tasks(_rotation_tasks(sweep, curves), sweep, normalize=True)
    metadata = _base_metadata(
        "supp-transversal",
        sweep,
        code=CodeName.ZZ_CODE.value,
        linear_coefficients=_linear_coefficients(curves, sweep.arms),
    )
    return ExperimentResult("supp-transversal", rows, metadata)


def _fig3_sequence(rho, n_pairs, noise, arm, s, rng=None):
    for _ in range(n_pairs):
        rho = noisy_cz_step(rho, noise)
        rho = noisy_cz_step(rho, noise)
        if arm is Arm.NONE:
            continue
        rho = _exact_insertion(rho, arm, s) if rng is None else _sampled_insertion(rho, arm, s, rng)
        rho = _insertion_decoherence(rho, arm, noise)
    return rho


def run_fig3(sweep, noise=None, code_name=CodeName.XX_CODE, prepare_via_circuit=False):
    """
    Prepare |0~>, apply N CZ pairs with the stabilizer inserted after every
    pair, and record distance and fidelity to the ideal |0~>.

    Args:
        sweep (SweepSpec): sequence_length sweep.
        noise (NoiseModel): CZ errors and decoherence; defaults to the device
            values with no coherent error.
        code_name (CodeName): Code whose |0~> and stabilizer are used.
        prepare_via_circuit (bool): Prepare |0~> with the noisy gate circuit.
    """
    if sweep.variable is not SweepVariable.SEQUENCE_LENGTH:
        raise InvalidInputError("fig3 sweeps the sequence_length variable")
    noise = noise or NoiseModel()
    code = make_code(code_name)
    target = code.logical(0)
    start = prepare_logical(code, 0, via_circuit=prepare_via_circuit, noise=noise)
    s = code.stabilizer
    message_processor(
        f"fig3: N up to {max(sweep.values)} CZ pairs x {len(sweep.arms)} arms on {code.name.value}"
    )
    logging.debug(log_jamming(f"fig3 noise: {describe(noise)}"))

    tasks = []
    for ai, arm in enumerate(sweep.arms):
        for xi, n in enumerate(sweep.values):
            n = int(n)
            tasks.append(
                _PointTask(
                    code.name.value, 0, arm, ai, n, xi, target,
                    exact=lambda n=n, arm=arm: _fig3_sequence(start, n, noise, arm, s),
                    sample=lambda rng, n=n, arm=arm: _fig3_sequence(start, n, noise, arm, s, rng),
                )
            )
    rows = _run_tasks(tasks, sweep, normalize=True)
    circuit = {}
    if prepare_via_circuit:
        circuit["preparation_gates"] = [name for _, _, name in preparation_gates(code, 0)]
    metadata = _base_metadata(
        "fig3",
        sweep,
        code=code.name.value,
        noise=describe(noise),
        prepare_via_circuit=prepare_via_circuit,
        initial_fidelity=fidelity(start, target),
        **circuit,
    )
    return ExperimentResult("fig3", rows, metadata)


def linear_coefficient(xs, ys, degree=LINEAR_FIT_DEGREE):
    """First-order coefficient of a least-squares polynomial fit in the original x variable."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size <= degree:
        raise InvalidInputError(
            f"need more than {degree} points for a degree-{degree} fit, got {xs.size}"
        )
    coef = Polynomial.fit(xs, ys, degree).convert().coef
    return float(coef[1]) if coef.size > 1 else 0.0


def right_slope(f, h=1e-7):
    """(f(2h) - f(0)) / 2h: central difference about x = h."""
    if h <= 0:
        raise InvalidInputError(f"step must be positive, got {h}")
    return (f(2 * h) - f(0.0)) / (2 * h)


def run_experiment(experiment, sweep, noise=None, code_name=CodeName.XX_CODE,
                   prepare_via_circuit=False, axis=None):
    """Dispatch one sweep experiment by subcommand name."""
    if experiment == "fig1":
        return run_fig1(sweep)
    if experiment == "fig2":
        return run_fig2(sweep)
    if experiment == "fig3":
        return run_fig3(sweep, noise, code_name, prepare_via_circuit)
    if experiment == "supp-axes":
        return run_supp_axes(sweep, axis)
    if experiment == "supp-transversal":
        return run_supp_transversal(sweep)
    raise InvalidInputError(f"unknown experiment: {experiment!r}")
