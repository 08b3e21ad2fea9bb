"""Tests for lib/fit.py."""
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

# Add project root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from lib.channels import dephasing_channel, pauli_string
from lib.densmat import basis_state
from lib.errors import InvalidInputError
from lib.fit import (
    FitProblem,
    Snapshot,
    default_fit_initial_state,
    fit_cz_params,
    numerical_gradient,
    objective,
    predict_expectations,
    problem_from_json,
    problem_to_json,
    simulate_states,
    synthesize_problem,
    wrap_angle,
)
from lib.noise import CzErrorParams, DeviceParams, NoiseModel, noisy_cz_step
from lib.tomography import pauli_expectations, pauli_labels

TRUTH = CzErrorParams(0.05, 0.02, -0.03, 0.005)


@pytest.fixture(scope="module")
def exact_problem():
    return synthesize_problem(TRUTH)


def _close(params, truth, tol):
    return all(abs(a - b) <= tol for a, b in zip(params.as_tuple(), truth.as_tuple()))


class TestWrapAngle:
    """Angles folded into (-pi, pi]."""

    @pytest.mark.parametrize("a,expected", [
        (0.0, 0.0),
        (math.pi, math.pi),
        (-math.pi, math.pi),
        (3 * math.pi / 2, -math.pi / 2),
        (2 * math.pi + 0.1, 0.1),
    ])
    def test_values(self, a, expected):
        """Angles are folded into (-pi, pi] with pi kept positive."""
        assert wrap_angle(a) == pytest.approx(expected, abs=1e-12)


class TestSnapshots:
    """Snapshot and problem construction."""

    def test_needs_exactly_one_source(self):
        """A snapshot needs one of expectations or record and a non-negative step."""
        with pytest.raises(InvalidInputError):
            Snapshot(1)
        with pytest.raises(InvalidInputError):
            Snapshot(-1, expectations={})

    def test_needs_two_snapshots(self):
        """A single snapshot cannot constrain the fit."""
        snap = Snapshot(1, expectations=pauli_expectations(default_fit_initial_state()))
        with pytest.raises(InvalidInputError, match="at least 2"):
            FitProblem((snap,), default_fit_initial_state())

    def test_duplicate_steps_rejected(self):
        """Two snapshots at the same step are refused."""
        values = pauli_expectations(default_fit_initial_state())
        snaps = (Snapshot(2, expectations=values), Snapshot(2, expectations=values))
        with pytest.raises(InvalidInputError, match="distinct"):
            FitProblem(snaps, default_fit_initial_state())

    def test_single_qubit_state_rejected(self):
        """Fits run on two-qubit initial states only."""
        values = {"X": 0.0, "Y": 0.0, "Z": 1.0}
        snaps = (Snapshot(0, expectations=values), Snapshot(1, expectations=values))
        with pytest.raises(InvalidInputError):
            FitProblem(snaps, basis_state("0"))

    def test_missing_label_reported(self):
        """Missing Pauli labels are named when the targets are built."""
        values = {"ZZ": 1.0}
        problem = FitProblem(
            (Snapshot(0, expectations=values), Snapshot(1, expectations=values)), basis_state("00")
        )
        with pytest.raises(InvalidInputError, match="missing"):
            problem.targets()

    def test_snapshots_sorted(self, exact_problem):
        """Snapshots are sorted by step, so their order does not change the objective."""
        shuffled = FitProblem(tuple(reversed(exact_problem.snapshots)), exact_problem.initial_state)
        assert shuffled.steps == list(range(1, 9))
        assert np.array_equal(shuffled.targets(), exact_problem.targets())
        assert objective(CzErrorParams(), shuffled) == objective(CzErrorParams(), exact_problem)

    def test_shot_snapshots_need_rng(self):
        """Shot-noise snapshots require a random generator."""
        with pytest.raises(InvalidInputError, match="random generator"):
            synthesize_problem(TRUTH, steps=[1, 2], shots=100)


class TestForwardModel:
    """Deterministic simulation of the CZ-pair sequence."""

    def test_step_zero_is_initial_state(self):
        """Step zero returns the initial state bit for bit."""
        rho0 = default_fit_initial_state()
        (state,) = simulate_states(TRUTH, [0], rho0)
        assert np.array_equal(state.matrix, rho0.matrix)

    def test_error_free_pairs_without_decoherence_are_identity(self):
        """Ideal CZ pairs without decoherence leave the state unchanged."""
        rho0 = default_fit_initial_state()
        for state in simulate_states(CzErrorParams(), [1, 3, 5], rho0, decoherence=False):
            assert np.max(np.abs(state.matrix - rho0.matrix)) <= 1e-12

    def test_exact_targets_have_zero_objective(self, exact_problem):
        """The generating parameters have zero objective on exact data."""
        assert objective(TRUTH, exact_problem) <= 1e-24

    def test_prediction_shape(self, exact_problem):
        """Predictions have one row per snapshot and fifteen columns."""
        assert predict_expectations(TRUTH, exact_problem).shape == (8, 15)

    def test_pair_map_matches_gate_by_gate_channels(self):
        """The vectorized step map agrees with the DensityMatrix channel chain."""
        rho0 = default_fit_initial_state()
        stabilizer = pauli_string("XX")
        noise = NoiseModel(DeviceParams(), TRUTH, decoherence=True)
        expected = {}
        rho = rho0
        for step in range(4):
            expected[step] = rho
            rho = noisy_cz_step(noisy_cz_step(rho, noise), noise)
            rho = dephasing_channel(rho, stabilizer)
        states = simulate_states(TRUTH, [0, 1, 3], rho0, qme_stabilizer=stabilizer)
        for step, state in zip([0, 1, 3], states):
            assert np.max(np.abs(state.matrix - expected[step].matrix)) <= 1e-12

    def test_prediction_matches_state_expectations(self, exact_problem):
        """Rows of predict_expectations are the Pauli expectations of the simulated states."""
        predicted = predict_expectations(TRUTH, exact_problem)
        for row, rho in zip(predicted, simulate_states(TRUTH, exact_problem)):
            values = pauli_expectations(rho)
            assert row == pytest.approx([values[label] for label in pauli_labels(2)], abs=1e-14)

    def test_objective_evaluation_is_fast(self, exact_problem):
        """A thousand objective evaluations finish within ten seconds."""
        targets = exact_problem.targets()
        start = time.perf_counter()
        for _ in range(1000):
            objective(TRUTH, exact_problem, targets)
        assert time.perf_counter() - start < 10.0

    def test_qme_stabilizer_applied(self):
        """A QME stabilizer changes the simulated state."""
        rho0 = default_fit_initial_state()
        (plain,) = simulate_states(CzErrorParams(), [1], rho0, decoherence=False)
        (qme,) = simulate_states(
            CzErrorParams(), [1], rho0, decoherence=False, qme_stabilizer=pauli_string("ZZ")
        )
        assert not np.allclose(plain.matrix, qme.matrix)


class TestFitting:
    """Nelder-Mead recovery of the CZ error parameters."""

    def test_exact_recovery(self, exact_problem):
        """A single start recovers the parameters from exact data."""
        result = fit_cz_params(exact_problem, n_starts=1)
        assert result.converged
        assert _close(result.params, TRUTH, 1e-6)
        assert result.residual_norm < 1e-6

    def test_multi_start_recovery_without_decoherence(self):
        """Five starts recover a different parameter set without decoherence."""
        truth = CzErrorParams(-0.04, 0.025, 0.01, 0.02)
        problem = synthesize_problem(truth, steps=range(1, 6), decoherence=False)
        result = fit_cz_params(problem)
        assert _close(result.params, truth, 1e-6)
        assert 0 <= result.start_index < 5

    def test_zero_errors(self):
        """Error-free data fits to zero angles, zero leakage and a vanishing residual."""
        problem = synthesize_problem(CzErrorParams(), steps=range(1, 6))
        result = fit_cz_params(problem, n_starts=1)
        p = result.params
        assert max(abs(p.phi), abs(p.theta1), abs(p.theta2)) < 1e-6
        assert p.lam < 1e-5
        assert result.residual_norm <= 1e-10

    def test_result_is_local_minimum(self, exact_problem):
        """No random nearby parameter set beats the fitted one."""
        result = fit_cz_params(exact_problem, n_starts=1)
        best = objective(result.params, exact_problem)
        base = np.array(result.params.as_tuple())
        rng = np.random.default_rng(2021)
        for _ in range(100):
            moved = base + rng.normal(scale=1e-4, size=4)
            moved[3] = min(max(moved[3], 0.0), 1.0)
            assert objective(CzErrorParams(*moved), exact_problem) >= best

    def test_single_start_fit_time_bound(self, exact_problem):
        """An exact single-start fit completes in seconds."""
        start = time.perf_counter()
        fit_cz_params(exact_problem, n_starts=1)
        assert time.perf_counter() - start < 20.0

    def test_gradient_points_downhill(self, exact_problem):
        """A small step against the numerical gradient lowers the objective."""
        start = np.array([0.05, 0.0, 0.0, 0.01])

        def f(x):
            return objective(CzErrorParams(*x), exact_problem)

        grad = numerical_gradient(f, start)
        stepped = start - 1e-3 * grad / np.linalg.norm(grad)
        assert f(stepped) < f(start)

    def test_iteration_cap_reports_not_converged(self, exact_problem):
        """Hitting the iteration cap is reported as not converged."""
        result = fit_cz_params(exact_problem, n_starts=1, max_iterations=5)
        assert not result.converged
        assert result.iterations <= 5

    @pytest.mark.parametrize("n_starts", [0, 6])
    def test_start_count_bounds(self, exact_problem, n_starts):
        """Start counts outside 1 to 5 are refused."""
        with pytest.raises(InvalidInputError):
            fit_cz_params(exact_problem, n_starts=n_starts)

    def test_shot_noise_recovery(self):
        """Median error over seeds at 10^4 shots per setting."""
        errors = []
        for seed in range(20):
            problem = synthesize_problem(
                TRUTH, shots=10000, rng=np.random.default_rng(seed), seed=seed
            )
            result = fit_cz_params(problem, n_starts=1)
            errors.append(np.abs(np.array(result.params.as_tuple()) - np.array(TRUTH.as_tuple())))
        median = np.median(errors, axis=0)
        assert np.all(median[:3] < 0.01)
        assert median[3] < 0.005


class TestSnapshotFile:
    """JSON snapshot documents."""

    def test_exact_round_trip(self, exact_problem):
        """Exact snapshots survive a JSON round trip."""
        text = json.dumps(problem_to_json(exact_problem))
        loaded = problem_from_json(text)
        assert loaded.steps == exact_problem.steps
        assert np.allclose(loaded.targets(), exact_problem.targets(), atol=1e-15)
        assert np.allclose(loaded.initial_state.matrix, exact_problem.initial_state.matrix)
        assert loaded.device == exact_problem.device

    def test_record_round_trip(self):
        """Count records and the QME stabilizer survive a round trip."""
        problem = synthesize_problem(
            TRUTH, steps=[0, 2], shots=64, rng=np.random.default_rng(1), seed=1,
            qme_stabilizer=pauli_string("XX"),
        )
        loaded = problem_from_json(problem_to_json(problem))
        assert loaded.snapshots[0].record.seed == 1
        assert loaded.qme_stabilizer.label == "XX"
        assert np.array_equal(loaded.targets(), problem.targets())

    def test_invalid_json(self):
        """Text that is not JSON is reported as such."""
        with pytest.raises(InvalidInputError, match="not valid JSON"):
            problem_from_json("{not json")

    def test_missing_snapshots(self, exact_problem):
        """A document without snapshots is malformed."""
        document = problem_to_json(exact_problem)
        del document["snapshots"]
        with pytest.raises(InvalidInputError, match="malformed"):
            problem_from_json(document)

    def test_non_numeric_step(self, exact_problem):
        """A step that is not a number is reported as a malformed document."""
        document = problem_to_json(exact_problem)
        document["snapshots"][0]["step"] = "two"
        with pytest.raises(InvalidInputError, match="malformed"):
            problem_from_json(document)

    def test_non_numeric_matrix_entry(self, exact_problem):
        """Matrix entries that do not parse as floats are reported as malformed."""
        document = problem_to_json(exact_problem)
        document["initial_state"]["real"][0][0] = "half"
        with pytest.raises(InvalidInputError, match="malformed"):
            problem_from_json(document)
