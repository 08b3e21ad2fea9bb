"""Tests for lib/config_validator.py."""
import sys
from pathlib import Path

import pytest

# Add project root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from lib.config_validator import ConfigValidator
from lib.qme_config import create_default_config


@pytest.fixture
def valid_config():
    config = create_default_config()
    config["experiment"] = "fig3"
    return config


def errors_for(config):
    return ConfigValidator().validate_config(config)["errors"]


class TestConfigValidator:
    """Strict validation of merged configurations."""

    def test_defaults_valid(self, valid_config):
        """The default document with an experiment validates cleanly."""
        result = ConfigValidator().validate_config(valid_config)
        assert result == {"valid": True, "errors": [], "warnings": []}

    def test_experiment_required(self):
        """A document without an experiment is rejected."""
        assert any(
            e.startswith("experiment: is required") for e in errors_for(create_default_config())
        )

    def test_unknown_experiment(self, valid_config):
        """Experiment names outside the subcommand list are rejected."""
        valid_config["experiment"] = "fig4"
        assert any(e.startswith("experiment:") for e in errors_for(valid_config))

    def test_not_a_dict(self):
        """A non-object document is invalid."""
        result = ConfigValidator().validate_config([1, 2])
        assert result["valid"] is False

    def test_unknown_top_level_key(self, valid_config):
        """Misspelled top-level keys are named in the error."""
        valid_config["sede"] = 4
        assert "sede: unknown key" in errors_for(valid_config)

    def test_unknown_nested_key(self, valid_config):
        """Misspelled nested keys are reported with their dotted path."""
        valid_config["device"]["qubit1"]["t2"] = 10.0
        assert "device.qubit1.t2: unknown key" in errors_for(valid_config)

    def test_section_must_be_object(self, valid_config):
        """Sections given as scalars are rejected."""
        valid_config["noise"] = True
        assert any(e.startswith("noise: must be an object") for e in errors_for(valid_config))

    def test_lam_out_of_range(self, valid_config):
        """A leakage rate above 1 gives exactly one error on cz_errors.lam."""
        valid_config["cz_errors"]["lam"] = 1.5
        errors = errors_for(valid_config)
        assert len(errors) == 1
        assert errors[0].startswith("cz_errors.lam:")

    def test_negative_dephasing_rate(self, valid_config):
        """t2r above 2*t1 is rejected."""
        valid_config["device"]["qubit1"]["t2r"] = 50.0
        assert any(e.startswith("device.qubit1.t2r:") for e in errors_for(valid_config))

    def test_cz_trajectory_bound(self, valid_config):
        """t2r_cz above 2*t1_cz is rejected."""
        valid_config["device"]["qubit2"]["t2r_cz"] = 100.0
        assert any(e.startswith("device.qubit2.t2r_cz:") for e in errors_for(valid_config))

    def test_non_positive_time(self, valid_config):
        """Coherence times must be strictly positive."""
        valid_config["device"]["qubit2"]["t1"] = 0
        assert any(e.startswith("device.qubit2.t1:") for e in errors_for(valid_config))

    def test_zero_gap_allowed(self, valid_config):
        """A zero inter-pulse gap is valid."""
        valid_config["device"]["timing"]["gap"] = 0
        assert errors_for(valid_config) == []

    def test_bool_is_not_a_number(self, valid_config):
        """Booleans are not accepted where numbers are expected."""
        valid_config["cz_errors"]["phi"] = True
        assert any(e.startswith("cz_errors.phi:") for e in errors_for(valid_config))

    def test_errors_collected_together(self, valid_config):
        """All errors are reported in one pass."""
        valid_config["cz_errors"]["lam"] = -1
        valid_config["seed"] = -5
        valid_config["output"]["format"] = "xlsx"
        errors = errors_for(valid_config)
        assert len(errors) == 3

    def test_bad_arm(self, valid_config):
        """Unknown arm names are reported with their list index."""
        valid_config["sweep"]["arms"] = ["none", "qme_z"]
        assert any(e.startswith("sweep.arms[1]:") for e in errors_for(valid_config))

    def test_repeated_arm(self, valid_config):
        """An arm may appear only once."""
        valid_config["sweep"]["arms"] = ["qme", "qme"]
        assert any(e.startswith("sweep.arms:") for e in errors_for(valid_config))

    def test_bloch_vector_too_long(self, valid_config):
        """Initial states must lie inside the Bloch ball."""
        valid_config["sweep"]["states"] = [[1.0, 1.0, 0.0]]
        assert any(e.startswith("sweep.states[0]:") for e in errors_for(valid_config))

    def test_axis_must_be_unit(self, valid_config):
        """The QME axis must be a unit vector."""
        valid_config["sweep"]["axis"] = [1.0, 1.0, 0.0]
        assert any(e.startswith("sweep.axis:") for e in errors_for(valid_config))

    def test_n_starts_bounds(self, valid_config):
        """More than five fit starts are rejected."""
        valid_config["fit"]["n_starts"] = 6
        assert any(e.startswith("fit.n_starts:") for e in errors_for(valid_config))

    def test_initial_guess_validated(self, valid_config):
        """The fit guess obeys the same bounds as cz_errors."""
        valid_config["fit"]["initial_guess"]["lam"] = 2.0
        assert any(e.startswith("fit.initial_guess.lam:") for e in errors_for(valid_config))

    def test_shots_null_allowed(self, valid_config):
        """Null tomography shots mean exact expectations and are valid."""
        valid_config["tomography"]["shots_per_setting"] = None
        assert errors_for(valid_config) == []

    def test_log_level(self, valid_config):
        """Unknown log levels are rejected."""
        valid_config["logging"]["level"] = "LOUD"
        assert any(e.startswith("logging.level:") for e in errors_for(valid_config))

    def test_relative_phase_warning(self, valid_config):
        """Setting relative_phase with explicit theta values only warns."""
        valid_config["cz_errors"]["relative_phase"] = 0.1
        valid_config["cz_errors"]["theta1"] = 0.2
        result = ConfigValidator().validate_config(valid_config)
        assert result["valid"] is True
        assert result["warnings"] == ["cz_errors.relative_phase overrides theta1/theta2"]

    def test_few_trajectories_warning(self, valid_config):
        """Very few sampled trajectories produce a warning, not an error."""
        valid_config["sweep"]["mode"] = "sampled"
        valid_config["sweep"]["n_trajectories"] = 5
        result = ConfigValidator().validate_config(valid_config)
        assert result["valid"] is True
        assert len(result["warnings"]) == 1
