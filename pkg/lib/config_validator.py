# config_validator.py

import math
import logging

EXPERIMENTS = ("fig1", "fig2", "fig3", "supp-axes", "supp-transversal", "fit", "verify-channels")
ARMS = ("none", "qme", "real_measurement", "identity_gate", "stabilizer_gate")
CODES = ("ZZ_code", "XX_code")
MODES = ("exact", "sampled")
FORMATS = ("csv", "json")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

_QUBIT = {"t1": None, "t2r": None, "t1_cz": None, "t2r_cz": None}
_CZ = {"phi": None, "theta1": None, "theta2": None, "lam": None}

# Leaves are None; nested dictionaries are sections.
SCHEMA = {
    "experiment": None,
    "device": {
        "qubit1": _QUBIT,
        "qubit2": _QUBIT,
        "timing": {"t_1qb": None, "t_cz": None, "gap": None},
    },
    "cz_errors": dict(_CZ, relative_phase=None),
    "code": None,
    "noise": {"decoherence": None, "qme_gate_duration": None, "prepare_via_circuit": None},
    "sweep": {
        "values": None,
        "arms": None,
        "mode": None,
        "n_trajectories": None,
        "shots": None,
        "states": None,
        "axis": None,
    },
    "tomography": {"shots_per_setting": None},
    "fit": {
        "snapshots": None,
        "n_starts": None,
        "max_iterations": None,
        "tolerance": None,
        "initial_guess": _CZ,
    },
    "output": {"path": None, "format": None},
    "logging": {"folder": None, "file_name": None, "level": None},
    "seed": None,
}


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


class ConfigValidator:
    """
    Strict validation of a merged QmeLab configuration.

    Every problem is collected as a message starting with the dotted path of
    the offending key, e.g. ``cz_errors.lam: must lie in [0, 1], got 1.5``.
    """

    def __init__(self):
        self.validation_errors = []
        self.validation_warnings = []

    def validate_config(self, config):
        """
        Validate a configuration dictionary.

        Args:
            config (dict): Defaults merged with the user document.

        Returns:
            dict: Validation results with status, errors and warnings.
        """
        self.validation_errors = []
        self.validation_warnings = []

        if not isinstance(config, dict):
            return self._create_result(False, ["configuration must be a JSON object"])

        self._validate_unknown_keys(config, SCHEMA, "")
        self._validate_experiment(config)
        self._validate_device(config.get("device", {}))
        self._validate_cz_errors(config.get("cz_errors", {}), "cz_errors")
        self._validate_choice(config.get("code"), CODES, "code")
        self._validate_noise(config.get("noise", {}))
        self._validate_sweep(config.get("sweep", {}))
        self._validate_tomography(config.get("tomography", {}))
        self._validate_fit(config.get("fit", {}))
        self._validate_output(config.get("output", {}))
        self._validate_logging(config.get("logging", {}))
        self._validate_seed(config.get("seed"))

        is_valid = len(self.validation_errors) == 0
        return self._create_result(is_valid, self.validation_errors, self.validation_warnings)

    def _error(self, path, message):
        self.validation_errors.append(f"{path}: {message}")

    def _validate_unknown_keys(self, section, schema, prefix):
        for key, value in section.items():
            path = f"{prefix}{key}"
            if key not in schema:
                self._error(path, "unknown key")
                continue
            sub = schema[key]
            if isinstance(sub, dict):
                if not isinstance(value, dict):
                    self._error(path, f"must be an object, got {type(value).__name__}")
                    continue
                self._validate_unknown_keys(value, sub, f"{path}.")

    def _validate_choice(self, value, allowed, path):
        if value not in allowed:
            self._error(path, f"must be one of {', '.join(allowed)}, got {value!r}")

    def _validate_experiment(self, config):
        if "experiment" not in config or config["experiment"] is None:
            self._error("experiment", "is required")
            return
        self._validate_choice(config["experiment"], EXPERIMENTS, "experiment")

    def _validate_positive(self, section, key, path, allow_zero=False):
        value = section.get(key)
        if not _is_number(value) or value < 0 or (value == 0 and not allow_zero):
            bound = "non-negative" if allow_zero else "positive"
            self._error(f"{path}.{key}", f"must be a {bound} number, got {value!r}")
            return False
        return True

    def _validate_device(self, device):
        if not isinstance(device, dict):
            return
        for qubit in ("qubit1", "qubit2"):
            coh = device.get(qubit, {})
            if not isinstance(coh, dict):
                continue
            path = f"device.{qubit}"
            keys = ("t1", "t2r", "t1_cz", "t2r_cz")
            valid = all([self._validate_positive(coh, key, path) for key in keys])
            if not valid:
                continue
            if coh["t2r"] > 2 * coh["t1"]:
                self._error(
                    f"{path}.t2r",
                    f"{coh['t2r']} exceeds 2*t1 = {2 * coh['t1']} (negative dephasing rate)",
                )
            if coh["t2r_cz"] > 2 * coh["t1_cz"]:
                self._error(
                    f"{path}.t2r_cz", f"{coh['t2r_cz']} exceeds 2*t1_cz = {2 * coh['t1_cz']}"
                )
        timing = device.get("timing", {})
        if isinstance(timing, dict):
            for key in ("t_1qb", "t_cz", "gap"):
                self._validate_positive(timing, key, "device.timing", allow_zero=True)

    def _validate_cz_errors(self, cz, path):
        if not isinstance(cz, dict):
            return
        for key in ("phi", "theta1", "theta2", "lam"):
            if not _is_number(cz.get(key)):
                self._error(f"{path}.{key}", f"must be a finite number, got {cz.get(key)!r}")
        lam = cz.get("lam")
        if _is_number(lam) and not 0.0 <= lam <= 1.0:
            self._error(f"{path}.lam", f"must lie in [0, 1], got {lam}")
        delta = cz.get("relative_phase")
        if delta is not None and not _is_number(delta):
            self._error(f"{path}.relative_phase", f"must be a finite number or null, got {delta!r}")
        elif delta is not None and (cz.get("theta1") or cz.get("theta2")):
            self.validation_warnings.append(f"{path}.relative_phase overrides theta1/theta2")

    def _validate_noise(self, noise):
        if not isinstance(noise, dict):
            return
        for key in ("decoherence", "qme_gate_duration", "prepare_via_circuit"):
            if not isinstance(noise.get(key), bool):
                self._error(f"noise.{key}", f"must be true or false, got {noise.get(key)!r}")

    def _validate_sweep(self, sweep):
        if not isinstance(sweep, dict):
            return
        values = sweep.get("values")
        if values is not None:
            if not isinstance(values, list) or not values:
                self._error("sweep.values", "must be a non-empty list or null")
            elif not all(_is_number(v) for v in values):
                self._error("sweep.values", "must contain only finite numbers")
        arms = sweep.get("arms")
        if arms is not None:
            if not isinstance(arms, list) or not arms:
                self._error("sweep.arms", "must be a non-empty list or null")
            else:
                for i, arm in enumerate(arms):
                    self._validate_choice(arm, ARMS, f"sweep.arms[{i}]")
                if len(set(map(str, arms))) != len(arms):
                    self._error("sweep.arms", "must not repeat an arm")
        self._validate_choice(sweep.get("mode"), MODES, "sweep.mode")
        n = sweep.get("n_trajectories")
        if not _is_int(n) or n < 1:
            self._error("sweep.n_trajectories", f"must be a positive integer, got {n!r}")
        elif sweep.get("mode") == "sampled" and n < 30:
            self.validation_warnings.append(
                f"sweep.n_trajectories = {n} gives noisy sampled curves"
            )
        shots = sweep.get("shots")
        if shots is not None and (not _is_int(shots) or shots < 1):
            self._error("sweep.shots", f"must be a positive integer or null, got {shots!r}")
        states = sweep.get("states")
        if states is not None:
            if not isinstance(states, list) or not states:
                self._error("sweep.states", "must be a non-empty list of Bloch vectors or null")
            else:
                for i, v in enumerate(states):
                    if not (isinstance(v, list) and len(v) == 3 and all(_is_number(c) for c in v)):
                        self._error(f"sweep.states[{i}]", f"must be [x, y, z], got {v!r}")
                    elif sum(c * c for c in v) > 1 + 1e-10:
                        self._error(f"sweep.states[{i}]", f"Bloch vector {v} is longer than 1")
        axis = sweep.get("axis")
        if axis is not None:
            if not (isinstance(axis, list) and len(axis) == 3 and all(_is_number(c) for c in axis)):
                self._error("sweep.axis", f"must be [nx, ny, nz] or null, got {axis!r}")
            elif abs(math.sqrt(sum(c * c for c in axis)) - 1) > 1e-10:
                self._error("sweep.axis", f"must be a unit vector, got {axis}")

    def _validate_tomography(self, tomography):
        if not isinstance(tomography, dict):
            return
        shots = tomography.get("shots_per_setting")
        if shots is not None and (not _is_int(shots) or shots < 1):
            self._error(
                "tomography.shots_per_setting", f"must be a positive integer or null, got {shots!r}"
            )

    def _validate_fit(self, fit):
        if not isinstance(fit, dict):
            return
        snapshots = fit.get("snapshots")
        if snapshots is not None and not isinstance(snapshots, str):
            self._error("fit.snapshots", f"must be a file path or null, got {snapshots!r}")
        n_starts = fit.get("n_starts")
        if not _is_int(n_starts) or not 1 <= n_starts <= 5:
            self._error("fit.n_starts", f"must be an integer in [1, 5], got {n_starts!r}")
        max_iterations = fit.get("max_iterations")
        if not _is_int(max_iterations) or max_iterations < 1:
            self._error("fit.max_iterations", f"must be a positive integer, got {max_iterations!r}")
        tolerance = fit.get("tolerance")
        if not _is_number(tolerance) or tolerance <= 0:
            self._error("fit.tolerance", f"must be a positive number, got {tolerance!r}")
        guess = fit.get("initial_guess", {})
        if isinstance(guess, dict):
            self._validate_cz_errors(guess, "fit.initial_guess")

    def _validate_output(self, output):
        if not isinstance(output, dict):
            return
        if not isinstance(output.get("path"), str) or not output.get("path"):
            self._error("output.path", f"must be a non-empty string, got {output.get('path')!r}")
        self._validate_choice(output.get("format"), FORMATS, "output.format")

    def _validate_logging(self, section):
        if not isinstance(section, dict):
            return
        for key in ("folder", "file_name"):
            if not isinstance(section.get(key), str) or not section.get(key):
                self._error(
                    f"logging.{key}", f"must be a non-empty string, got {section.get(key)!r}"
                )
        level = section.get("level")
        if not isinstance(level, str) or level.upper() not in LOG_LEVELS:
            self._error("logging.level", f"must be one of {', '.join(LOG_LEVELS)}, got {level!r}")

    def _validate_seed(self, seed):
        if not _is_int(seed) or seed < 0:
            self._error("seed", f"must be a non-negative integer, got {seed!r}")

    def _create_result(self, is_valid, errors=None, warnings=None):
        """Create a standardized validation result."""
        for warning in warnings or []:
            logging.warning(f"Config: {warning}")
        return {
            "valid": is_valid,
            "errors": errors or [],
            "warnings": warnings or [],
        }
