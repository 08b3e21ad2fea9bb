# qme_config.py

import os
import copy
import glob
import json
import logging
import logging.handlers
from pathlib import Path
from dataclasses import dataclass
from datetime import datetime, timedelta

from .codes import CodeName
from .config_validator import ConfigValidator
from .errors import ConfigFileNotFoundError, ConfigSyntaxError, ConfigValidationError
from .experiments import SweepMode, default_sweep
from .noise import (
    CzErrorParams,
    DeviceParams,
    GateTiming,
    NoiseModel,
    QubitCoherence,
    cz_errors_for_relative_phase,
)
from .utils import config_hash, log_jamming

CURRENT_VERSION = "1.0.0"
DEFAULT_SEED = 20210301
DEFAULT_LOGGING_FOLDER = os.path.join(Path.home(), "QmeLab", "logging")


def setup_logging(config):
    """
    Set up logging with rotation based on the provided configuration.

    Features:
    - Rotates log files when they reach 50MB
    - Keeps 14 backup files
    - Automatically cleans up logs older than 14 days

    Args:
        config (dict): Configuration dictionary with a ``logging`` section
            (folder, file_name, level).

    Returns:
        bool: True if logging setup was successful, False otherwise.
    """
    try:
        section = config.get("logging", {})
        logging_folder = os.path.expanduser(section.get("folder", DEFAULT_LOGGING_FOLDER))
        log_file_name = section.get("file_name", "qmelab.log")
        level = getattr(logging, str(section.get("level", "INFO")).upper(), logging.INFO)

        os.makedirs(logging_folder, exist_ok=True)
        logging_file = os.path.join(logging_folder, log_file_name)

        logger = logging.getLogger()
        logger.setLevel(level)

        # Remove any existing handlers to avoid duplicate logging
        for handler in logger.handlers[:]:
            logger.removeHandler(handler)

        file_handler = logging.handlers.RotatingFileHandler(
            filename=logging_file,
            maxBytes=50*1024*1024,  # 50MB per file
            backupCount=14,
            encoding='utf-8'
        )
        file_handler.setLevel(level)

        formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')
        file_handler.setFormatter(formatter)

        logger.addHandler(file_handler)

        _cleanup_old_logs(logging_folder, days_to_keep=14)

        logging.info(f"Logging initialized at {logging.getLevelName(level)} in {logging_file}")
        return True

    except Exception as e:
        print(f"Error setting up logging: {str(e)}")
        return False


def _cleanup_old_logs(log_directory, days_to_keep=14):
    """
    Remove log files older than ``days_to_keep`` days.
    """
    try:
        cutoff_date = datetime.now() - timedelta(days=days_to_keep)

        for log_file in glob.glob(os.path.join(log_directory, "*.log*")):
            try:
                file_time = datetime.fromtimestamp(os.path.getmtime(log_file))
                if file_time < cutoff_date:
                    os.remove(log_file)
            except (OSError, IOError):
                pass
    except Exception:
        pass


def create_default_config():
    """
    Create and return a dictionary containing default configuration settings.

    Device defaults are the measured two-qubit values: coherence times in µs,
    gate durations in ns. Only ``experiment`` has no default.

    Returns:
        dict: A dictionary containing the default configuration settings. Key sections include:
            - device: coherence times of both qubits and gate timing.
            - cz_errors: coherent CZ error parameters (all zero).
            - noise: decoherence and QME gate switches.
            - sweep: grid, arms and evaluation mode (null = experiment default).
            - tomography / fit: shot counts and optimizer settings.
            - output / logging: where results and logs go.
    """
    return {
        "experiment": None,
        "device": {
            "qubit1": {"t1": 23.0, "t2r": 13.0, "t1_cz": 17.0, "t2r_cz": 5.0},
            "qubit2": {"t1": 39.0, "t2r": 25.0, "t1_cz": 39.0, "t2r_cz": 25.0},
            "timing": {"t_1qb": 30.0, "t_cz": 60.0, "gap": 5.0},
        },
        "cz_errors": {"phi": 0.0, "theta1": 0.0, "theta2": 0.0, "lam": 0.0, "relative_phase": None},
        "code": CodeName.XX_CODE.value,
        "noise": {"decoherence": True, "qme_gate_duration": False, "prepare_via_circuit": False},
        "sweep": {
            "values": None,
            "arms": None,
            "mode": "exact",
            "n_trajectories": 200,
            "shots": None,
            "states": None,
            "axis": None,
        },
        "tomography": {"shots_per_setting": 4096},
        "fit": {
            "snapshots": None,
            "n_starts": 5,
            "max_iterations": 2000,
            "tolerance": 1e-10,
            "initial_guess": {"phi": 0.0, "theta1": 0.0, "theta2": 0.0, "lam": 0.0},
        },
        "output": {"path": "results.csv", "format": "csv"},
        "logging": {"folder": DEFAULT_LOGGING_FOLDER, "file_name": "qmelab.log", "level": "INFO"},
        "seed": DEFAULT_SEED,
    }


def recursive_update(existing, default):
    """
    Fill keys missing from ``existing`` with values from ``default``, recursing
    into sections present in both. Values already in ``existing`` win.
    """
    for key, value in default.items():
        if key not in existing:
            existing[key] = copy.deepcopy(value)
        elif isinstance(value, dict) and isinstance(existing[key], dict):
            recursive_update(existing[key], value)
    return existing


def load_document(path):
    """
    Read a JSON configuration document.

    Raises:
        ConfigFileNotFoundError: the file does not exist.
        ConfigSyntaxError: the file is not valid JSON or not an object.
    """
    path = os.path.expanduser(str(path))
    logging.info(f"Attempting to load configuration from {path}")
    try:
        with open(path, "r", encoding="utf-8") as file:
            document = json.load(file)
    except FileNotFoundError as e:
        raise ConfigFileNotFoundError(f"configuration file not found: {path}") from e
    except json.JSONDecodeError as e:
        where = f"line {e.lineno} column {e.colno}"
        raise ConfigSyntaxError(f"invalid JSON in {path}: {where}: {e.msg}") from e
    if not isinstance(document, dict):
        raise ConfigSyntaxError(f"top level of {path} must be a JSON object")
    return document


@dataclass(frozen=True)
class FitSettings:
    snapshots: str
    n_starts: int
    max_iterations: int
    tolerance: float
    initial_guess: CzErrorParams


@dataclass(frozen=True, eq=False)
class Config:
    """
    Fully validated run configuration.

    ``document`` is the merged JSON dictionary the run was built from; it is
    embedded in result files and hashed into ``config_hash``.
    """

    experiment: str
    device: DeviceParams
    cz_errors: CzErrorParams
    code: CodeName
    noise: NoiseModel
    prepare_via_circuit: bool
    tomography_shots: int
    fit: FitSettings
    output_path: str
    output_format: str
    seed: int
    document: dict
    config_hash: str

    def sweep_spec(self):
        """SweepSpec for sweep experiments; null entries fall back to the experiment defaults."""
        sweep = self.document["sweep"]
        states = sweep.get("states")
        return default_sweep(
            self.experiment,
            values=tuple(sweep["values"]) if sweep.get("values") is not None else None,
            arms=tuple(sweep["arms"]) if sweep.get("arms") is not None else None,
            mode=SweepMode(sweep["mode"]),
            n_trajectories=sweep["n_trajectories"],
            shots=sweep.get("shots"),
            master_seed=self.seed,
            states=None if states is None else tuple(tuple(float(c) for c in v) for v in states),
        )

    @property
    def axis(self):
        axis = self.document["sweep"].get("axis")
        return tuple(float(c) for c in axis) if axis is not None else None


def _coherence(section):
    return QubitCoherence(*(float(section[key]) for key in ("t1", "t2r", "t1_cz", "t2r_cz")))


def _cz_params(section):
    return CzErrorParams(*(float(section[key]) for key in ("phi", "theta1", "theta2", "lam")))


def config_from_dict(document):
    """
    Merge ``document`` with the defaults, validate strictly and build a :class:`Config`.

    Raises:
        ConfigValidationError: listing every problem with its dotted field path.
    """
    merged = recursive_update(copy.deepcopy(document), create_default_config())
    result = ConfigValidator().validate_config(merged)
    if not result["valid"]:
        raise ConfigValidationError(result["errors"])

    dev = merged["device"]
    timing = dev["timing"]
    device = DeviceParams(
        qubit1=_coherence(dev["qubit1"]),
        qubit2=_coherence(dev["qubit2"]),
        timing=GateTiming(float(timing["t_1qb"]), float(timing["t_cz"]), float(timing["gap"])),
    )
    cz = merged["cz_errors"]
    cz_errors = _cz_params(cz)
    if cz.get("relative_phase") is not None:
        shifted = cz_errors_for_relative_phase(float(cz["relative_phase"]))
        cz_errors = CzErrorParams(cz_errors.phi, shifted.theta1, shifted.theta2, cz_errors.lam)
    noise = NoiseModel(
        device=device,
        cz_errors=cz_errors,
        decoherence=merged["noise"]["decoherence"],
        qme_gate_duration=merged["noise"]["qme_gate_duration"],
    )
    fit = merged["fit"]
    config = Config(
        experiment=merged["experiment"],
        device=device,
        cz_errors=cz_errors,
        code=CodeName(merged["code"]),
        noise=noise,
        prepare_via_circuit=merged["noise"]["prepare_via_circuit"],
        tomography_shots=merged["tomography"]["shots_per_setting"],
        fit=FitSettings(
            snapshots=fit["snapshots"],
            n_starts=fit["n_starts"],
            max_iterations=fit["max_iterations"],
            tolerance=float(fit["tolerance"]),
            initial_guess=_cz_params(fit["initial_guess"]),
        ),
        output_path=merged["output"]["path"],
        output_format=merged["output"]["format"],
        seed=merged["seed"],
        document=merged,
        config_hash=config_hash(merged),
    )
    logging.debug(log_jamming(f"Config loaded: {json.dumps(merged, sort_keys=True)}"))
    return config


def apply_overrides(document, **overrides):
    """
    Write command-line overrides into a raw configuration document.

    Recognized keys: experiment, seed, out, format, exact, trajectories,
    shots, snapshots, log_level. None means "not given".
    """
    document = copy.deepcopy(document)
    mapping = {
        "experiment": ("experiment",),
        "seed": ("seed",),
        "out": ("output", "path"),
        "format": ("output", "format"),
        "trajectories": ("sweep", "n_trajectories"),
        "snapshots": ("fit", "snapshots"),
        "log_level": ("logging", "level"),
    }
    for name, path in mapping.items():
        value = overrides.get(name)
        if value is None:
            continue
        section = document
        for key in path[:-1]:
            section = section.setdefault(key, {})
        section[path[-1]] = value
    if overrides.get("exact"):
        document.setdefault("sweep", {})["mode"] = "exact"
    elif overrides.get("trajectories") is not None:
        document.setdefault("sweep", {})["mode"] = "sampled"
    shots = overrides.get("shots")
    if shots is not None:
        if str(shots) == "exact":
            document.setdefault("sweep", {})["shots"] = None
            document.setdefault("tomography", {})["shots_per_setting"] = None
        else:
            document.setdefault("sweep", {})["shots"] = int(shots)
    return document


def parse_config(path=None, **overrides):
    """
    Load, merge, override and validate a configuration.

    Args:
        path (str, optional): JSON document; without it only defaults and
            overrides are used.
        **overrides: See :func:`apply_overrides`.

    Returns:
        Config: The validated configuration.
    """
    document = load_document(path) if path else {}
    return config_from_dict(apply_overrides(document, **overrides))
