# main.py

import sys
import os
import logging
import argparse

from lib.config_validator import EXPERIMENTS
from lib.errors import ConfigFileNotFoundError, QmeLabError, VerificationFailedError
from lib.experiments import run_experiment
from lib.fit import fit_cz_params, problem_from_json, synthesize_problem
from lib.qme_config import CURRENT_VERSION, parse_config, setup_logging
from lib.resource_monitor import monitor_resource_usage
from lib.results import build_header, experiment_table, fit_table, verify_table, write_result_file
from lib.utils import message_processor, set_quiet, substream
from lib.verify import run_all

SWEEP_EXPERIMENTS = ("fig1", "fig2", "fig3", "supp-axes", "supp-transversal")


def shots_arg(value):
    """argparse type for --shots: a positive integer or the word 'exact'."""
    if value == "exact":
        return value
    try:
        shots = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'exact', got {value!r}")
    if shots < 1:
        raise argparse.ArgumentTypeError(f"shots must be positive, got {shots}")
    return shots


def build_parser():
    parser = argparse.ArgumentParser(
        description="QmeLab - quantum measurement emulation on noisy two-qubit devices"
    )
    parser.add_argument("subcommand", choices=EXPERIMENTS,
                        help="Experiment to run")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON configuration file (defaults are used for anything not given)")
    parser.add_argument("--seed", type=int, default=None,
                        help="Master seed, overrides the config")
    parser.add_argument("--out", type=str, default=None,
                        help="Result file path, overrides output.path")
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="Result file format, overrides output.format")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true",
                      help="Evaluate every point with exact channels")
    mode.add_argument("--trajectories", type=int, default=None,
                      help="Evaluate every point by averaging N sampled trajectories")
    parser.add_argument("--shots", type=shots_arg, default=None,
                        help="Tomography shots per setting, or 'exact'")
    parser.add_argument("--snapshots", type=str, default=None,
                        help="Snapshot file for the fit subcommand")
    parser.add_argument("--quiet", action="store_true",
                        help="Suppress console output (the log file is still written)")
    parser.add_argument("--log-level", type=str.upper, default=None,
                        choices=("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"),
                        help="Override logging.level")
    return parser


def _run_sweep(config):
    result = run_experiment(
        config.experiment,
        config.sweep_spec(),
        noise=config.noise,
        code_name=config.code,
        prepare_via_circuit=config.prepare_via_circuit,
        axis=config.axis,
    )
    columns, rows = experiment_table(result)
    return result.metadata, columns, rows


def _load_fit_problem(config):
    path = config.fit.snapshots
    if path:
        path = os.path.expanduser(path)
        if not os.path.exists(path):
            raise ConfigFileNotFoundError(
                f"snapshot file not found: {path}", field_path="fit.snapshots"
            )
        with open(path, "r", encoding="utf-8") as f:
            return problem_from_json(f.read()), {"snapshots": path}

    # no snapshot file: fit synthetic snapshots generated at the configured CZ errors,
    # read out with sweep.shots or tomography.shots_per_setting shots (null in both = exact)
    shots = config.document["sweep"].get("shots") or config.tomography_shots
    rng = substream(config.seed, 2) if shots else None
    problem = synthesize_problem(
        config.cz_errors,
        device=config.device,
        decoherence=config.noise.decoherence,
        shots=shots,
        rng=rng,
        seed=config.seed if shots else None,
    )
    message_processor(
        f"No snapshot file given; fitting synthetic snapshots at {config.cz_errors}", "warning"
    )
    return problem, {"synthetic_truth": list(config.cz_errors.as_tuple()), "shots": shots}


def _run_fit(config):
    problem, metadata = _load_fit_problem(config)
    result = fit_cz_params(
        problem,
        initial_guess=config.fit.initial_guess,
        n_starts=config.fit.n_starts,
        max_iterations=config.fit.max_iterations,
        tolerance=config.fit.tolerance,
    )
    p = result.params
    message_processor(
        f"phi={p.phi:.6g} theta1={p.theta1:.6g} theta2={p.theta2:.6g} lam={p.lam:.6g} "
        f"(residual {result.residual_norm:.3e}, {result.iterations} iterations)",
        "result",
    )
    metadata.update(n_snapshots=len(problem.snapshots), steps=problem.steps)
    columns, rows = fit_table(result)
    return metadata, columns, rows


def _run_verify(config):
    checks = run_all(config.seed)
    for check in checks:
        status = "ok" if check.passed else "FAILED"
        message_processor(
            f"{check.suite}/{check.name}: max residual {check.max_residual:.3e} "
            f"(threshold {check.threshold:.0e}) {status}",
            "result",
        )
    columns, rows = verify_table(checks)
    failed = [f"{c.suite}/{c.name}" for c in checks if not c.passed]
    return {"failed": failed}, columns, rows


def run(subcommand, config):
    """
    Execute one subcommand and write its result file.

    Returns:
        tuple: (exit code, result file path)

    Raises:
        QmeLabError: on any failure; main() turns it into an exit code.
    """
    if subcommand in SWEEP_EXPERIMENTS:
        metadata, columns, rows = _run_sweep(config)
    elif subcommand == "fit":
        metadata, columns, rows = _run_fit(config)
    else:
        metadata, columns, rows = _run_verify(config)

    header = build_header(config, metadata, CURRENT_VERSION)
    path = write_result_file(config.output_path, config.output_format, header, columns, rows)
    message_processor(f"Wrote {len(rows)} rows to {path}", "result")

    if subcommand == "verify-channels" and metadata["failed"]:
        raise VerificationFailedError(
            f"residual above threshold in {', '.join(metadata['failed'])}"
        )
    return 0, path


def main(argv=None):
    """
    Parse arguments, load the configuration, run the subcommand and map any
    error onto its exit code.
    """
    args = build_parser().parse_args(argv)
    was_quiet = set_quiet(args.quiet)

    try:
        config = parse_config(
            args.config,
            experiment=args.subcommand,
            seed=args.seed,
            out=args.out,
            format=args.format,
            exact=args.exact,
            trajectories=args.trajectories,
            shots=args.shots,
            snapshots=args.snapshots,
            log_level=args.log_level,
        )
        setup_logging(config.document)
        logging.info(
            f"QmeLab {CURRENT_VERSION}: {args.subcommand}, config hash {config.config_hash}"
        )
        (exit_code, _), report = monitor_resource_usage(run, args.subcommand, config)
        logging.info(f"Finished {args.subcommand} in {report['duration_seconds']}s")
        return exit_code

    except QmeLabError as e:
        message_processor(str(e), "error")
        return e.exit_code

    except KeyboardInterrupt:
        message_processor("Interrupted", "warning")
        return 130

    except Exception as e:
        logging.exception("Unexpected error")
        message_processor(f"Unexpected error: {e}", "error")
        return 1

    finally:
        set_quiet(was_quiet)


if __name__ == "__main__":
    sys.exit(main())
