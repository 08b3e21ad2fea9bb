# utils.py
"""
Utility functions for console/log messages, canonical hashing, worker-thread
caps and seed derivation.
"""
import os
import json
import math
import hashlib
import logging
import textwrap

import numpy as np
import psutil

THREADS_ENV_VAR = "QMELAB_THREADS"
_console = {"echo": True}


def set_quiet(quiet):
    """
    Silence console echo of message_processor; logging is unaffected.

    Returns:
        bool: The previous quiet setting.
    """
    was_quiet = not _console["echo"]
    _console["echo"] = not quiet
    return was_quiet


def log_jamming(log_message):
    """
    Formats a log message to fit a specified width with indentation.

    This function wraps the log message to a width of 90 characters and adds
    indentation to align subsequent lines with the end of the log preface.

    Args:
        log_message (str): The log message to be formatted.

    Returns:
        str: The formatted log message.

    Example of use:
    log_jamming("Config loaded: {'experiment': 'fig3', 'device': {...}, 'sweep': {...}}")

    This will return a formatted string that looks like this in the output (example):
    2024-03-30 19:36:24,025 - INFO - Config loaded: {'experiment': 'fig3', 'device':
                                {'qubit1': {'t1': 23.0, 't2r': 13.0, 't1_cz': 17.0,
                                't2r_cz': 5.0}, ...}}
    """
    log_preface = 34  # This is the length of the date, time, and info log preface
    return textwrap.fill(
        log_message, width=90, initial_indent='', subsequent_indent=' ' * log_preface
    )


def message_processor(message, log_level="info", print_me=True):
    """
    Prints a message to the console with a level prefix and logs it.

    Args:
        message (str): The message to be processed.
        log_level (str, optional): The logging level. Defaults to "info".
        print_me (bool, optional): Whether to print the message. Defaults to True.
    """
    MESSAGE_PREFIXES = {
        "info": "[i]\t",
        "warning": "[!?]\t",
        "error": "[!]\t",
        "result": "[>]\t",
        "none": ""
    }
    if print_me and _console["echo"]:
        prefix = MESSAGE_PREFIXES.get(log_level, MESSAGE_PREFIXES.get("info"))
        print(f"{prefix}{message}")

    level = "info" if log_level in ("result", "none") else log_level
    log_func = getattr(logging, level, logging.info)
    log_func(message)


def _normalize_for_hash(value):
    """Integers that are whole floats hash like floats; -0.0 hashes like 0.0."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        value = float(value)
        if not math.isfinite(value):
            return repr(value)
        return 0.0 if value == 0 else value
    if isinstance(value, dict):
        return {str(k): _normalize_for_hash(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize_for_hash(v) for v in value]
    return str(value)


def canonical_json(value):
    """Sorted-key compact JSON with normalized numbers."""
    return json.dumps(_normalize_for_hash(value), sort_keys=True, separators=(",", ":"))


def config_hash(config_dict, exclude=("output", "logging")):
    """
    SHA-256 of the semantically meaningful part of a configuration dictionary.

    Args:
        config_dict (dict): Fully merged configuration.
        exclude (tuple): Top-level sections that never change results.

    Returns:
        str: Hex digest.
    """
    relevant = {k: v for k, v in config_dict.items() if k not in exclude}
    return hashlib.sha256(canonical_json(relevant).encode("utf-8")).hexdigest()


def worker_count():
    """
    Worker threads for parallel sweeps, from QMELAB_THREADS (0 or unset = all CPUs).
    """
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    cpus = psutil.cpu_count() or 1
    if not raw:
        return cpus
    try:
        requested = int(raw)
    except ValueError:
        logging.warning(f"Ignoring non-integer {THREADS_ENV_VAR}={raw!r}")
        return cpus
    if requested <= 0:
        return cpus
    return requested


def substream(master_seed, *key):
    """
    Independent numpy Generator for ``key`` under ``master_seed``.

    The stream depends only on (master_seed, key), never on scheduling order.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(seq)


def substream_seed(master_seed, *key):
    """32-bit integer identifying a substream, for result rows."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1)[0])
