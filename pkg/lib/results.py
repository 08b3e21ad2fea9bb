# results.py
"""
Result file writer. Tables go to CSV (default) or JSON with a metadata header;
files are written atomically so an aborted run never leaves a partial file.
"""

import io
import csv
import json
import logging
import os
import tempfile

from .errors import OutputError
from .noise import CZ_ERROR_ORDER, LEAKAGE_PLACEMENT
from .tomography import pauli_labels

TOOL_NAME = "QmeLab"
FLOAT_FORMAT = ".17g"

BASE_COLUMNS = (
    "curve", "arm", "x", "trace_distance", "fidelity", "one_minus_t_norm", "fidelity_norm"
)
TAIL_COLUMNS = ("seed", "mode")
FIT_COLUMNS = (
    "phi", "theta1", "theta2", "lam", "residual_norm", "iterations", "converged", "start_index"
)
VERIFY_COLUMNS = ("suite", "name", "max_residual", "threshold", "passed")


def build_header(config, metadata=None, version="1.0.0"):
    """
    Header metadata for a result file. Contains no timestamps, so identical
    runs produce identical bytes.
    """
    return {
        "tool": f"{TOOL_NAME} {version}",
        "experiment": config.experiment,
        "config_hash": config.config_hash,
        "seed": config.seed,
        "leakage_kraus": LEAKAGE_PLACEMENT,
        "cz_error_order": ",".join(CZ_ERROR_ORDER),
        "metadata": metadata or {},
        "config": config.document,
    }


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    return str(value)


def experiment_table(result):
    """Columns and row dictionaries for an ExperimentResult."""
    labels = []
    for row in result.rows:
        for label in row.expectations:
            if label not in labels:
                labels.append(label)
    # one-qubit labels first, then two-qubit labels in canonical order
    ordered = [lb for lb in ("X", "Y", "Z") if lb in labels]
    labels = ordered + [lb for lb in pauli_labels(2) if lb in labels]
    columns = list(BASE_COLUMNS) + [f"exp_{label}" for label in labels] + list(TAIL_COLUMNS)
    rows = []
    for row in result.rows:
        entry = {name: getattr(row, name) for name in BASE_COLUMNS + TAIL_COLUMNS}
        for label in labels:
            entry[f"exp_{label}"] = row.expectations.get(label)
        rows.append(entry)
    return columns, rows


def fit_table(fit_result):
    p = fit_result.params
    row = {
        "phi": p.phi,
        "theta1": p.theta1,
        "theta2": p.theta2,
        "lam": p.lam,
        "residual_norm": fit_result.residual_norm,
        "iterations": fit_result.iterations,
        "converged": fit_result.converged,
        "start_index": fit_result.start_index,
    }
    return list(FIT_COLUMNS), [row]


def verify_table(check_results):
    rows = [
        {
            "suite": r.suite,
            "name": r.name,
            "max_residual": r.max_residual,
            "threshold": r.threshold,
            "passed": r.passed,
        }
        for r in check_results
    ]
    return list(VERIFY_COLUMNS), rows


def _json_default(value):
    if hasattr(value, "item"):
        return value.item()
    return str(value)


def render_csv(header, columns, rows):
    buffer = io.StringIO()
    for key, value in header.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True, separators=(",", ":"), default=_json_default)
        buffer.write(f"# {key}: {value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return buffer.getvalue()


def render_json(header, columns, rows):
    table = [{c: row.get(c) for c in columns} for row in rows]
    document = {"header": header, "columns": columns, "rows": table}
    return json.dumps(document, sort_keys=True, indent=2, default=_json_default) + "\n"


def write_result_file(path, fmt, header, columns, rows):
    """
    Atomically write a result table to ``path``.

    Args:
        path (str): Destination file.
        fmt (str): ``csv`` or ``json``.
        header (dict): From :func:`build_header`.
        columns (list): Column order.
        rows (list): Row dictionaries.

    Raises:
        OutputError: if the file cannot be written; no partial file remains.
    """
    if fmt not in ("csv", "json"):
        raise OutputError(f"unknown output format: {fmt!r}")
    content = render_csv(header, columns, rows) if fmt == "csv" else render_json(
        header, columns, rows
    )

    path = os.path.abspath(os.path.expanduser(str(path)))
    directory = os.path.dirname(path)
    try:
        os.makedirs(directory, exist_ok=True)
        # Atomic write: write to temp file in same directory, then rename
        fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    except OSError as e:
        raise OutputError(f"cannot write results to {path}: {e}") from e
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        os.replace(tmp_path, path)
    except Exception as e:
        # Clean up temp file if rename fails
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise OutputError(f"cannot write results to {path}: {e}") from e

    logging.info(f"Results written: {path} ({len(rows)} rows, {fmt})")
    return path


def read_embedded_config(path):
    """
    Configuration document embedded in a result file.

    Raises:
        OutputError: if the file has no embedded configuration.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e}") from e
    if text.lstrip().startswith("{"):
        return json.loads(text)["header"]["config"]
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise OutputError(f"no embedded configuration in {path}")
