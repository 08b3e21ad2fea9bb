# verify.py
"""
Property suites behind the ``verify-channels`` subcommand: equivalence of the
measurement and dephasing channels, and completeness of every Kraus set the
noise model uses.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channels import dephasing_channel, measurement_channel, pauli_string, stabilizer_from_axis
from .densmat import kraus_completeness_residual, random_density_matrix
from .noise import amp_damp_kraus, dephase_kraus, leakage_kraus
from .utils import log_jamming, substream

EQUIVALENCE_THRESHOLD = 1e-12
COMPLETENESS_THRESHOLD = 1e-10
N_RANDOM_STATES = 200
N_RANDOM_PARAMS = 100


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    max_residual: float
    threshold: float

    @property
    def passed(self):
        return self.max_residual <= self.threshold


def verification_stabilizers():
    r = 1 / math.sqrt(2)
    return {
        "Z": pauli_string("Z"),
        "X": pauli_string("X"),
        "(X+Y)/sqrt2": stabilizer_from_axis(r, r, 0.0),
        "ZZ": pauli_string("ZZ"),
        "XX": pauli_string("XX"),
    }


def channel_equivalence_suite(seed, n_states=N_RANDOM_STATES):
    """Max elementwise gap between measurement_channel and dephasing_channel per stabilizer."""
    results = []
    for index, (name, s) in enumerate(verification_stabilizers().items()):
        rng = substream(seed, 0, index)
        worst = 0.0
        for _ in range(n_states):
            rho = random_density_matrix(s.dim, rng)
            gap = np.max(
                np.abs(measurement_channel(rho, s).matrix - dephasing_channel(rho, s).matrix)
            )
            worst = max(worst, float(gap))
        results.append(CheckResult("channel_equivalence", name, worst, EQUIVALENCE_THRESHOLD))
    return results


def kraus_completeness_suite(seed, n_params=N_RANDOM_PARAMS):
    """Max |sum K^dag K - I| over randomized rates, times and leakage probabilities."""
    rng = substream(seed, 1)
    worst = {"amplitude_damping": 0.0, "dephasing": 0.0, "leakage": 0.0}
    for _ in range(n_params):
        rate, t, lam = rng.uniform(0, 2), rng.uniform(0, 5), rng.uniform(0, 1)
        for name, kraus in (
            ("amplitude_damping", amp_damp_kraus(rate, t)),
            ("dephasing", dephase_kraus(rate, t)),
            ("leakage", leakage_kraus(lam)),
        ):
            residual = float(np.max(np.abs(kraus_completeness_residual(kraus))))
            worst[name] = max(worst[name], residual)
    return [
        CheckResult("kraus_completeness", name, value, COMPLETENESS_THRESHOLD)
        for name, value in worst.items()
    ]


def run_all(seed):
    results = channel_equivalence_suite(seed) + kraus_completeness_suite(seed)
    for r in results:
        logging.info(log_jamming(
            f"{r.suite}/{r.name}: max residual {r.max_residual:.3e} (threshold {r.threshold:.0e})"
        ))
    return results
