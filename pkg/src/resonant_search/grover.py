"""Discrete Grover search on length-N amplitude vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantum_core import StateVector


@dataclass(frozen=True)
class GroverRun:
    n: int
    target: int
    iterations: int
    success: float


def grover_iterate(state: StateVector, target: int) -> StateVector:
    """Oracle phase flip on ``target`` followed by inversion about the mean."""
    amps = np.array(state.amplitudes)
    amps[target] = -amps[target]
    amps = 2 * amps.mean() - amps
    return StateVector(amps)


def _iterate_raw(amps: np.ndarray, target: int) -> np.ndarray:
    amps = amps.copy()
    amps[target] = -amps[target]
    return 2 * amps.mean() - amps


def grover_success(n: int, k: int) -> float:
    """sin^2((2k + 1) theta) with theta = arcsin(1/sqrt(n))."""
    if n < 2 or k < 0:
        raise ValueError(f"need n >= 2 and k >= 0, got n={n}, k={k}")
    theta = math.asin(1.0 / math.sqrt(n))
    return math.sin((2 * k + 1) * theta) ** 2


def optimal_iterations(n: int) -> int:
    """round(pi / (4 theta) - 1/2), halves rounded away from zero.

    n = 2 sits exactly on the tie (0.5) and rounds to 1; k = 0 and k = 1
    both succeed with probability 1/2 there.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    v = math.pi / (4 * math.asin(1.0 / math.sqrt(n))) - 0.5
    # guard the n = 2 tie against rounding in asin
    return max(0, math.floor(v + 0.5 + 1e-12))


def run_grover(n: int, k: int, target: int = 0) -> GroverRun:
    """Iterate from the uniform state ``k`` times and report target probability."""
    if not 0 <= target < n:
        raise ValueError(f"target {target} outside [0, {n})")
    amps = np.full(n, 1.0 / np.sqrt(n), dtype=complex)
    for _ in range(k):
        amps = _iterate_raw(amps, target)
    return GroverRun(n, target, k, float(abs(amps[target]) ** 2))


def success_curve(n: int, k_max: int, target: int = 0) -> np.ndarray:
    """Target probability after 0..k_max iterations by direct iteration."""
    amps = np.full(n, 1.0 / np.sqrt(n), dtype=complex)
    out = np.empty(k_max + 1)
    out[0] = abs(amps[target]) ** 2
    for k in range(1, k_max + 1):
        amps = _iterate_raw(amps, target)
        out[k] = abs(amps[target]) ** 2
    return out
