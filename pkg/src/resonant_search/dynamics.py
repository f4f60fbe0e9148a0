"""Time evolution: fixed-step RK4, the exact rotating-frame solution of the
driven two-level problem, and peak / first-hit extraction from trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .quantum_core import (
    DenseHermitian,
    HermitianTwoLevel,
    StateVector,
    TwoLevelState,
    evolve_exact,
)
from .search_hamiltonians import EffectiveTwoLevel

MAX_SAMPLES = 2001
MAX_STEPS = 10**8
NORM_ABORT = 1e-6
AUTO_STEPS_PER_PERIOD = 64
AUTO_ERROR_TARGET = 1e-10
AUTO_NORM_TARGET = 1e-13

MODELS = ("hg_dense", "hg_effective", "hls_numeric", "hls_closed_form")

Hamiltonian = Union[np.ndarray, HermitianTwoLevel, DenseHermitian, Callable]


class IntegrationError(RuntimeError):
    """Raised when a numerical run is aborted (norm drift or non-finite state)."""


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    p_target: np.ndarray
    norm_error: np.ndarray
    model: str
    states: np.ndarray | None = None
    dt: float | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model tag {self.model!r}")
        times = np.asarray(self.times, dtype=float)
        if times.size and (times[0] != 0.0 or np.any(np.diff(times) <= 0)):
            raise ValueError("times must start at 0 and increase strictly")
        if not len(times) == len(self.p_target) == len(self.norm_error):
            raise ValueError("trajectory columns have different lengths")

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class PeakResult:
    t_peak: float
    p_peak: float
    refined: bool


class DrivenTwoLevel:
    """H_ls(t) for an effective two-level system and drive frequency ``w``.

    Calling it with an array of times returns a (len(t), 2, 2) stack.
    """

    def __init__(self, eff: EffectiveTwoLevel, w: float):
        self.eff = eff
        self.w = float(w)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        g = self.eff.gamma * np.exp(1j * (self.w * t + self.eff.phi_prime))
        H = np.empty(t.shape + (2, 2), dtype=complex)
        H[..., 0, 0] = self.eff.e_alpha
        H[..., 1, 1] = self.eff.e_beta
        H[..., 0, 1] = g
        H[..., 1, 0] = np.conj(g)
        return H

    @property
    def omega_max(self) -> float:
        eff = self.eff
        return max(abs(eff.e_alpha), abs(eff.e_beta), 2 * eff.gamma, abs(self.w))


def _as_matrix(H) -> np.ndarray | None:
    if isinstance(H, HermitianTwoLevel):
        return H.matrix()
    if isinstance(H, DenseHermitian):
        return np.asarray(H.entries)
    if isinstance(H, np.ndarray):
        return np.asarray(H, dtype=complex)
    return None


def _frequency_scale(H: np.ndarray) -> float:
    offdiag = H - np.diag(np.diag(H))
    return float(max(
        np.max(np.abs(np.diag(H))),
        2 * np.max(np.abs(offdiag)),
        np.max(np.sum(np.abs(H), axis=1)),  # bounds the spectral radius
    ))


def auto_step(omega_max: float, t_end: float, tol: float = AUTO_ERROR_TARGET) -> float:
    """RK4 step for a run of length ``t_end`` with fastest frequency ``omega_max``.

    At most (2 pi / omega_max) / 64, and small enough that the accumulated
    RK4 phase error t_end * omega_max^5 * dt^4 / 120 stays below ``tol`` and
    the accumulated norm loss t_end * omega_max^6 * dt^5 / 72 stays below
    ``AUTO_NORM_TARGET``.
    """
    if omega_max <= 0:
        return t_end
    dt = 2 * np.pi / omega_max / AUTO_STEPS_PER_PERIOD
    dt_err = (120.0 * tol / (t_end * omega_max**5)) ** 0.25
    dt_norm = (72.0 * AUTO_NORM_TARGET / (t_end * omega_max**6)) ** 0.2
    return float(min(dt, dt_err, dt_norm, t_end))


def _rk4_constant(A: np.ndarray, h: float) -> np.ndarray:
    # RK4 applied to psi' = A psi is the 4th-order Taylor polynomial of exp(Ah)
    Ah = A * h
    eye = np.eye(A.shape[0], dtype=complex)
    term = eye.copy()
    R = eye.copy()
    for k in range(1, 5):
        term = term @ Ah / k
        R = R + term
    return R


def _rk4_stage_maps(H0: np.ndarray, Hm: np.ndarray, H1: np.ndarray, h: float) -> np.ndarray:
    """One-step RK4 propagators for psi' = -i H(t) psi, batched over steps.

    H0, Hm, H1 hold H at t, t + h/2 and t + h, each of shape (m, n, n).
    """
    A0, Am, A1 = -1j * H0, -1j * Hm, -1j * H1
    eye = np.broadcast_to(np.eye(H0.shape[-1], dtype=complex), H0.shape)
    K1 = A0
    K2 = Am @ (eye + 0.5 * h * K1)
    K3 = Am @ (eye + 0.5 * h * K2)
    K4 = A1 @ (eye + h * K3)
    return eye + (h / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4)


def _evaluate(provider: Callable, times: np.ndarray, n: int) -> np.ndarray:
    try:
        H = np.asarray(provider(times), dtype=complex)
    except (TypeError, ValueError):
        H = None
    if H is None or H.shape != (times.size, n, n):
        H = np.stack([np.asarray(provider(float(t)), dtype=complex) for t in times])
    return H


def integrate(
    hamiltonian: Hamiltonian,
    psi0,
    t_end: float,
    dt: float | str = "auto",
    *,
    target: int = 0,
    model: str = "hls_numeric",
    drive_frequency: float = 0.0,
    keep_states: bool = False,
    chunk: int = 4096,
) -> Trajectory:
    """Classical fixed-step RK4 for i psi' = H(t) psi.

    ``hamiltonian`` is a constant matrix (ndarray, HermitianTwoLevel,
    DenseHermitian) or a callable of time. Callables should accept an array
    of times and return a stack of matrices; scalar-only callables are
    evaluated point by point. ``drive_frequency`` enters the automatic step
    rule for time-dependent Hamiltonians. At most 2001 samples are kept.

    Raises IntegrationError if the norm drifts by more than 1e-6 or the
    state becomes non-finite.
    """
    if not (np.isfinite(t_end) and t_end > 0):
        raise ValueError(f"t_end must be positive, got {t_end}")
    if isinstance(psi0, TwoLevelState):
        psi = psi0.as_array()
    elif isinstance(psi0, StateVector):
        psi = np.array(psi0.amplitudes)
    else:
        psi = np.array(psi0, dtype=complex)
    n = psi.size

    constant = _as_matrix(hamiltonian)
    if constant is not None and constant.shape != (n, n):
        raise ValueError(f"Hamiltonian shape {constant.shape} does not match state dimension {n}")

    if dt == "auto":
        if constant is not None:
            omega_max = _frequency_scale(constant)
        else:
            omega_max = getattr(hamiltonian, "omega_max", None)
            if omega_max is None:
                omega_max = max(_frequency_scale(_evaluate(hamiltonian, np.zeros(1), n)[0]),
                                abs(drive_frequency))
        n_steps = min(math.ceil(t_end / auto_step(omega_max, t_end)), MAX_STEPS)
    else:
        dt = float(dt)
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        n_steps = math.ceil(t_end / dt * (1 - 1e-12))
        if n_steps > MAX_STEPS:
            raise ValueError(f"dt = {dt} needs {n_steps} steps, above the cap {MAX_STEPS}")
    h = t_end / n_steps
    stride = math.ceil(n_steps / (MAX_SAMPLES - 1))
    sample_steps = list(range(0, n_steps + 1, stride))
    if sample_steps[-1] != n_steps:
        sample_steps.append(n_steps)

    samples = [psi.copy()]

    def record(step: int, state: np.ndarray):
        norm = np.linalg.norm(state)
        if not np.isfinite(norm):
            raise IntegrationError(f"non-finite amplitude at t = {step * h:.6g} (dt = {h:.3e})")
        if abs(norm - 1.0) > NORM_ABORT:
            raise IntegrationError(
                f"norm drift {abs(norm - 1.0):.3e} at t = {step * h:.6g} exceeds {NORM_ABORT:g}; "
                f"reduce dt (currently {h:.3e})"
            )
        samples.append(state.copy())

    if constant is not None:
        R = _rk4_constant(-1j * constant, h)
        R_stride = np.linalg.matrix_power(R, stride)
        for prev, step in zip(sample_steps[:-1], sample_steps[1:]):
            M = R_stride if step - prev == stride else np.linalg.matrix_power(R, step - prev)
            psi = M @ psi
            record(step, psi)
    else:
        next_sample = 1
        for k0 in range(0, n_steps, chunk):
            k1 = min(k0 + chunk, n_steps)
            grid = (np.arange(2 * (k1 - k0) + 1) * 0.5 + k0) * h
            Hs = _evaluate(hamiltonian, grid, n)
            maps = _rk4_stage_maps(Hs[0:-1:2], Hs[1::2], Hs[2::2], h)
            if n == 2:
                a, b = complex(psi[0]), complex(psi[1])
                for k, ((r00, r01), (r10, r11)) in enumerate(maps.tolist(), start=k0 + 1):
                    a, b = r00 * a + r01 * b, r10 * a + r11 * b
                    if k == sample_steps[next_sample]:
                        psi = np.array([a, b])
                        record(k, psi)
                        next_sample += 1
                psi = np.array([a, b])
            else:
                for k, M in enumerate(maps, start=k0 + 1):
                    psi = M @ psi
                    if k == sample_steps[next_sample]:
                        record(k, psi)
                        next_sample += 1

    states = np.array(samples)
    times = np.array(sample_steps, dtype=float) * h
    return Trajectory(
        times=times,
        p_target=np.abs(states[:, target]) ** 2,
        norm_error=np.abs(np.linalg.norm(states, axis=1) - 1.0),
        model=model,
        states=states if keep_states else None,
        dt=h,
    )


def rotating_frame_hamiltonian(eff: EffectiveTwoLevel, w: float) -> HermitianTwoLevel:
    """[[delta/2, g], [g*, -delta/2]] with delta = w - (e_beta - e_alpha)."""
    delta = w - eff.gap
    g = eff.coupling
    return HermitianTwoLevel(0.0, g.real, -g.imag, delta / 2)


def closed_form_amplitudes(eff: EffectiveTwoLevel, w: float, psi0, times) -> np.ndarray:
    """Exact solution of i psi' = H_ls(t) psi at every t in ``times``.

    With c_a = b_a exp(-i(e_alpha - delta/2)t) and c_b = b_b exp(-i(e_beta + delta/2)t)
    the amplitudes b obey a constant Hamiltonian, solved exactly.
    """
    psi0 = psi0.as_array() if isinstance(psi0, TwoLevelState) else np.asarray(psi0, dtype=complex)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    delta = w - eff.gap
    b = evolve_exact(rotating_frame_hamiltonian(eff, w), psi0, t)
    b[:, 0] *= np.exp(-1j * (eff.e_alpha - delta / 2) * t)
    b[:, 1] *= np.exp(-1j * (eff.e_beta + delta / 2) * t)
    return b


def closed_form_driven(eff: EffectiveTwoLevel, w: float, psi0: TwoLevelState, t: float) -> TwoLevelState:
    c = closed_form_amplitudes(eff, w, psi0, [t])[0]
    return TwoLevelState.from_array(c / np.linalg.norm(c))


def sample_amplitudes(
    amplitudes: Callable[[np.ndarray], np.ndarray],
    t_end: float,
    model: str,
    n_samples: int = MAX_SAMPLES,
    target: int = 0,
) -> Trajectory:
    """Trajectory from an exact amplitude function on an even grid over [0, t_end]."""
    times = np.linspace(0.0, t_end, n_samples)
    c = amplitudes(times)
    return Trajectory(
        times=times,
        p_target=np.abs(c[:, target]) ** 2,
        norm_error=np.abs(np.linalg.norm(c, axis=1) - 1.0),
        model=model,
    )


def find_peak(traj: Trajectory, atol: float = 1e-6) -> PeakResult:
    """First maximum of p_target.

    Interior local maxima are refined with a parabola through the three
    samples around them. Of all candidates within ``atol`` of the highest,
    the earliest wins, so periodic runs report their first peak.
    """
    t, p = np.asarray(traj.times), np.asarray(traj.p_target)
    if p.size < 3:
        raise ValueError("find_peak needs at least 3 samples")

    candidates = [(float(t[0]), float(p[0]), False)]
    interior = np.flatnonzero((p[1:-1] >= p[:-2]) & (p[1:-1] > p[2:])) + 1
    for i in interior:
        candidates.append(_parabola_vertex(t[i - 1 : i + 2], p[i - 1 : i + 2]))
    candidates.append((float(t[-1]), float(p[-1]), False))

    best = max(c[1] for c in candidates)
    for t_c, p_c, refined in sorted(candidates, key=lambda c: c[0]):
        if p_c >= best - atol:
            return PeakResult(t_c, p_c, refined)
    raise AssertionError("unreachable")


def _parabola_vertex(t3: np.ndarray, p3: np.ndarray) -> tuple[float, float, bool]:
    (t0, t1, t2), (p0, p1, p2) = t3, p3
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (p1 - p0) + t1 * (p0 - p2) + t0 * (p2 - p1)) / denom
    b = (t2**2 * (p0 - p1) + t1**2 * (p2 - p0) + t0**2 * (p1 - p2)) / denom
    if a >= 0:
        return float(t1), float(p1), False
    tv = -b / (2 * a)
    if not t0 <= tv <= t2:
        return float(t1), float(p1), False
    pv = p1 + (tv - t1) * (b + a * (tv + t1))
    return float(tv), float(max(pv, p1)), True


def first_hit_time(traj: Trajectory, threshold: float) -> float | None:
    """Earliest time with p_target >= threshold, or None if never reached."""
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    t, p = np.asarray(traj.times), np.asarray(traj.p_target)
    hits = np.flatnonzero(p >= threshold)
    if hits.size == 0:
        return None
    i = int(hits[0])
    if i == 0:
        return float(t[0])
    frac = (threshold - p[i - 1]) / (p[i] - p[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))
