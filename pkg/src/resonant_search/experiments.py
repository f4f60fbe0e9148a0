"""Parameter sweeps: resonance and phase scans, runtime scaling, and the
analog-versus-Grover comparison, plus CSV/JSON table output.

All sweeps run on the exact two-level closed forms. Peaks are located on a
2001-point grid over the horizon 3 pi / (2 gamma) and then polished with a
bounded scalar search on the same closed form.
"""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import __version__
from .dynamics import (
    MAX_SAMPLES,
    PeakResult,
    closed_form_amplitudes,
    find_peak,
    first_hit_time,
    sample_amplitudes,
)
from .grover import grover_success, optimal_iterations
from .quantum_core import TwoLevelState, evolve_exact
from .search_hamiltonians import (
    DriveParams,
    EffectiveTwoLevel,
    build_hg_effective,
    effective_params,
)

SCAN_MODELS = ("hg_effective", "hls_resonant")
INITIAL_KINDS = ("uniform", "pure_beta")


@dataclass(frozen=True)
class ScanResult:
    axis_name: str
    axis_values: np.ndarray
    p_peak: np.ndarray
    t_peak: np.ndarray
    metadata: dict
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.axis_values)
        if len(self.p_peak) != n or len(self.t_peak) != n or any(len(v) != n for v in self.extra.values()):
            raise ValueError("scan columns have different lengths")
        if n > 1 and np.any(np.diff(self.axis_values) <= 0):
            raise ValueError("scan axis must be strictly increasing")

    def columns(self) -> dict:
        cols = {self.axis_name: self.axis_values, "p_peak": self.p_peak, "t_peak": self.t_peak}
        cols.update(self.extra)
        return cols


@dataclass(frozen=True)
class ScalingFit:
    n_values: np.ndarray
    t_star: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    metadata: dict = field(default_factory=dict)
    excluded: tuple = ()

    def columns(self) -> dict:
        return {"n": self.n_values, "t_star": self.t_star}


@dataclass(frozen=True)
class Table:
    """Named columns plus metadata and free-text notes."""

    data: dict
    metadata: dict = field(default_factory=dict)
    notes: tuple = ()

    def columns(self) -> dict:
        return self.data


@dataclass(frozen=True)
class Fixed:
    epsilon: float

    def __call__(self, n: int, energy: float) -> float:
        return self.epsilon

    def describe(self) -> dict:
        return {"kind": "fixed", "epsilon": self.epsilon}


@dataclass(frozen=True)
class CoverSqrtN:
    """epsilon = c * E / sqrt(n)."""

    c: float

    def __call__(self, n: int, energy: float) -> float:
        return self.c * energy / math.sqrt(n)

    def describe(self) -> dict:
        return {"kind": "c_over_sqrt_n", "c": self.c}


@dataclass(frozen=True)
class PeakTime:
    def describe(self) -> dict:
        return {"kind": "peak_time"}


@dataclass(frozen=True)
class Threshold:
    p: float

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"threshold must lie in (0, 1], got {self.p}")

    def describe(self) -> dict:
        return {"kind": "threshold", "p": self.p}


EpsilonPolicy = Union[Fixed, CoverSqrtN]
StopRule = Union[PeakTime, Threshold]


def default_workers() -> int:
    env = os.environ.get("RESONANT_SEARCH_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    # executor.map keeps input order, so results never depend on scheduling
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def horizon(eff: EffectiveTwoLevel) -> float:
    return 3 * math.pi / (2 * eff.gamma)


def _p_alpha(amplitudes: Callable[[np.ndarray], np.ndarray]) -> Callable[[float], float]:
    return lambda t: float(abs(amplitudes(np.array([t]))[0, 0]) ** 2)


def closed_form_peak(
    amplitudes: Callable[[np.ndarray], np.ndarray],
    t_end: float,
    model: str,
    exclude_zero: bool = False,
) -> PeakResult:
    """First peak of |c_alpha(t)|^2 on [0, t_end], polished on the closed form."""
    traj = sample_amplitudes(amplitudes, t_end, model)
    if exclude_zero:
        # the t = 0 sample stays only as a grid anchor and cannot win
        p = np.array(traj.p_target)
        p[0] = -1.0
        traj = type(traj)(traj.times, p, traj.norm_error, traj.model)
    peak = find_peak(traj)
    if not peak.refined:
        return peak
    p_of_t = _p_alpha(amplitudes)
    step = t_end / (MAX_SAMPLES - 1)
    lo, hi = max(peak.t_peak - step, 0.0), min(peak.t_peak + step, t_end)
    res = minimize_scalar(lambda t: -p_of_t(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, t_end)})
    # the parabola estimate can overshoot; report true closed-form values only
    t_best, p_best = max((float(res.x), -float(res.fun)), (peak.t_peak, p_of_t(peak.t_peak)),
                         key=lambda c: c[1])
    return PeakResult(t_best, p_best, True)


def closed_form_first_hit(
    amplitudes: Callable[[np.ndarray], np.ndarray], t_end: float, threshold: float, model: str
) -> float | None:
    traj = sample_amplitudes(amplitudes, t_end, model)
    t_lin = first_hit_time(traj, threshold)
    if t_lin is None or t_lin == 0.0:
        return t_lin
    i = int(np.searchsorted(traj.times, t_lin))
    p_of_t = _p_alpha(amplitudes)
    return float(brentq(lambda t: p_of_t(t) - threshold, traj.times[i - 1], traj.times[i], xtol=1e-14))


def _hg_amplitudes(eff: EffectiveTwoLevel, psi0: np.ndarray):
    H = build_hg_effective(eff)
    return lambda times: evolve_exact(H, psi0, times)


def _hls_amplitudes(eff: EffectiveTwoLevel, w: float, psi0: np.ndarray):
    return lambda times: closed_form_amplitudes(eff, w, psi0, times)


def _initial(kind: str, x: float) -> np.ndarray:
    if kind == "uniform":
        return TwoLevelState.from_overlap(x).as_array()
    if kind == "pure_beta":
        return np.array([0.0, 1.0], dtype=complex)
    raise ValueError(f"initial must be one of {INITIAL_KINDS}, got {kind!r}")


def resonance_scan(
    n: int,
    energy: float,
    epsilon: float,
    phi: float,
    w_grid: Sequence[float],
    initial: str = "uniform",
    workers: int = 1,
) -> ScanResult:
    """Peak target probability under H_ls as a function of drive frequency w."""
    eff = effective_params(DriveParams(energy, epsilon, phi), 1.0 / math.sqrt(n))
    if not eff.valid:
        raise ValueError(f"invalid drive parameters: {eff.reason}")
    w_grid = np.asarray(w_grid, dtype=float)
    psi0 = _initial(initial, eff.x)
    t_end = horizon(eff)

    def point(w):
        peak = closed_form_peak(_hls_amplitudes(eff, w, psi0), t_end, "hls_closed_form")
        return peak.p_peak, peak.t_peak

    results = _map(point, list(w_grid), workers)
    metadata = {
        "experiment": "resonance_scan",
        "n": n, "energy": energy, "epsilon": epsilon, "phi": phi,
        "initial": initial, "model": "hls_closed_form",
        "w_res": eff.w_res, "gamma": eff.gamma, "t_end": t_end,
        "samples": MAX_SAMPLES, "version": __version__,
    }
    return ScanResult(
        axis_name="w",
        axis_values=w_grid,
        p_peak=np.array([r[0] for r in results]),
        t_peak=np.array([r[1] for r in results]),
        metadata=metadata,
    )


def phase_scan(
    n: int,
    energy: float,
    epsilon: float,
    phi_grid: Sequence[float],
    model: str = "hg_effective",
    workers: int = 1,
) -> ScanResult:
    """Peak target probability from the uniform state as a function of phi.

    For ``hls_resonant`` only points passing the validity check are evolved;
    the rest are recorded with NaN peaks and valid = 0.
    """
    if model not in SCAN_MODELS:
        raise ValueError(f"model must be one of {SCAN_MODELS}, got {model!r}")
    phi_grid = np.asarray(phi_grid, dtype=float)
    if not np.all(np.isfinite(phi_grid)):
        raise ValueError("phi grid must be finite")
    x = 1.0 / math.sqrt(n)
    psi0 = _initial("uniform", x)

    def point(phi):
        eff = effective_params(DriveParams(energy, epsilon, phi), x)
        if model == "hls_resonant":
            if not eff.valid:
                return math.nan, math.nan, 0
            amps = _hls_amplitudes(eff, eff.w_res, psi0)
            tag = "hls_closed_form"
        else:
            if eff.degenerate:
                return math.nan, math.nan, 0
            amps = _hg_amplitudes(eff, psi0)
            tag = "hg_effective"
        peak = closed_form_peak(amps, horizon(eff), tag, exclude_zero=True)
        return peak.p_peak, peak.t_peak, 1

    results = _map(point, list(phi_grid), workers)
    metadata = {
        "experiment": "phase_scan",
        "n": n, "energy": energy, "epsilon": epsilon,
        "model": model, "horizon": "3*pi/(2*gamma)",
        "samples": MAX_SAMPLES, "version": __version__,
    }
    return ScanResult(
        axis_name="phi",
        axis_values=phi_grid,
        p_peak=np.array([r[0] for r in results]),
        t_peak=np.array([r[1] for r in results]),
        metadata=metadata,
        extra={"valid": np.array([r[2] for r in results], dtype=int)},
    )


def fit_power_law(n_values, t_star) -> tuple[float, float, float]:
    """Least-squares line through (log n, log t); returns slope, intercept, R^2."""
    lx = np.log(np.asarray(n_values, dtype=float))
    ly = np.log(np.asarray(t_star, dtype=float))
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(min(max(r_squared, 0.0), 1.0))


def _analog_run(n: int, energy: float, epsilon: float, phi: float, model: str):
    eff = effective_params(DriveParams(energy, epsilon, phi), 1.0 / math.sqrt(n))
    psi0 = _initial("uniform", eff.x)
    if model == "hls_resonant":
        if not eff.valid:
            raise ValueError(f"invalid drive at n = {n}: {eff.reason}")
        return eff, _hls_amplitudes(eff, eff.w_res, psi0), "hls_closed_form"
    if model == "hg_effective":
        return eff, _hg_amplitudes(eff, psi0), "hg_effective"
    raise ValueError(f"model must be one of {SCAN_MODELS}, got {model!r}")


def analog_t_star(n: int, energy: float, epsilon: float, phi: float, model: str,
                  stop: StopRule = PeakTime()) -> tuple[float | None, float]:
    """(t_star, p_at_t_star) for one instance; t_star is None if never reached."""
    eff, amps, tag = _analog_run(n, energy, epsilon, phi, model)
    t_end = horizon(eff)
    if isinstance(stop, Threshold):
        t = closed_form_first_hit(amps, t_end, stop.p, tag)
        return t, (math.nan if t is None else _p_alpha(amps)(t))
    peak = closed_form_peak(amps, t_end, tag, exclude_zero=True)
    return peak.t_peak, peak.p_peak


def scaling_study(
    n_list: Sequence[int],
    energy: float,
    epsilon_policy: EpsilonPolicy,
    phi: float,
    model: str = "hg_effective",
    stop: StopRule = PeakTime(),
    workers: int = 1,
) -> ScalingFit:
    """Fit t_star ~ n^slope over ``n_list``. Unreached sizes are excluded."""
    n_list = sorted(int(n) for n in n_list)
    if len(n_list) < 4:
        raise ValueError(f"scaling study needs at least 4 sizes, got {len(n_list)}")

    def point(n):
        return analog_t_star(n, energy, epsilon_policy(n, energy), phi, model, stop)[0]

    t_values = _map(point, n_list, workers)
    kept = [(n, t) for n, t in zip(n_list, t_values) if t is not None]
    excluded = tuple(n for n, t in zip(n_list, t_values) if t is None)
    if len(kept) < 4:
        raise ValueError(f"only {len(kept)} sizes reached the stop condition; need 4 (excluded: {excluded})")
    ns = np.array([k[0] for k in kept])
    ts = np.array([k[1] for k in kept])
    slope, intercept, r2 = fit_power_law(ns, ts)
    metadata = {
        "experiment": "scaling_study",
        "energy": energy, "phi": phi, "model": model,
        "epsilon_policy": epsilon_policy.describe(), "stop": stop.describe(),
        "version": __version__,
    }
    return ScalingFit(ns, ts, slope, intercept, r2, metadata, excluded)


def compare_discrete(n_list: Sequence[int], energy: float, c: float, workers: int = 1) -> Table:
    """Analog H_g (phi = pi, eps = c E / sqrt(n)) against optimal Grover, per n."""
    n_list = [int(n) for n in n_list]

    def row(n):
        t_star, p_analog = analog_t_star(n, energy, c * energy / math.sqrt(n), math.pi, "hg_effective")
        k = optimal_iterations(n)
        return (
            n, t_star, p_analog, k, grover_success(n, k),
            t_star / (math.pi * math.sqrt(n) / (2 * energy)),
            k / (math.pi * math.sqrt(n) / 4),
        )

    rows = _map(row, n_list, workers)
    names = ("n", "analog_t_star", "analog_success", "grover_k", "grover_success",
             "analog_ratio", "grover_ratio")
    data = {name: np.array([r[i] for r in rows]) for i, name in enumerate(names)}
    notes = []
    if 2 in n_list:
        notes.append("n=2: Grover k*=1 is a rounding tie; k=0 and k=1 both succeed with probability 0.5")
    metadata = {"experiment": "compare_discrete", "energy": energy, "c": c, "phi": math.pi,
                "model": "hg_effective", "version": __version__}
    return Table(data, metadata, tuple(notes))


def deficit_trend(n_list: Sequence[int], energy: float, epsilon: float, phi: float) -> Table:
    """Peak-probability deficit 1 - p_peak of H_g at fixed phi, with its n-exponent.

    The exponent is fitted only when every deficit is positive; otherwise it
    is reported as NaN.
    """
    n_list = [int(n) for n in n_list]
    deficits = []
    for n in n_list:
        scan = phase_scan(n, energy, epsilon, [phi], model="hg_effective")
        deficits.append(1.0 - float(scan.p_peak[0]))
    deficits = np.array(deficits)
    if np.all(deficits > 0) and len(n_list) >= 2:
        exponent = fit_power_law(n_list, deficits)[0]
    else:
        exponent = math.nan
    metadata = {"experiment": "deficit_trend", "energy": energy, "epsilon": epsilon,
                "phi": phi, "model": "hg_effective", "exponent": exponent,
                "version": __version__}
    return Table({"n": np.array(n_list), "deficit": deficits}, metadata)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def result_metadata(result) -> dict:
    meta = dict(getattr(result, "metadata", {}))
    if isinstance(result, ScalingFit):
        meta.update(slope=result.slope, intercept=result.intercept,
                    r_squared=result.r_squared, excluded=list(result.excluded))
    if isinstance(result, Table) and result.notes:
        meta["notes"] = list(result.notes)
    return meta


def render_table(result, fmt: str = "csv", header: dict | None = None) -> str:
    """Serialise a ScanResult, ScalingFit or Table.

    ``header`` entries become leading ``# key: value`` lines in CSV and
    top-level keys in JSON.
    """
    cols = result.columns()
    if fmt == "csv":
        buf = io.StringIO()
        for key, value in (header or {}).items():
            text = value if isinstance(value, str) else json.dumps(_jsonable(value), sort_keys=True)
            buf.write(f"# {key}: {text}\n")
        names = list(cols)
        buf.write(",".join(names) + "\n")
        for i in range(len(cols[names[0]]) if names else 0):
            buf.write(",".join(_fmt(cols[name][i]) for name in names) + "\n")
        return buf.getvalue()
    if fmt == "json":
        doc = {"metadata": result_metadata(result), "columns": cols}
        doc.update(header or {})
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    raise ValueError(f"format must be csv or json, got {fmt!r}")


def emit_table(result, fmt: str, destination, header: dict | None = None) -> None:
    """Write ``result`` to a path or an open text stream."""
    text = render_table(result, fmt, header)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = Path(destination)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write table to {path}: {exc.strerror}") from exc
