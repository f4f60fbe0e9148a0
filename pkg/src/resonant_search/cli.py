"""Command-line front end.

    resonant-search simulate --n 4 --model iontrap --w resonant
    resonant-search scan --axis w --n 4 --min 0 --max 1 --steps 100 --initial pure-beta
    resonant-search scaling --n-list 16,64,256,1024 --policy c-over-sqrt-n:2
    resonant-search grover --n 4 --optimal
    resonant-search compare --n-list 4,16,64,256 --c 2

Units: hbar = 1, energies dimensionless, times in inverse energy units,
phases entered in units of pi (--phi-pi). Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any

import numpy as np

from . import __version__
from .dynamics import (
    DrivenTwoLevel,
    IntegrationError,
    Trajectory,
    closed_form_amplitudes,
    find_peak,
    first_hit_time,
    integrate,
    sample_amplitudes,
)
from .experiments import (
    CoverSqrtN,
    Fixed,
    PeakTime,
    ScanResult,
    Table,
    Threshold,
    _jsonable,
    closed_form_peak,
    compare_discrete,
    default_workers,
    emit_table,
    phase_scan,
    render_table,
    resonance_scan,
    scaling_study,
)
from .grover import grover_success, optimal_iterations, run_grover
from .quantum_core import StateVector, TwoLevelState, evolve_exact
from .search_hamiltonians import (
    DriveParams,
    SearchInstance,
    build_hg_dense,
    build_hg_effective,
    build_iontrap,
    effective_params,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
MODELS = ("hg-dense", "hg-effective", "hls", "iontrap")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int | None = None
    target: int = 0
    energy: float = 1.0
    epsilon: Any = 1.0
    phi_pi: float = 1.0
    model: str = "iontrap"
    w: Any = "resonant"
    t_end: Any = "auto"
    dt: Any = "auto"
    threshold: float | None = None
    output: str | None = None
    format: str = "csv"
    initial: str = "uniform"
    method: str = "closed-form"
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.n is None:
            raise ConfigError("n is required")
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"n must be an integer >= 2 (got {self.n})")
        self.n = int(self.n)
        if not 0 <= self.target < self.n:
            raise ConfigError(f"target must satisfy 0 <= target < n (got {self.target})")
        if not self.energy > 0:
            raise ConfigError(f"energy must be positive (got {self.energy})")
        if self.threshold is not None and not 0 < self.threshold <= 1:
            raise ConfigError(f"threshold must lie in (0, 1] (got {self.threshold})")
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {', '.join(MODELS)} (got {self.model})")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json (got {self.format})")
        if self.initial not in ("uniform", "pure-beta"):
            raise ConfigError(f"initial must be uniform or pure-beta (got {self.initial})")
        if self.method not in ("closed-form", "rk4"):
            raise ConfigError(f"method must be closed-form or rk4 (got {self.method})")
        for name in ("t_end", "dt", "w"):
            value = getattr(self, name)
            auto = "resonant" if name == "w" else "auto"
            if value != auto and not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ConfigError(f"{name} must be a number or '{auto}' (got {value!r})")
        for name in ("t_end", "dt"):
            if getattr(self, name) != "auto" and not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def resolved_epsilon(self, n: int | None = None) -> float:
        n = self.n if n is None else n
        return resolve_policy(self.epsilon)(n, self.energy)

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("extra")
        out.update(self.extra)
        return out


def parse_policy(text) -> Any:
    """'fixed:1' -> 1.0, 'c-over-sqrt-n:2' -> {'kind': 'c_over_sqrt_n', 'c': 2.0}."""
    if isinstance(text, dict):
        if text.get("kind") != "c_over_sqrt_n" or "c" not in text:
            raise ConfigError(f"unknown epsilon policy {text!r}")
        return {"kind": "c_over_sqrt_n", "c": float(text["c"])}
    if isinstance(text, (int, float)):
        return float(text)
    kind, _, value = str(text).partition(":")
    try:
        if not value:
            return float(kind)
        if kind == "fixed":
            return float(value)
        if kind in ("c-over-sqrt-n", "c_over_sqrt_n"):
            return {"kind": "c_over_sqrt_n", "c": float(value)}
    except ValueError:
        pass
    raise ConfigError(f"cannot parse epsilon policy {text!r}; use fixed:<eps> or c-over-sqrt-n:<c>")


def resolve_policy(policy):
    if isinstance(policy, dict):
        return CoverSqrtN(policy["c"])
    return Fixed(float(policy))


def _number_or(value, keyword: str):
    if value == keyword:
        return value
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number or '{keyword}', got {value!r}")


def _int_list(value) -> list[int]:
    if isinstance(value, str):
        items = [v for v in value.split(",") if v.strip()]
    else:
        items = list(value)
    try:
        return [int(v) for v in items]
    except ValueError:
        raise ConfigError(f"cannot parse integer list {value!r}")


def _stop_rule(text: str):
    kind, _, value = str(text).partition(":")
    if kind == "peak":
        return PeakTime()
    if kind == "threshold":
        try:
            return Threshold(float(value))
        except ValueError as exc:
            raise ConfigError(str(exc))
    raise ConfigError(f"stop must be 'peak' or 'threshold:<p>' (got {text!r})")


COMMAND_DEFAULTS = {
    "simulate": {},
    "scan": {"axis": "w", "min": 0.0, "max": 1.0, "steps": 100},
    "scaling": {"n_list": "16,64,256,1024,4096,16384,65536",
                "policy": "c-over-sqrt-n:2", "stop": "peak", "model": "hg-effective", "format": "json"},
    "grover": {"k": None, "optimal": False, "format": "json"},
    "compare": {"n_list": "4,16,64,256", "c": 2.0},
}
RUN_FIELDS = {f for f in RunConfig.__dataclass_fields__ if f != "extra"}


def build_config(command: str, args: argparse.Namespace) -> RunConfig:
    """Defaults, then the JSON config file, then explicitly given flags."""
    values: dict = dict(COMMAND_DEFAULTS[command])
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}")
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a single JSON object")
        values.update(loaded)
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "command", "workers", "summary")}
    values.update(flags)

    if "epsilon" in values:
        values["epsilon"] = parse_policy(values["epsilon"])
    if "w" in values:
        values["w"] = _number_or(values["w"], "resonant")
    for name in ("t_end", "dt"):
        if name in values:
            values[name] = _number_or(values[name], "auto")
    if "n_list" in values:
        values["n_list"] = _int_list(values["n_list"])
    if command == "scaling" and "policy" in values:
        values["policy"] = parse_policy(values["policy"])

    cfg = RunConfig(**{k: v for k, v in values.items() if k in RUN_FIELDS})
    cfg.extra = {k: v for k, v in values.items() if k not in RUN_FIELDS}
    return cfg


def _header(cfg: RunConfig) -> dict:
    # timestamp sorts last in CSV headers and sits on its own line in JSON
    return {
        "version": __version__,
        "config": cfg.echo(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _write(result, cfg: RunConfig, out) -> None:
    header = _header(cfg)
    if cfg.output:
        emit_table(result, cfg.format, cfg.output, header)
    else:
        out.write(render_table(result, cfg.format, header))


def _trajectory_table(traj: Trajectory) -> Table:
    return Table({"t": traj.times, "p_target": traj.p_target, "norm_error": traj.norm_error},
                 {"model": traj.model})


def cmd_simulate(cfg: RunConfig, args, out) -> int:
    cfg.validate()
    n, E = cfg.n, cfg.energy
    eps = cfg.resolved_epsilon()
    phi = cfg.phi_pi * math.pi
    x = 1.0 / math.sqrt(n)
    notes = []

    if cfg.model == "iontrap":
        if cfg.phi_pi % 2 != 1:
            raise ConfigError(f"the ion-trap scheme fixes phi = (2k+1) pi; phi_pi = {cfg.phi_pi} is not odd")
        eff = build_iontrap(n, E, eps)
    else:
        eff = effective_params(DriveParams(E, eps, phi), x)

    driven = cfg.model in ("hls", "iontrap")
    w = None
    if driven:
        if cfg.w == "resonant":
            if not eff.valid:
                raise ConfigError(eff.reason)
            w = eff.w_res
        else:
            w = float(cfg.w)
    if eff.gamma == 0 and cfg.t_end == "auto":
        raise ConfigError("coupling vanishes (gamma = 0); give an explicit t_end")
    t_end = 3 * math.pi / (2 * eff.gamma) if cfg.t_end == "auto" else float(cfg.t_end)

    if cfg.initial == "pure-beta":
        psi0 = np.array([0.0, 1.0], dtype=complex)
    else:
        psi0 = TwoLevelState.from_overlap(x).as_array()

    if cfg.model == "hg-dense":
        if cfg.initial != "uniform":
            raise ConfigError("hg-dense starts from the uniform state only")
        instance = SearchInstance(n, cfg.target)
        H = build_hg_dense(instance, DriveParams(E, eps, phi))
        traj = integrate(H, StateVector.uniform(n), t_end, cfg.dt, target=cfg.target, model="hg_dense")
    elif cfg.model == "hg-effective":
        Hg = build_hg_effective(eff)
        amplitudes = lambda t: evolve_exact(Hg, psi0, t)  # noqa: E731
        traj = sample_amplitudes(amplitudes, t_end, "hg_effective")
    elif cfg.method == "rk4":
        traj = integrate(DrivenTwoLevel(eff, w), psi0, t_end, cfg.dt, model="hls_numeric")
    else:
        amplitudes = lambda t: closed_form_amplitudes(eff, w, psi0, t)  # noqa: E731
        traj = sample_amplitudes(amplitudes, t_end, "hls_closed_form")

    if traj.model in ("hg_effective", "hls_closed_form"):
        peak = closed_form_peak(amplitudes, t_end, traj.model)
    else:
        peak = find_peak(traj)
    if driven and cfg.initial == "uniform" and w is not None and abs(w - eff.w_res) < 1e-12:
        notes.append(
            f"resonant drive from the uniform state peaks at 1 - 1/N = {1 - 1 / n:.17g}; "
            "the time-independent H_g reaches probability 1"
        )
    summary = {
        "model": cfg.model,
        "t_end": t_end,
        "dt": traj.dt,
        "samples": len(traj),
        "t_peak": peak.t_peak,
        "p_peak": peak.p_peak,
        "peak_refined": peak.refined,
        "gap_to_unity": 1.0 - peak.p_peak,
        "max_norm_error": float(np.max(traj.norm_error)),
        "first_hit": None if cfg.threshold is None else first_hit_time(traj, cfg.threshold),
        "w": w,
        "effective": {
            "x": eff.x, "e_alpha": eff.e_alpha, "e_beta": eff.e_beta, "gamma": eff.gamma,
            "phi_prime": eff.phi_prime, "w_res": eff.w_res, "valid": eff.valid,
            "reason": eff.reason, "epsilon": eps,
        },
        "notes": notes,
    }
    if cfg.output:
        emit_table(_trajectory_table(traj), cfg.format, cfg.output, _header(cfg))
    doc = dict(summary, **_header(cfg))
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_scan(cfg: RunConfig, args, out) -> int:
    cfg.validate()
    axis, lo, hi, steps = (cfg.extra[k] for k in ("axis", "min", "max", "steps"))
    if int(steps) != steps or steps < 1:
        raise ConfigError(f"steps must be a positive integer (got {steps})")
    if not hi > lo:
        raise ConfigError("max must exceed min")
    grid = np.linspace(float(lo), float(hi), int(steps) + 1)
    eps = cfg.resolved_epsilon()
    workers = args.workers

    if axis == "w":
        initial = cfg.initial.replace("-", "_")
        try:
            result = resonance_scan(cfg.n, cfg.energy, eps, cfg.phi_pi * math.pi, grid, initial, workers)
        except ValueError as exc:
            raise ConfigError(str(exc))
    elif axis == "phi":
        model = "hg_effective" if cfg.model == "hg-effective" else "hls_resonant"
        scan = phase_scan(cfg.n, cfg.energy, eps, grid * math.pi, model, workers)
        result = ScanResult("phi_pi", grid, scan.p_peak, scan.t_peak, scan.metadata, scan.extra)
    else:
        raise ConfigError(f"axis must be w or phi (got {axis})")
    _write(result, cfg, out)
    return EXIT_OK


def cmd_scaling(cfg: RunConfig, args, out) -> int:
    n_list = cfg.extra["n_list"]
    if len(n_list) < 4:
        raise ConfigError(f"scaling needs at least 4 sizes in --n-list (got {len(n_list)})")
    if any(n < 2 for n in n_list):
        raise ConfigError("every n must be >= 2")
    if not cfg.energy > 0:
        raise ConfigError("energy must be positive")
    model = {"hg-effective": "hg_effective", "hls": "hls_resonant", "iontrap": "hls_resonant"}.get(cfg.model)
    if model is None:
        raise ConfigError("scaling supports models hg-effective, hls and iontrap")
    policy = resolve_policy(cfg.extra["policy"])
    stop = _stop_rule(cfg.extra["stop"])
    try:
        fit = scaling_study(n_list, cfg.energy, policy, cfg.phi_pi * math.pi, model, stop, args.workers)
    except ValueError as exc:
        raise ConfigError(str(exc))
    if isinstance(policy, Fixed):
        fit.metadata["notes"] = ["fixed epsilon: the peak time tends to pi/(2 eps), independent of N"]
    _write(fit, cfg, out)
    return EXIT_OK


def cmd_grover(cfg: RunConfig, args, out) -> int:
    if cfg.n is None or cfg.n < 2:
        raise ConfigError("n must be an integer >= 2")
    k, optimal = cfg.extra.get("k"), cfg.extra.get("optimal")
    if optimal:
        k = optimal_iterations(cfg.n)
    if k is None or k < 0:
        raise ConfigError("give --k <iterations >= 0> or --optimal")
    run = run_grover(cfg.n, int(k), cfg.target)
    notes = []
    if cfg.n == 2 and optimal:
        notes.append("n=2 is a rounding tie: k=0 and k=1 both succeed with probability 0.5")
    table = Table(
        {"n": [cfg.n], "k": [run.iterations], "success": [grover_success(cfg.n, run.iterations)],
         "success_iterated": [run.success]},
        {"experiment": "grover", "version": __version__},
        tuple(notes),
    )
    _write(table, cfg, out)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, args, out) -> int:
    n_list = cfg.extra["n_list"]
    if not n_list or any(n < 2 for n in n_list):
        raise ConfigError("n-list must hold integers >= 2")
    if not cfg.energy > 0 or not cfg.extra["c"] > 0:
        raise ConfigError("energy and c must be positive")
    table = compare_discrete(n_list, cfg.energy, float(cfg.extra["c"]), args.workers)
    _write(table, cfg, out)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "scan": cmd_scan,
    "scaling": cmd_scaling,
    "grover": cmd_grover,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON object with RunConfig field names; flags override it")
    common.add_argument("--n", type=int, help="number of items N")
    common.add_argument("--target", type=int, help="target index (default 0)")
    common.add_argument("--energy", type=float, help="E > 0 (default 1)")
    common.add_argument("--epsilon", help="eps value, or c-over-sqrt-n:<c> for eps = c E / sqrt(N)")
    common.add_argument("--phi-pi", dest="phi_pi", type=float, help="phase phi in units of pi (default 1)")
    common.add_argument("--model", choices=MODELS, help="Hamiltonian model (default iontrap)")
    common.add_argument("--w", help="drive frequency or 'resonant' (default)")
    common.add_argument("--t-end", dest="t_end", help="time span or 'auto' = 3 pi / (2 gamma)")
    common.add_argument("--dt", help="RK4 step or 'auto'")
    common.add_argument("--threshold", type=float, help="report first time p_target reaches this")
    common.add_argument("--output", help="table destination (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--initial", choices=("uniform", "pure-beta"))
    common.add_argument("--method", choices=("closed-form", "rk4"), help="evolution for hls/iontrap")
    common.add_argument("--workers", type=int, help="parallel scan points (env RESONANT_SEARCH_WORKERS)")

    parser = argparse.ArgumentParser(
        prog="resonant-search",
        description="Analog quantum search with a resonantly driven two-level Hamiltonian "
                    "(hbar = 1; energies dimensionless; times in 1/energy).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="evolve one instance")
    p.add_argument("--summary", default=None, help="write the JSON summary here (default stdout)")
    p = sub.add_parser("scan", parents=[common], help="resonance (w) or phase (phi) scan")
    p.add_argument("--axis", choices=("w", "phi"), default=S)
    p.add_argument("--min", type=float, default=S)
    p.add_argument("--max", type=float, default=S)
    p.add_argument("--steps", type=int, default=S, help="number of grid intervals")
    p = sub.add_parser("scaling", parents=[common], help="fit log t* against log N")
    p.add_argument("--n-list", dest="n_list", default=S)
    p.add_argument("--policy", default=S, help="fixed:<eps> or c-over-sqrt-n:<c>")
    p.add_argument("--stop", default=S, help="peak or threshold:<p>")
    p = sub.add_parser("grover", parents=[common], help="discrete Grover baseline")
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--optimal", action="store_true", default=S)
    p = sub.add_parser("compare", parents=[common], help="analog vs Grover table")
    p.add_argument("--n-list", dest="n_list", default=S)
    p.add_argument("--c", type=float, default=S)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if not hasattr(args, "workers"):
        args.workers = default_workers()
    if not hasattr(args, "summary"):
        args.summary = None
    try:
        cfg = build_config(args.command, args)
        return COMMANDS[args.command](cfg, args, out)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
