"""Command-line front end.

Subcommands
-----------
classical    nonlinear expansion solve + linear-phi collapse detection
moments      smeared mean, spectral variance, Gaussian collapse probability
mc           first-passage Monte Carlo for the Poisson collapse model
diagnostics  Green-operator residuals, bi-solution checks, convergence order

One JSON config document per run (see README for the schema); scalar results
and reports are written as a JSON run record, trajectories as CSV with a
header row and fixed column order t,value. Exit codes: 0 success, 2 config
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .congruence import (
    CongruenceBackground,
    Potential,
    Trajectory,
    detect_collapse,
    evolve_classical_raychaudhuri,
    potential_from_background,
    solve_linear_phi,
)
from .errors import ConfigurationError
from .green import GreenOperator, verify_green
from .grids import DEFAULT_N_POINTS, ProperTimeGrid
from .moments import RenormConstants, mean_phi, variance_report
from .smearing import CouplingWindow, TestFunction
from .stochastic import (
    DEFAULT_MAX_STEPS,
    collapse_probability,
    simulate_poisson_collapse,
)

__all__ = ["RunConfig", "RunRecord", "run_classical", "run_moments", "run_mc",
           "run_diagnostics", "main"]

#: Environment variable naming the default output directory.
OUT_DIR_ENV = "QFOCUS_OUT"


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _field(raw: dict, name: str, kind, required: bool = False, default=None):
    if name not in raw:
        if required:
            raise ConfigurationError(f"config field '{name}' is required")
        return default
    value = raw[name]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, kind):
        raise ConfigurationError(
            f"config field '{name}': expected {getattr(kind, '__name__', kind)}, "
            f"got {type(value).__name__}"
        )
    return value


@dataclass
class RunConfig:
    """Parsed and validated run configuration.

    Building one checks every module precondition reachable from the config;
    the original JSON document is kept for echoing into run records.
    """

    raw: dict
    grid: Optional[ProperTimeGrid] = None
    background: Optional[CongruenceBackground] = None
    flat: bool = True
    smearing: Optional[TestFunction] = None
    coupling: Optional[CouplingWindow] = None
    renorm: RenormConstants = field(default_factory=RenormConstants)
    phi0: Optional[float] = None
    theta0: Optional[float] = None
    mc: Optional[dict] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("config root must be a JSON object")
        cfg = cls(raw=raw)

        grid_raw = _field(raw, "grid", dict)
        if grid_raw is not None:
            cfg.grid = ProperTimeGrid(
                _field(grid_raw, "t_start", float, required=True),
                _field(grid_raw, "t_end", float, required=True),
                _field(grid_raw, "n_points", int, default=DEFAULT_N_POINTS),
            )

        bg_raw = raw.get("background", "flat")
        if bg_raw == "flat":
            cfg.flat = True
            if cfg.grid is not None:
                cfg.background = CongruenceBackground.flat(cfg.grid)
        elif isinstance(bg_raw, dict):
            if cfg.grid is None:
                raise ConfigurationError(
                    "config field 'background': sampled background needs 'grid'"
                )
            cfg.flat = False
            cfg.background = CongruenceBackground(
                _bg_samples(bg_raw, "sigma2", cfg.grid),
                _bg_samples(bg_raw, "omega2", cfg.grid),
                _bg_samples(bg_raw, "ricci_xx", cfg.grid),
                _bg_samples(bg_raw, "t_anom", cfg.grid),
            )
        else:
            raise ConfigurationError(
                "config field 'background': expected \"flat\" or an object"
            )

        sm_raw = _field(raw, "smearing", dict)
        if sm_raw is not None:
            cfg.smearing = _parse_smearing(sm_raw, cfg.grid)

        cp_raw = raw.get("coupling", "adiabatic")
        if cp_raw == "adiabatic":
            cfg.coupling = CouplingWindow.adiabatic_limit()
        elif isinstance(cp_raw, dict):
            cfg.coupling = CouplingWindow.bump(
                _field(cp_raw, "center", float, default=0.0),
                _field(cp_raw, "width", float, required=True),
                _field(cp_raw, "amplitude", float, default=1.0),
            )
        else:
            raise ConfigurationError(
                "config field 'coupling': expected \"adiabatic\" or an object"
            )

        rn_raw = _field(raw, "renorm", dict)
        if rn_raw is not None:
            a = rn_raw.get("a", [0.0] * 8)
            b = rn_raw.get("b", [0.0] * 4)
            if not isinstance(a, list) or not isinstance(b, list):
                raise ConfigurationError("config fields 'renorm.a'/'renorm.b' must be lists")
            cfg.renorm = RenormConstants(tuple(a), tuple(b))

        cfg.phi0 = _field(raw, "phi0", float)
        cfg.theta0 = _field(raw, "theta0", float)

        mc_raw = _field(raw, "mc", dict)
        if mc_raw is not None:
            cfg.mc = {
                "tau": _field(mc_raw, "tau", float, required=True),
                "n_trials": _field(mc_raw, "n_trials", int, required=True),
                "max_steps": _field(mc_raw, "max_steps", int,
                                    default=DEFAULT_MAX_STEPS),
                "seed": _field(mc_raw, "seed", int, default=0),
                "n_workers": _field(mc_raw, "n_workers", int, default=1),
            }
        return cfg

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ConfigurationError(f"config field '{name}' is required "
                                         "for this subcommand")


def _bg_samples(bg_raw: dict, name: str, grid: ProperTimeGrid) -> np.ndarray:
    value = bg_raw.get(name, 0.0)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(grid.n_points, float(value))
    if isinstance(value, list):
        arr = np.asarray(value, dtype=float)
        if arr.size != grid.n_points:
            raise ConfigurationError(
                f"config field 'background.{name}': {arr.size} samples for a "
                f"{grid.n_points}-point grid"
            )
        return arr
    raise ConfigurationError(
        f"config field 'background.{name}': expected number or list"
    )


def _parse_smearing(sm_raw: dict, grid: Optional[ProperTimeGrid]) -> TestFunction:
    kind = _field(sm_raw, "kind", str, default="gaussian")
    if kind == "gaussian":
        return TestFunction.gaussian(
            center=_field(sm_raw, "center", float, default=0.0),
            tau=_field(sm_raw, "tau", float, default=1.0),
            normalization=_field(sm_raw, "normalization", float, default=1.0),
        )
    if kind == "sampled":
        if grid is None:
            raise ConfigurationError(
                "config field 'smearing': sampled kind needs 'grid'"
            )
        samples = sm_raw.get("samples")
        if not isinstance(samples, list):
            raise ConfigurationError(
                "config field 'smearing.samples' must be a list"
            )
        return TestFunction.from_samples(np.asarray(samples, dtype=float), grid)
    raise ConfigurationError(
        f"config field 'smearing.kind': unknown kind {kind!r}"
    )


# ---------------------------------------------------------------------------
# Run records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    """Machine-readable result of one run: config echo, results map, tool
    version, timestamp. parse(serialize(record)) == record."""

    config: dict
    results: dict
    tool_version: str
    timestamp: str

    @classmethod
    def create(cls, config: dict, results: dict) -> "RunRecord":
        return cls(config=config, results=results, tool_version=__version__,
                   timestamp=datetime.now(timezone.utc).isoformat())

    def to_json(self) -> str:
        return json.dumps(
            {"config": self.config, "results": self.results,
             "tool_version": self.tool_version, "timestamp": self.timestamp},
            indent=2, sort_keys=True, allow_nan=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        d = json.loads(text)
        return cls(config=d["config"], results=d["results"],
                   tool_version=d["tool_version"], timestamp=d["timestamp"])


def _trajectory_rows(traj: Trajectory) -> list:
    return [[float(t), float(v)] for t, v in zip(traj.times, traj.values)]


# ---------------------------------------------------------------------------
# Subcommand implementations (pure: config -> record [+ trajectories])
# ---------------------------------------------------------------------------

def run_classical(config: RunConfig) -> tuple[RunRecord, dict]:
    """Nonlinear expansion solve plus the linear-phi cross route."""
    config.require("grid", "theta0")
    grid, bg, theta0 = config.grid, config.background, config.theta0

    result = evolve_classical_raychaudhuri(theta0, bg, grid)
    theta = result.trajectory

    phi0 = config.phi0 if config.phi0 is not None else 1.0
    V = potential_from_background(bg, grid)
    phi = solve_linear_phi(phi0, phi0 * theta0 / 3.0, V, None, grid)
    collapse_t = detect_collapse(phi)

    results = {
        "theta_start": theta0,
        "diverged": result.diverged,
        "divergence_time": result.divergence_time,
        "samples_kept": theta.grid.n_points,
        "phi_collapse_time": collapse_t,
    }
    record = RunRecord.create(config.raw, results)
    return record, {"theta": theta, "phi": phi}


def run_moments(config: RunConfig) -> tuple[RunRecord, dict]:
    """Smeared mean and variance, and the Gaussian collapse estimate."""
    config.require("grid", "smearing", "phi0")
    if not config.flat:
        raise ConfigurationError(
            "config field 'background': moments require \"flat\""
        )
    grid, f, phi0 = config.grid, config.smearing, config.phi0
    lam, rc = config.coupling, config.renorm

    G = GreenOperator.flat(grid)
    mean = mean_phi(f, lam, rc, phi0, G)
    var = variance_report(f, phi0)
    sigma = math.sqrt(var["variance_spectral"])

    if sigma > 0.0:
        p_collapse = collapse_probability(mean, sigma)
    else:
        # degenerate distribution concentrated at `mean`
        p_collapse = 0.5 if mean == 0.0 else (0.0 if mean > 0.0 else 1.0)

    results = {
        "mean": mean,
        "gaussian_model": {"mean": mean, "sigma": sigma},
        "collapse_probability": p_collapse,
        **var,
    }
    record = RunRecord.create(config.raw, results)
    return record, {}


def run_mc(config: RunConfig) -> tuple[RunRecord, dict]:
    """First-passage Monte Carlo for the Poisson collapse model."""
    config.require("mc")
    mc = config.mc
    report = simulate_poisson_collapse(
        tau=mc["tau"], n_trials=mc["n_trials"], max_steps=mc["max_steps"],
        seed=mc["seed"], n_workers=mc["n_workers"],
    )
    record = RunRecord.create(config.raw, report.to_dict())
    return record, {}


def run_diagnostics(config: RunConfig) -> tuple[RunRecord, dict]:
    """Green-operator verification battery on the configured interval."""
    config.require("grid")
    t0, t1 = config.grid.t_start, config.grid.t_end
    span = t1 - t0
    bump_center = t0 + 0.35 * span
    bump_width = 0.2 * span

    levels = [201, 401, 801, 1601]
    results: dict = {"levels": levels}
    for name, v_const in (("V0", 0.0), ("V1", 1.0)):
        residuals = []
        for n in levels:
            grid = ProperTimeGrid(t0, t1, n)
            G = GreenOperator(Potential.constant(grid, v_const))
            f = TestFunction.bump(grid, bump_center, bump_width)
            residuals.append(verify_green(G, f))
        hs = [span / (n - 1) for n in levels]
        slope = float(np.polyfit(np.log(hs), np.log(residuals), 1)[0])
        results[name] = {"residuals": residuals, "convergence_order": slope}

    # bi-solution checks on the middle level, harmonic potential
    grid = ProperTimeGrid(t0, t1, 801)
    G = GreenOperator(Potential.constant(grid, 1.0))
    mid = t0 + 0.5 * span
    s_col = G.bisolution(mid)(grid.times)
    sin_err = float(np.max(np.abs(s_col - np.sin(grid.times - mid))))
    idx = grid.index_of(mid)
    table = G.bisolution_table
    antisym = float(np.max(np.abs(table + table.T)))
    slope_fd = (table[idx + 1, idx] - table[idx - 1, idx]) / (2.0 * grid.h)
    results["bisolution"] = {
        "harmonic_max_error": sin_err,
        "antisymmetry": antisym,
        "coincidence_slope": float(slope_fd),
        "wronskian_drift": G.wronskian_drift(),
    }
    record = RunRecord.create(config.raw, results)
    return record, {}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_RUNNERS = {
    "classical": run_classical,
    "moments": run_moments,
    "mc": run_mc,
    "diagnostics": run_diagnostics,
}


def _write_csv(path: Path, traj: Trajectory) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for t, v in zip(traj.times, traj.values):
            writer.writerow([repr(float(t)), repr(float(v))])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfocus",
        description="Geodesic-congruence expansion under quantum matter "
                    "fluctuations: classical dynamics, perturbative moments, "
                    "collapse Monte Carlo, and solver diagnostics.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("classical", "solve the nonlinear expansion equation"),
        ("moments", "smeared mean/variance and collapse probability"),
        ("mc", "first-passage collapse Monte Carlo"),
        ("diagnostics", "Green operator verification battery"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None,
                       help=f"output directory (default: ${OUT_DIR_ENV} or cwd)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the Monte Carlo seed from the config")
        p.add_argument("--format", choices=("json", "csv"), default="csv",
                       help="trajectory emission: separate CSV files (default)"
                            " or embedded in the JSON record")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return 2
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"config error: malformed JSON: {exc}", file=sys.stderr)
        return 2

    try:
        config = RunConfig.from_dict(raw)
        if args.seed is not None:
            if config.mc is None:
                config.mc = {"tau": 1.0, "n_trials": 1,
                             "max_steps": DEFAULT_MAX_STEPS, "seed": 0,
                             "n_workers": 1}
            config.mc["seed"] = args.seed
        runner = _RUNNERS[args.command]
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        record, trajectories = runner(config)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    out_dir = Path(args.out or os.environ.get(OUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    if trajectories and args.format == "json":
        record = RunRecord(
            config=record.config,
            results={**record.results,
                     **{name: _trajectory_rows(t)
                        for name, t in trajectories.items()}},
            tool_version=record.tool_version,
            timestamp=record.timestamp,
        )
    record_path = out_dir / f"{args.command}_record.json"
    record_path.write_text(record.to_json() + "\n")

    if trajectories and args.format == "csv":
        for name, traj in trajectories.items():
            _write_csv(out_dir / f"{args.command}_{name}.csv", traj)

    print(f"wrote {record_path}")
    for key, value in record.results.items():
        if isinstance(value, (int, float, bool)) or value is None:
            print(f"  {key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
