"""Experiment orchestration: configs, seeded sweeps, CSV/JSON emission.

A sweep samples an ensemble of reservoirs from a root seed and walks the
(reservoir, gamma) grid, computing memory-capacity totals and resonant
absorption for every cell. Cells are independent work units with their own
derived RNG streams, so results are identical for any worker count; failures
in single cells are recorded and do not abort the run.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from . import __version__
from .absorption import resonant_absorption
from .lindblad import build_liouvillian, expectation, propagator, steady_state
from .linalg import embed
from .memory import StmcCell, StmcSettings, evaluate_stmc_cell
from .reservoir import (
    INFINITE_SHOTS,
    TOPOLOGIES,
    ShotModel,
    generate_inputs,
    sample_network,
    with_gamma,
)
from .seeding import PURPOSE_COUPLING, PURPOSE_TIMETRACE, spawn_rng, spawn_seed

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SweepResult",
    "AbsorptionCell",
    "run_sweep",
    "correlate_curves",
    "run_timetrace",
    "emit",
    "sample_ensemble",
    "SUMMARY_SCHEMA",
    "WORKERS_ENV_VAR",
]

WORKERS_ENV_VAR = "QRCABS_WORKERS"

_DEFAULT_S_GRID = tuple(np.round(np.linspace(0.1, 1.0, 10), 10))


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one sweep; JSON round-trippable."""

    n_qubits: int = 3
    topology: str = "all-to-all"
    coupling_strength: float = 0.5
    gamma_min_exp: float = -3.0
    gamma_max_exp: float = 3.0
    gamma_points: int = 25
    ensemble_size: int = 15
    multiplexing: int = 4
    shots: int | None = 10 ** 6
    train_len: int = 1000
    test_len: int = 1000
    degrees: tuple = (1, 2, 3)
    delay_cap: int = 50
    threshold_repetitions: int = 500
    s_grid: tuple = _DEFAULT_S_GRID
    root_seed: int = 42
    output_dir: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        object.__setattr__(self, "s_grid", tuple(float(s) for s in self.s_grid))
        self.validate()

    def validate(self):
        if not 1 <= self.n_qubits <= 4:
            raise ConfigError(f"n_qubits must be in [1, 4], got {self.n_qubits}")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.coupling_strength <= 0:
            raise ConfigError("coupling_strength must be > 0")
        if self.gamma_points < 1:
            raise ConfigError("gamma_points must be >= 1")
        if self.gamma_min_exp > self.gamma_max_exp:
            raise ConfigError("gamma_min_exp must not exceed gamma_max_exp")
        for name in ("ensemble_size", "multiplexing", "train_len", "test_len",
                     "threshold_repetitions"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.delay_cap < 0:
            raise ConfigError("delay_cap must be >= 0")
        if self.shots is not None and int(self.shots) < 1:
            raise ConfigError("shots must be >= 1 or \"infinite\"")
        if not self.degrees or any(not 1 <= d <= 3 for d in self.degrees):
            raise ConfigError("degrees must be a nonempty subset of {1, 2, 3}")
        if not self.s_grid or any(s <= 0 or s > 1 for s in self.s_grid):
            raise ConfigError("s_grid values must lie in (0, 1]")
        if not 0 <= int(self.root_seed) < 2 ** 64:
            raise ConfigError("root_seed must fit in 64 bits")

    @property
    def gamma_grid(self):
        return np.logspace(self.gamma_min_exp, self.gamma_max_exp, self.gamma_points)

    @property
    def shot_model(self):
        return INFINITE_SHOTS if self.shots is None else ShotModel(self.shots)

    @property
    def stmc_settings(self):
        return StmcSettings(
            multiplexing=self.multiplexing,
            shots=self.shot_model,
            train_len=self.train_len,
            test_len=self.test_len,
            degrees=self.degrees,
            delay_cap=self.delay_cap,
            threshold_repetitions=self.threshold_repetitions,
        )

    def to_dict(self):
        out = asdict(self)
        out["shots"] = "infinite" if self.shots is None else int(self.shots)
        out["degrees"] = list(self.degrees)
        out["s_grid"] = list(self.s_grid)
        return out

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        data = dict(data)
        if isinstance(data.get("shots"), str):
            if data["shots"].lower() != "infinite":
                raise ConfigError(f"shots must be an integer or \"infinite\", got {data['shots']!r}")
            data["shots"] = None
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must contain a JSON object")
        return cls.from_dict(data)

    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class AbsorptionCell:
    reservoir_index: int
    gamma: float
    alpha0_per_s: tuple = ()
    alpha_mean: float = float("nan")
    error: str | None = None


@dataclass
class SweepResult:
    config: ExperimentConfig
    gamma_grid: np.ndarray
    reservoir_seeds: list
    stmc_cells: list = field(default_factory=list)
    absorption_cells: list = field(default_factory=list)

    def mean_capacity_curve(self, degree):
        grid = np.full((self.config.ensemble_size, len(self.gamma_grid)), np.nan)
        for cell in self.stmc_cells:
            if not cell.error and degree in cell.results:
                g = self._gamma_index(cell.gamma)
                grid[cell.reservoir_index, g] = cell.results[degree].total
        return np.nanmean(grid, axis=0)

    def mean_absorption_curve(self):
        grid = np.full((self.config.ensemble_size, len(self.gamma_grid)), np.nan)
        for cell in self.absorption_cells:
            if not cell.error:
                g = self._gamma_index(cell.gamma)
                grid[cell.reservoir_index, g] = cell.alpha_mean
        return np.nanmean(grid, axis=0)

    def errors(self):
        out = []
        for kind, cells in (("stmc", self.stmc_cells), ("absorption", self.absorption_cells)):
            for cell in cells:
                if cell.error:
                    out.append(
                        {
                            "stage": kind,
                            "reservoir": cell.reservoir_index,
                            "gamma": cell.gamma,
                            "error": cell.error,
                        }
                    )
        return out

    def _gamma_index(self, gamma):
        return int(np.argmin(np.abs(self.gamma_grid - gamma)))


def sample_ensemble(config):
    """The sweep's reservoirs; coupling seeds derive from the root seed."""
    seeds = [
        spawn_seed(config.root_seed, r, PURPOSE_COUPLING)
        for r in range(config.ensemble_size)
    ]
    specs = [
        sample_network(
            config.n_qubits,
            config.coupling_strength,
            gamma=1.0,
            topology=config.topology,
            seed=seed,
        )
        for seed in seeds
    ]
    return specs, seeds


def _run_cell(args):
    """Worker entry point: one (reservoir, gamma) grid cell."""
    config_dict, reservoir_index, gamma_index, do_stmc, do_absorption = args
    config = ExperimentConfig.from_dict(config_dict)
    gamma = float(config.gamma_grid[gamma_index])
    seed = spawn_seed(config.root_seed, reservoir_index, PURPOSE_COUPLING)
    spec = sample_network(
        config.n_qubits,
        config.coupling_strength,
        gamma=gamma,
        topology=config.topology,
        seed=seed,
    )
    stmc_cell = None
    absorption_cell = None
    if do_stmc:
        try:
            stmc_cell = evaluate_stmc_cell(
                spec, gamma, reservoir_index, gamma_index,
                config.stmc_settings, config.root_seed,
            )
        except Exception as exc:
            stmc_cell = StmcCell(reservoir_index, gamma, {}, error=repr(exc))
    if do_absorption:
        try:
            cell_spec = with_gamma(spec, gamma)
            per_s = tuple(
                resonant_absorption(cell_spec, s) for s in config.s_grid
            )
            absorption_cell = AbsorptionCell(
                reservoir_index, gamma, per_s, float(np.mean(per_s))
            )
        except Exception as exc:
            absorption_cell = AbsorptionCell(reservoir_index, gamma, error=repr(exc))
    return reservoir_index, gamma_index, stmc_cell, absorption_cell


def run_sweep(config, workers=1, include_stmc=True, include_absorption=True):
    """Execute the full grid and return an order-independent result."""
    specs, seeds = sample_ensemble(config)
    tasks = [
        (config.to_dict(), r, g, include_stmc, include_absorption)
        for r in range(config.ensemble_size)
        for g in range(len(config.gamma_grid))
    ]
    if workers <= 1 or len(tasks) == 1:
        outcomes = [_run_cell(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            outcomes = list(pool.map(_run_cell, tasks))
    outcomes.sort(key=lambda item: (item[0], item[1]))
    result = SweepResult(
        config=config,
        gamma_grid=config.gamma_grid,
        reservoir_seeds=seeds,
    )
    for _, _, stmc_cell, absorption_cell in outcomes:
        if stmc_cell is not None:
            result.stmc_cells.append(stmc_cell)
        if absorption_cell is not None:
            result.absorption_cells.append(absorption_cell)
    return result


def correlate_curves(result, degree):
    """Spearman rank correlation of mean capacity vs mean absorption over gamma."""
    capacity_curve = result.mean_capacity_curve(degree)
    absorption_curve = result.mean_absorption_curve()
    valid = np.isfinite(capacity_curve) & np.isfinite(absorption_curve)
    if int(valid.sum()) < 3:
        raise ValueError("need at least 3 shared gamma points to correlate")
    rho = stats.spearmanr(capacity_curve[valid], absorption_curve[valid]).statistic
    return float(rho)


def run_timetrace(
    spec=None,
    protocol=(5, 10, 10),
    gammas=(0.01, 1.0, 100.0),
    seed=0,
    substeps=20,
    n_qubits=3,
    coupling_strength=0.5,
    topology="all-to-all",
):
    """Zero/input/zero drive protocol, recording the first qubit's sigma_z.

    Returns a dict with the sub-step time grid, the input staircase, and one
    trace per gamma. The same random inputs (seeded) drive every gamma.
    """
    n_zero_pre, n_inputs, n_zero_post = (int(x) for x in protocol)
    if min(n_zero_pre, n_inputs, n_zero_post) < 0:
        raise ValueError("protocol counts must be >= 0")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if spec is None:
        spec = sample_network(
            n_qubits, coupling_strength, gamma=1.0,
            topology=topology, seed=spawn_seed(seed, 0, PURPOSE_COUPLING),
        )
    drive = np.concatenate(
        [
            np.zeros(n_zero_pre),
            generate_inputs(n_inputs, spawn_rng(seed, 0, PURPOSE_TIMETRACE))
            if n_inputs else np.zeros(0),
            np.zeros(n_zero_post),
        ]
    )
    n_cycles = len(drive)
    sz0 = embed("z", 0, spec.n_qubits)
    dt = 1.0 / substeps
    times = np.arange(1, n_cycles * substeps + 1) * dt
    staircase = np.repeat(drive, substeps)
    traces = {}
    for gamma in gammas:
        cell = with_gamma(spec, gamma)
        rho = steady_state(build_liouvillian(cell, 0.0))
        cache = {}
        trace = np.empty(len(times))
        k = 0
        for s in drive:
            step = cache.get(s)
            if step is None:
                step = propagator(build_liouvillian(cell, s), dt)
                cache[s] = step
            for _ in range(substeps):
                rho_vec = step @ rho.reshape(-1, order="F")
                rho = rho_vec.reshape(rho.shape, order="F")
                rho = 0.5 * (rho + rho.conj().T)
                trace[k] = expectation(rho, sz0)
                k += 1
        traces[float(gamma)] = trace
    return {"times": times, "input": staircase, "traces": traces, "spec": spec}


def _fmt(value):
    return format(float(value), ".17g")


def emit(result, out_dir=None):
    """Write stmc.csv, absorption.csv and summary.json; returns the paths."""
    out_dir = result.config.output_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    stmc_path = os.path.join(out_dir, "stmc.csv")
    with open(stmc_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["reservoir", "gamma", "degree", "total_capacity", "threshold", "tau_max"]
        )
        for cell in result.stmc_cells:
            for degree in result.config.degrees:
                if cell.error or degree not in cell.results:
                    writer.writerow(
                        [cell.reservoir_index, _fmt(cell.gamma), degree, "", "", ""]
                    )
                else:
                    res = cell.results[degree]
                    writer.writerow(
                        [
                            cell.reservoir_index,
                            _fmt(cell.gamma),
                            degree,
                            _fmt(res.total),
                            _fmt(res.threshold),
                            res.tau_max,
                        ]
                    )
    paths["stmc"] = stmc_path

    absorption_path = os.path.join(out_dir, "absorption.csv")
    with open(absorption_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["reservoir", "gamma", "s", "alpha0"])
        for cell in result.absorption_cells:
            if cell.error:
                writer.writerow([cell.reservoir_index, _fmt(cell.gamma), "", ""])
                continue
            for s, alpha0 in zip(result.config.s_grid, cell.alpha0_per_s):
                writer.writerow(
                    [cell.reservoir_index, _fmt(cell.gamma), _fmt(s), _fmt(alpha0)]
                )
            writer.writerow(
                [cell.reservoir_index, _fmt(cell.gamma), "mean", _fmt(cell.alpha_mean)]
            )
    paths["absorption"] = absorption_path

    spearman = {}
    if result.stmc_cells and result.absorption_cells:
        for degree in result.config.degrees:
            try:
                spearman[str(degree)] = correlate_curves(result, degree)
            except ValueError:
                spearman[str(degree)] = None

    summary = {
        "config": result.config.to_dict(),
        "config_hash": result.config.config_hash(),
        "code_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "root_seed": int(result.config.root_seed),
        "reservoir_seeds": [int(s) for s in result.reservoir_seeds],
        "gamma_grid": [float(g) for g in result.gamma_grid],
        "spearman": spearman,
        "errors": result.errors(),
    }
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    paths["summary"] = summary_path
    return paths


#: Schema of summary.json (draft 2020-12), used by the test suite.
SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "config", "config_hash", "code_version", "timestamp",
        "root_seed", "reservoir_seeds", "gamma_grid", "spearman", "errors",
    ],
    "properties": {
        "config": {"type": "object"},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "code_version": {"type": "string"},
        "timestamp": {"type": "string"},
        "root_seed": {"type": "integer"},
        "reservoir_seeds": {"type": "array", "items": {"type": "integer"}},
        "gamma_grid": {"type": "array", "items": {"type": "number"}},
        "spearman": {
            "type": "object",
            "additionalProperties": {"type": ["number", "null"]},
        },
        "errors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["stage", "reservoir", "gamma", "error"],
            },
        },
    },
}
