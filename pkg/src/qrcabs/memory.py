"""Short-term memory benchmark: Legendre delay tasks and capacity sums.

A task of degree ``i`` and delay ``tau`` asks the readout to reproduce the
``i``-th Legendre polynomial (argument rescaled from [0, 1] to [-1, 1]) of
the input ``tau`` cycles in the past. Task quality is the squared Pearson
correlation on a held-out test run; per-degree capacities are summed over
delays until they fall below an empirically estimated noise threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from .pipeline import ReadoutSolver, run_reservoir
from .reservoir import INFINITE_SHOTS, generate_inputs, with_gamma
from .seeding import (
    PURPOSE_TEST_INPUTS,
    PURPOSE_TEST_SHOTS,
    PURPOSE_THRESHOLD,
    PURPOSE_TRAIN_INPUTS,
    PURPOSE_TRAIN_SHOTS,
    spawn_rng,
)

__all__ = [
    "ZeroVarianceError",
    "CapacityRecord",
    "DegreeResult",
    "StmcCell",
    "CapacityCurve",
    "StmcSettings",
    "legendre_target",
    "capacity",
    "noise_threshold",
    "total_capacity",
    "evaluate_stmc_cell",
    "stmc_sweep",
]

MAX_DEGREE = 3


class ZeroVarianceError(ValueError):
    """Pearson correlation undefined: one of the sequences is constant."""


def legendre_target(inputs, degree, delay):
    """Delayed Legendre target sequence for a [0, 1]-valued input sequence.

    Entry ``k`` (for ``k >= delay``) is ``P_degree(2 * s_{k-delay} - 1)``
    with the standard Legendre polynomial on [-1, 1]; the first ``delay``
    entries are NaN and must be excluded from any regression.
    """
    if not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must be in [1, {MAX_DEGREE}], got {degree}")
    if delay < 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    inputs = np.asarray(inputs, dtype=float)
    coeffs = np.zeros(degree + 1)
    coeffs[degree] = 1.0
    target = np.full(len(inputs), np.nan)
    if delay < len(inputs):
        shifted = inputs[: len(inputs) - delay]
        target[delay:] = npleg.legval(2.0 * shifted - 1.0, coeffs)
    return target


def capacity(prediction, target):
    """Squared Pearson correlation between two equally long sequences."""
    prediction = np.asarray(prediction, dtype=float)
    target = np.asarray(target, dtype=float)
    if prediction.shape != target.shape or prediction.ndim != 1:
        raise ValueError(
            f"need two equal-length vectors, got {prediction.shape} and {target.shape}"
        )
    if len(prediction) < 2:
        raise ValueError("need at least two samples")
    dp = prediction - prediction.mean()
    dt = target - target.mean()
    var_p = float(dp @ dp)
    var_t = float(dt @ dt)
    scale = 1e-14 * len(prediction)
    if var_p <= scale * max(1.0, float(np.max(prediction * prediction))) or var_t <= scale * max(
        1.0, float(np.max(target * target))
    ):
        raise ZeroVarianceError("constant sequence has no Pearson correlation")
    cov = float(dp @ dt)
    value = (cov * cov) / (var_p * var_t)
    return min(value, 1.0)


def _capacity_or_zero(prediction, target):
    try:
        return capacity(prediction, target)
    except ZeroVarianceError:
        warnings.warn("constant readout prediction treated as capacity 0", stacklevel=3)
        return 0.0


def noise_threshold(x_train, x_test, degree, repetitions=500, rng=None):
    """Largest spurious capacity of the readout against random targets.

    Each repetition trains on a fresh random Legendre-mapped target and
    evaluates the trained readout against an independent random target on the
    test rows, so any correlation is pure overfitting noise. Returns the
    maximum over repetitions.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    if rng is None:
        rng = np.random.default_rng()
    solver = ReadoutSolver(x_train)
    test_data = x_test.data
    best = 0.0
    for _ in range(repetitions):
        train_target = legendre_target(rng.random(x_train.rows), degree, 0)
        eval_target = legendre_target(rng.random(x_test.rows), degree, 0)
        weights = solver.solve(train_target)
        value = _capacity_or_zero(test_data @ weights, eval_target)
        best = max(best, value)
    return best


@dataclass(frozen=True)
class CapacityRecord:
    degree: int
    delay: int
    capacity: float
    above_threshold: bool


def total_capacity(
    x_train,
    x_test,
    inputs_train,
    inputs_test,
    degree,
    threshold,
    delay_cap=50,
):
    """Noise-thresholded sum of per-delay capacities for one degree.

    Scans delays 0, 1, 2, … computing the test capacity of each delay task
    (rows before the delay are dropped on both splits), and stops at the
    first delay whose capacity falls below ``threshold`` (excluded) or after
    ``delay_cap`` delays. Returns ``(total, tau_max, records)`` where
    ``tau_max`` counts the retained delays.
    """
    if delay_cap < 0:
        raise ValueError(f"delay_cap must be >= 0, got {delay_cap}")
    records = []
    total = 0.0
    tau_max = 0
    for delay in range(delay_cap + 1):
        if delay >= x_train.rows - 1 or delay >= x_test.rows - 1:
            break
        train_target = legendre_target(inputs_train, degree, delay)[delay:]
        test_target = legendre_target(inputs_test, degree, delay)[delay:]
        weights = ReadoutSolver(x_train.data[delay:]).solve(train_target)
        prediction = x_test.data[delay:] @ weights
        value = _capacity_or_zero(prediction, test_target)
        keep = value >= threshold
        records.append(CapacityRecord(degree, delay, value, keep))
        if not keep:
            break
        total += value
        tau_max += 1
    return total, tau_max, records


@dataclass(frozen=True)
class StmcSettings:
    """Benchmark protocol parameters shared by every cell of a sweep."""

    multiplexing: int = 4
    shots: object = INFINITE_SHOTS
    train_len: int = 1000
    test_len: int = 1000
    degrees: tuple = (1, 2, 3)
    delay_cap: int = 50
    threshold_repetitions: int = 500


@dataclass(frozen=True)
class DegreeResult:
    degree: int
    total: float
    threshold: float
    tau_max: int
    records: tuple = ()


@dataclass(frozen=True)
class StmcCell:
    reservoir_index: int
    gamma: float
    results: dict
    error: str | None = None


@dataclass(frozen=True)
class CapacityCurve:
    """Per-degree totals, thresholds and retained-delay counts over a gamma grid."""

    gamma_grid: np.ndarray
    totals: dict
    thresholds: dict
    tau_max: dict


def evaluate_stmc_cell(spec, gamma, reservoir_index, gamma_index, settings, root_seed):
    """Run one (reservoir, gamma) cell of the memory benchmark.

    Input sequences are seeded per reservoir (shared across the gamma grid);
    shot noise and threshold draws are seeded per cell, so cells are
    reproducible in isolation and independent of execution order.
    """
    cell = with_gamma(spec, gamma)
    inputs_train = generate_inputs(
        settings.train_len, spawn_rng(root_seed, reservoir_index, PURPOSE_TRAIN_INPUTS)
    )
    inputs_test = generate_inputs(
        settings.test_len, spawn_rng(root_seed, reservoir_index, PURPOSE_TEST_INPUTS)
    )
    x_train = run_reservoir(
        cell,
        inputs_train,
        multiplexing=settings.multiplexing,
        shots=settings.shots,
        rng=spawn_rng(root_seed, reservoir_index, PURPOSE_TRAIN_SHOTS, gamma_index),
    )
    x_test = run_reservoir(
        cell,
        inputs_test,
        multiplexing=settings.multiplexing,
        shots=settings.shots,
        rng=spawn_rng(root_seed, reservoir_index, PURPOSE_TEST_SHOTS, gamma_index),
    )
    results = {}
    for degree in settings.degrees:
        rng = spawn_rng(root_seed, reservoir_index, PURPOSE_THRESHOLD, gamma_index, degree)
        threshold = noise_threshold(
            x_train, x_test, degree, settings.threshold_repetitions, rng
        )
        total, tau_max, records = total_capacity(
            x_train,
            x_test,
            inputs_train,
            inputs_test,
            degree,
            threshold,
            settings.delay_cap,
        )
        results[degree] = DegreeResult(degree, total, threshold, tau_max, tuple(records))
    return StmcCell(reservoir_index, float(gamma), results)


def stmc_sweep(ensemble, gamma_grid, settings=StmcSettings(), root_seed=0):
    """Memory benchmark over a reservoir ensemble and a gamma grid.

    Returns a list of :class:`CapacityCurve`, one per reservoir, plus the
    flat list of cells (including error records for failed cells).
    """
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    if np.any(gamma_grid <= 0):
        raise ValueError("gamma grid must be strictly positive")
    cells = []
    for r, spec in enumerate(ensemble):
        for g, gamma in enumerate(gamma_grid):
            try:
                cells.append(evaluate_stmc_cell(spec, gamma, r, g, settings, root_seed))
            except Exception as exc:  # cell failures degrade to records
                cells.append(StmcCell(r, float(gamma), {}, error=repr(exc)))
    curves = []
    for r in range(len(ensemble)):
        own = [c for c in cells if c.reservoir_index == r]
        totals = {}
        thresholds = {}
        tau_max = {}
        for degree in settings.degrees:
            totals[degree] = np.array(
                [c.results[degree].total if c.results else np.nan for c in own]
            )
            thresholds[degree] = np.array(
                [c.results[degree].threshold if c.results else np.nan for c in own]
            )
            tau_max[degree] = np.array(
                [c.results[degree].tau_max if c.results else -1 for c in own]
            )
        curves.append(CapacityCurve(gamma_grid.copy(), totals, thresholds, tau_max))
    return curves, cells
