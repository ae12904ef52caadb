"""Reservoir runs, state collect matrices, and linear readout training.

One input cycle has unit duration. The drive amplitude is constant within a
cycle, so the evolution over each of the ``V`` sub-steps is the exact
propagator ``exp(L(s_k)/V)``; after every sub-step all sigma_z expectations
pass through the shot model and land in one row of the state collect matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lindblad import build_liouvillian, propagator, steady_state, vec
from .reservoir import INFINITE_SHOTS

__all__ = [
    "StateCollectMatrix",
    "ReadoutSolver",
    "run_reservoir",
    "train_readout",
    "predict",
]

#: Relative singular-value cutoff shared by all least-squares readout fits.
LSTSQ_RCOND = 1e-10


@dataclass(frozen=True, eq=False)
class StateCollectMatrix:
    """K x (N*V + 1) matrix of recorded readouts plus a trailing bias column."""

    data: np.ndarray
    n_qubits: int
    multiplexing: int

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]


def _sigma_z_diagonals(n_qubits):
    """Diagonal of each embedded sigma_z, as rows of a (N, 2**N) array."""
    dim = 2 ** n_qubits
    diags = np.empty((n_qubits, dim))
    for i in range(n_qubits):
        bit = n_qubits - 1 - i
        states = np.arange(dim)
        # basis index 0 is the excited state of every qubit
        diags[i] = np.where((states >> bit) & 1, -1.0, 1.0)
    return diags


def run_reservoir(
    spec,
    inputs,
    multiplexing=4,
    shots=INFINITE_SHOTS,
    rng=None,
    initial_state=None,
):
    """Drive the reservoir through ``inputs`` and collect the readout matrix.

    The run starts in the zero-input steady state (or ``initial_state`` if
    given). The shot budget of ``shots`` covers one full cycle and is split
    evenly over the ``n_qubits * multiplexing`` readouts recorded per cycle.

    Returns a :class:`StateCollectMatrix` whose row ``k`` holds the
    ``N * V`` noisy expectations of cycle ``k`` (sub-step major, qubit minor)
    followed by the bias entry 1.
    """
    if multiplexing < 1:
        raise ValueError(f"multiplexing must be >= 1, got {multiplexing}")
    if spec.gamma <= 0:
        raise ValueError("run_reservoir requires gamma > 0 for a unique steady state")
    inputs = np.asarray(inputs, dtype=float)
    n = spec.n_qubits
    dim = 2 ** n
    v_steps = int(multiplexing)
    per_readout = shots.split(n * v_steps)
    if not per_readout.infinite and rng is None:
        raise ValueError("finite-shot runs require an rng")

    if initial_state is None:
        initial_state = steady_state(build_liouvillian(spec, 0.0))
    state = vec(initial_state)
    diags = _sigma_z_diagonals(n)
    diag_idx = np.arange(dim) * (dim + 1)  # positions of rho_ii in vec(rho)

    cache = {}
    data = np.empty((len(inputs), n * v_steps + 1))
    data[:, -1] = 1.0
    for k, s_k in enumerate(inputs):
        step = cache.get(s_k)
        if step is None:
            step = propagator(build_liouvillian(spec, s_k), 1.0 / v_steps)
            cache[s_k] = step
        for v in range(v_steps):
            state = step @ state
            # re-Hermitize to suppress drift over thousand-step runs
            rho = state.reshape((dim, dim), order="F")
            rho = 0.5 * (rho + rho.conj().T)
            state = rho.reshape(-1, order="F")
            populations = state[diag_idx].real
            exact = diags @ populations
            np.clip(exact, -1.0, 1.0, out=exact)
            if per_readout.infinite:
                observed = exact
            else:
                observed = exact + rng.normal(0.0, per_readout.sigma, size=n)
            data[k, v * n : (v + 1) * n] = observed
    return StateCollectMatrix(data=data, n_qubits=n, multiplexing=v_steps)


class ReadoutSolver:
    """Reusable least-squares solver for many targets against one matrix.

    Factors the (possibly row-sliced) state collect matrix once with an SVD
    using the same relative cutoff as :func:`train_readout`, then solves each
    target with two small matrix-vector products.
    """

    def __init__(self, matrix):
        data = matrix.data if isinstance(matrix, StateCollectMatrix) else np.asarray(matrix)
        u, s, vh = np.linalg.svd(data, full_matrices=False)
        keep = s > LSTSQ_RCOND * s[0]
        self._ut = u[:, keep].T
        self._v_over_s = vh[keep].T / s[keep]

    def solve(self, target):
        """Minimum-norm least-squares weights for ``target``."""
        return self._v_over_s @ (self._ut @ np.asarray(target, dtype=float))


def train_readout(matrix, target):
    """Least-squares readout weights minimizing ``|target - X w|``.

    SVD-based with relative singular-value cutoff 1e-10; among minimizers the
    minimum-norm solution is returned.
    """
    data = matrix.data if isinstance(matrix, StateCollectMatrix) else np.asarray(matrix)
    target = np.asarray(target, dtype=float)
    if target.ndim != 1 or len(target) != data.shape[0]:
        raise ValueError(
            f"target length {target.shape} does not match {data.shape[0]} rows"
        )
    weights, *_ = np.linalg.lstsq(data, target, rcond=LSTSQ_RCOND)
    return weights


def predict(matrix, weights):
    """Apply readout weights: ``y = X w``."""
    data = matrix.data if isinstance(matrix, StateCollectMatrix) else np.asarray(matrix)
    weights = np.asarray(weights, dtype=float)
    if data.shape[1] != len(weights):
        raise ValueError(
            f"weight length {len(weights)} does not match {data.shape[1]} columns"
        )
    return data @ weights
