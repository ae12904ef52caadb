"""Reservoir definition: random couplings, input sequences, readout, shot noise.

Coupling matrices are sampled uniformly on the allowed edges of the chosen
topology and rescaled so their spectral radius equals the requested coupling
strength. Inputs are i.i.d. uniform on [0, 1] and enter the dynamics as the
drive amplitude of a sigma_y term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .linalg import embed

__all__ = [
    "TOPOLOGIES",
    "ExpectationOutOfRangeError",
    "QubitNetworkSpec",
    "ShotModel",
    "INFINITE_SHOTS",
    "sample_network",
    "generate_inputs",
    "readout_observables",
    "measure",
    "with_gamma",
]

TOPOLOGIES = ("all-to-all", "ring")


class ExpectationOutOfRangeError(ValueError):
    """A claimed expectation value lies outside [-1, 1] beyond rounding slack."""


@dataclass(frozen=True, eq=False)
class QubitNetworkSpec:
    """Static definition of one reservoir.

    ``coupling`` is a symmetric matrix with zero diagonal whose spectral
    radius equals ``coupling_strength`` (except for single-qubit networks,
    which have no edges). ``qubit_energy`` is the lab-frame level splitting;
    it is eliminated by the rotating frame and kept for documentation only.
    """

    n_qubits: int
    coupling: np.ndarray
    coupling_strength: float
    gamma: float
    topology: str
    seed: int
    qubit_energy: float = 1.0


def with_gamma(spec, gamma):
    """Copy of ``spec`` with a different decay rate (same couplings)."""
    return replace(spec, gamma=float(gamma))


def _topology_mask(n_qubits, topology):
    mask = np.zeros((n_qubits, n_qubits), dtype=bool)
    for i in range(n_qubits):
        for j in range(i + 1, n_qubits):
            if topology == "all-to-all":
                mask[i, j] = True
            elif topology == "ring":
                mask[i, j] = (j - i == 1) or (j - i == n_qubits - 1)
            else:
                raise ValueError(f"unknown topology {topology!r}; use one of {TOPOLOGIES}")
    return mask


def sample_network(n_qubits, coupling_strength, gamma, topology="all-to-all", seed=0):
    """Draw a random reservoir with the requested spectral radius.

    Edge weights are i.i.d. uniform on [0, 1), symmetrized, then the whole
    matrix is rescaled so its largest absolute eigenvalue equals
    ``coupling_strength`` exactly. Deterministic given ``seed``.
    """
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    if coupling_strength <= 0:
        raise ValueError(f"coupling_strength must be > 0, got {coupling_strength}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    rng = np.random.default_rng(seed)
    mask = _topology_mask(n_qubits, topology)
    coupling = np.zeros((n_qubits, n_qubits))
    coupling[mask] = rng.random(int(mask.sum()))
    coupling = coupling + coupling.T
    radius = np.max(np.abs(np.linalg.eigvalsh(coupling))) if n_qubits > 1 else 0.0
    if radius > 0:
        coupling *= coupling_strength / radius
    coupling.setflags(write=False)
    return QubitNetworkSpec(
        n_qubits=n_qubits,
        coupling=coupling,
        coupling_strength=float(coupling_strength),
        gamma=float(gamma),
        topology=topology,
        seed=int(seed),
    )


def generate_inputs(length, seed):
    """I.i.d. uniform-[0, 1) drive amplitudes, deterministic given ``seed``."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    return np.random.default_rng(seed).random(int(length))


def readout_observables(spec):
    """Embedded sigma_z operators, one per qubit, in qubit-index order."""
    n = spec.n_qubits if hasattr(spec, "n_qubits") else int(spec)
    return [embed("z", i, n) for i in range(n)]


@dataclass(frozen=True)
class ShotModel:
    """Measurement budget for one readout value.

    ``shots=None`` means the noiseless infinite-shot limit. A finite budget
    ``m`` adds zero-mean Gaussian readout noise with standard deviation
    ``1/sqrt(m)`` — the shot-noise scale of an m-shot estimate of a two-level
    expectation value.
    """

    shots: int | None = None

    def __post_init__(self):
        if self.shots is not None:
            if int(self.shots) < 1:
                raise ValueError(f"shots must be >= 1 when finite, got {self.shots}")
            object.__setattr__(self, "shots", int(self.shots))

    @property
    def infinite(self):
        return self.shots is None

    @property
    def sigma(self):
        """Noise standard deviation (0 for infinite shots)."""
        return 0.0 if self.shots is None else 1.0 / math.sqrt(self.shots)

    def split(self, ways):
        """Budget divided evenly over ``ways`` readouts per cycle."""
        if self.shots is None:
            return self
        return ShotModel(shots=max(1, self.shots // int(ways)))


INFINITE_SHOTS = ShotModel(shots=None)


def _validate_expectation(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-9):
        worst = float(np.max(np.abs(x)))
        raise ExpectationOutOfRangeError(
            f"expectation magnitude {worst} exceeds 1 beyond rounding slack"
        )
    return np.clip(x, -1.0, 1.0)


def measure(true_expectation, model, rng=None):
    """Noisy readout of a sigma_z expectation value under a shot budget.

    Infinite shots pass the value through unchanged. A finite budget adds
    Gaussian noise with ``model.sigma``; values are not clipped afterwards,
    so finite-shot readouts may overshoot [-1, 1] by a few sigma.

    Accepts scalars or arrays (elementwise, independent noise).
    """
    scalar = np.isscalar(true_expectation) or np.ndim(true_expectation) == 0
    x = _validate_expectation(true_expectation)
    if model.infinite:
        return float(x) if scalar else x
    if rng is None:
        raise ValueError("finite-shot measurement requires an rng")
    out = x + rng.normal(0.0, model.sigma, size=np.shape(x))
    return float(out) if scalar else out
