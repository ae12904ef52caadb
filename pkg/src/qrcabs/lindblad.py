"""Liouvillian construction, steady states, and propagation.

The master equation combines coherent flip-flop coupling plus a uniform
sigma_y drive with local qubit decay at rate gamma:

    drho/dt = -i [H(s), rho]
              + gamma * sum_i ( sm_i rho sp_i - 1/2 {sp_i sm_i, rho} )

Density operators are vectorized by column stacking, so ``A rho B`` maps to
``(B^T ⊗ A) vec(rho)`` and the equation becomes ``dvec(rho)/dt = L vec(rho)``
with a dense matrix ``L`` of dimension ``4**n_qubits``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DegenerateNullSpaceError,
    embed,
    is_hermitian,
    matrix_exponential,
    nullspace_vector,
)

__all__ = [
    "DegenerateSteadyStateError",
    "NonHermitianObservableError",
    "Liouvillian",
    "vec",
    "unvec",
    "build_hamiltonian",
    "build_liouvillian",
    "steady_state",
    "propagator",
    "propagate",
    "expectation",
    "ground_state_density",
]


class DegenerateSteadyStateError(ValueError):
    """The Liouvillian kernel is not one-dimensional (gamma = 0 pathology)."""


class NonHermitianObservableError(ValueError):
    """Expectation value requested for a non-Hermitian observable."""


def vec(rho):
    """Column-stacking vectorization of a square matrix."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v, dim=None):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if dim is None:
        dim = round(len(v) ** 0.5)
    return v.reshape((dim, dim), order="F")


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Dense generator of the dissipative dynamics for one (signal, gamma) pair."""

    matrix: np.ndarray
    signal: float
    gamma: float
    n_qubits: int

    @property
    def hilbert_dim(self):
        return 2 ** self.n_qubits


def build_hamiltonian(spec, signal):
    """Rotating-frame Hamiltonian: flip-flop couplings plus a sigma_y drive.

    ``H = sum_{i<j} J_ij (sp_i sm_j + sm_i sp_j) + signal * sum_i sy_i``
    """
    n = spec.n_qubits
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    coupling = np.asarray(spec.coupling)
    for i in range(n):
        for j in range(i + 1, n):
            if coupling[i, j] != 0.0:
                h += coupling[i, j] * (
                    embed("plus", i, n) @ embed("minus", j, n)
                    + embed("minus", i, n) @ embed("plus", j, n)
                )
    if signal != 0.0:
        for i in range(n):
            h += signal * embed("y", i, n)
    return h


def build_liouvillian(spec, signal):
    """Assemble the vectorized generator for ``spec`` at drive amplitude ``signal``."""
    if spec.gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {spec.gamma}")
    n = spec.n_qubits
    dim = 2 ** n
    ident = np.eye(dim, dtype=complex)
    h = build_hamiltonian(spec, signal)
    l = -1j * (np.kron(ident, h) - np.kron(h.T, ident))
    if spec.gamma != 0.0:
        for i in range(n):
            sm = embed("minus", i, n)
            sp = sm.conj().T
            number = sp @ sm
            l += spec.gamma * (
                np.kron(sm.conj(), sm)
                - 0.5 * np.kron(ident, number)
                - 0.5 * np.kron(number.T, ident)
            )
    return Liouvillian(matrix=l, signal=float(signal), gamma=float(spec.gamma), n_qubits=n)


def steady_state(liouvillian):
    """Unique trace-one steady state of the generator.

    Raises
    ------
    DegenerateSteadyStateError
        For gamma <= 0 or a degenerate kernel, where no unique fixed point
        exists.
    """
    if liouvillian.gamma <= 0:
        raise DegenerateSteadyStateError(
            "steady state undefined for gamma <= 0 (unitary dynamics)"
        )
    try:
        v = nullspace_vector(liouvillian.matrix)
    except DegenerateNullSpaceError as exc:
        raise DegenerateSteadyStateError(str(exc)) from exc
    rho = unvec(v, liouvillian.hilbert_dim)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def propagator(liouvillian, dt):
    """Exact propagator ``exp(L dt)`` as a dense matrix."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return matrix_exponential(liouvillian.matrix * dt)


def propagate(liouvillian, rho, dt):
    """Evolve a density operator for a time ``dt`` and re-Hermitize."""
    out = unvec(propagator(liouvillian, dt) @ vec(rho), liouvillian.hilbert_dim)
    return 0.5 * (out + out.conj().T)


def expectation(rho, observable, atol=1e-10):
    """Real expectation value ``Tr(observable rho)`` of a Hermitian observable."""
    rho = np.asarray(rho)
    observable = np.asarray(observable)
    if rho.shape != observable.shape:
        raise ValueError(
            f"dimension mismatch: rho {rho.shape} vs observable {observable.shape}"
        )
    if not is_hermitian(observable, atol=atol):
        raise NonHermitianObservableError("observable is not Hermitian")
    value = np.trace(observable @ rho)
    if abs(value.imag) > atol:
        raise ValueError(
            f"expectation has imaginary part {value.imag:.3e}; state degraded"
        )
    return float(value.real)


def ground_state_density(n_qubits):
    """All-qubits-ground product state (the zero-drive steady state)."""
    dim = 2 ** n_qubits
    rho = np.zeros((dim, dim), dtype=complex)
    rho[dim - 1, dim - 1] = 1.0
    return rho
