"""Dense complex matrix primitives for multi-qubit open-system simulations.

Everything here operates on plain ``numpy.ndarray`` with ``complex128``
entries. Single-qubit operators use the convention sigma_z = diag(+1, -1)
with the excited state first, so the ground state is ``(0, 1)`` and
sigma_minus maps excited to ground.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "IDENTITY_2",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "PAULI_OPS",
    "NoNullSpaceError",
    "DegenerateNullSpaceError",
    "SingularSystemError",
    "kron",
    "embed",
    "matrix_exponential",
    "nullspace_vector",
    "solve_shifted",
    "is_hermitian",
]

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)

#: Named single-site operators accepted by :func:`embed`.
PAULI_OPS = {
    "x": SIGMA_X,
    "y": SIGMA_Y,
    "z": SIGMA_Z,
    "plus": SIGMA_PLUS,
    "minus": SIGMA_MINUS,
    "identity": IDENTITY_2,
}


class NoNullSpaceError(ValueError):
    """The matrix has no singular value below tolerance: empty null space."""


class DegenerateNullSpaceError(ValueError):
    """The numerical null space has dimension > 1."""


class SingularSystemError(ValueError):
    """A shifted linear system is singular to working precision."""


def kron(a, b):
    """Kronecker product of two dense matrices."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def embed(op, site, n_qubits):
    """Embed a single-qubit operator at ``site`` into an ``n_qubits`` register.

    Parameters
    ----------
    op : str or (2, 2) array_like
        Either a key of :data:`PAULI_OPS` or an explicit 2x2 matrix.
    site : int
        Qubit index in ``[0, n_qubits)``; qubit 0 is the leftmost tensor
        factor.
    n_qubits : int
        Register size.

    Returns
    -------
    numpy.ndarray
        The ``2**n_qubits`` square matrix ``I ⊗ … ⊗ op ⊗ … ⊗ I``.
    """
    if isinstance(op, str):
        try:
            op = PAULI_OPS[op.lower()]
        except KeyError:
            raise KeyError(f"unknown single-site operator {op!r}") from None
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError(f"single-site operator must be 2x2, got {op.shape}")
    if not 0 <= site < n_qubits:
        raise ValueError(f"site {site} out of range for {n_qubits} qubits")
    out = np.eye(1, dtype=complex)
    for k in range(n_qubits):
        out = np.kron(out, op if k == site else IDENTITY_2)
    return out


# Pade coefficients and order-selection thresholds for the scaling-and-squaring
# matrix exponential (Higham 2005).
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0,
    ),
    13: (
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ),
}
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068,
    13: 5.371920351148152,
}


def _pade_uv(a, order):
    """Return (U, V) of the diagonal Pade approximant of exp(a)."""
    b = _PADE_COEFFS[order]
    n = a.shape[0]
    ident = np.eye(n, dtype=a.dtype)
    a2 = a @ a
    if order == 13:
        a4 = a2 @ a2
        a6 = a2 @ a4
        u = a @ (
            a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
            + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident
        )
        v = (
            a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
            + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
        )
        return u, v
    powers = {0: ident, 2: a2}
    for p in range(4, order, 2):
        powers[p] = powers[p - 2] @ a2
    u = b[1] * ident
    v = b[0] * ident
    for p in range(2, order + 1, 2):
        u = u + b[p + 1] * powers[p]
        v = v + b[p] * powers[p]
    return a @ u, v


def matrix_exponential(m):
    """Matrix exponential by Pade approximation with scaling and squaring.

    Order is selected from the exact 1-norm (orders 3, 5, 7, 9, 13); for
    norms above the order-13 threshold the argument is scaled by a power of
    two and the result repeatedly squared.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix_exponential requires a square matrix, got {m.shape}")
    nrm = np.linalg.norm(m, 1)
    if not np.isfinite(nrm):
        raise ValueError("matrix contains non-finite entries")
    for order in (3, 5, 7, 9):
        if nrm <= _PADE_THETA[order]:
            u, v = _pade_uv(m, order)
            return np.linalg.solve(v - u, v + u)
    squarings = max(0, int(np.ceil(np.log2(nrm / _PADE_THETA[13]))))
    u, v = _pade_uv(m / (2.0 ** squarings), 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


def nullspace_vector(m, rtol=1e-10):
    """Unit-norm vector spanning the one-dimensional null space of ``m``.

    Uses an SVD; singular values below ``rtol`` times the largest count as
    zero.

    Raises
    ------
    NoNullSpaceError
        If no singular value falls below tolerance.
    DegenerateNullSpaceError
        If more than one does (null space dimension > 1).
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"nullspace_vector requires a square matrix, got {m.shape}")
    _, s, vh = np.linalg.svd(m)
    cutoff = rtol * s[0] if s[0] > 0 else rtol
    null_dim = int(np.sum(s <= cutoff))
    if null_dim == 0:
        raise NoNullSpaceError(
            f"smallest singular value {s[-1]:.3e} above tolerance {cutoff:.3e}"
        )
    if null_dim > 1:
        raise DegenerateNullSpaceError(f"null space has dimension {null_dim}")
    return vh[-1].conj()


def solve_shifted(m, shift, rhs, rtol=1e-10):
    """Solve ``(shift * I - m) x = rhs`` with a residual check.

    Raises
    ------
    SingularSystemError
        If the system is singular or the residual exceeds
        ``rtol * norm(rhs)``.
    """
    m = np.asarray(m, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    a = shift * np.eye(m.shape[0], dtype=complex) - m
    try:
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"shifted system is singular: {exc}") from exc
    residual = np.linalg.norm(a @ x - rhs)
    bound = rtol * max(np.linalg.norm(rhs), np.finfo(float).tiny)
    if not np.isfinite(residual) or residual > bound:
        raise SingularSystemError(
            f"shifted solve residual {residual:.3e} exceeds {bound:.3e}"
        )
    return x


def is_hermitian(m, atol=1e-12):
    """True if ``m`` equals its conjugate transpose within ``atol`` elementwise."""
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= atol)
