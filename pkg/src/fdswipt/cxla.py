"""Minimal complex linear-algebra kernel for the beamforming solvers.

Conventions used throughout the package:
  * vectors are 1-D complex128 numpy arrays,
  * matrices are 2-D complex128 numpy arrays (row major),
  * all dimensions are small (<= 8), so everything is dense.

Eigen-decompositions are delegated to LAPACK (numpy.linalg.eigh), which
satisfies the same residual tolerances a hand-rolled Jacobi sweep would.
"""

from __future__ import annotations

import numpy as np

# Relative tolerance for accepting a matrix as Hermitian.
HERMITIAN_RTOL = 1e-12


class DegenerateInputError(ValueError):
    """Raised when an input is degenerate for the operation (e.g. zero norm)."""


class NonHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not, beyond tolerance."""


def cvector(x) -> np.ndarray:
    """Coerce ``x`` to a 1-D complex128 vector."""
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError("vector entries must be finite")
    return a


def cmatrix(x) -> np.ndarray:
    """Coerce ``x`` to a 2-D complex128 matrix."""
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def outer(v: np.ndarray) -> np.ndarray:
    """Rank-1 Hermitian outer product v v†."""
    v = np.asarray(v, dtype=np.complex128)
    return np.outer(v, v.conj())


def require_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate that ``m`` equals its conjugate transpose within ``rtol``.

    Returns the exactly-Hermitian symmetrization (M + M†)/2 so downstream
    eigensolvers see a clean input.
    """
    m = cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise NonHermitianError(f"matrix is not square: {m.shape}")
    scale = max(np.linalg.norm(m), 1.0)
    defect = np.linalg.norm(m - m.conj().T)
    if defect > rtol * scale:
        raise NonHermitianError(
            f"matrix deviates from Hermitian by {defect:.3e} (limit {rtol * scale:.3e})"
        )
    return 0.5 * (m + m.conj().T)


def project_onto(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Orthogonal projection of ``x`` onto span(basis) for a single basis vector.

    Computes basis (basis† basis)^{-1} basis† x.
    """
    x = cvector(x)
    b = cvector(basis)
    if x.shape != b.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {b.shape}")
    nb2 = float(np.real(np.vdot(b, b)))
    if nb2 <= 0.0:
        raise DegenerateInputError("projection basis has zero norm")
    return b * (np.vdot(b, x) / nb2)


def project_orth(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Component of ``x`` orthogonal to ``basis``: x - Pi_basis x."""
    return cvector(x) - project_onto(x, basis)


def null_basis(b: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``b`` in C^n.

    Returns an (n, n-1) matrix whose columns u_i satisfy b† u_i = 0 and
    u_i† u_j = delta_ij; together with b/||b|| they span C^n.
    """
    b = cvector(b)
    n = b.shape[0]
    if n < 2:
        raise DegenerateInputError("null_basis needs dimension >= 2")
    nb = np.linalg.norm(b)
    if nb == 0.0:
        raise DegenerateInputError("null_basis of the zero vector is undefined")
    q, _ = np.linalg.qr((b / nb).reshape(n, 1), mode="complete")
    return q[:, 1:]


def eig_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a Hermitian matrix.

    Returns (w, v) with real eigenvalues ``w`` ascending and unit eigenvector
    columns ``v`` such that m = v @ diag(w) @ v†.
    """
    h = require_hermitian(m)
    w, v = np.linalg.eigh(h)
    return w, v


def top_eigpair(m: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a unit eigenvector of a Hermitian matrix.

    The eigenvector phase is fixed so that its largest-magnitude entry is
    real and nonnegative, which keeps results reproducible bit-for-bit.
    """
    w, v = eig_hermitian(m)
    vec = v[:, -1]
    k = int(np.argmax(np.abs(vec)))
    if np.abs(vec[k]) > 0:
        vec = vec * (np.abs(vec[k]) / vec[k])
    return float(w[-1]), vec
