"""Dense complex matrix numerics for SU(d).

Everything here works on plain ``numpy`` complex arrays of shape ``(d, d)``.
The small wrapper types (:class:`SpecialUnitary`, :class:`TracelessHermitian`)
exist to carry validation results; the algorithms consume ``.matrix``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "TOL",
    "InvalidMatrixError",
    "DomainError",
    "SpecialUnitary",
    "TracelessHermitian",
    "as_matrix",
    "dagger",
    "op_norm",
    "distance",
    "determinant",
    "unitarity_residual",
    "su_normalize",
    "special_unitary",
    "traceless_hermitian",
    "eig_normal",
    "log_unitary",
    "exp_skew",
    "haar_su",
    "random_traceless_hermitian",
]

#: Validation tolerance for unitarity, determinant and hermiticity checks.
TOL = 1e-9

MAX_DIM = 16


class InvalidMatrixError(ValueError):
    """Raised for malformed, non-finite or wrongly structured matrices."""


class DomainError(ValueError):
    """Raised when an input lies outside an operation's domain."""


def as_matrix(M) -> np.ndarray:
    """Coerce ``M`` to a finite square complex array with 2 <= d <= 16."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidMatrixError(f"expected a square matrix, got shape {A.shape}")
    if not 2 <= A.shape[0] <= MAX_DIM:
        raise InvalidMatrixError(f"dimension {A.shape[0]} outside [2, {MAX_DIM}]")
    if not np.all(np.isfinite(A)):
        raise InvalidMatrixError("matrix has non-finite entries")
    return A


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(M).T


def op_norm(M) -> float:
    """Largest singular value of ``M``."""
    return float(np.linalg.norm(as_matrix(M), 2))


def distance(U, V) -> float:
    """Operator-norm distance ``||U - V||``."""
    U, V = as_matrix(U), as_matrix(V)
    if U.shape != V.shape:
        raise InvalidMatrixError(f"dimension mismatch: {U.shape} vs {V.shape}")
    return float(np.linalg.norm(U - V, 2))


def determinant(M) -> complex:
    return complex(np.linalg.det(as_matrix(M)))


def unitarity_residual(M) -> float:
    M = as_matrix(M)
    return float(np.linalg.norm(dagger(M) @ M - np.eye(M.shape[0]), 2))


@dataclass(frozen=True)
class SpecialUnitary:
    """A validated element of SU(d)."""

    matrix: np.ndarray
    unitarity_residual: float
    det_residual: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class TracelessHermitian:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def special_unitary(M, tol: float = TOL) -> SpecialUnitary:
    """Validate ``M`` as a member of SU(d) without modifying it."""
    M = as_matrix(M)
    ures = unitarity_residual(M)
    dres = abs(np.linalg.det(M) - 1.0)
    if ures > tol:
        raise InvalidMatrixError(f"not unitary: residual {ures:.3e} > {tol:.1e}")
    if dres > tol:
        raise InvalidMatrixError(f"determinant not 1: |det - 1| = {dres:.3e}")
    M = M.copy()
    M.setflags(write=False)
    return SpecialUnitary(M, ures, float(dres))


def traceless_hermitian(M, tol: float = TOL) -> TracelessHermitian:
    M = as_matrix(M)
    herm = float(np.linalg.norm(M - dagger(M), 2))
    tr = abs(np.trace(M))
    if herm > tol:
        raise InvalidMatrixError(f"not Hermitian: ||M - M^dag|| = {herm:.3e}")
    if tr > tol:
        raise InvalidMatrixError(f"not traceless: |tr M| = {tr:.3e}")
    M = M.copy()
    M.setflags(write=False)
    return TracelessHermitian(M)


def su_normalize(M, tol: float = TOL) -> SpecialUnitary:
    """Rescale a unitary by the principal d-th root of its inverse determinant.

    The phase is ``exp(-i arg(det M) / d)`` with ``arg`` in ``(-pi, pi]``.
    Inputs whose determinant phase is at rounding level are returned
    unchanged, so normalization is idempotent bit for bit.
    """
    M = as_matrix(M)
    ures = unitarity_residual(M)
    if ures > tol:
        raise InvalidMatrixError(f"not unitary: residual {ures:.3e} > {tol:.1e}")
    d = M.shape[0]
    phase = np.angle(np.linalg.det(M))
    if abs(phase) <= 64 * np.finfo(float).eps:
        return special_unitary(M, tol)
    return special_unitary(np.exp(-1j * phase / d) * M, tol)


def eig_normal(M, tol: float = TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ``M = V diag(w) V^dag`` of a normal matrix.

    Uses the complex Schur form, which is diagonal for normal input and comes
    with a unitary basis even when eigenvalues are degenerate.
    """
    M = as_matrix(M)
    comm = np.linalg.norm(M @ dagger(M) - dagger(M) @ M, 2)
    if comm > tol * max(1.0, np.linalg.norm(M, 2) ** 2):
        raise InvalidMatrixError(f"matrix is not normal: ||[M, M^dag]|| = {comm:.3e}")
    T, V = scipy.linalg.schur(M, output="complex")
    return np.diag(T).copy(), V


def log_unitary(U, tol: float = TOL) -> TracelessHermitian:
    """Traceless Hermitian ``H`` with ``exp(iH) = U`` for ``U`` near the identity.

    Requires ``||U - I|| < 1`` so that the principal branch is unambiguous.
    """
    U = U.matrix if isinstance(U, SpecialUnitary) else as_matrix(U)
    d = U.shape[0]
    dist = float(np.linalg.norm(U - np.eye(d), 2))
    if dist >= 1.0:
        raise DomainError(f"||U - I|| = {dist:.4f} >= 1; principal logarithm not used here")
    w, V = eig_normal(U, tol=max(tol, 1e-12))
    theta = np.angle(w)
    worst = int(np.argmax(np.abs(theta)))
    if abs(theta[worst]) >= np.pi / 2:
        raise DomainError(f"eigenphase {theta[worst]:.4f} outside (-pi/2, pi/2)")
    if abs(theta.sum()) > 1e-6:
        raise DomainError(
            f"principal eigenphases sum to {theta.sum():.4f}; no traceless logarithm on this branch"
        )
    theta = theta - theta.mean()
    H = (V * theta) @ dagger(V)
    H = 0.5 * (H + dagger(H))
    return TracelessHermitian(H)


def exp_skew(H, tol: float = TOL) -> SpecialUnitary:
    """``exp(iH)`` for traceless Hermitian ``H``."""
    H = H.matrix if isinstance(H, TracelessHermitian) else traceless_hermitian(H, tol).matrix
    w, V = np.linalg.eigh(H)
    U = (V * np.exp(1j * w)) @ dagger(V)
    return SpecialUnitary(U, unitarity_residual(U), float(abs(np.linalg.det(U) - 1.0)))


def haar_su(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SU(d)."""
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    Q = Q * ph
    return np.exp(-1j * np.angle(np.linalg.det(Q)) / d) * Q


def random_traceless_hermitian(d: int, norm: float, rng: np.random.Generator) -> np.ndarray:
    """Traceless Hermitian matrix of operator norm ``norm`` in a uniform random direction.

    The direction is uniform on the unit sphere of the (d^2 - 1)-dimensional
    real coefficient space of a Hermitian traceless basis.
    """
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = G + dagger(G)
    H -= np.trace(H) / d * np.eye(d)
    return H * (norm / np.linalg.norm(H, 2))
