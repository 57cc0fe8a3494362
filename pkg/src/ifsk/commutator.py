"""Balanced group-commutator factorization of near-identity special unitaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import (
    DomainError,
    SpecialUnitary,
    as_matrix,
    dagger,
    eig_normal,
    exp_skew,
    log_unitary,
)

__all__ = ["CommutatorPair", "EPS_MAX", "solve_commutator_equation", "balanced_commutator"]

EPS_MAX = 0.5


@dataclass(frozen=True)
class CommutatorPair:
    """``V W V^dag W^dag`` approximates the input; ``A``, ``B`` are the generators."""

    V: SpecialUnitary
    W: SpecialUnitary
    A: np.ndarray
    B: np.ndarray
    predicted_residual: float


def dft(d: int) -> np.ndarray:
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def _canonical_basis(w: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Eigenvectors in ascending eigenvalue order, each with its largest entry real positive.

    The solution below depends on this gauge, so fixing it keeps the output a
    continuous function of the input instead of the eigensolver's conventions.
    """
    Q = Q[:, np.argsort(w, kind="stable")]
    rows = np.argmax(np.abs(Q), axis=0)
    lead = Q[rows, np.arange(Q.shape[1])]
    return Q * (np.conj(lead) / np.abs(lead))


def solve_commutator_equation(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Balanced traceless Hermitian ``A``, ``B`` with ``[A, B] = iH``.

    ``H`` is rotated into the Fourier conjugate of its eigenbasis, where its
    diagonal vanishes; there ``B`` is the centred ladder ``diag(j - (d-1)/2)``
    and ``A[j, k] = i H[j, k] / (k - j)``.  The pair is then rescaled to equal
    operator norm, which leaves the commutator unchanged.
    """
    H = as_matrix(H)
    d = H.shape[0]
    if np.linalg.norm(H, 2) == 0.0:
        zero = np.zeros((d, d), dtype=complex)
        return zero, zero.copy()
    w, Q = eig_normal(H)
    Q = _canonical_basis(np.real(w), Q)
    D = np.real(np.diag(dagger(Q) @ H @ Q))
    F = dft(d)
    Hp = (F * D) @ dagger(F)
    diag_err = np.max(np.abs(np.diag(Hp)))
    if diag_err > 1e-8 * max(1.0, np.abs(D).max()):
        raise ArithmeticError(f"rotated generator has diagonal {diag_err:.2e}; eigensolver failed")
    M = Q @ dagger(F)

    ladder = np.arange(d) - (d - 1) / 2
    Bp = np.diag(ladder).astype(complex)
    gap = ladder[None, :] - ladder[:, None]
    np.fill_diagonal(gap, 1.0)
    Ap = 1j * Hp / gap
    np.fill_diagonal(Ap, 0.0)

    s = np.sqrt(np.linalg.norm(Bp, 2) / np.linalg.norm(Ap, 2))
    A = M @ (s * Ap) @ dagger(M)
    B = M @ (Bp / s) @ dagger(M)
    A = 0.5 * (A + dagger(A))
    B = 0.5 * (B + dagger(B))
    return A, B


def balanced_commutator(Delta, eps_max: float = EPS_MAX) -> CommutatorPair:
    """Factor ``Delta`` (close to I) as ``V W V^dag W^dag`` up to ``O(eps^(3/2))``.

    ``e^{iX} e^{iY} e^{-iX} e^{-iY} = I - [X, Y] + ...``, so with ``[A, B] = iH``
    the ordering that reproduces ``Delta = e^{iH}`` is ``V = e^{iB}``,
    ``W = e^{iA}``.
    """
    Dm = Delta.matrix if isinstance(Delta, SpecialUnitary) else as_matrix(Delta)
    d = Dm.shape[0]
    eps = float(np.linalg.norm(Dm - np.eye(d), 2))
    if eps > eps_max:
        raise DomainError(f"||Delta - I|| = {eps:.4f} exceeds {eps_max}")
    H = log_unitary(Dm).matrix
    A, B = solve_commutator_equation(H)
    V = exp_skew(B)
    W = exp_skew(A)
    Vm, Wm = V.matrix, W.matrix
    residual = float(np.linalg.norm(Vm @ Wm @ dagger(Vm) @ dagger(Wm) - Dm, 2))
    return CommutatorPair(V, W, A, B, residual)
