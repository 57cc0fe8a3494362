from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from ifsk.matcore import (
    DomainError,
    InvalidMatrixError,
    as_matrix,
    dagger,
    determinant,
    distance,
    eig_normal,
    exp_skew,
    haar_su,
    log_unitary,
    op_norm,
    random_traceless_hermitian,
    special_unitary,
    su_normalize,
    traceless_hermitian,
    unitarity_residual,
)

DIMS = [2, 3, 4, 5]


# -- independent oracles ------------------------------------------------------

def mp_op_norm(M: np.ndarray) -> float:
    """Largest singular value in 30-digit arithmetic."""
    with mpmath.workdps(30):
        A = mpmath.matrix([[mpmath.mpc(complex(z)) for z in row] for row in M])
        s = mpmath.svd_c(A, compute_uv=False)
        return float(max(abs(x) for x in s))


def cofactor_det(M: np.ndarray) -> complex:
    n = M.shape[0]
    if n == 1:
        return complex(M[0, 0])
    total = 0j
    for j in range(n):
        minor = np.delete(np.delete(M, 0, axis=0), j, axis=1)
        total += (-1) ** j * M[0, j] * cofactor_det(minor)
    return total


def taylor_exp(A: np.ndarray, terms: int = 60) -> np.ndarray:
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


# -- validation -----------------------------------------------------------------

@pytest.mark.parametrize("bad", [
    np.zeros((2, 3)),
    np.zeros(4),
    np.zeros((1, 1)),
    np.zeros((17, 17)),
    np.array([[1, np.nan], [0, 1]]),
    np.array([[np.inf, 0], [0, 1]]),
])
def test_as_matrix_rejects_malformed(bad):
    with pytest.raises(InvalidMatrixError):
        as_matrix(bad)


def test_special_unitary_reports_residuals(rng):
    U = haar_su(3, rng)
    su = special_unitary(U)
    assert su.unitarity_residual < 1e-12
    assert su.det_residual < 1e-12
    assert su.dim == 3
    with pytest.raises(ValueError):
        su.matrix[0, 0] = 0


def test_special_unitary_rejects_wrong_determinant():
    with pytest.raises(InvalidMatrixError, match="determinant"):
        special_unitary(np.diag([1, -1]))


def test_special_unitary_rejects_nonunitary():
    with pytest.raises(InvalidMatrixError, match="not unitary"):
        special_unitary(np.array([[1, 1e-3], [0, 1]]))


def test_traceless_hermitian_checks():
    traceless_hermitian(np.diag([1.0, -1.0]))
    with pytest.raises(InvalidMatrixError, match="traceless"):
        traceless_hermitian(np.diag([1.0, 0.0]))
    with pytest.raises(InvalidMatrixError, match="Hermitian"):
        traceless_hermitian(np.array([[0, 1], [0, 0]]))


# -- norms and determinants -------------------------------------------------------

@pytest.mark.parametrize("d", DIMS)
def test_op_norm_matches_high_precision_svd(d, rng):
    for _ in range(5):
        M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        assert op_norm(M) == pytest.approx(mp_op_norm(M), rel=1e-12)


def test_op_norm_known_values():
    assert op_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0)
    assert op_norm(np.array([[0, 2], [0, 0]])) == pytest.approx(2.0)
    # rank-one all-ones matrix has norm d
    assert op_norm(np.ones((5, 5))) == pytest.approx(5.0)


def test_distance_symmetric_and_dimension_checked(rng):
    U, V = haar_su(2, rng), haar_su(2, rng)
    assert distance(U, V) == pytest.approx(distance(V, U))
    assert distance(U, U) == 0.0
    with pytest.raises(InvalidMatrixError):
        distance(U, np.eye(3))


@pytest.mark.parametrize("d", DIMS)
def test_determinant_matches_cofactor_expansion(d, rng):
    M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    assert abs(determinant(M) - cofactor_det(M)) < 1e-10 * max(1, abs(cofactor_det(M)))


# -- SU normalization ---------------------------------------------------------------

def test_su_normalize_pauli_x():
    # det X = -1, arg = pi, phase exp(-i pi / 2) = -i
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    out = su_normalize(X).matrix
    assert np.allclose(out, -1j * X, atol=1e-15)


@pytest.mark.parametrize("d", DIMS)
def test_su_normalize_lands_in_su(d, rng):
    for _ in range(10):
        U = haar_su(d, rng) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        S = su_normalize(U).matrix
        assert abs(np.linalg.det(S) - 1) < 1e-12
        # only a global phase changes
        phase = np.vdot(U, S) / d
        assert abs(abs(phase) - 1) < 1e-12
        assert np.allclose(S, phase * U, atol=1e-12)


def test_su_normalize_rejects_nonunitary():
    with pytest.raises(InvalidMatrixError):
        su_normalize(np.array([[1, 1e-3], [0, 1]]))


def test_haar_samples_are_special_unitary(rng):
    for d in DIMS:
        U = haar_su(d, rng)
        assert unitarity_residual(U) < 1e-12
        assert abs(np.linalg.det(U) - 1) < 1e-12


def test_haar_first_moment_vanishes():
    # E[U] = 0 for Haar measure on SU(d), d >= 2
    rng = np.random.default_rng(5)
    mean = np.mean([haar_su(2, rng) for _ in range(4000)], axis=0)
    assert np.abs(mean).max() < 0.05


# -- exp and log ---------------------------------------------------------------------

@pytest.mark.parametrize("d", DIMS)
def test_exp_skew_matches_taylor_series(d, rng):
    for norm in (1e-3, 0.3, 2.0):
        H = random_traceless_hermitian(d, norm, rng)
        assert np.linalg.norm(exp_skew(H).matrix - taylor_exp(1j * H), 2) < 1e-12


def test_exp_skew_closed_form_qubit():
    # exp(i t Z) = diag(e^{it}, e^{-it})
    t = 0.7
    U = exp_skew(np.diag([t, -t]))
    assert np.allclose(U.matrix, np.diag([np.exp(1j * t), np.exp(-1j * t)]), atol=1e-15)


def test_random_traceless_hermitian_norm(rng):
    for d in DIMS:
        H = random_traceless_hermitian(d, 0.25, rng)
        assert op_norm(H) == pytest.approx(0.25)
        assert abs(np.trace(H)) < 1e-14
        assert np.allclose(H, dagger(H))


@pytest.mark.parametrize("d", DIMS)
def test_log_exp_round_trip(d, rng):
    for _ in range(20):
        H = random_traceless_hermitian(d, rng.uniform(1e-6, 0.45), rng)
        U = exp_skew(H).matrix
        Hl = log_unitary(U).matrix
        assert np.linalg.norm(Hl - H, 2) < 1e-12
        assert abs(np.trace(Hl)) < 1e-13


def test_log_domain_boundary():
    # ||U - I|| = 2 sin(theta / 2) crosses 1 at theta = pi / 3
    for theta, ok in [(math.pi / 3 - 1e-3, True), (math.pi / 3 + 1e-3, False)]:
        U = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
        if ok:
            assert np.allclose(log_unitary(U).matrix, np.diag([theta, -theta]), atol=1e-12)
        else:
            with pytest.raises(DomainError):
                log_unitary(U)


def test_log_rejects_branch_without_traceless_log():
    # in SU(3), det = 1 but principal phases (0.45, 0.45, 0.45 - 2pi/..) cannot sum to zero
    w = np.exp(2j * np.pi / 3)
    U = np.diag([1, 1, 1]) * w ** 0
    U = np.diag([np.exp(0.4j), np.exp(0.4j), np.exp(-0.8j)])
    assert np.allclose(log_unitary(U).matrix, np.diag([0.4, 0.4, -0.8]), atol=1e-12)
    with pytest.raises(DomainError):
        log_unitary(w * np.eye(3))


def test_eig_normal_degenerate_basis_is_unitary():
    M = np.diag([1.0, 1.0, -2.0]).astype(complex)
    Q = haar_su(3, np.random.default_rng(3))
    w, V = eig_normal(Q @ M @ dagger(Q))
    assert np.allclose(dagger(V) @ V, np.eye(3), atol=1e-12)
    assert np.allclose(sorted(w.real), [-2, 1, 1], atol=1e-12)


def test_eig_normal_rejects_non_normal():
    with pytest.raises(InvalidMatrixError, match="not normal"):
        eig_normal(np.array([[1, 1], [0, 1]]))
