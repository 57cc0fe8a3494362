"""Residual-vs-error experiments for the building blocks.

Each experiment draws independent random errors of size ``eps``, evaluates a
construction and reports one residual per trial.  The scaling order is read
off as the least-squares slope of ``log(residual)`` against ``log(eps)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .commutator import balanced_commutator, solve_commutator_equation
from .focus import (
    irrep_inverse,
    j2_sequence,
    jd_alt_sequence,
    jd_sequence,
    qubit_inverse,
    sud_inverse,
    twirl_sum,
)
from .matcore import dagger, exp_skew, haar_su, random_traceless_hermitian
from .pauli import pauli_irrep, su_generators, su_y

__all__ = [
    "LEMMAS",
    "Lemma",
    "TrialRow",
    "perturb",
    "lemma_rng",
    "run_lemma",
    "fit_slope",
    "slope_of",
]

DEFAULT_EPS = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class TrialRow:
    lemma: str
    d: int
    eps: float
    trial: int
    residual: float


def perturb(M: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    """``M exp(iE)`` with ``E`` traceless Hermitian, ``||E|| = eps``, uniform direction."""
    return M @ exp_skew(random_traceless_hermitian(M.shape[0], eps, rng)).matrix


def _random_traceless(d: int, norm: float, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    G -= np.trace(G) / d * np.eye(d)
    return G * (norm / np.linalg.norm(G, 2))


def _eye(d):
    return np.eye(d, dtype=complex)


def _commutator(d, eps, rng):
    Delta = exp_skew(random_traceless_hermitian(d, eps, rng)).matrix
    return balanced_commutator(Delta).predicted_residual


def _commutator_exact(d, eps, rng):
    H = random_traceless_hermitian(d, eps, rng)
    A, B = solve_commutator_equation(H)
    return float(np.linalg.norm(A @ B - B @ A - 1j * H, 2))


def _twirl(d, eps, rng):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    reps = pauli_irrep(d)
    expected = len(reps) / d * np.trace(A) * np.eye(d)
    return float(np.linalg.norm(twirl_sum(reps, A) - expected, 2))


def _j2(d, eps, rng):
    X, Y = su_generators(2)[0].matrix, su_y().matrix
    return float(np.linalg.norm(j2_sequence(perturb(X, eps, rng), perturb(Y, eps, rng)) - _eye(2), 2))


def _jd(d, eps, rng):
    X, Z = (g.matrix for g in su_generators(d))
    return float(np.linalg.norm(jd_sequence(perturb(X, eps, rng), perturb(Z, eps, rng), d) - _eye(d), 2))


def _jd_alt(d, eps, rng):
    X, Z = (g.matrix for g in su_generators(d))
    return float(np.linalg.norm(jd_alt_sequence(perturb(Z, eps, rng), perturb(X, eps, rng), d) - _eye(d), 2))


def _target_and_guess(d, eps, rng):
    V = haar_su(d, rng)
    return V, perturb(dagger(V), eps, rng)


def _irrep_inverse(d, eps, rng):
    V, Vb = _target_and_guess(d, eps, rng)
    reps = [(R, dagger(R)) for R in pauli_irrep(d)[:-1]]
    return float(np.linalg.norm(irrep_inverse(V, Vb, reps) @ V - _eye(d), 2))


def _qubit_inverse(d, eps, rng):
    V, Vb = _target_and_guess(2, eps, rng)
    X, Y = su_generators(2)[0].matrix, su_y().matrix
    out = qubit_inverse(V, Vb, perturb(X, eps, rng), perturb(Y, eps, rng))
    return float(np.linalg.norm(out @ V - _eye(2), 2))


def _sud_inverse(d, eps, rng):
    V, Vb = _target_and_guess(d, eps, rng)
    X, Z = (g.matrix for g in su_generators(d))
    out = sud_inverse(V, Vb, perturb(X, eps, rng), perturb(Z, eps, rng), d)
    return float(np.linalg.norm(out @ V - _eye(d), 2))


def _sud_inverse_sl(d, eps, rng):
    """Same factory with ``V = exp(M)`` for a traceless non-Hermitian ``M`` of norm 0.3."""
    V = scipy.linalg.expm(_random_traceless(d, 0.3, rng))
    Vb = np.linalg.inv(V) @ scipy.linalg.expm(_random_traceless(d, eps, rng))
    X, Z = (g.matrix for g in su_generators(d))
    out = sud_inverse(V, Vb, perturb(X, eps, rng), perturb(Z, eps, rng), d)
    return float(np.linalg.norm(out @ V - _eye(d), 2))


@dataclass(frozen=True)
class Lemma:
    name: str
    fn: Callable[[int, float, np.random.Generator], float]
    dims: tuple[int, ...]
    # Minimum acceptable slope; ``None`` marks an identity checked by absolute residual.
    min_slope: float | None
    max_residual: float | None = None


LEMMAS: dict[str, Lemma] = {
    lem.name: lem
    for lem in [
        Lemma("commutator_exact", _commutator_exact, (2, 3, 4, 5), None, 1e-9),
        Lemma("commutator", _commutator, (2, 3, 4, 5), 1.45),
        Lemma("twirl", _twirl, (2, 3, 4, 5), None, 1e-9),
        Lemma("j2", _j2, (2,), 1.9),
        Lemma("jd", _jd, (2, 3, 4, 5), 1.9),
        Lemma("jd_alt", _jd_alt, (2, 3, 4, 5), 1.9),
        Lemma("irrep_inverse", _irrep_inverse, (2, 3, 4, 5), 1.9),
        Lemma("qubit_inverse", _qubit_inverse, (2,), 1.9),
        Lemma("sud_inverse", _sud_inverse, (2, 3, 4, 5), 1.9),
        Lemma("sud_inverse_sl", _sud_inverse_sl, (2, 3, 4, 5), 1.9),
    ]
}


def lemma_rng(seed: int, lemma: str, d: int) -> np.random.Generator:
    """Independent counter-based stream per (seed, lemma, d)."""
    key = [seed, sorted(LEMMAS).index(lemma), d]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def run_lemma(name: str, d: int, eps_grid: Sequence[float] = DEFAULT_EPS, trials: int = 50,
              seed: int = 0) -> list[TrialRow]:
    lem = LEMMAS[name]
    if d not in lem.dims:
        raise ValueError(f"{name} is defined for d in {lem.dims}, not {d}")
    rng = lemma_rng(seed, name, d)
    return [TrialRow(name, d, eps, t, lem.fn(d, eps, rng)) for eps in eps_grid for t in range(trials)]


def fit_slope(eps: Sequence[float], residual: Sequence[float]) -> float:
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.maximum(np.asarray(residual, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def slope_of(rows: Sequence[TrialRow]) -> float:
    return fit_slope([r.eps for r in rows], [r.residual for r in rows])


def haar_targets(d: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [haar_su(d, rng) for _ in range(count)]
