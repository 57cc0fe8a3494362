"""Generalized Pauli (Weyl) group in dimension d.

Symbolic elements are ``phase * X^n Z^m`` with the phase kept as an integer
exponent of ``nu = exp(2 pi i / (4 d^2))``.  That root is fine enough to hold
the clock phase ``omega = nu^(4d)``, the imaginary unit ``nu^(d^2)`` and the
SU(d) normalization phase ``nu^(-2d)`` of the even-d generators, so every
identity used downstream can be checked exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import SpecialUnitary, as_matrix, su_normalize

__all__ = [
    "PauliIndex",
    "PhasedPauli",
    "PauliBasisVector",
    "omega",
    "clock_z",
    "shift_x",
    "sigma",
    "pauli_mul",
    "pauli_dagger",
    "su_generators",
    "su_y",
    "pauli_group",
    "pauli_irrep",
    "pauli_decompose",
]


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def _check_dim(d: int) -> None:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")


@dataclass(frozen=True)
class PauliIndex:
    n: int
    m: int
    d: int

    def __post_init__(self):
        _check_dim(self.d)
        if not (0 <= self.n < self.d and 0 <= self.m < self.d):
            raise ValueError(f"index ({self.n}, {self.m}) out of range for d={self.d}")

    @classmethod
    def mod(cls, n: int, m: int, d: int) -> "PauliIndex":
        return cls(n % d, m % d, d)


@dataclass(frozen=True)
class PhasedPauli:
    """``nu^k * X^n Z^m`` where ``nu = exp(2 pi i / (4 d^2))``."""

    index: PauliIndex
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "k", self.k % self.order)

    @classmethod
    def of(cls, n: int, m: int, d: int, k: int = 0) -> "PhasedPauli":
        return cls(PauliIndex.mod(n, m, d), k)

    @property
    def d(self) -> int:
        return self.index.d

    @property
    def order(self) -> int:
        return 4 * self.d * self.d

    @property
    def phase(self) -> complex:
        return np.exp(2j * np.pi * self.k / self.order)

    def matrix(self) -> np.ndarray:
        return self.phase * sigma(self.index)


@dataclass(frozen=True)
class PauliBasisVector:
    """Coefficients ``c[a, b]`` of a matrix in the ``X^a Z^b`` basis."""

    d: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.d, self.d):
            raise ValueError(f"expected {self.d}x{self.d} coefficients, got {self.coeffs.shape}")

    def __getitem__(self, ab: tuple[int, int]) -> complex:
        a, b = ab
        return complex(self.coeffs[a % self.d, b % self.d])

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.d, self.d), dtype=complex)
        for a in range(self.d):
            for b in range(self.d):
                out += self.coeffs[a, b] * sigma(PauliIndex(a, b, self.d))
        return out


def clock_z(d: int) -> np.ndarray:
    _check_dim(d)
    return np.diag(omega(d) ** np.arange(d))


def shift_x(d: int) -> np.ndarray:
    """Cyclic shift ``X|j> = |j+1 mod d>``."""
    _check_dim(d)
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def sigma(p: PauliIndex) -> np.ndarray:
    """``X^n Z^m`` as a matrix (no phase)."""
    X = np.linalg.matrix_power(shift_x(p.d), p.n)
    Z = np.diag(omega(p.d) ** (p.m * np.arange(p.d)))
    return X @ Z


def pauli_mul(p: PhasedPauli, q: PhasedPauli) -> PhasedPauli:
    """Product using ``sigma(n1, m1) sigma(n2, m2) = omega^(n2 m1) sigma(n1+n2, m1+m2)``."""
    d = p.d
    if q.d != d:
        raise ValueError(f"dimension mismatch: {d} vs {q.d}")
    n1, m1 = p.index.n, p.index.m
    n2, m2 = q.index.n, q.index.m
    # omega = nu^(4d)
    k = p.k + q.k + 4 * d * ((n2 * m1) % d)
    return PhasedPauli(PauliIndex.mod(n1 + n2, m1 + m2, d), k)


def pauli_dagger(p: PhasedPauli) -> PhasedPauli:
    """``(X^n Z^m)^dag = omega^(nm) X^(d-n) Z^(d-m)``, with the phase conjugated."""
    d = p.d
    n, m = p.index.n, p.index.m
    k = -p.k + 4 * d * ((n * m) % d)
    return PhasedPauli(PauliIndex.mod(-n, -m, d), k)


def su_generators(d: int) -> tuple[SpecialUnitary, SpecialUnitary]:
    """Shift and clock rescaled into SU(d): ``(X~, Z~)``."""
    return su_normalize(shift_x(d)), su_normalize(clock_z(d))


def su_y() -> SpecialUnitary:
    """The qubit ``Y = i X Z`` rescaled into SU(2)."""
    return su_normalize(1j * shift_x(2) @ clock_z(2))


def pauli_group(d: int) -> list[PhasedPauli]:
    """All ``d^2`` elements in n-major order, identity moved to the end."""
    _check_dim(d)
    out = [PhasedPauli.of(n, m, d) for n in range(d) for m in range(d) if (n, m) != (0, 0)]
    out.append(PhasedPauli.of(0, 0, d))
    return out


def pauli_irrep(d: int) -> list[np.ndarray]:
    """SU(d)-normalized matrices of :func:`pauli_group`, in the same order."""
    return [su_normalize(p.matrix()).matrix for p in pauli_group(d)]


def pauli_decompose(M) -> PauliBasisVector:
    """Coefficients ``c[a, b] = tr(sigma(a, b)^dag M) / d``."""
    M = as_matrix(M)
    d = M.shape[0]
    coeffs = np.empty((d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            coeffs[a, b] = np.vdot(sigma(PauliIndex(a, b, d)), M) / d
    return PauliBasisVector(d, coeffs)
