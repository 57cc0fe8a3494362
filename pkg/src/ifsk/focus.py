"""Self-correcting sequences, group twirls and inverse factories.

Every construction is written as a list of *blocks* (the factors of a
product, left to right).  Blocks may be :class:`ImplementedOperator` values,
in which case the result is a composable gate word, or plain matrices, which
is how the lemma benchmarks and the SL(d, C) checks drive them.

Naming: ``Xp``, ``Yp``, ``Zp`` are approximations of the SU-normalized Pauli
generators, ``V`` is an operator to invert and ``Vinv`` an approximation of
its inverse.  Each factory returns an approximation of ``V^-1`` whose error is
quadratic in the input errors.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .matcore import TOL, dagger
from .net import GateSet, GateWord, evaluate_word

__all__ = [
    "ImplementedOperator",
    "compose",
    "twirl_sum",
    "j2_sequence",
    "jd_sequence",
    "jd_alt_sequence",
    "irrep_inverse",
    "qubit_inverse",
    "sud_inverse",
    "j2_blocks",
    "jd_blocks",
    "jd_alt_blocks",
    "irrep_inverse_blocks",
    "qubit_inverse_blocks",
    "sud_inverse_blocks",
]


class AlphabetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ImplementedOperator:
    """A gate word together with its evaluated matrix.

    ``target`` and ``err_bound`` optionally record what the word is meant to
    approximate and how well.
    """

    word: GateWord
    value: np.ndarray
    gateset: str
    target: np.ndarray | None = None
    err_bound: float | None = None

    @property
    def length(self) -> int:
        return self.word.length

    @property
    def d(self) -> int:
        return self.value.shape[0]

    @classmethod
    def from_word(cls, gs: GateSet, word: GateWord | Sequence[int], **kw) -> "ImplementedOperator":
        w = word if isinstance(word, GateWord) else GateWord(np.asarray(word, dtype=np.int32))
        return cls(w, evaluate_word(gs.matrices, w), gs.fingerprint, **kw)

    @classmethod
    def gate(cls, gs: GateSet, name: str) -> "ImplementedOperator":
        return cls.from_word(gs, [gs.index(name)])

    @classmethod
    def identity(cls, gs: GateSet) -> "ImplementedOperator":
        return cls(GateWord(), np.eye(gs.d, dtype=complex), gs.fingerprint)

    def with_target(self, target: np.ndarray) -> "ImplementedOperator":
        err = float(np.linalg.norm(self.value - target, 2))
        return replace(self, target=target, err_bound=err)

    def padded(self, length: int) -> "ImplementedOperator":
        return replace(self, word=self.word.padded(length))

    def consistency_error(self, gs: GateSet) -> float:
        """Distance between ``value`` and the product over ``word``."""
        if gs.fingerprint != self.gateset:
            raise AlphabetError("operator was built over a different gate set")
        return float(np.linalg.norm(evaluate_word(gs.matrices, self.word) - self.value, 2))

    def check(self, gs: GateSet, tol: float = TOL) -> None:
        err = self.consistency_error(gs)
        if err > tol * max(1, self.length):
            raise AssertionError(f"word/value mismatch {err:.3e} for length {self.length}")


Block = Union[ImplementedOperator, np.ndarray]


def _product(mats: Sequence[np.ndarray]) -> np.ndarray:
    stack = np.asarray(mats)
    while len(stack) > 1:
        head = stack[0:len(stack) - 1:2] @ stack[1::2]
        stack = np.concatenate([head, stack[-1:]]) if len(stack) % 2 else head
    return stack[0].copy()


def compose(ops: Sequence[Block]) -> Block:
    """Left-to-right product.  Operators must share one gate set."""
    if not ops:
        raise ValueError("nothing to compose")
    if all(isinstance(o, np.ndarray) for o in ops):
        return _product(ops)
    if not all(isinstance(o, ImplementedOperator) for o in ops):
        raise TypeError("cannot mix implemented operators and bare matrices")
    keys = {o.gateset for o in ops}
    if len(keys) > 1:
        raise AlphabetError("operators come from different gate sets")
    if len(ops) == 1:
        return ops[0]
    word = GateWord.concat([o.word for o in ops])
    return ImplementedOperator(word, _product([o.value for o in ops]), ops[0].gateset)


def _value(b: Block) -> np.ndarray:
    return b.value if isinstance(b, ImplementedOperator) else np.asarray(b)


def _dim(b: Block) -> int:
    return _value(b).shape[0]


def twirl_sum(reps: Sequence[np.ndarray], A: np.ndarray) -> np.ndarray:
    """``sum_g R(g) A R(g)^dag`` over the supplied representation matrices."""
    R = np.asarray([getattr(r, "matrix", r) for r in reps])
    return np.einsum("gij,jk,glk->il", R, np.asarray(A, dtype=complex), np.conj(R))


# -- self-correcting sequences -------------------------------------------------

def j2_blocks(Xp: Block, Yp: Block) -> list[Block]:
    """``X' Y' X' Y'^2 X' Y' X'``."""
    if _dim(Xp) != 2 or _dim(Yp) != 2:
        raise ValueError("the two-letter qubit sequence needs 2x2 operators")
    X, Y = Xp, Yp
    return [X, Y, X, Y, Y, X, Y, X]


def jd_blocks(A: Block, B: Block, d: int) -> list[Block]:
    """``[A^d B]^(d-1) A [B^d A]^(d-1) B``, 2 d^2 letters."""
    if d < 2 or _dim(A) != d or _dim(B) != d:
        raise ValueError(f"operators must be {d}x{d} with d >= 2")
    return [A if c == "A" else B for c in _jd_letters(d)]


def _jd_letters(d: int) -> list[str]:
    return (["A"] * d + ["B"]) * (d - 1) + ["A"] + (["B"] * d + ["A"]) * (d - 1) + ["B"]


def jd_alt_blocks(Zp: Block, Xp: Block, d: int) -> list[Block]:
    """``[Z' X'^d]^(d-1) Z' [X' Z'^d]^(d-1) X'``."""
    if d < 2 or _dim(Zp) != d or _dim(Xp) != d:
        raise ValueError(f"operators must be {d}x{d} with d >= 2")
    out: list[Block] = []
    for _ in range(d - 1):
        out += [Zp] + [Xp] * d
    out.append(Zp)
    for _ in range(d - 1):
        out += [Xp] + [Zp] * d
    out.append(Xp)
    return out


def j2_sequence(Xp: Block, Yp: Block) -> Block:
    return compose(j2_blocks(Xp, Yp))


def jd_sequence(A: Block, B: Block, d: int) -> Block:
    return compose(jd_blocks(A, B, d))


def jd_alt_sequence(Zp: Block, Xp: Block, d: int) -> Block:
    return compose(jd_alt_blocks(Zp, Xp, d))


# -- inverse factories ---------------------------------------------------------

def _with_error(blocks: list[Block], V: Block) -> Block:
    out = compose(blocks)
    if isinstance(out, ImplementedOperator) and isinstance(V, ImplementedOperator):
        err = float(np.linalg.norm(out.value @ V.value - np.eye(out.d), 2))
        out = replace(out, target=dagger(V.value), err_bound=err)
    return out


def irrep_inverse_blocks(V: Block, Vinv: Block, reps: Sequence[tuple[Block, Block]],
                         tol: float = TOL) -> list[Block]:
    """``[prod_{g != id} R(g) Vinv V R(g)^dag] Vinv``.

    ``reps`` lists ``(R(g), R(g)^dag)`` pairs for every non-identity group
    element; both must be exact, which is checked against ``tol``.
    """
    d = _dim(V)
    for R, Rd in reps:
        r, rd = _value(R), _value(Rd)
        if np.linalg.norm(r @ rd - np.eye(d), 2) > tol:
            raise ValueError("irrep element and its dagger do not multiply to the identity")
    out: list[Block] = []
    for R, Rd in reps:
        out += [R, Vinv, V, Rd]
    out.append(Vinv)
    return out


def qubit_inverse_blocks(V: Block, Vinv: Block, Xp: Block, Yp: Block) -> list[Block]:
    """The two-letter qubit sequence with ``X' Vinv V`` in place of ``X'``, trailing ``V`` removed.

    ``X' Q Y' X' Q Y'^2 X' Q Y' X' Vinv`` with ``Q = Vinv V``: 15 blocks.
    """
    if any(_dim(b) != 2 for b in (V, Vinv, Xp, Yp)):
        raise ValueError("the qubit inverse factory needs 2x2 operators")
    return [Xp, Vinv, V, Yp, Xp, Vinv, V, Yp, Yp, Xp, Vinv, V, Yp, Xp, Vinv]


def sud_inverse_blocks(V: Block, Vinv: Block, Xp: Block, Zp: Block, d: int) -> list[Block]:
    """``jd_blocks(X', Z' Vinv V)`` with the final ``V`` removed: 4 d^2 - 1 blocks."""
    if d < 2 or any(_dim(b) != d for b in (V, Vinv, Xp, Zp)):
        raise ValueError(f"operators must be {d}x{d} with d >= 2")
    out: list[Block] = []
    for letter in _jd_letters(d):
        out += [Xp] if letter == "A" else [Zp, Vinv, V]
    return out[:-1]


def irrep_inverse(V: Block, Vinv: Block, reps: Sequence[tuple[Block, Block]]) -> Block:
    return _with_error(irrep_inverse_blocks(V, Vinv, reps), V)


def qubit_inverse(V: Block, Vinv: Block, Xp: Block, Yp: Block) -> Block:
    return _with_error(qubit_inverse_blocks(V, Vinv, Xp, Yp), V)


def sud_inverse(V: Block, Vinv: Block, Xp: Block, Zp: Block, d: int) -> Block:
    return _with_error(sud_inverse_blocks(V, Vinv, Xp, Zp, d), V)
