"""Recursive Solovay-Kitaev compilers.

Three recursions share one skeleton: approximate ``U`` one level down, factor
the remaining error ``U U_{n-1}^dag`` as a balanced group commutator
``V W V^dag W^dag``, approximate ``V`` and ``W`` one level down, and assemble
``V_{n-1} W_{n-1} (V_{n-1})^-1 (W_{n-1})^-1 U_{n-1}``.  They differ only in how
the two inverses are produced:

``classic``
    exact inverses by reversing a word and daggering each gate, which needs
    an inverse-closed gate set;
``irrep``
    the twirl factory over an exact Pauli irrep contained in the gate set;
``ifsk``
    the Pauli self-correcting factory, fed by compiled approximations of the
    Pauli generators.  No structure is required of the gate set.
"""
from __future__ import annotations

import json
import logging
import math
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .commutator import balanced_commutator
from .focus import ImplementedOperator, compose, irrep_inverse, qubit_inverse, sud_inverse
from .matcore import TOL, DomainError, as_matrix, dagger, haar_su
from .net import IDLE, EpsilonNet, GateSet, GateWord, evaluate_word, query
from .pauli import pauli_irrep, su_generators, su_y

log = logging.getLogger(__name__)

__all__ = [
    "ALGORITHMS",
    "MAX_DEPTH",
    "ConfigError",
    "SKConfig",
    "PauliCache",
    "LevelRecord",
    "IrrepGateSet",
    "CompileStats",
    "Compiler",
    "sk_classic",
    "sk_irrep",
    "ifsk",
    "build_pauli_cache",
    "estimate_c",
    "check_handshake",
    "run_benchmark",
    "fit_summary",
    "length_multiplier",
    "length_bound",
    "length_violations",
]

ALGORITHMS = ("classic", "irrep", "ifsk")
MAX_DEPTH = 25
# The recursion is only attempted when C * sqrt(eps0) stays below this.
HANDSHAKE_LIMIT = 0.9


class ConfigError(ValueError):
    pass


@dataclass
class SKConfig:
    """Compiler settings.

    ``qubit_form`` selects the {X, Y} factory on qubits; otherwise the
    generic {X, Z} factory is used for every dimension.  ``padded`` pads every
    net result to the net's maximum word length with idle slots, so that all
    outputs of one level share a length.
    """

    algorithm: str
    depth: int
    net: EpsilonNet
    gateset: GateSet
    epsilon0: float | None = None
    pauli_cache_path: str | Path | None = None
    rng_seed: int = 0
    instrumentation: bool = True
    padded: bool = False
    memoize: bool = True
    qubit_form: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ConfigError(f"depth must be in [0, {MAX_DEPTH}], got {self.depth}")
        if self.net.gateset_fingerprint != self.gateset.fingerprint:
            raise ConfigError("net was built for a different gate set")
        if self.net.d != self.gateset.d:
            raise ConfigError("net and gate set dimensions differ")
        radius = self.net.certified_radius
        if self.epsilon0 is None:
            if radius is None:
                raise ConfigError("net has no certified radius; certify it or pass epsilon0")
            self.epsilon0 = radius
        if radius is not None and radius > self.epsilon0:
            raise ConfigError(f"net radius {radius:.4g} exceeds epsilon0 {self.epsilon0:.4g}")

    @property
    def d(self) -> int:
        return self.gateset.d

    @property
    def uses_qubit_factory(self) -> bool:
        return self.d == 2 and self.qubit_form


@dataclass(frozen=True)
class LevelRecord:
    target_id: int
    algorithm: str
    d: int
    level: int
    eps_n: float
    len_n: int
    recursive_calls: int
    wall_ms: float
    # Longest level-(n-1) component; the length recursions bound len_n by it.
    max_sub_len: int = 0
    inverse_checks: tuple[tuple[float, float], ...] = ()

    CSV_HEADER = "target_id,algorithm,d,level,eps_n,len_n,recursive_calls,wall_ms"

    def csv_row(self) -> str:
        return (f"{self.target_id},{self.algorithm},{self.d},{self.level},{self.eps_n:.6e},"
                f"{self.len_n},{self.recursive_calls},{self.wall_ms:.3f}")


@dataclass
class CompileStats:
    """Counters for one top-level compilation."""

    top_calls: int = 0
    nodes: int = 0
    memo_hits: int = 0
    net_queries: int = 0
    pauli_compilations: int = 0
    calls_by_level: Counter = field(default_factory=Counter)
    # (level, ||Vinv2 V - I||, ||Vinv - V^dag||) for every factory use
    inverse_checks: list = field(default_factory=list)
    max_sub_len: int = 0


class IrrepGateSet:
    """Locates every non-identity Pauli irrep element and its exact dagger in a gate set."""

    def __init__(self, gs: GateSet, tol: float = TOL):
        self.gateset = gs
        self.pairs: list[tuple[int, int]] = []
        for k, R in enumerate(pauli_irrep(gs.d)[:-1]):
            i, j = gs.find(R, tol), gs.find(dagger(R), tol)
            if i is None:
                raise ConfigError(f"gate set lacks Pauli irrep element #{k}")
            if j is None:
                raise ConfigError(f"gate set lacks the dagger of Pauli irrep element #{k}")
            self.pairs.append((i, j))

    @property
    def group_order(self) -> int:
        return len(self.pairs) + 1

    def operators(self) -> list[tuple[ImplementedOperator, ImplementedOperator]]:
        gs = self.gateset
        return [(ImplementedOperator.from_word(gs, [i]), ImplementedOperator.from_word(gs, [j]))
                for i, j in self.pairs]


class PauliCache:
    """Compiled Pauli generators per level: ``X_k``, ``Z_k`` and, for the qubit factory, ``Y_k``."""

    def __init__(self, names: Sequence[str], net_fingerprint: str, gateset_fingerprint: str,
                 padded: bool = False):
        self.names = tuple(names)
        self.padded = padded
        self.net_fingerprint = net_fingerprint
        self.gateset_fingerprint = gateset_fingerprint
        self.levels: list[dict[str, ImplementedOperator]] = []

    def __len__(self) -> int:
        return len(self.levels)

    def to_json(self) -> str:
        doc = {
            "names": list(self.names),
            "net_fingerprint": self.net_fingerprint,
            "gateset_fingerprint": self.gateset_fingerprint,
            "padded": self.padded,
            "levels": [{k: op.word.indices.tolist() for k, op in lvl.items()} for lvl in self.levels],
            # values are stored bit-exactly so a reloaded cache reproduces compilations exactly
            "values": [{k: np.stack([op.value.real, op.value.imag], -1).tolist() for k, op in lvl.items()}
                       for lvl in self.levels],
        }
        return json.dumps(doc, separators=(",", ":"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path, gs: GateSet, net: EpsilonNet, targets: dict) -> "PauliCache":
        doc = json.loads(Path(path).read_text())
        if doc["gateset_fingerprint"] != gs.fingerprint or doc["net_fingerprint"] != net.fingerprint:
            raise ConfigError(f"{path}: Pauli cache belongs to a different net or gate set")
        cache = cls(doc["names"], net.fingerprint, gs.fingerprint, doc.get("padded", False))
        values = doc.get("values") or [{}] * len(doc["levels"])
        for lvl, vals in zip(doc["levels"], values):
            entry = {}
            for name, idx in lvl.items():
                op = ImplementedOperator.from_word(gs, GateWord(np.asarray(idx, dtype=np.int32)))
                if name in vals:
                    v = np.asarray(vals[name], dtype=float)
                    op = replace(op, value=np.ascontiguousarray(v).view(complex)[..., 0])
                    try:
                        op.check(gs)
                    except AssertionError as exc:
                        raise ConfigError(f"{path}: cached {name} does not match its word ({exc})") from None
                entry[name] = op.with_target(targets[name])
            cache.levels.append(entry)
        return cache


def length_multiplier(algorithm: str, d: int, group_order: int = 0) -> int:
    """Number of level-(n-1) words in one level-n word."""
    if algorithm == "classic":
        return 5
    if algorithm == "irrep":
        return 4 * group_order + 1
    return 8 * d * d + 1


def length_bound(algorithm: str, d: int, sub_len: int, group_order: int = 0) -> int:
    """Largest level-n length when no level-(n-1) component is longer than ``sub_len``.

    Attained exactly when every component has length ``sub_len`` (padded
    mode).  For the irrep recursion each of the two factories contributes
    ``2(|G| - 1)`` single irrep gates.
    """
    extra = 4 * (group_order - 1) if algorithm == "irrep" else 0
    return length_multiplier(algorithm, d, group_order) * sub_len + extra


def _memo_key(U: np.ndarray, n: int) -> tuple:
    R = np.round(U, 12) + 0.0  # folds -0.0 into 0.0
    return n, R.tobytes()


class Compiler:
    """Holds the net, the memo table and the Pauli cache for one configuration."""

    def __init__(self, cfg: SKConfig):
        self.cfg = cfg
        self.gs = cfg.gateset
        self.net = cfg.net
        self.d = cfg.d
        self._memo: dict = {}
        self._lock = threading.Lock()
        self._dagger_map: list[int] | None = None
        self._irrep: IrrepGateSet | None = None
        if cfg.algorithm == "classic":
            dm = self.gs.dagger_map()
            missing = [self.gs.names[i] for i, j in enumerate(dm) if j is None]
            if missing:
                raise ConfigError(f"gate set is not inverse-closed; no dagger for {missing}")
            self._dagger_map = dm
        elif cfg.algorithm == "irrep":
            self._irrep = IrrepGateSet(self.gs)
            self._irrep_ops = self._irrep.operators()
        self.pauli_targets = self._pauli_targets()
        self.pauli_cache = self._open_pauli_cache()

    @property
    def group_order(self) -> int:
        return self._irrep.group_order if self._irrep is not None else 0

    # -- Pauli cache ---------------------------------------------------------

    def _pauli_targets(self) -> dict[str, np.ndarray]:
        X, Z = su_generators(self.d)
        if self.cfg.uses_qubit_factory:
            return {"X": X.matrix, "Y": su_y().matrix}
        return {"X": X.matrix, "Z": Z.matrix}

    def _open_pauli_cache(self) -> PauliCache:
        path = self.cfg.pauli_cache_path
        if path is not None and Path(path).exists():
            cache = PauliCache.load(path, self.gs, self.net, self.pauli_targets)
            if set(cache.names) == set(self.pauli_targets) and cache.padded == self.cfg.padded:
                return cache
            log.warning("%s was built with other generators or padding; rebuilding", path)
        return PauliCache(tuple(self.pauli_targets), self.net.fingerprint, self.gs.fingerprint,
                          self.cfg.padded)

    def paulis(self, level: int, stats: CompileStats | None = None) -> dict[str, ImplementedOperator]:
        """Generators compiled at ``level``, building missing levels on demand."""
        grew = False
        while len(self.pauli_cache) <= level:
            k = len(self.pauli_cache)
            entry = {}
            for name, T in self.pauli_targets.items():
                sub = CompileStats()
                entry[name] = self._rec(T, k, sub).with_target(T)
                if stats is not None:
                    stats.pauli_compilations += 1
            self.pauli_cache.levels.append(entry)
            grew = True
        if grew and self.cfg.pauli_cache_path is not None:
            self.pauli_cache.save(self.cfg.pauli_cache_path)
        return self.pauli_cache.levels[level]

    # -- recursion -----------------------------------------------------------

    def compile(self, U, n: int | None = None, stats: CompileStats | None = None) -> ImplementedOperator:
        n = self.cfg.depth if n is None else n
        if not 0 <= n <= MAX_DEPTH:
            raise ConfigError(f"depth must be in [0, {MAX_DEPTH}], got {n}")
        U = as_matrix(U)
        if U.shape[0] != self.d:
            raise ConfigError(f"target is {U.shape[0]}x{U.shape[0]}, gate set acts on d={self.d}")
        stats = stats if stats is not None else CompileStats()
        if self.cfg.algorithm == "ifsk" and n > 0:
            self.paulis(n - 1, stats)
        stats.top_calls = 0
        op = self._rec(U, n, stats, top=True)
        return op.with_target(U)

    def _rec(self, U: np.ndarray, n: int, stats: CompileStats, top: bool = False) -> ImplementedOperator:
        stats.nodes += 1
        stats.calls_by_level[n] += 1
        key = _memo_key(U, n) if self.cfg.memoize else None
        if key is not None:
            with self._lock:
                hit = self._memo.get(key)
            if hit is not None:
                stats.memo_hits += 1
                return hit
        if n == 0:
            op = self._base(U, stats)
        else:
            op = self._step(U, n, stats, top)
        if key is not None:
            with self._lock:
                self._memo.setdefault(key, op)
        return op

    def _base(self, U: np.ndarray, stats: CompileStats) -> ImplementedOperator:
        stats.net_queries += 1
        word, M, _ = query(self.net, U)
        if self.cfg.padded:
            word = word.padded(self.net.max_word_length)
        return ImplementedOperator(word, M.copy(), self.gs.fingerprint)

    def _step(self, U: np.ndarray, n: int, stats: CompileStats, top: bool) -> ImplementedOperator:
        calls = 0

        def sub(T):
            nonlocal calls
            calls += 1
            return self._rec(T, n - 1, stats)

        U1 = sub(U)
        pair = balanced_commutator(U @ dagger(U1.value))
        Vn = sub(pair.V.matrix)
        Wn = sub(pair.W.matrix)
        algo = self.cfg.algorithm
        if algo == "classic":
            Vi, Wi = self._dagger(Vn), self._dagger(Wn)
            parts = [Vn, Wn, U1]
        else:
            Vb = sub(dagger(Vn.value))
            Wb = sub(dagger(Wn.value))
            Vi = self._factory(Vn, Vb, n - 1, stats)
            Wi = self._factory(Wn, Wb, n - 1, stats)
            parts = [Vn, Wn, Vb, Wb, U1]
            if algo == "ifsk":
                parts += list(self.paulis(n - 1).values())
        if top:
            stats.top_calls = calls
            stats.max_sub_len = max(p.length for p in parts)
        return compose([Vn, Wn, Vi, Wi, U1])

    def _dagger(self, op: ImplementedOperator) -> ImplementedOperator:
        dm = np.asarray(self._dagger_map + [IDLE], dtype=np.int32)  # index -1 maps to IDLE
        word = GateWord(dm[op.word.indices[::-1]])
        return ImplementedOperator(word, dagger(op.value), op.gateset)

    def _factory(self, V: ImplementedOperator, Vb: ImplementedOperator, level: int,
                 stats: CompileStats) -> ImplementedOperator:
        if self.cfg.algorithm == "irrep":
            out = irrep_inverse(V, Vb, self._irrep_ops)
        else:
            P = self.paulis(level)
            if self.cfg.uses_qubit_factory:
                out = qubit_inverse(V, Vb, P["X"], P["Y"])
            else:
                out = sud_inverse(V, Vb, P["X"], P["Z"], self.d)
        if self.cfg.instrumentation:
            approx = float(np.linalg.norm(Vb.value - dagger(V.value), 2))
            stats.inverse_checks.append((level + 1, out.err_bound, approx))
        return out


def _compiler(U, n: int, cfg: SKConfig, algorithm: str) -> ImplementedOperator:
    if cfg.algorithm != algorithm:
        raise ConfigError(f"configuration is for {cfg.algorithm!r}, not {algorithm!r}")
    return Compiler(cfg).compile(U, n)


def sk_classic(U, n: int, cfg: SKConfig) -> ImplementedOperator:
    return _compiler(U, n, cfg, "classic")


def sk_irrep(U, n: int, cfg: SKConfig) -> ImplementedOperator:
    return _compiler(U, n, cfg, "irrep")


def ifsk(U, n: int, cfg: SKConfig) -> ImplementedOperator:
    return _compiler(U, n, cfg, "ifsk")


def build_pauli_cache(cfg: SKConfig, up_to_level: int, compiler: Compiler | None = None) -> PauliCache:
    comp = compiler or Compiler(cfg)
    comp.paulis(up_to_level)
    return comp.pauli_cache


# -- measurement -------------------------------------------------------------

def estimate_c(compiler: Compiler, probes: int = 10, seed: int = 0) -> np.ndarray:
    """One-level ratios ``eps_1 / epsilon0^(3/2)`` on Haar-random probe targets.

    ``epsilon0`` is the configured net guarantee rather than each probe's own
    base error, matching the bound ``eps_n <= C eps_(n-1)^(3/2)``.
    """
    rng = np.random.default_rng(seed)
    eps0 = compiler.cfg.epsilon0
    out = []
    for _ in range(probes):
        U = haar_su(compiler.d, rng)
        out.append(compiler.compile(U, 1).err_bound / eps0 ** 1.5)
    return np.asarray(out)


def check_handshake(compiler: Compiler, probes: int = 10, seed: int = 0) -> float:
    """Estimate C on probe targets and refuse deep recursion unless ``C sqrt(epsilon0) < 0.9``.

    C is the largest probe ratio.  Returns the estimate.  A probe whose
    residual falls outside the commutator's domain also means the net is too
    coarse and is refused the same way.
    """
    try:
        c = float(estimate_c(compiler, probes, seed).max())
    except DomainError as exc:
        raise ConfigError(f"one-level probe failed ({exc}); use a finer net") from None
    eps0 = compiler.cfg.epsilon0
    if compiler.cfg.depth > 1 and c * math.sqrt(eps0) >= HANDSHAKE_LIMIT:
        raise ConfigError(
            f"estimated C = {c:.3g} with epsilon0 = {eps0:.3g} gives C*sqrt(epsilon0) = "
            f"{c * math.sqrt(eps0):.3g} >= {HANDSHAKE_LIMIT}; use a finer net")
    return c


def run_benchmark(cfg: SKConfig, targets: Iterable, compiler: Compiler | None = None,
                  target_ids: Sequence[int] | None = None, jobs: int = 1) -> list[LevelRecord]:
    """Compile every target at every level ``0..cfg.depth`` and record each level.

    Levels are compiled in increasing order with a shared memo, so a level's
    wall time excludes lower levels it can reuse.  With ``jobs > 1`` targets
    run on a thread pool sharing the memo and Pauli cache.
    """
    comp = compiler or Compiler(cfg)
    if cfg.algorithm == "ifsk" and cfg.depth > 0:
        comp.paulis(cfg.depth - 1)
    targets = [as_matrix(U) for U in targets]
    ids = list(target_ids) if target_ids is not None else list(range(len(targets)))

    def one(tid, U):
        out = []
        for k in range(cfg.depth + 1):
            stats = CompileStats()
            t0 = time.perf_counter()
            op = comp.compile(U, k, stats)
            wall = (time.perf_counter() - t0) * 1e3
            checks = tuple((a, b) for lvl, a, b in stats.inverse_checks if lvl == k)
            out.append(LevelRecord(tid, cfg.algorithm, cfg.d, k, op.err_bound, op.length,
                                   stats.top_calls, wall, stats.max_sub_len, checks))
        return out

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            chunks = list(pool.map(one, ids, targets))
    else:
        chunks = [one(tid, U) for tid, U in zip(ids, targets)]
    return [r for chunk in chunks for r in chunk]


def length_violations(records: Sequence[LevelRecord], group_order: int = 0,
                      padded: bool = False) -> list[str]:
    """Levels whose length breaks the recursion bound (or, when padded, the equality)."""
    bad = []
    for r in records:
        if r.level == 0:
            continue
        bound = length_bound(r.algorithm, r.d, r.max_sub_len, group_order)
        if r.len_n > bound or (padded and r.len_n != bound):
            rel = "!=" if padded else ">"
            bad.append(f"target {r.target_id} level {r.level}: length {r.len_n} {rel} {bound}")
    return bad


def _slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and its standard error."""
    if len(x) < 2:
        return float("nan"), float("nan")
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    if len(x) > 2:
        sigma2 = float(np.sum((y - A @ coef) ** 2)) / (len(x) - 2)
        se = math.sqrt(sigma2 / float(np.sum((x - x.mean()) ** 2)))
    else:
        se = float("nan")
    return float(coef[0]), se


def fit_summary(records: Sequence[LevelRecord]) -> dict:
    """Per-run fits: C with the exponent fixed at 3/2, per-step exponents, and gamma.

    Only levels above the double-precision floor enter the fits.
    """
    by_target: dict[int, list[LevelRecord]] = {}
    for r in records:
        by_target.setdefault(r.target_id, []).append(r)
    exps, logc, pairs = [], [], []
    for recs in by_target.values():
        recs = sorted(recs, key=lambda r: r.level)
        eps = np.array([r.eps_n for r in recs])
        ok = eps > 1e-8
        e_prev, e_next = eps[:-1][ok[1:]], eps[1:][ok[1:]]
        if len(e_prev) >= 2:
            exps.append(_slope(np.log(e_prev), np.log(e_next))[0])
        elif len(e_prev) == 1:
            exps.append(float(np.log(e_next[0]) / np.log(e_prev[0])))
        logc += list(np.log(e_next) - 1.5 * np.log(e_prev))
        pairs += [(r.len_n, r.eps_n) for r in recs if r.eps_n > 1e-8 and r.level > 0]
    first = records[0] if records else None
    out = {
        "algorithm": first.algorithm if first else "",
        "d": first.d if first else 0,
        "targets": len(by_target),
        "C_geomean": float(np.exp(np.mean(logc))) if logc else float("nan"),
        "C_max": float(np.exp(np.max(logc))) if logc else float("nan"),
        "exponent_median": float(np.median(exps)) if exps else float("nan"),
        "exponent_min": float(np.min(exps)) if exps else float("nan"),
    }
    if len({le for le, _ in pairs}) >= 2:
        L = np.array([p[0] for p in pairs], dtype=float)
        E = np.array([p[1] for p in pairs])
        g, se = _slope(np.log(np.log(1 / E)), np.log(L))
        out["gamma"], out["gamma_se"] = g, se
    else:
        out["gamma"], out["gamma_se"] = float("nan"), float("nan")
    return out


def check_word(op: ImplementedOperator, gs: GateSet) -> float:
    """Verify an operator's value against its word; returns the discrepancy."""
    err = float(np.linalg.norm(evaluate_word(gs.matrices, op.word) - op.value, 2))
    if err > TOL * max(1, op.length):
        raise AssertionError(f"word/value mismatch {err:.3e} for length {op.length}")
    return err
