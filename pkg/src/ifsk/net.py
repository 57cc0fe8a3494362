"""Gate sets, gate words and the epsilon-net the recursions bottom out on.

A *word* is a sequence of gate indices; its matrix is the left-to-right
product of the named gates, so the last gate acts first on a state.  The
sentinel index :data:`IDLE` stands for an explicit identity slot and is only
produced by the compiler's padding mode.
"""
from __future__ import annotations

import hashlib
import io
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .matcore import TOL, InvalidMatrixError, as_matrix, dagger, haar_su, su_normalize
from .pauli import pauli_irrep, su_generators

log = logging.getLogger(__name__)

__all__ = [
    "IDLE",
    "GateSetError",
    "NetError",
    "GateSet",
    "GateWord",
    "EpsilonNet",
    "load_gateset",
    "dump_gateset",
    "rotation",
    "two_rotation_gateset",
    "evaluate_word",
    "build_net",
    "query",
    "certify_radius",
    "save_net",
    "load_net",
]

IDLE = -1
NET_FORMAT_VERSION = 1
_MAGIC = b"IFSKNET\n"
DEFAULT_MAX_ENTRIES = 5_000_000


class GateSetError(ValueError):
    pass


class NetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GateSet:
    """Named SU(d) generators.  No structure (inverses, irreps) is assumed."""

    d: int
    names: tuple[str, ...]
    matrices: np.ndarray
    source_path: str | None = None
    # Phase applied to each input matrix to bring its determinant to 1.
    normalization: tuple[complex, ...] = ()

    def __post_init__(self):
        if not self.names:
            raise GateSetError("gate set is empty")
        if len(set(self.names)) != len(self.names):
            dup = sorted({n for n in self.names if self.names.count(n) > 1})
            raise GateSetError(f"duplicate gate names: {dup}")
        if self.matrices.shape != (len(self.names), self.d, self.d):
            raise GateSetError(f"matrix stack has shape {self.matrices.shape}")
        self.matrices.setflags(write=False)

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise GateSetError(f"no gate named {name!r}") from None

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps({"d": self.d, "names": list(self.names)}).encode())
        # adding 0.0 maps -0.0 to 0.0 so equal matrices hash equally
        h.update(np.ascontiguousarray(self.matrices + 0.0, dtype="<c16").tobytes())
        return h.hexdigest()

    def find(self, M: np.ndarray, tol: float = TOL) -> int | None:
        """Index of the gate equal to ``M`` within ``tol``, if any."""
        diffs = np.linalg.norm(self.matrices - M[None], ord=2, axis=(1, 2))
        i = int(np.argmin(diffs))
        return i if diffs[i] <= tol else None

    def dagger_map(self, tol: float = TOL) -> list[int | None]:
        """For each gate, the index of a gate equal to its exact dagger."""
        return [self.find(dagger(M), tol) for M in self.matrices]

    def is_inverse_closed(self, tol: float = TOL) -> bool:
        return all(j is not None for j in self.dagger_map(tol))

    def with_gates(self, names: Sequence[str], matrices: Sequence[np.ndarray]) -> "GateSet":
        """A new gate set with extra (already SU-normalized) gates appended."""
        extra = np.asarray(matrices, dtype=complex).reshape(-1, self.d, self.d)
        mats = np.concatenate([self.matrices, extra])
        return GateSet(self.d, self.names + tuple(names), mats, None,
                       self.normalization + (1.0,) * len(names))


@dataclass(frozen=True, eq=False)
class GateWord:
    """Immutable sequence of gate indices."""

    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int32))

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int32)
        if idx.ndim != 1:
            raise ValueError("word indices must be one-dimensional")
        if idx.size and idx.min() < IDLE:
            raise ValueError(f"invalid gate index {idx.min()}")
        if idx.flags.writeable or idx is self.indices:
            idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def length(self) -> int:
        return int(self.indices.size)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        return isinstance(other, GateWord) and np.array_equal(self.indices, other.indices)

    def __hash__(self) -> int:
        return hash(self.indices.tobytes())

    @property
    def gate_count(self) -> int:
        """Length not counting padding slots."""
        return int(np.count_nonzero(self.indices != IDLE))

    @classmethod
    def concat(cls, words: Sequence["GateWord"]) -> "GateWord":
        if not words:
            return cls()
        return cls(np.concatenate([w.indices for w in words]))

    def padded(self, length: int) -> "GateWord":
        if length < self.length:
            raise ValueError(f"cannot pad a word of length {self.length} to {length}")
        pad = np.full(length - self.length, IDLE, dtype=np.int32)
        return GateWord(np.concatenate([self.indices, pad]))

    def names(self, gs: GateSet, keep_idle: bool = False) -> list[str]:
        return [gs.names[i] if i != IDLE else "I" for i in self.indices if keep_idle or i != IDLE]


def evaluate_word(matrices: np.ndarray, word: GateWord | np.ndarray) -> np.ndarray:
    """Left-to-right product of the gates named by ``word``.

    Uses pairwise tree reduction, which is both fast for long words and keeps
    round-off growth logarithmic in the word length.
    """
    idx = word.indices if isinstance(word, GateWord) else np.asarray(word)
    d = matrices.shape[-1]
    if idx.size and (idx.max() >= len(matrices)):
        raise IndexError(f"gate index {idx.max()} out of range for {len(matrices)} gates")
    idx = idx[idx != IDLE]
    if idx.size == 0:
        return np.eye(d, dtype=complex)
    stack = matrices[idx]
    while len(stack) > 1:
        if len(stack) % 2:
            tail = stack[-1:]
            stack = np.concatenate([stack[0:-1:2] @ stack[1::2], tail])
        else:
            stack = stack[0::2] @ stack[1::2]
    return stack[0].copy()


# -- gate-set documents -------------------------------------------------------

def _parse_matrix(raw, d: int, name: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise GateSetError(f"gate {name!r}: matrix is not numeric ({exc})") from None
    if arr.shape != (d, d, 2):
        raise GateSetError(f"gate {name!r}: expected {d}x{d} [re, im] pairs, got shape {arr.shape}")
    return np.ascontiguousarray(arr).view(complex)[..., 0]


def load_gateset(data: bytes | str, source_path: str | None = None, tol: float = TOL) -> GateSet:
    """Parse and validate a gate-set document.

    Each matrix must be unitary within ``tol``; it is then multiplied by the
    phase that brings its determinant to one.
    """
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise GateSetError(f"cannot parse gate-set document: {exc}") from None
    if not isinstance(doc, dict) or "dim" not in doc or "gates" not in doc:
        raise GateSetError("gate-set document needs 'dim' and 'gates'")
    d = doc["dim"]
    if not isinstance(d, int) or not 2 <= d <= 16:
        raise GateSetError(f"invalid dim {d!r}")
    names, mats, phases = [], [], []
    for i, g in enumerate(doc["gates"]):
        if not isinstance(g, dict) or "name" not in g or "matrix" not in g:
            raise GateSetError(f"gate #{i} needs 'name' and 'matrix'")
        name = str(g["name"])
        M = _parse_matrix(g["matrix"], d, name)
        try:
            M = as_matrix(M)
        except InvalidMatrixError as exc:
            raise GateSetError(f"gate {name!r}: {exc}") from None
        res = float(np.linalg.norm(dagger(M) @ M - np.eye(d), 2))
        if res > tol:
            raise GateSetError(f"gate {name!r} is not unitary (residual {res:.3e})")
        S = su_normalize(M, tol).matrix
        names.append(name)
        mats.append(S)
        phases.append(complex(np.vdot(M, S) / d))
    return GateSet(d, tuple(names), np.array(mats, dtype=complex).reshape(len(names), d, d),
                   source_path, tuple(phases))


def dump_gateset(gs: GateSet) -> str:
    gates = [
        {"name": n, "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in M]}
        for n, M in zip(gs.names, gs.matrices)
    ]
    return json.dumps({"dim": gs.d, "gates": gates}, indent=1)


def rotation(axis: Sequence[float], angle: float) -> np.ndarray:
    """Bloch-sphere rotation ``exp(-i angle n.sigma / 2)``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    ns = n[0] * np.array([[0, 1], [1, 0]]) + n[1] * np.array([[0, -1j], [1j, 0]]) + n[2] * np.diag([1, -1])
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * ns


def two_rotation_gateset(angle: float = 1.0, inverses: bool = False, paulis: bool = False) -> GateSet:
    """Rotations by ``angle`` about z and x; optionally their daggers or the Pauli irrep.

    ``paulis`` appends the SU-normalized qubit Pauli group (minus identity)
    together with the exact dagger of each element, as the irrep-based
    compiler requires.
    """
    names = ["rz", "rx"]
    mats = [rotation((0, 0, 1), angle), rotation((1, 0, 0), angle)]
    if inverses:
        names += ["rz_dg", "rx_dg"]
        mats += [dagger(mats[0]), dagger(mats[1])]
    gs = GateSet(2, tuple(names), np.array(mats))
    if paulis:
        gs = with_pauli_irrep(gs)
    return gs


def with_pauli_irrep(gs: GateSet) -> GateSet:
    """Append every non-identity element of the Pauli irrep and its dagger."""
    names, mats = [], []
    reps = pauli_irrep(gs.d)[:-1]
    for k, R in enumerate(reps):
        for tag, M in (("", R), ("_dg", dagger(R))):
            if gs.find(M) is None and not any(np.allclose(M, N, atol=TOL) for N in mats):
                names.append(f"pauli{k}{tag}")
                mats.append(M)
    return gs.with_gates(names, mats)


def pauli_generator_gateset(d: int) -> GateSet:
    X, Z = su_generators(d)
    return GateSet(d, ("X", "Z"), np.array([X.matrix, Z.matrix]))


# -- the net ------------------------------------------------------------------

@dataclass(eq=False)
class EpsilonNet:
    """Deduplicated gate words with their matrices.

    Words are stored packed: entry ``i`` is ``flat[offsets[i]:offsets[i+1]]``.
    Entry 0 is always the empty word (identity).
    """

    gateset_fingerprint: str
    d: int
    max_word_length: int
    dedup_radius: float
    offsets: np.ndarray
    flat: np.ndarray
    matrices: np.ndarray
    certified_radius: float | None = None
    certified_samples: int = 0
    certified_seed: int | None = None
    gateset: GateSet | None = None

    def __len__(self) -> int:
        return len(self.matrices)

    def word(self, i: int) -> GateWord:
        return GateWord(self.flat[self.offsets[i]:self.offsets[i + 1]])

    def word_length(self, i: int) -> int:
        return int(self.offsets[i + 1] - self.offsets[i])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def entries(self):
        for i in range(len(self)):
            yield self.word(i), self.matrices[i]

    def check_entry(self, i: int, gate_matrices: np.ndarray, tol: float = TOL) -> float:
        expected = evaluate_word(gate_matrices, self.word(i))
        err = float(np.linalg.norm(expected - self.matrices[i], 2))
        if err > tol * max(1, self.word_length(i)):
            raise NetError(f"entry {i} does not match its word (error {err:.3e})")
        return err

    @property
    def fingerprint(self) -> str:
        """Hash of the stored words and matrices."""
        fp = self.__dict__.get("_fp")
        if fp is None:
            h = hashlib.sha256(self.gateset_fingerprint.encode())
            for arr in (self.offsets.astype("<i8"), self.flat.astype("<i4"), self.matrices.astype("<c16")):
                h.update(np.ascontiguousarray(arr).tobytes())
            fp = self.__dict__["_fp"] = h.hexdigest()
        return fp

    @property
    def _flat_conj(self) -> np.ndarray:
        cache = self.__dict__.get("_fc")
        if cache is None or cache.shape[0] != len(self):
            cache = np.conj(self.matrices.reshape(len(self), -1))
            self.__dict__["_fc"] = cache
        return cache


def _cell_coords(mats: np.ndarray, h: float) -> np.ndarray:
    """Integer grid cell of three real coordinates of the top row.

    Each coordinate of a matrix entry moves by at most the operator-norm
    distance, so points within ``h`` of each other land in adjacent cells.
    """
    top = mats[:, 0, :2]
    coords = np.stack([top[:, 0].real, top[:, 0].imag, top[:, 1].real], axis=1)
    return np.floor(coords / h).astype(np.int64)


_MIX = np.array([0x9E3779B97F4A7C15, 0xC2B2AE3D27D4EB4F, 0x165667B19E3779F9], dtype=np.uint64)
_OFFSETS = np.stack([g.ravel() for g in np.meshgrid(*([np.array([-1, 0, 1])] * 3), indexing="ij")], axis=1)


def _cell_keys(cells: np.ndarray) -> np.ndarray:
    # Distinct cells may collide; callers confirm every pair exactly.
    with np.errstate(over="ignore"):
        c = cells.astype(np.uint64)
        return c[:, 0] * _MIX[0] + c[:, 1] * _MIX[1] + c[:, 2] * _MIX[2]


def _batched_opnorm(D: np.ndarray) -> np.ndarray:
    """Operator norms of a stack of matrices via the top eigenvalue of ``D^dag D``."""
    if len(D) == 0:
        return np.zeros(0)
    G = np.conj(np.swapaxes(D, 1, 2)) @ D
    if D.shape[-1] == 2:
        t = np.real(G[:, 0, 0] + G[:, 1, 1])
        disc = np.real(G[:, 0, 0] - G[:, 1, 1]) ** 2 + 4 * np.abs(G[:, 0, 1]) ** 2
        return np.sqrt(np.maximum(0.5 * (t + np.sqrt(disc)), 0.0))
    return np.sqrt(np.maximum(np.linalg.eigvalsh(G)[:, -1], 0.0))


class _CellIndex:
    """Stored matrices bucketed by grid cell for radius queries."""

    def __init__(self, mats: np.ndarray, cells: np.ndarray):
        self.mats = mats
        self.cells = cells
        keys = _cell_keys(cells)
        self.order = np.argsort(keys, kind="stable")
        self.uniq, self.starts, self.counts = np.unique(keys[self.order], return_index=True,
                                                        return_counts=True)

    def near_pairs(self, q_cells, q_mats, r, upper=False, chunk=1 << 20):
        """All (query, stored) index pairs at operator distance <= r.

        With ``upper`` only pairs whose stored index exceeds the query index
        are reported (used when queries and stored entries coincide).
        """
        empty = np.zeros(0, np.int64)
        if len(self.uniq) == 0 or len(q_cells) == 0:
            return empty, empty
        qi_all, si_all = [], []
        for off in _OFFSETS:
            keys = _cell_keys(q_cells + off)
            pos = np.minimum(np.searchsorted(self.uniq, keys), len(self.uniq) - 1)
            hit = np.nonzero(self.uniq[pos] == keys)[0]
            if hit.size == 0:
                continue
            reps = self.counts[pos[hit]]
            qi = np.repeat(hit, reps)
            first = np.repeat(self.starts[pos[hit]] - np.cumsum(reps) + reps, reps)
            si = self.order[first + np.arange(qi.size)]
            if upper:
                keep = si > qi
                qi, si = qi[keep], si[keep]
            for a in range(0, qi.size, chunk):
                b = slice(a, a + chunk)
                close = _batched_opnorm(q_mats[qi[b]] - self.mats[si[b]]) <= r
                qi_all.append(qi[b][close])
                si_all.append(si[b][close])
        if not qi_all:
            return empty, empty
        qi, si = np.concatenate(qi_all), np.concatenate(si_all)
        if qi.size == 0:
            return empty, empty
        # a key collision between two neighbouring cells can report a pair twice
        pairs = np.unique(np.stack([qi, si], axis=1), axis=0)
        return pairs[:, 0], pairs[:, 1]


def build_net(
    gs: GateSet,
    L0: int,
    dedup_radius: float,
    gates: Sequence[str] | None = None,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> EpsilonNet:
    """Breadth-first enumeration of words up to length ``L0`` with deduplication.

    Words are generated one length at a time in canonical order (parent entry,
    then gate index).  A candidate is stored only if it is farther than
    ``dedup_radius`` from every matrix already stored, so each generation
    extends only the words that survived the previous one.  ``gates`` limits
    the enumeration alphabet to a subset of the gate set.
    """
    if L0 < 0:
        raise ValueError("L0 must be >= 0")
    if dedup_radius < 0:
        raise ValueError("dedup_radius must be >= 0")
    d = gs.d
    alphabet = np.arange(len(gs)) if gates is None else np.array([gs.index(g) for g in gates])
    G = gs.matrices[alphabet]
    h = max(dedup_radius, 1e-12)

    all_mats = np.eye(d, dtype=complex)[None]
    all_cells = _cell_coords(all_mats, h)
    words = [np.zeros((1, 0), dtype=np.int32)]
    frontier = all_mats
    for k in range(1, L0 + 1):
        if len(frontier) == 0:
            break
        cand = (frontier[:, None] @ G[None]).reshape(-1, d, d)
        ccells = _cell_coords(cand, h)

        keep = np.ones(len(cand), dtype=bool)
        qi, _ = _CellIndex(all_mats, all_cells).near_pairs(ccells, cand, dedup_radius)
        keep[qi] = False
        qi, sj = _CellIndex(cand, ccells).near_pairs(ccells, cand, dedup_radius, upper=True)
        if qi.size:
            # greedy in canonical order: a kept candidate evicts its later neighbours
            starts = np.searchsorted(qi, np.arange(len(cand) + 1))
            for i in np.unique(qi):
                if keep[i]:
                    keep[sj[starts[i]:starts[i + 1]]] = False
        new = np.nonzero(keep)[0]
        if len(all_mats) + new.size > max_entries:
            raise NetError(f"net exceeds {max_entries} entries at word length {k}")
        parent, gate = np.divmod(new, len(alphabet))
        words.append(np.concatenate([words[-1][parent], alphabet[gate].astype(np.int32)[:, None]], axis=1))
        frontier = cand[new]
        all_mats = np.concatenate([all_mats, frontier])
        all_cells = np.concatenate([all_cells, ccells[new]])
        log.info("length %d: %d candidates, %d stored (total %d)", k, len(cand), new.size, len(all_mats))

    lengths = np.concatenate([np.full(len(w), w.shape[1], dtype=np.int64) for w in words])
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    flat = np.concatenate([w.ravel() for w in words]).astype(np.int32)
    return EpsilonNet(gs.fingerprint, d, L0, float(dedup_radius), offsets, flat, all_mats, gateset=gs)


def _fro_sq(net: EpsilonNet, targets: np.ndarray) -> np.ndarray:
    """Squared Frobenius distances, entries x targets, from ``||A - B||_F^2 = 2d - 2 Re tr(A^dag B)``."""
    ov = np.real(net._flat_conj @ targets.reshape(len(targets), -1).T)
    return np.maximum(2 * net.d - 2 * ov, 0.0)


def query(net: EpsilonNet, U) -> tuple[GateWord, np.ndarray, float]:
    """Entry closest to ``U`` in operator norm.

    Frobenius distances to every entry come from one matrix-vector product;
    since ``||M||_F / sqrt(d) <= ||M|| <= ||M||_F`` only entries within
    ``sqrt(d)`` times the best exact distance need an exact check.
    Ties go to the shorter word, then the lower index.
    """
    U = as_matrix(U)
    if U.shape[0] != net.d:
        raise NetError(f"target dimension {U.shape[0]} != net dimension {net.d}")
    if len(net) == 0:
        raise NetError("empty net")
    i = _nearest(net, U, np.sqrt(_fro_sq(net, U[None])[:, 0]))
    return net.word(i), net.matrices[i], float(np.linalg.norm(net.matrices[i] - U, 2))


def _nearest(net: EpsilonNet, U: np.ndarray, fro: np.ndarray, k: int = 8) -> int:
    k = min(k, len(fro))
    first = np.argpartition(fro, k - 1)[:k]
    best = _batched_opnorm(net.matrices[first] - U).min()
    # The Frobenius values come from a difference of O(1) numbers, so near an
    # exact match they carry an absolute error of roughly 1e-8.
    cand = np.union1d(first, np.nonzero(fro <= np.sqrt(net.d) * best + 1e-7)[0])
    ops = _batched_opnorm(net.matrices[cand] - U)
    m = ops.min()
    tied = cand[ops <= m + 1e-15]
    lengths = net.lengths[tied]
    return int(tied[np.lexsort((tied, lengths))[0]])


def query_distances(net: EpsilonNet, targets: np.ndarray, chunk: int = 16) -> np.ndarray:
    """Nearest-entry distance for each of a stack of targets."""
    out = np.empty(len(targets))
    for a in range(0, len(targets), chunk):
        block = targets[a:a + chunk]
        fro = np.sqrt(_fro_sq(net, block))
        for j, U in enumerate(block):
            i = _nearest(net, U, fro[:, j])
            out[a + j] = np.linalg.norm(net.matrices[i] - U, 2)
    return out


def certify_radius(net: EpsilonNet, samples: int, seed: int = 0) -> float:
    """Monte-Carlo covering radius: worst query distance over Haar-random targets.

    The value and sample count are stored on ``net``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    targets = np.array([haar_su(net.d, rng) for _ in range(samples)])
    radius = float(query_distances(net, targets).max())
    net.certified_radius = radius
    net.certified_samples = samples
    net.certified_seed = seed
    return radius


# -- persistence ---------------------------------------------------------------

def _header(net: EpsilonNet) -> dict:
    return {
        "format_version": NET_FORMAT_VERSION,
        "gateset_fingerprint": net.gateset_fingerprint,
        "d": net.d,
        "L0": net.max_word_length,
        "dedup_radius": net.dedup_radius,
        "certified_radius": net.certified_radius,
        "certified_samples": net.certified_samples,
        "certified_seed": net.certified_seed,
        "entry_count": len(net),
        "index_count": int(net.flat.size),
        "gates": None if net.gateset is None else {
            "names": list(net.gateset.names),
            "matrices": np.stack([net.gateset.matrices.real, net.gateset.matrices.imag], -1).tolist(),
        },
    }


def net_bytes(net: EpsilonNet) -> bytes:
    head = json.dumps(_header(net), sort_keys=True, separators=(",", ":")).encode()
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", len(head)))
    buf.write(head)
    buf.write(np.ascontiguousarray(net.offsets, dtype="<i8").tobytes())
    buf.write(np.ascontiguousarray(net.flat, dtype="<i4").tobytes())
    mats = np.ascontiguousarray(net.matrices, dtype="<c16")
    buf.write(mats.view("<f8").tobytes())
    return buf.getvalue()


def save_net(net: EpsilonNet, path: str | Path) -> None:
    Path(path).write_bytes(net_bytes(net))


def load_net(path: str | Path, gs: GateSet | None = None, checks: int = 100) -> EpsilonNet:
    """Read a net file, verify its gate set and spot-check ``checks`` random entries.

    The gate set stored in the file is used unless ``gs`` is given, in which
    case the two must have the same fingerprint.
    """
    raw = Path(path).read_bytes()
    if not raw.startswith(_MAGIC):
        raise NetError(f"{path}: not a net file")
    try:
        pos = len(_MAGIC)
        (hlen,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        head = json.loads(raw[pos:pos + hlen])
        pos += hlen
        if head.get("format_version") != NET_FORMAT_VERSION:
            raise NetError(f"{path}: unsupported format version {head.get('format_version')}")
        n, m, d = head["entry_count"], head["index_count"], head["d"]
        sizes = [8 * (n + 1), 4 * m, 16 * n * d * d]
        if len(raw) != pos + sum(sizes):
            raise NetError(f"{path}: payload size {len(raw) - pos} does not match header")
        offsets = np.frombuffer(raw, "<i8", n + 1, pos).astype(np.int64)
        pos += sizes[0]
        flat = np.frombuffer(raw, "<i4", m, pos).astype(np.int32)
        pos += sizes[1]
        mats = np.frombuffer(raw, "<f8", 2 * n * d * d, pos).view("<c16").reshape(n, d, d).astype(complex)
    except (struct.error, KeyError, json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, NetError):
            raise
        raise NetError(f"{path}: corrupt payload ({exc})") from None
    if offsets[0] != 0 or offsets[-1] != m or np.any(np.diff(offsets) < 0):
        raise NetError(f"{path}: corrupt word offsets")
    stored = None
    if head.get("gates"):
        g = np.asarray(head["gates"]["matrices"], dtype=float)
        stored = GateSet(d, tuple(head["gates"]["names"]), g[..., 0] + 1j * g[..., 1])
        if stored.fingerprint != head["gateset_fingerprint"]:
            raise NetError(f"{path}: stored gate set does not match its fingerprint")
    net = EpsilonNet(head["gateset_fingerprint"], d, head["L0"], head["dedup_radius"], offsets, flat,
                     mats, head["certified_radius"], head["certified_samples"], head["certified_seed"],
                     gs if gs is not None else stored)
    if gs is not None and gs.fingerprint != net.gateset_fingerprint:
        raise NetError(f"{path}: net was built for a different gate set")
    gs = net.gateset
    if gs is not None:
        rng = np.random.default_rng(int(net.gateset_fingerprint[:8], 16))
        picks = rng.choice(n, size=min(checks, n), replace=False) if n else []
        for i in sorted(int(i) for i in picks):
            net.check_entry(i, gs.matrices)
    return net
