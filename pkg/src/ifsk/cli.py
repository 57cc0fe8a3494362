"""Command-line front end: ``ifsk gateset``, ``ifsk net build``, ``ifsk compile``, ``ifsk bench``.

Every command that writes files also writes a JSON manifest next to them
recording the flags, seed, fingerprints and package versions.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .experiments import LEMMAS, run_lemma, slope_of
from .matcore import DomainError, InvalidMatrixError, as_matrix, haar_su, su_normalize
from .net import (
    GateSetError,
    NetError,
    build_net,
    certify_radius,
    dump_gateset,
    load_gateset,
    load_net,
    save_net,
    two_rotation_gateset,
)
from .pauli import su_generators
from .sk import (
    ALGORITHMS,
    Compiler,
    ConfigError,
    SKConfig,
    check_handshake,
    fit_summary,
    length_violations,
    run_benchmark,
)

log = logging.getLogger("ifsk")


class CLIError(Exception):
    pass


def _manifest(args: argparse.Namespace, **extra) -> dict:
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "command": " ".join(sys.argv[1:]) if sys.argv else "",
        "flags": flags,
        "versions": {
            "ifsk": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        **extra,
    }


def _write_manifest(path: Path, args, **extra) -> None:
    path.write_text(json.dumps(_manifest(args, **extra), indent=2, default=str) + "\n")


def _net_params(net) -> dict:
    return {
        "entries": len(net),
        "L0": net.max_word_length,
        "dedup_radius": net.dedup_radius,
        "certified_radius": net.certified_radius,
        "certified_samples": net.certified_samples,
        "fingerprint": net.fingerprint,
    }


# -- gateset ------------------------------------------------------------------

def cmd_gateset(args) -> int:
    gs = two_rotation_gateset(args.angle, inverses=args.inverses, paulis=args.paulis)
    Path(args.out).write_text(dump_gateset(gs) + "\n")
    print(f"wrote {len(gs)} gates to {args.out} (fingerprint {gs.fingerprint[:16]})")
    return 0


# -- net build ----------------------------------------------------------------

def cmd_net_build(args) -> int:
    gs = load_gateset(Path(args.gateset).read_bytes(), source_path=args.gateset)
    gates = args.gates.split(",") if args.gates else None
    net = build_net(gs, args.max_len, args.dedup, gates=gates)
    if args.certify:
        certify_radius(net, args.certify, args.seed)
    out = Path(args.out)
    save_net(net, out)
    _write_manifest(out.with_name(out.name + ".manifest.json"), args,
                    gateset_fingerprint=gs.fingerprint, net=_net_params(net))
    radius = "uncertified" if net.certified_radius is None else f"{net.certified_radius:.6g}"
    print(f"entries {len(net)}")
    print(f"certified radius {radius}")
    return 0


# -- compile ------------------------------------------------------------------

def _parse_target(text: str, d: int) -> np.ndarray:
    if text.startswith("haar:"):
        try:
            seed = int(text[5:])
        except ValueError:
            raise CLIError(f"target {text!r}: seed must be an integer") from None
        return haar_su(d, np.random.default_rng(seed))
    if text == "pauli-x":
        return su_generators(d)[0].matrix
    if text == "pauli-z":
        return su_generators(d)[1].matrix
    path = Path(text)
    if not path.exists():
        raise CLIError(f"target {text!r} is neither a file nor a named target")
    doc = json.loads(path.read_text())
    try:
        M = np.asarray(doc["matrix"], dtype=float)
        M = as_matrix(M[..., 0] + 1j * M[..., 1])
    except (KeyError, ValueError, IndexError, InvalidMatrixError) as exc:
        raise CLIError(f"{text}: invalid target document ({exc})") from None
    if M.shape[0] != d:
        raise CLIError(f"{text}: target is {M.shape[0]}x{M.shape[0]} but the net acts on d={d}")
    return su_normalize(M).matrix


def _config(args, net) -> SKConfig:
    if net.gateset is None:
        raise CLIError("net file carries no gate set")
    return SKConfig(
        algorithm=args.algorithm,
        depth=args.depth,
        net=net,
        gateset=net.gateset,
        epsilon0=args.epsilon0,
        pauli_cache_path=args.pauli_cache,
        rng_seed=args.seed,
        padded=args.padded,
        qubit_form=not args.generic_factory,
    )


def cmd_compile(args) -> int:
    net = load_net(args.net)
    cfg = _config(args, net)
    comp = Compiler(cfg)
    c_est = None
    if args.depth > 1 and not args.skip_handshake:
        c_est = check_handshake(comp, seed=args.seed)
    U = _parse_target(args.target, cfg.d)
    records = run_benchmark(cfg, [U], comp)
    op = comp.compile(U, args.depth)
    gs = cfg.gateset
    names = op.word.names(gs)
    lines = list(names)
    lines.append(f"# algorithm {args.algorithm}")
    lines.append(f"# depth {args.depth}")
    lines.append(f"# error {op.err_bound:.6e}")
    lines.append(f"# length {len(names)}")
    if args.padded:
        lines.append(f"# padded_length {op.length}")
    lines.append(f"# gateset_fingerprint {gs.fingerprint}")
    for r in records:
        lines.append(f"# level {r.level} eps {r.eps_n:.6e} len {r.len_n} calls {r.recursive_calls}")
    out = Path(args.out) if args.out else None
    if out is not None:
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        _write_manifest(out.with_name(out.name + ".manifest.json"), args,
                        gateset_fingerprint=gs.fingerprint, net=_net_params(net), c_estimate=c_est)
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    print(f"error {op.err_bound:.3e} length {len(names)} depth {args.depth}", file=sys.stderr)
    return 0


# -- bench --------------------------------------------------------------------

def _bench_lemmas(args, out: Path) -> int:
    names = args.lemmas.split(",") if args.lemmas else [n for n, lem in LEMMAS.items() if args.d in lem.dims]
    grid = [float(e) for e in args.eps_grid.split(",")]
    rows, slopes = [], []
    for name in names:
        if name not in LEMMAS:
            raise CLIError(f"unknown lemma {name!r}; choose from {sorted(LEMMAS)}")
        lem = LEMMAS[name]
        lemma_grid = [1e-1] + grid if name == "commutator" and 1e-1 not in grid else grid
        res = run_lemma(name, args.d, lemma_grid, args.trials, args.seed)
        rows += res
        if lem.min_slope is not None:
            s = slope_of(res)
            slopes.append((name, args.d, "slope", s, lem.min_slope, s >= lem.min_slope))
        else:
            m = max(r.residual for r in res)
            slopes.append((name, args.d, "max_residual", m, lem.max_residual, m <= lem.max_residual))
    with open(out / "lemmas.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lemma", "d", "eps", "trial", "residual"])
        for r in rows:
            w.writerow([r.lemma, r.d, f"{r.eps:.6e}", r.trial, f"{r.residual:.6e}"])
    with open(out / "slopes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lemma", "d", "statistic", "value", "threshold", "pass"])
        for name, d, stat, val, thr, ok in slopes:
            w.writerow([name, d, stat, f"{val:.6g}", thr, "yes" if ok else "no"])
            print(f"{name:18s} d={d} {stat}={val:.4g} ({'ok' if ok else 'BELOW THRESHOLD'})")
    _write_manifest(out / "manifest.json", args)
    return 0 if all(row[-1] for row in slopes) else 1


def _bench_sk(args, out: Path) -> int:
    if not args.net:
        raise CLIError("--suite sk needs --net")
    net = load_net(args.net)
    cfg = _config(args, net)
    comp = Compiler(cfg)
    targets = [haar_su(cfg.d, np.random.default_rng([args.seed, t])) for t in range(args.targets)]
    records = run_benchmark(cfg, targets, comp, jobs=args.jobs)
    with open(out / "levels.csv", "w") as fh:
        fh.write(records[0].CSV_HEADER + "\n")
        for r in records:
            fh.write(r.csv_row() + "\n")
    summary = fit_summary(records)
    bad = length_violations(records, comp.group_order, cfg.padded)
    summary["length_check"] = "ok" if not bad else f"{len(bad)} violations"
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(summary))
        w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in summary.values()])
    _write_manifest(out / "manifest.json", args, gateset_fingerprint=cfg.gateset.fingerprint,
                    net=_net_params(net))
    for k, v in summary.items():
        print(f"{k}: {v:.4g}" if isinstance(v, float) and math.isfinite(v) else f"{k}: {v}")
    for line in bad:
        print(line, file=sys.stderr)
    return 0 if not bad else 1


def cmd_bench(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return _bench_lemmas(args, out) if args.suite == "lemmas" else _bench_sk(args, out)


# -- parser -------------------------------------------------------------------

def _add_compile_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=ALGORITHMS, default="ifsk")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--epsilon0", type=float, default=None,
                   help="base-case accuracy; defaults to the net's certified radius")
    p.add_argument("--padded", action="store_true", help="pad net words so each level has one length")
    p.add_argument("--generic-factory", action="store_true",
                   help="use the {X, Z} inverse factory on qubits as well")
    p.add_argument("--pauli-cache", default=None, help="file for compiled Pauli generators")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifsk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gateset", help="write a built-in qubit gate-set document")
    p.add_argument("--angle", type=float, default=1.0, help="rotation angle in radians")
    p.add_argument("--inverses", action="store_true", help="add the dagger of each rotation")
    p.add_argument("--paulis", action="store_true", help="add the Pauli irrep and its daggers")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gateset)

    net = sub.add_parser("net", help="epsilon-net commands")
    net_sub = net.add_subparsers(dest="net_cmd", required=True)
    p = net_sub.add_parser("build", help="enumerate and deduplicate gate words")
    p.add_argument("--gateset", required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--dedup", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--certify", type=int, default=0, help="Haar samples for the covering radius")
    p.add_argument("--gates", default=None, help="comma-separated subset of gate names to enumerate")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_net_build)

    p = sub.add_parser("compile", help="compile one target")
    p.add_argument("--net", required=True)
    p.add_argument("--target", required=True, help="PATH, haar:SEED, pauli-x or pauli-z")
    p.add_argument("--out", default=None, help="sequence file (default: stdout)")
    p.add_argument("--skip-handshake", action="store_true",
                   help="do not estimate C before recursing deeper than one level")
    _add_compile_flags(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("bench", help="run lemma or compiler experiments")
    p.add_argument("--suite", choices=("lemmas", "sk"), required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--lemmas", default=None, help="comma-separated subset (lemmas suite)")
    p.add_argument("--eps-grid", default="1e-2,1e-3,1e-4")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--net", default=None)
    p.add_argument("--targets", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    _add_compile_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CLIError, ConfigError, DomainError, GateSetError, NetError, InvalidMatrixError, OSError) as exc:
        print(f"ifsk: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
