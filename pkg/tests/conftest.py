from __future__ import annotations

import numpy as np
import pytest

from ifsk.net import build_net, certify_radius, load_net, save_net, two_rotation_gateset

ACCEPTANCE_RESULTS: dict[str, list[tuple[bool, str]]] = {}


def record_acceptance(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.setdefault(criterion, []).append((ok, detail))
    print(f"[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE_RESULTS, key=lambda c: int(c.split()[-1])):
        results = ACCEPTANCE_RESULTS[criterion]
        ok = all(r[0] for r in results)
        terminalreporter.write_line(f"{criterion}: {'PASS' if ok else 'FAIL'}")
        for passed, detail in results:
            terminalreporter.write_line(f"    {'ok  ' if passed else 'FAIL'} {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def _cached_net(request, name: str, gs, L0: int, radius: float, samples: int):
    """Nets are expensive; keep them in pytest's cache directory between runs."""
    path = request.config.cache.mkdir("ifsk-nets") / f"{name}-{gs.fingerprint[:12]}-{L0}-{radius}-{samples}.net"
    if path.exists():
        return load_net(path, gs)
    net = build_net(gs, L0, radius)
    certify_radius(net, samples, seed=0)
    save_net(net, path)
    return net


@pytest.fixture(scope="session")
def two_rotation():
    return two_rotation_gateset()


@pytest.fixture(scope="session")
def small_net(request, two_rotation):
    """Coarse net over the two rotations; fine for bookkeeping, too coarse to converge."""
    return _cached_net(request, "small", two_rotation, 12, 0.02, 200)


@pytest.fixture(scope="session")
def small_inverse_closed_net(request):
    gs = two_rotation_gateset(inverses=True)
    return _cached_net(request, "small-inv", gs, 7, 0.02, 200)


@pytest.fixture(scope="session")
def small_pauli_net(request):
    gs = two_rotation_gateset(paulis=True)
    return _cached_net(request, "small-pauli", gs, 6, 0.02, 200)


@pytest.fixture(scope="session")
def acceptance_net(request, two_rotation):
    return _cached_net(request, "accept", two_rotation, 20, 0.02, 1000)


@pytest.fixture(scope="session")
def inverse_closed_net(request):
    gs = two_rotation_gateset(inverses=True)
    return _cached_net(request, "accept-inv", gs, 12, 0.02, 500)


@pytest.fixture(scope="session")
def pauli_net(request):
    gs = two_rotation_gateset(paulis=True)
    return _cached_net(request, "accept-pauli", gs, 13, 0.02, 500)
