from __future__ import annotations

import json

import numpy as np
import pytest

from ifsk.matcore import dagger, haar_su
from ifsk.net import IDLE, build_net, certify_radius, evaluate_word, two_rotation_gateset
from ifsk.sk import (
    CompileStats,
    Compiler,
    ConfigError,
    LevelRecord,
    SKConfig,
    check_handshake,
    check_word,
    fit_summary,
    ifsk,
    length_bound,
    length_multiplier,
    length_violations,
    run_benchmark,
    sk_classic,
)


def config(net, algorithm="ifsk", depth=2, **kw):
    return SKConfig(algorithm, depth, net, net.gateset, **kw)


def targets(n, seed=0, d=2):
    rng = np.random.default_rng(seed)
    return [haar_su(d, rng) for _ in range(n)]


# -- configuration ---------------------------------------------------------------

def test_config_rejects_bad_values(small_net, small_inverse_closed_net):
    with pytest.raises(ConfigError, match="unknown algorithm"):
        config(small_net, "fast")
    for depth in (-1, 26):
        with pytest.raises(ConfigError, match="depth"):
            config(small_net, depth=depth)
    with pytest.raises(ConfigError, match="different gate set"):
        SKConfig("ifsk", 1, small_net, small_inverse_closed_net.gateset)
    with pytest.raises(ConfigError, match="exceeds epsilon0"):
        config(small_net, epsilon0=small_net.certified_radius / 2)


def test_config_defaults_epsilon0_to_certified_radius(small_net):
    assert config(small_net).epsilon0 == small_net.certified_radius
    uncertified = build_net(small_net.gateset, 3, 0.0)
    with pytest.raises(ConfigError, match="certified"):
        config(uncertified)
    assert config(uncertified, epsilon0=2.0).epsilon0 == 2.0


def test_classic_needs_inverse_closed_set(small_net):
    with pytest.raises(ConfigError, match="not inverse-closed"):
        Compiler(config(small_net, "classic"))


def test_irrep_needs_pauli_irrep(small_inverse_closed_net):
    with pytest.raises(ConfigError, match="Pauli irrep"):
        Compiler(config(small_inverse_closed_net, "irrep"))


def test_entry_points_check_algorithm(small_net):
    cfg = config(small_net, depth=0)
    with pytest.raises(ConfigError):
        sk_classic(np.eye(2), 0, cfg)
    assert ifsk(np.eye(2), 0, cfg).err_bound < 1e-12


def test_compile_checks_target_dimension(small_net):
    with pytest.raises(ConfigError, match="d=2"):
        Compiler(config(small_net)).compile(np.eye(3))


# -- base case -------------------------------------------------------------------

def test_depth_zero_returns_net_entry(small_net):
    comp = Compiler(config(small_net, depth=0))
    for i in (1, 100, len(small_net) - 1):
        op = comp.compile(small_net.matrices[i])
        assert op.err_bound <= 1e-9
        assert op.word == small_net.word(i)


# -- call trees -------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_ifsk_call_tree_without_memo(acceptance_net, n):
    comp = Compiler(config(acceptance_net, depth=n, memoize=False))
    comp.paulis(n - 1)
    stats = CompileStats()
    comp.compile(targets(1, seed=n)[0], n, stats)
    assert stats.top_calls == 5
    assert stats.pauli_compilations == 0
    assert stats.nodes == (5 ** (n + 1) - 1) // 4
    assert dict(stats.calls_by_level) == {k: 5 ** (n - k) for k in range(n + 1)}
    assert stats.net_queries == 5 ** n


@pytest.mark.parametrize("n", [1, 2, 3])
def test_classic_call_tree_without_memo(inverse_closed_net, n):
    stats = CompileStats()
    Compiler(config(inverse_closed_net, "classic", n, memoize=False)).compile(targets(1, seed=n)[0], n, stats)
    assert stats.top_calls == 3
    assert stats.nodes == (3 ** (n + 1) - 1) // 2
    assert dict(stats.calls_by_level) == {k: 3 ** (n - k) for k in range(n + 1)}


def test_irrep_call_tree_without_memo(pauli_net):
    stats = CompileStats()
    Compiler(config(pauli_net, "irrep", 2, memoize=False)).compile(targets(1)[0], 2, stats)
    assert stats.top_calls == 5
    assert stats.nodes == 31
    assert stats.pauli_compilations == 0


def test_memo_reuses_identical_requests(acceptance_net):
    comp = Compiler(config(acceptance_net, depth=2))
    U = targets(1, seed=9)[0]
    first = comp.compile(U)
    stats = CompileStats()
    again = comp.compile(U, stats=stats)
    assert stats.nodes == 1 and stats.memo_hits == 1
    assert again.word == first.word


# -- lengths ------------------------------------------------------------------------

def test_length_multipliers():
    assert length_multiplier("classic", 2) == 5
    assert length_multiplier("ifsk", 2) == 33
    assert length_multiplier("ifsk", 3) == 73
    assert length_multiplier("irrep", 2, 4) == 17
    assert length_bound("irrep", 2, 10, 4) == 17 * 10 + 12
    assert length_bound("ifsk", 2, 10) == 330


@pytest.mark.parametrize("algorithm, net_name, qubit_form", [
    ("ifsk", "small_net", True),
    ("ifsk", "small_net", False),
    ("classic", "small_inverse_closed_net", True),
    ("irrep", "small_pauli_net", True),
])
def test_padded_lengths_are_exact(request, algorithm, net_name, qubit_form):
    net = request.getfixturevalue(net_name)
    comp = Compiler(config(net, algorithm, 2, padded=True, qubit_form=qubit_form))
    L0 = net.max_word_length
    expected = L0
    for n in range(3):
        op = comp.compile(targets(1, seed=4)[0], n)
        assert op.length == expected
        check_word(op, net.gateset)
        expected = length_bound(algorithm, 2, expected, comp.group_order)
    if algorithm == "ifsk":
        assert op.length == 33 ** 2 * L0


def test_padded_pauli_cache_is_padded(small_net):
    comp = Compiler(config(small_net, depth=2, padded=True))
    for k in range(2):
        for op in comp.paulis(k).values():
            assert op.length == 33 ** k * small_net.max_word_length


@pytest.mark.parametrize("algorithm, net_name", [
    ("ifsk", "acceptance_net"),
    ("classic", "inverse_closed_net"),
    ("irrep", "pauli_net"),
])
def test_default_lengths_respect_bound(request, algorithm, net_name):
    net = request.getfixturevalue(net_name)
    comp = Compiler(config(net, algorithm, 2))
    recs = run_benchmark(comp.cfg, targets(3, seed=5), comp)
    assert length_violations(recs, comp.group_order) == []
    assert all(r.len_n <= r.max_sub_len * length_multiplier(algorithm, 2, comp.group_order) + 12
               for r in recs if r.level)
    if algorithm == "ifsk":
        assert all(r.len_n <= 33 ** r.level * net.max_word_length for r in recs)


def test_length_violations_flags_tampered_record():
    good = LevelRecord(0, "ifsk", 2, 1, 1e-3, 330, 5, 1.0, 10)
    bad = LevelRecord(0, "ifsk", 2, 1, 1e-3, 331, 5, 1.0, 10)
    short = LevelRecord(0, "ifsk", 2, 1, 1e-3, 329, 5, 1.0, 10)
    assert length_violations([good]) == []
    assert len(length_violations([bad])) == 1
    assert length_violations([short]) == []
    assert len(length_violations([short], padded=True)) == 1


# -- correctness -------------------------------------------------------------------------

@pytest.mark.parametrize("algorithm, net_name", [
    ("ifsk", "acceptance_net"),
    ("classic", "inverse_closed_net"),
    ("irrep", "pauli_net"),
])
def test_words_match_values(request, algorithm, net_name):
    net = request.getfixturevalue(net_name)
    comp = Compiler(config(net, algorithm, 2))
    for U in targets(2, seed=6):
        op = comp.compile(U)
        assert check_word(op, net.gateset) <= 1e-9 * op.length
        assert op.err_bound == pytest.approx(np.linalg.norm(op.value - U, 2))
        assert op.err_bound < net.certified_radius


def test_classic_dagger_reverses_and_maps(small_inverse_closed_net):
    comp = Compiler(config(small_inverse_closed_net, "classic", 1))
    op = comp.compile(targets(1)[0], 0).padded(small_inverse_closed_net.max_word_length + 2)
    inv = comp._dagger(op)
    assert np.allclose(inv.value, dagger(op.value))
    assert inv.word.indices[0] == IDLE and inv.word.indices[1] == IDLE
    assert np.allclose(evaluate_word(small_inverse_closed_net.gateset.matrices, inv.word), inv.value, atol=1e-12)


def test_ifsk_inverse_quality_gate(acceptance_net):
    comp = Compiler(config(acceptance_net, depth=3))
    stats = CompileStats()
    for U in targets(3, seed=7):
        comp.compile(U, stats=stats)
    checked = [(lvl, f, a) for lvl, f, a in stats.inverse_checks if a > 1e-8]
    assert checked
    for lvl, factory_err, approx_err in checked:
        assert factory_err <= approx_err ** 1.5, (lvl, factory_err, approx_err)


def test_irrep_factory_improves_inverse(pauli_net):
    comp = Compiler(config(pauli_net, "irrep", 2))
    stats = CompileStats()
    comp.compile(targets(1, seed=8)[0], stats=stats)
    for _, factory_err, approx_err in stats.inverse_checks:
        if approx_err > 1e-8:
            assert factory_err <= approx_err ** 1.5


def test_determinism(acceptance_net):
    U = targets(1, seed=12)[0]
    a = Compiler(config(acceptance_net, depth=2)).compile(U)
    b = Compiler(config(acceptance_net, depth=2)).compile(U)
    assert a.word == b.word


def test_jobs_do_not_change_results(acceptance_net):
    cfg = config(acceptance_net, depth=2)
    ts = targets(4, seed=13)
    serial = run_benchmark(cfg, ts)
    threaded = run_benchmark(cfg, ts, jobs=2)
    key = [(r.target_id, r.level, r.eps_n, r.len_n, r.recursive_calls) for r in serial]
    assert key == [(r.target_id, r.level, r.eps_n, r.len_n, r.recursive_calls) for r in threaded]


# -- Pauli cache -----------------------------------------------------------------------

def test_pauli_cache_reused_across_targets(acceptance_net):
    comp = Compiler(config(acceptance_net, depth=2))
    U1, U2 = targets(2, seed=14)
    first, second = CompileStats(), CompileStats()
    comp.compile(U1, stats=first)
    comp.compile(U2, stats=second)
    assert first.pauli_compilations == 2 * 2
    assert second.pauli_compilations == 0


def test_pauli_cache_targets(small_net):
    assert set(Compiler(config(small_net)).pauli_targets) == {"X", "Y"}
    assert set(Compiler(config(small_net, qubit_form=False)).pauli_targets) == {"X", "Z"}


def test_pauli_cache_errors_decrease(acceptance_net):
    comp = Compiler(config(acceptance_net, depth=3))
    errs = {name: [comp.paulis(k)[name].err_bound for k in range(3)] for name in comp.pauli_targets}
    for name, e in errs.items():
        assert e[0] > e[1] > e[2], (name, e)
        assert e[0] <= acceptance_net.certified_radius


def test_pauli_cache_persistence(acceptance_net, small_net, tmp_path):
    path = tmp_path / "paulis.json"
    U = targets(1, seed=15)[0]
    first = Compiler(config(acceptance_net, depth=2, pauli_cache_path=path))
    a = first.compile(U)
    assert path.exists()
    stats = CompileStats()
    second = Compiler(config(acceptance_net, depth=2, pauli_cache_path=path))
    b = second.compile(U, stats=stats)
    assert stats.pauli_compilations == 0
    assert a.word == b.word
    for k in range(2):
        for name in ("X", "Y"):
            assert second.paulis(k)[name].word == first.paulis(k)[name].word
    with pytest.raises(ConfigError, match="different net"):
        Compiler(config(small_net, depth=2, pauli_cache_path=path))


def test_pauli_cache_rejects_tampered_value(small_net, tmp_path):
    path = tmp_path / "paulis.json"
    Compiler(config(small_net, depth=1, pauli_cache_path=path)).paulis(0)
    doc = json.loads(path.read_text())
    doc["values"][0]["X"][0][0][0] += 1e-3
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="does not match its word"):
        Compiler(config(small_net, depth=1, pauli_cache_path=path))


def test_pauli_cache_rebuilt_when_padding_differs(small_net, tmp_path):
    path = tmp_path / "paulis.json"
    Compiler(config(small_net, depth=1, pauli_cache_path=path)).paulis(0)
    comp = Compiler(config(small_net, depth=1, pauli_cache_path=path, padded=True))
    assert len(comp.pauli_cache) == 0


# -- handshake --------------------------------------------------------------------------

def test_handshake_accepts_fine_net(acceptance_net):
    c = check_handshake(Compiler(config(acceptance_net, depth=3)))
    assert c * np.sqrt(acceptance_net.certified_radius) < 0.9


def test_handshake_refuses_coarse_net():
    # at this size one level barely improves on the base radius: C sqrt(eps0) is about 1.3
    net = build_net(two_rotation_gateset(), 11, 0.02)
    certify_radius(net, 200)
    with pytest.raises(ConfigError, match="finer net"):
        check_handshake(Compiler(config(net, depth=2)))
    # one level never needs the guarantee
    check_handshake(Compiler(config(net, depth=1)))


def test_handshake_refuses_net_outside_commutator_domain():
    gs = two_rotation_gateset()
    net = build_net(gs, 6, 0.02)
    certify_radius(net, 100)
    with pytest.raises(ConfigError, match="finer net"):
        check_handshake(Compiler(config(net, depth=2)))


# -- summaries ---------------------------------------------------------------------------

def test_fit_summary_recovers_synthetic_rate():
    recs = []
    for t, e0 in enumerate((0.03, 0.02, 0.04)):
        eps, length = e0, 10
        for n in range(4):
            recs.append(LevelRecord(t, "ifsk", 2, n, eps, length, 5, 0.0))
            eps, length = 2.0 * eps ** 1.5, 33 * length
    s = fit_summary(recs)
    assert s["exponent_median"] == pytest.approx(1.5)
    assert s["C_geomean"] == pytest.approx(2.0)
    assert s["C_max"] == pytest.approx(2.0)
    assert s["targets"] == 3
    assert np.isfinite(s["gamma"])


def test_csv_row_matches_header():
    r = LevelRecord(3, "ifsk", 2, 1, 1.5e-3, 330, 5, 12.5)
    assert len(r.csv_row().split(",")) == len(LevelRecord.CSV_HEADER.split(","))
    assert r.csv_row().startswith("3,ifsk,2,1,1.500000e-03,330,5,")
