import math

import numpy as np
import pytest

from tvdiff import thermo
from tvdiff.dataset import matrices_from_binary
from tvdiff.synthetic import random_bipartite

from oracles import energy_loop, entropy_loop


def test_normalize_examples(rng):
    assert np.allclose(thermo.normalize_reconstruction([[2.0, 2.0]]).rows, [[0.5, 0.5]])
    assert np.allclose(thermo.normalize_reconstruction([[0.0, 0.0]], "softmax").rows, [[0.5, 0.5]])
    raw = rng.normal(size=(3, 5))
    P = thermo.normalize_reconstruction(raw)
    for u in range(3):
        z = sum(abs(v) for v in raw[u])
        assert np.allclose(P.rows[u], [abs(v) / z for v in raw[u]], rtol=1e-15)
    S = thermo.normalize_reconstruction(raw, "softmax")
    assert np.allclose(S.rows.sum(1), 1, atol=1e-12)


def test_zero_row_is_flagged_and_excluded():
    P = thermo.normalize_reconstruction([[0.0, 0.0], [1.0, 3.0]])
    assert P.degenerate.tolist() == [True, False]
    assert thermo.entropy(P) == pytest.approx(-(0.25 * math.log(0.25) + 0.75 * math.log(0.75)))
    with pytest.raises(ValueError):
        thermo.normalize_reconstruction([[np.nan, 1.0]])


def test_energy_identities(rng):
    R = random_bipartite(5, 7, 0.4, rng)
    P = matrices_from_binary(R).R_hat
    assert thermo.energy(P.toarray(), P, R) == R.sum()
    assert thermo.energy(np.zeros((5, 7)), P, R) == 0.0
    Pn = rng.random((5, 7))
    Pn /= Pn.sum(1, keepdims=True)
    assert abs(thermo.energy(Pn, P, R) - energy_loop(Pn, P.toarray(), R)) < 1e-12


def test_entropy_examples(rng):
    assert thermo.entropy(np.eye(4)) == 0.0
    assert abs(thermo.entropy(np.full((3, 5), 0.2)) - 3 * math.log(5)) < 1e-12
    P = rng.random((4, 6))
    P /= P.sum(1, keepdims=True)
    assert abs(thermo.entropy(P) - entropy_loop(P)) < 1e-12
    assert 0 <= thermo.entropy(P) <= 4 * math.log(6)


def test_adjacency_entropy_gap_examples():
    assert abs(thermo.theorem1_delta_S(np.ones((3, 4)))) < 1e-12
    # regular: every item degree equals 2
    assert abs(thermo.theorem1_delta_S(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]]))) < 1e-12
    hand = thermo.theorem1_delta_S(np.array([[1, 1], [0, 1]]))
    # user 0: weights 1/√1, 1/√2 → normalized; user 1 single item in both
    w = np.array([1.0, 1 / math.sqrt(2)])
    w /= w.sum()
    assert abs(hand - (-(w * np.log(w)).sum() - math.log(2))) < 1e-12
    assert hand < 0
    with pytest.raises(ValueError):
        thermo.theorem1_delta_S(np.zeros((2, 2)))


def adjacency_entropy_gap_max(count=200, seed=0):
    g = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(count):
        m, n = g.integers(1, 13, 2)
        R = random_bipartite(int(m), int(n), g.uniform(0.1, 0.8), g)
        worst = max(worst, thermo.theorem1_delta_S(R))
    return worst


def test_adjacency_entropy_gap_property():
    assert adjacency_entropy_gap_max() <= 1e-9


def multilayer_fraction(count=50, K=4, seed=0):
    g = np.random.default_rng(seed)
    ok = 0
    for _ in range(count):
        R = random_bipartite(int(g.integers(3, 12)), int(g.integers(3, 12)), 0.35, g)
        seq = thermo.multilayer_entropy_probe(R, K)
        ok += all(b >= a - 1e-9 for a, b in zip(seq, seq[1:]))
    return ok / count


def test_multilayer_probe():
    R = np.array([[1, 1, 0, 1]])
    seq = thermo.multilayer_entropy_probe(R, 4)
    assert np.allclose(seq, seq[0]) and abs(seq[0] - math.log(3)) < 1e-12
    R2 = random_bipartite(6, 8, 0.4, np.random.default_rng(3))
    mats = matrices_from_binary(R2)
    bar = mats.R_bar.toarray()
    assert abs(thermo.multilayer_entropy_probe(R2, 1)[0] - thermo.entropy(bar / bar.sum(1, keepdims=True))) < 1e-12
    assert multilayer_fraction() >= 0.95
    with pytest.raises(ValueError):
        thermo.multilayer_entropy_probe(R, 0)


def test_pilot_report_and_csv(tmp_path, rng):
    R = random_bipartite(4, 6, 0.5, rng)
    P = matrices_from_binary(R).R_hat.toarray()
    same = thermo.pilot_report(P, P, P, R)
    assert same[1].dU == 0 and same[1].dS == 0
    sharper = P ** 2
    sharper /= sharper.sum(1, keepdims=True)
    flat = np.full_like(P, 1 / 6)
    rep = thermo.pilot_report(flat, sharper, P, R, label="x")
    assert rep[1].dS < 0 and rep[1].phase == "x:after"
    other = thermo.pilot_report(flat, P, P, R)
    assert thermo.delta_ratio(rep[1], other[1]) > 0
    path = tmp_path / "thermo_report.csv"
    thermo.write_reports(rep, path, fingerprint="abc")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config abc" and lines[1] == "phase,U,S,dU,dS" and len(lines) == 4


def test_diagnostics_are_pure(rng):
    R = random_bipartite(7, 9, 0.3, rng)
    assert thermo.theorem1_delta_S(R) == thermo.theorem1_delta_S(R.copy())
