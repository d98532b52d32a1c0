import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvdiff.evalrank import evaluate, mask_train, ndcg_at_k, recall_at_k, topk_indices, write_metrics

from oracles import recall_ndcg_oracle


def test_recall_examples():
    assert recall_at_k([3, 1, 2], {1, 2}, 3) == 1.0
    assert recall_at_k([0, 4], {1, 2}, 2) == 0.0
    b, a, c, d = 1, 0, 2, 3
    assert recall_at_k([b, a, c], {a, d}, 3) == 0.5


def test_ndcg_examples():
    assert ndcg_at_k([5, 1], {5}, 2) == 1.0
    assert abs(ndcg_at_k([1, 5], {5}, 2) - 0.63093) < 1e-5
    assert abs(ndcg_at_k([1, 5], {5}, 2) - 1 / np.log2(3)) < 1e-12


def test_empty_test_set_is_an_error():
    with pytest.raises(ValueError):
        recall_at_k([1], set(), 1)
    with pytest.raises(ValueError):
        ndcg_at_k([1], [], 1)


def metric_oracle_mismatches():
    """Compare against brute force over every ranking of a 6-item toy instance."""
    test = {1, 4}
    bad = 0
    for ranking in itertools.permutations(range(6)):
        scores = np.zeros(6)
        scores[list(ranking)] = np.arange(6, 0, -1, dtype=float)
        for k in (1, 2, 3, 6):
            res = evaluate(scores[None, :], [np.array([], dtype=int)], [np.array(sorted(test))], Ks=(k,))
            rec, nd = recall_ndcg_oracle(ranking, test, k)
            bad += res[f"recall@{k}"] != rec or abs(res[f"ndcg@{k}"] - nd) > 1e-15
            bad += recall_at_k(ranking, test, k) != rec or abs(ndcg_at_k(ranking, test, k) - nd) > 1e-15
    return bad


def test_metrics_match_brute_force():
    assert metric_oracle_mismatches() == 0


def test_perfect_scores(rng):
    m, n = 5, 30
    train = [rng.choice(n, 4, replace=False) for _ in range(m)]
    test = [np.setdiff1d(rng.choice(n, 6, replace=False), tr)[:3] for tr in train]
    scores = rng.random((m, n))
    for u in range(m):
        scores[u, train[u]] = 100.0  # would win without masking
        scores[u, test[u]] = 10.0
    res = evaluate(scores, train, test, Ks=(10, 20))
    assert all(v == 1.0 for v in res.aggregate.values())


def test_uniform_scores_match_random_ranking_expectation():
    n, k = 30, 10
    test = [np.array([2, 7, 11, 19])]
    train = [np.array([0, 1])]
    g = np.random.default_rng(0)
    recalls = []
    for _ in range(10_000):
        scores = g.random((1, n))
        recalls.append(evaluate(scores, train, test, Ks=(k,))["recall@10"])
    # each test item lands in the top 10 of the 28 candidates with probability 10/28
    assert abs(np.mean(recalls) - k / (n - 2)) < 0.01


def test_ties_break_by_index():
    assert topk_indices(np.zeros((1, 5)), 3)[0].tolist() == [0, 1, 2]
    assert topk_indices(np.array([[1.0, 2.0, 2.0, 0.0]]), 2)[0].tolist() == [1, 2]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_ranking_invariants(seed):
    g = np.random.default_rng(seed)
    m, n = 6, 25
    scores = np.round(g.normal(size=(m, n)), 1)
    train = [g.choice(n, g.integers(1, 6), replace=False) for _ in range(m)]
    test = [np.setdiff1d(g.choice(n, g.integers(0, 5), replace=False), tr) for tr in train]
    if not any(len(t) for t in test):
        test[0] = np.setdiff1d(np.arange(n), train[0])[:1]
    res = evaluate(scores, train, test, Ks=(10, 20))
    shifted = evaluate(scores + 3.5, train, test, Ks=(10, 20))
    for u, ranked in res.topk.items():
        assert not np.intersect1d(ranked, train[u]).size
        assert np.array_equal(ranked, shifted.topk[u])
    assert np.all(res.per_user[20]["recall"] >= res.per_user[10]["recall"])
    for k in (10, 20):
        nd = res.per_user[k]["ndcg"]
        assert np.all((nd >= 0) & (nd <= 1))
    assert res.users_evaluated == sum(len(t) > 0 for t in test)


def test_no_eligible_users():
    with pytest.raises(ValueError):
        evaluate(np.zeros((2, 3)), [[0], [1]], [[], []])


def test_user_subset_and_chunking(rng):
    scores = rng.random((7, 12))
    train = [rng.choice(12, 2, replace=False) for _ in range(7)]
    test = [np.setdiff1d(rng.choice(12, 3, replace=False), tr) for tr in train]
    full = evaluate(scores, train, test, chunk=2)
    part = evaluate(scores[[1, 4]], train, test, users=[1, 4])
    assert np.array_equal(full.topk[4], part.topk[4])
    assert full.aggregate == evaluate(scores, train, test).aggregate


def test_mask_train():
    out = mask_train(np.zeros((2, 3)), [[0, 2], []])
    assert np.isneginf(out[0, [0, 2]]).all() and np.isfinite(out[1]).all()


def test_metrics_csv(tmp_path, rng):
    res = evaluate(rng.random((3, 8)), [[0]] * 3, [[1, 2]] * 3)
    path = tmp_path / "metrics.csv"
    write_metrics(res, path, "tv-diff", fingerprint="abc")
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# config abc", "model,K,recall,ndcg,users_evaluated"]
    assert [l.split(",")[1] for l in lines[2:]] == ["10", "20"]
