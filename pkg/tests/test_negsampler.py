import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvdiff.negsampler import (
    NegSamplerConfig, accepted_count, ar_distribution, ar_distribution_batch, gumbel_max,
    gumbel_temper, negative_distribution, sample_negatives, tau, tempered, total_variation,
)

from oracles import ar_oracle


def test_top_three_of_ten():
    scores = np.arange(10.0)
    p = ar_distribution(scores, np.zeros(10, bool), 0.3)
    assert np.allclose(p[7:], 1 / 3, atol=1e-9)
    assert np.all(p[:7] < 1e-9) and np.all(p[:7] > 0)
    assert abs(p.sum() - 1) < 1e-12


def test_full_acceptance_is_uniform():
    train = np.array([1, 0, 0, 1, 0], bool)
    p = ar_distribution(np.random.default_rng(0).random(5), train, 1.0)
    assert np.allclose(p, [0, 1 / 3, 1 / 3, 0, 1 / 3])


@pytest.mark.parametrize("seed", range(10))
def test_accepted_set_matches_sort_and_cut(seed):
    g = np.random.default_rng(seed)
    scores = np.round(g.random(12), 1)  # coarse values force ties
    train = g.random(12) < 0.3
    gamma = g.choice([0.05, 0.1, 0.25, 0.3, 0.5])
    p, accepted = ar_distribution_batch(scores, train, gamma, 1e-10)
    ref_p, ref_set = ar_oracle(scores.tolist(), train.tolist(), gamma, 1e-10)
    assert set(np.flatnonzero(accepted[0])) == ref_set
    assert np.allclose(p[0], ref_p, rtol=1e-12, atol=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.floats(0.01, 1.0), st.integers(0, 10_000))
def test_accepted_size_is_ceiling(n, gamma, seed):
    g = np.random.default_rng(seed)
    train = g.random(n) < 0.4
    if train.all():
        train[0] = False
    _, accepted = ar_distribution_batch(g.random(n), train, gamma)
    assert accepted.sum() == min(accepted_count(gamma, n), int((~train).sum()))


def test_ceiling_is_exact_for_decimal_products():
    assert accepted_count(0.3, 10) == 3
    assert accepted_count(0.05, 17632) == 882
    assert accepted_count(0.01, 1) == 1


def test_all_train_row_is_an_error():
    with pytest.raises(ValueError):
        ar_distribution(np.ones(3), np.ones(3, bool), 0.5)


def test_tau_values():
    assert tau(50, 50, 3.0) == 1.0
    assert abs(tau(0, 50, 3.0) - math.exp(-3)) < 1e-15
    assert abs(float(tau(0, 50, 3.0)) - 0.0498) < 1e-4


def test_monotone_tempering():
    p_n = np.random.default_rng(1).dirichlet(np.ones(15))
    dists = [total_variation(tempered(p_n, tau(t, 20, 3.0)), p_n) for t in range(1, 21)]
    assert all(b <= a + 1e-15 for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 1e-12


def gumbel_tv(draws=100_000, seed=0):
    p = np.array([0.05, 0.1, 0.15, 0.2, 0.5])
    logits = np.log(p) / 0.7
    exact = tempered(p, 0.7)
    idx = gumbel_max(logits, np.random.default_rng(seed), size=draws)
    freq = np.bincount(idx, minlength=len(p)) / draws
    return total_variation(freq, exact)


def test_gumbel_max_matches_categorical():
    assert gumbel_tv() < 0.01


def test_gumbel_temper_outputs(rng):
    p_n = ar_distribution(rng.random(20), rng.random(20) < 0.2, 0.2)
    p_hat, draw = gumbel_temper(p_n, 3, 10, 3.0, rng)
    assert abs(p_hat.sum() - 1) < 1e-9 and np.all(p_hat >= 0)
    assert p_n[draw] > 0


def test_rns_uniform_over_candidates():
    train = np.array([[True, False, True, False, False]])
    dist = negative_distribution(np.zeros((1, 5)), train, 1, 1, NegSamplerConfig(strategy="rns"))
    assert np.allclose(dist[0], [0, 1 / 3, 0, 1 / 3, 1 / 3])


def test_sublinear_is_power_of_softmax(rng):
    scores = rng.normal(size=(1, 6))
    train = np.array([[False, True, False, False, False, False]])
    dist = negative_distribution(scores, train, 1, 1, NegSamplerConfig(strategy="sublinear"))
    sm = np.exp(scores[0]) / np.exp(scores[0]).sum()
    ref = np.where(train[0], 0, sm ** 0.75)
    assert np.allclose(dist[0], ref / ref.sum())


def test_cold_sampler_lands_in_accepted_set(rng):
    n = 40
    scores = rng.random((1, n))
    train = np.zeros((1, n), bool)
    train[0, :5] = True
    cfg = NegSamplerConfig(gamma=0.1, lam=20.0, epsilon=1e-3)
    _, accepted = ar_distribution_batch(scores, train, cfg.gamma, cfg.epsilon)
    draws = sample_negatives(np.zeros(20000, int), np.zeros(20000, int), np.zeros(20000, int),
                             scores, train, 1, 50, cfg, rng)
    assert accepted[0, draws.negatives].mean() > 0.999


def never_draws_train(total=1_000_000, seed=0):
    g = np.random.default_rng(seed)
    B, n, per = 50, 200, 2000
    bad = 0
    done = 0
    cfgs = [NegSamplerConfig(strategy=s, gamma=0.05) for s in ("ar_gsp", "rns", "sublinear")]
    while done < total:
        scores = g.normal(size=(B, n))
        train = g.random((B, n)) < 0.3
        rows = np.repeat(np.arange(B), per // B)
        t = g.integers(1, 51, B)
        cfg = cfgs[(done // len(rows)) % 3]
        draws = sample_negatives(rows, rows, rows, scores, train, t, 50, cfg, g)
        bad += int(train[draws.rows, draws.negatives].sum())
        done += len(rows)
    return bad


def test_never_draws_train_items():
    assert never_draws_train(total=60_000) == 0


def test_draw_records(rng):
    scores = rng.random((2, 8))
    train = np.zeros((2, 8), bool)
    train[0, 0] = train[1, 3] = True
    d = sample_negatives([0, 1, 1], [10, 11, 11], [0, 3, 3], scores, train, np.array([2, 5]), 5,
                         NegSamplerConfig(gamma=0.25), rng)
    recs = d.records()
    assert [r.user for r in recs] == [10, 11, 11]
    assert [r.timestep for r in recs] == [2, 5, 5]
    assert all(0 < r.draw_prob <= 1 for r in recs)


def test_config_validation():
    for kw in ({"gamma": 0.0}, {"gamma": 1.5}, {"lam": 0.0}, {"epsilon": 0.0}, {"strategy": "hard"}):
        with pytest.raises(ValueError):
            NegSamplerConfig(**kw)
