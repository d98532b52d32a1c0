import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from tvdiff.dataset import (
    DatasetError, InteractionRecord, build_matrices, dataset_from_lists, holdout_validation,
    load_interactions, matrices_from_binary, read_split, split_dataset, write_split,
)


def _write(tmp_path, text, name="data.tsv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_two_pairs(tmp_path):
    recs = load_interactions(_write(tmp_path, "u1\ti1\nu1\ti2\n"))
    assert [(r.user_id, r.item_id) for r in recs] == [("u1", "i1"), ("u1", "i2")]


def test_load_skips_comments_and_blanks(tmp_path):
    recs = load_interactions(_write(tmp_path, "# header\n\nu1\ti1\n  \nu2\ti1\n"))
    assert len(recs) == 2


def test_malformed_line_reports_line_number(tmp_path):
    path = _write(tmp_path, "u1\ti1\nu1\t\t\n")
    with pytest.raises(DatasetError, match=":2:"):
        load_interactions(path)


def test_empty_token_rejected(tmp_path):
    with pytest.raises(DatasetError, match=":1:"):
        load_interactions(_write(tmp_path, "u1\t\n"))


def test_empty_file_rejected(tmp_path):
    with pytest.raises(DatasetError):
        load_interactions(_write(tmp_path, "# nothing\n"))


def test_rated_format_and_binarization(tmp_path):
    path = _write(tmp_path, "a\tx\t5\na\ty\t0\nb\tx\t2.5\nb\tz\t1\n")
    recs = load_interactions(path, "tsv_rated")
    assert recs[1].rating == 0.0
    ds = split_dataset(recs, ratio=0.5, seed=0)
    # the zero rating is not an interaction, so item y never receives an index
    assert ds.n == 2 and ds.n_train + ds.n_test == 3


def test_rating_must_be_numeric(tmp_path):
    with pytest.raises(DatasetError, match=":1:"):
        load_interactions(_write(tmp_path, "a\tx\tgood\n"), "tsv_rated")


def test_duplicates_collapse():
    recs = [InteractionRecord("u", "a"), InteractionRecord("u", "a"), InteractionRecord("u", "b")]
    ds = split_dataset(recs, seed=0)
    assert ds.n_train + ds.n_test == 2


def test_ten_items_split_eight_two():
    recs = [InteractionRecord("u", f"i{k}") for k in range(10)]
    ds = split_dataset(recs, ratio=0.8, seed=0)
    assert len(ds.train_items[0]) == 8 and len(ds.test_items[0]) == 2


def test_single_interaction_users_stay_in_train():
    recs = [InteractionRecord(f"u{k}", f"i{k % 7}") for k in range(40)]
    recs += [InteractionRecord("heavy", f"i{k}") for k in range(7)]
    ds = split_dataset(recs, ratio=0.8, seed=3)
    for u in range(40):
        assert len(ds.train_items[u]) == 1 and len(ds.test_items[u]) == 0


def test_too_few_interactions():
    with pytest.raises(DatasetError):
        split_dataset([InteractionRecord("u", "a")])


def test_split_deterministic_and_disjoint(small_dataset):
    from tvdiff.synthetic import latent_corpus

    again = split_dataset(latent_corpus(60, 90, per_user=10, rank=3, seed=7), ratio=0.8, seed=0)
    for a, b in zip(small_dataset.train_items, again.train_items):
        assert np.array_equal(a, b)
    for tr, te in zip(small_dataset.train_items, small_dataset.test_items):
        assert not np.intersect1d(tr, te).size
    assert small_dataset.user_degree.sum() == small_dataset.n_train
    assert small_dataset.item_degree.sum() == small_dataset.n_train


def test_id_round_trip(small_dataset):
    ds = small_dataset
    assert len(set(ds.user_ids)) == ds.m and len(set(ds.item_ids)) == ds.n
    for k, uid in enumerate(ds.user_ids):
        assert ds.user_index(uid) == k


def test_matrices_hand_example():
    mats = matrices_from_binary(np.array([[1, 1, 0], [0, 1, 0]]))
    assert np.allclose(mats.R_hat.toarray(), [[0.5, 0.5, 0], [0, 1, 0]], atol=0, rtol=0)
    assert mats.R_bar[0, 1] == 0.5
    # item 2 has no train interaction: its column is all zero
    assert mats.R_bar[:, 2].nnz == 0


def test_matrices_against_dense_oracle(rng):
    R = (rng.random((8, 12)) < 0.3).astype(float)
    R[0, 0] = 1.0
    mats = matrices_from_binary(R)
    du, di = R.sum(1), R.sum(0)
    inv_u = np.where(du > 0, 1 / np.sqrt(np.where(du > 0, du, 1)), 0)
    inv_i = np.where(di > 0, 1 / np.sqrt(np.where(di > 0, di, 1)), 0)
    oracle = np.diag(inv_u) @ R @ np.diag(inv_i)
    assert np.allclose(mats.R_bar.toarray(), oracle, rtol=1e-15, atol=0)
    hat = mats.R_hat.toarray()
    assert np.allclose(hat.sum(1)[du > 0], 1.0, atol=1e-12)
    for M in (mats.R_hat, mats.R_bar):
        assert (M != 0).toarray().tolist() == (R != 0).tolist()


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(2, 10), st.integers(0, 10_000))
def test_r_bar_entries_times_degrees_is_one(m, n, seed):
    g = np.random.default_rng(seed)
    R = (g.random((m, n)) < 0.4).astype(float)
    if R.sum() == 0:
        R[0, 0] = 1
    mats = matrices_from_binary(R)
    du, di = R.sum(1), R.sum(0)
    coo = mats.R_bar.tocoo()
    assert np.allclose(coo.data * np.sqrt(du[coo.row] * di[coo.col]), 1.0, rtol=1e-14)


def test_build_matrices_uses_train_only(small_dataset):
    mats = build_matrices(small_dataset)
    assert sp.issparse(mats.R) and mats.R.nnz == small_dataset.n_train


def test_holdout_validation_rule():
    ds = dataset_from_lists([list(range(40)), [0, 1], [2, 3, 4]], [[], [5], []], n=50)
    fit, val = holdout_validation(ds, 0.05, seed=0)
    assert [len(v) for v in val] == [2, 0, 1]
    assert fit.test_items[1].tolist() == [5]
    for u in range(3):
        merged = np.sort(np.concatenate([fit.train_items[u], val[u]]))
        assert np.array_equal(merged, ds.train_items[u])


def test_split_artifact_round_trip(tmp_path, small_dataset):
    paths = write_split(small_dataset, tmp_path)
    assert sorted(p.rsplit("/", 1)[-1] for p in paths) == ["meta", "test.tsv", "train.tsv"]
    back = read_split(tmp_path)
    assert (back.m, back.n) == (small_dataset.m, small_dataset.n)
    for a, b in zip(back.train_items + back.test_items, small_dataset.train_items + small_dataset.test_items):
        assert np.array_equal(a, b)
