"""Interaction ingestion, per-user train/test splitting and bipartite matrices."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
import scipy.sparse as sp

FORMATS = ("tsv_pair", "tsv_rated")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionRecord:
    user_id: str
    item_id: str
    rating: float | None = None


@dataclass(frozen=True)
class InteractionDataset:
    m: int
    n: int
    train_items: tuple  # per-user sorted int64 arrays
    test_items: tuple
    user_degree: np.ndarray
    item_degree: np.ndarray
    user_ids: tuple = field(default=())
    item_ids: tuple = field(default=())
    seed: int = 0
    ratio: float = 0.8

    @property
    def n_train(self) -> int:
        return int(self.user_degree.sum())

    @property
    def n_test(self) -> int:
        return int(sum(len(t) for t in self.test_items))

    def user_index(self, user_id: Hashable) -> int:
        return self._user_map()[user_id]

    def item_index(self, item_id: Hashable) -> int:
        return self._item_map()[item_id]

    def _user_map(self):
        return {u: i for i, u in enumerate(self.user_ids)}

    def _item_map(self):
        return {it: i for i, it in enumerate(self.item_ids)}

    def train_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        users = np.repeat(np.arange(self.m), [len(t) for t in self.train_items])
        items = np.concatenate(self.train_items) if self.m else np.empty(0, np.int64)
        return users.astype(np.int64), items.astype(np.int64)

    def test_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        users = np.repeat(np.arange(self.m), [len(t) for t in self.test_items])
        items = np.concatenate(self.test_items) if self.m else np.empty(0, np.int64)
        return users.astype(np.int64), items.astype(np.int64)


@dataclass(frozen=True)
class BipartiteMatrices:
    R: sp.csr_matrix
    R_hat: sp.csr_matrix
    R_bar: sp.csr_matrix


def load_interactions(path: str | os.PathLike, format: str = "tsv_pair") -> list[InteractionRecord]:
    """Parse a UTF-8 TSV file of ``user<TAB>item[<TAB>rating]`` lines.

    Lines starting with ``#`` and blank lines are skipped. Raises
    :class:`DatasetError` with the 1-based line number on malformed input.
    """
    if format not in FORMATS:
        raise DatasetError(f"unknown format {format!r}, expected one of {FORMATS}")
    want = 2 if format == "tsv_pair" else 3
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != want:
                raise DatasetError(f"{path}:{lineno}: expected {want} tab-separated fields, got {len(parts)}")
            user, item = parts[0].strip(), parts[1].strip()
            if not user or not item:
                raise DatasetError(f"{path}:{lineno}: empty user or item token")
            rating = None
            if want == 3:
                try:
                    rating = float(parts[2])
                except ValueError:
                    raise DatasetError(f"{path}:{lineno}: rating {parts[2]!r} is not a number") from None
                if not math.isfinite(rating):
                    raise DatasetError(f"{path}:{lineno}: rating is not finite")
            records.append(InteractionRecord(user, item, rating))
    if not records:
        raise DatasetError(f"{path}: no interactions found")
    return records


def _binarize(records: Sequence[InteractionRecord]):
    # explicit non-positive ratings are not interactions
    user_map: dict = {}
    item_map: dict = {}
    per_user: list[set] = []
    for rec in records:
        if rec.rating is not None and rec.rating <= 0:
            continue
        u = user_map.setdefault(rec.user_id, len(user_map))
        i = item_map.setdefault(rec.item_id, len(item_map))
        if u == len(per_user):
            per_user.append(set())
        per_user[u].add(i)
    return user_map, item_map, per_user


def split_dataset(records: Sequence[InteractionRecord], ratio: float = 0.8, seed: int = 0) -> InteractionDataset:
    """Binarize ``records`` and split each user's items into train/test.

    Every user is partitioned independently: ``round((1 - ratio) * k)`` of
    their ``k`` items go to test, but at least one item always stays in train.
    """
    if not 0.0 < ratio < 1.0:
        raise DatasetError(f"ratio must lie in (0, 1), got {ratio}")
    user_map, item_map, per_user = _binarize(records)
    total = sum(len(s) for s in per_user)
    if total < 2:
        raise DatasetError(f"need at least 2 interactions to split, got {total}")

    rng = np.random.default_rng(seed)
    m, n = len(user_map), len(item_map)
    train, test = [], []
    for items in per_user:
        arr = np.array(sorted(items), dtype=np.int64)
        k = len(arr)
        n_test = int(math.floor((1.0 - ratio) * k + 0.5))
        n_test = min(n_test, k - 1)
        perm = rng.permutation(k)
        test.append(np.sort(arr[perm[:n_test]]))
        train.append(np.sort(arr[perm[n_test:]]))

    user_degree = np.array([len(t) for t in train], dtype=np.int64)
    item_degree = np.bincount(np.concatenate(train), minlength=n).astype(np.int64)
    return InteractionDataset(
        m=m,
        n=n,
        train_items=tuple(train),
        test_items=tuple(test),
        user_degree=user_degree,
        item_degree=item_degree,
        user_ids=tuple(user_map),
        item_ids=tuple(item_map),
        seed=seed,
        ratio=ratio,
    )


def dataset_from_lists(train_items, test_items, n: int | None = None, seed: int = 0, ratio: float = 0.8) -> InteractionDataset:
    """Assemble a dataset directly from internal-index item lists."""
    train = tuple(np.unique(np.asarray(t, dtype=np.int64)) for t in train_items)
    test = tuple(np.unique(np.asarray(t, dtype=np.int64)) for t in test_items)
    if len(train) != len(test):
        raise DatasetError("train and test lists must cover the same users")
    for u, (tr, te) in enumerate(zip(train, test)):
        if np.intersect1d(tr, te).size:
            raise DatasetError(f"user {u}: train and test overlap")
    if n is None:
        seen = [a.max() for a in train + test if len(a)]
        n = int(max(seen)) + 1 if seen else 0
    for arr in train + test:
        if len(arr) and (arr[0] < 0 or arr[-1] >= n):
            raise DatasetError("item index out of range")
    m = len(train)
    user_degree = np.array([len(t) for t in train], dtype=np.int64)
    flat = np.concatenate(train) if m else np.empty(0, np.int64)
    item_degree = np.bincount(flat, minlength=n).astype(np.int64)
    return InteractionDataset(
        m=m, n=n, train_items=train, test_items=test,
        user_degree=user_degree, item_degree=item_degree,
        user_ids=tuple(range(m)), item_ids=tuple(range(n)),
        seed=seed, ratio=ratio,
    )


def interaction_matrix(m: int, n: int, item_lists) -> sp.csr_matrix:
    rows = np.repeat(np.arange(m), [len(t) for t in item_lists])
    cols = np.concatenate(item_lists) if m else np.empty(0, np.int64)
    data = np.ones(len(cols), dtype=np.float64)
    R = sp.csr_matrix((data, (rows, cols)), shape=(m, n))
    R.sum_duplicates()
    R.data[:] = 1.0
    return R


def _inverse(values: np.ndarray, power: float) -> np.ndarray:
    out = np.zeros(len(values), dtype=np.float64)
    nz = values > 0
    out[nz] = values[nz].astype(np.float64) ** (-power)
    return out


def build_matrices(dataset: InteractionDataset) -> BipartiteMatrices:
    """Binary R, row-stochastic R_hat = D_U^-1 R and R_bar = D_U^-1/2 R D_I^-1/2."""
    R = interaction_matrix(dataset.m, dataset.n, dataset.train_items)
    return matrices_from_binary(R)


def matrices_from_binary(R) -> BipartiteMatrices:
    R = sp.csr_matrix(R, dtype=np.float64)
    R.eliminate_zeros()
    R.data[:] = 1.0
    du = np.asarray(R.sum(axis=1)).ravel()
    di = np.asarray(R.sum(axis=0)).ravel()
    coo = R.tocoo()
    hat = 1.0 / du[coo.row]
    # zero-degree items never appear among stored entries, so no 1/0 here
    bar = 1.0 / np.sqrt(du[coo.row] * di[coo.col])
    R_hat = sp.csr_matrix((hat, (coo.row, coo.col)), shape=R.shape)
    R_bar = sp.csr_matrix((bar, (coo.row, coo.col)), shape=R.shape)
    return BipartiteMatrices(R=R, R_hat=R_hat, R_bar=R_bar)


def holdout_validation(dataset: InteractionDataset, fraction: float = 0.05, seed: int = 0) -> tuple[InteractionDataset, tuple]:
    """Carve ``ceil(fraction * k)`` train items per user (k >= 3) into a validation fold.

    Returns the reduced training dataset (test lists untouched) and the
    per-user validation item arrays.
    """
    rng = np.random.default_rng(seed)
    fit, val = [], []
    for items in dataset.train_items:
        k = len(items)
        n_val = int(math.ceil(fraction * k)) if k >= 3 else 0
        perm = rng.permutation(k)
        val.append(np.sort(items[perm[:n_val]]))
        fit.append(np.sort(items[perm[n_val:]]))
    reduced = dataset_from_lists(fit, dataset.test_items, n=dataset.n, seed=dataset.seed, ratio=dataset.ratio)
    reduced = InteractionDataset(
        m=reduced.m, n=reduced.n, train_items=reduced.train_items, test_items=reduced.test_items,
        user_degree=reduced.user_degree, item_degree=reduced.item_degree,
        user_ids=dataset.user_ids, item_ids=dataset.item_ids, seed=dataset.seed, ratio=dataset.ratio,
    )
    return reduced, tuple(val)


# -- split artifacts ---------------------------------------------------------

def write_split(dataset: InteractionDataset, outdir: str | os.PathLike) -> list[str]:
    """Write ``train.tsv``, ``test.tsv`` (internal indices) and ``meta``."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for name, lists in (("train.tsv", dataset.train_items), ("test.tsv", dataset.test_items)):
        path = os.path.join(outdir, name)
        with open(path, "w", encoding="utf-8") as fh:
            for u, items in enumerate(lists):
                for i in items:
                    fh.write(f"{u}\t{int(i)}\n")
        paths.append(path)
    meta = os.path.join(outdir, "meta")
    with open(meta, "w", encoding="utf-8") as fh:
        fh.write(f"m = {dataset.m}\n")
        fh.write(f"n = {dataset.n}\n")
        fh.write(f"train_interactions = {dataset.n_train}\n")
        fh.write(f"test_interactions = {dataset.n_test}\n")
        fh.write(f"interactions = {dataset.n_train + dataset.n_test}\n")
        fh.write(f"seed = {dataset.seed}\n")
        fh.write(f"ratio = {dataset.ratio!r}\n")
        fh.write("split = per_user\n")
    paths.append(meta)
    return paths


def read_meta(path: str | os.PathLike) -> dict:
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    return meta


def read_split(outdir: str | os.PathLike) -> InteractionDataset:
    meta = read_meta(os.path.join(outdir, "meta"))
    m, n = int(meta["m"]), int(meta["n"])
    lists = {}
    for name in ("train.tsv", "test.tsv"):
        per_user: list[list[int]] = [[] for _ in range(m)]
        with open(os.path.join(outdir, name), encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    u, i = (int(x) for x in line.split("\t"))
                except ValueError:
                    raise DatasetError(f"{name}:{lineno}: malformed split line") from None
                per_user[u].append(i)
        lists[name] = per_user
    return dataset_from_lists(
        lists["train.tsv"], lists["test.tsv"], n=n,
        seed=int(meta.get("seed", 0)), ratio=float(meta.get("ratio", 0.8)),
    )
