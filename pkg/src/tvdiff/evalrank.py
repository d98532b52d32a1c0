"""Top-K ranking evaluation (Recall@K, NDCG@K) with train-item masking."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class RankingResult:
    topk: dict            # user -> ranked item array (length max K)
    per_user: dict        # K -> {"recall": array, "ndcg": array} aligned with `users`
    users: np.ndarray     # users with non-empty test sets
    aggregate: dict = field(default_factory=dict)

    @property
    def users_evaluated(self) -> int:
        return len(self.users)

    def __getitem__(self, key):
        return self.aggregate[key]


def recall_at_k(topk, test_items, k: int) -> float:
    test = set(int(i) for i in test_items)
    if not test:
        raise ValueError("empty test set; user must be excluded")
    hits = sum(1 for i in list(topk)[:k] if int(i) in test)
    return hits / len(test)


def _discounts(k):
    return 1.0 / np.log2(np.arange(2, k + 2))


def ndcg_at_k(topk, test_items, k: int) -> float:
    test = set(int(i) for i in test_items)
    if not test:
        raise ValueError("empty test set; user must be excluded")
    disc = _discounts(k)
    ranked = list(topk)[:k]
    dcg = sum(disc[r] for r, i in enumerate(ranked) if int(i) in test)
    idcg = disc[: min(k, len(test))].sum()
    return float(dcg / idcg)


def topk_indices(scores, k: int) -> list[np.ndarray]:
    """Per-row top-k by descending score, ties broken by ascending item index.

    Entries equal to -inf (masked) are never returned, so rows may come back
    shorter than k.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    n = scores.shape[1]
    k = min(k, n)
    kth = -np.partition(-scores, k - 1, axis=1)[:, k - 1]
    out = []
    for row, thr in zip(scores, kth):
        cand = np.flatnonzero((row >= thr) & np.isfinite(row))
        order = np.lexsort((cand, -row[cand]))[:k]
        out.append(cand[order])
    return out


def mask_train(scores, train_items) -> np.ndarray:
    out = np.array(scores, dtype=np.float64, copy=True)
    for u, items in enumerate(train_items):
        if len(items):
            out[u, np.asarray(items, dtype=np.int64)] = -np.inf
    return out


def evaluate(scores, train_items, test_items, Ks=(10, 20), users=None, chunk: int = 1024) -> RankingResult:
    """Rank every user's items, skipping train items, and score against test.

    ``scores`` is ``[m x n]`` or, when ``users`` is given, ``[len(users) x n]``
    rows aligned with ``users``. Users without test items are excluded.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    Ks = tuple(sorted(set(int(k) for k in Ks)))
    kmax = Ks[-1]
    if users is None:
        users = np.arange(scores.shape[0])
    users = np.asarray(users, dtype=np.int64)
    eligible = np.array([len(test_items[u]) > 0 for u in users], dtype=bool)
    if not eligible.any():
        raise ValueError("no users with test items to evaluate")
    disc = _discounts(kmax)
    topk, rec, ndcg = {}, {k: [] for k in Ks}, {k: [] for k in Ks}
    kept = []
    for start in range(0, len(users), chunk):
        block_users = users[start:start + chunk]
        block = mask_train(scores[start:start + chunk], [train_items[u] for u in block_users])
        lists = topk_indices(block, kmax)
        for u, ok, ranked in zip(block_users, eligible[start:start + chunk], lists):
            topk[int(u)] = ranked
            if not ok:
                continue
            kept.append(int(u))
            test = np.asarray(test_items[u])
            hit = np.isin(ranked, test)
            for k in Ks:
                h = hit[:k]
                rec[k].append(h.sum() / len(test))
                idcg = disc[: min(k, len(test))].sum()
                ndcg[k].append(float((disc[: len(h)] * h).sum() / idcg))
    per_user = {k: {"recall": np.array(rec[k]), "ndcg": np.array(ndcg[k])} for k in Ks}
    agg = {}
    for k in Ks:
        agg[f"recall@{k}"] = float(per_user[k]["recall"].mean())
        agg[f"ndcg@{k}"] = float(per_user[k]["ndcg"].mean())
    return RankingResult(topk=topk, per_user=per_user, users=np.array(kept), aggregate=agg)


def write_metrics(result: RankingResult, path, model: str, fingerprint: str | None = None, append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, newline="", encoding="utf-8") as fh:
        if not append:
            if fingerprint:
                fh.write(f"# config {fingerprint}\n")
            fh.write("model,K,recall,ndcg,users_evaluated\n")
        w = csv.writer(fh)
        for k in sorted(result.per_user):
            w.writerow([model, k, repr(result.aggregate[f"recall@{k}"]), repr(result.aggregate[f"ndcg@{k}"]), result.users_evaluated])
