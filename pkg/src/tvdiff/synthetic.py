"""Seeded synthetic implicit-feedback corpora for tests and smoke runs."""

from __future__ import annotations

import numpy as np

from .dataset import InteractionRecord


def latent_corpus(m: int, n: int, per_user: float = 12.0, rank: int = 4, popularity: float = 1.0,
                  sharpness: float = 4.0, seed: int = 0) -> list[InteractionRecord]:
    """Draw interactions from a low-rank preference model with a popularity tilt.

    Each user gets ``max(2, Poisson(per_user))`` distinct items, sampled
    without replacement with probability ∝ exp(sharpness·⟨p_u, q_i⟩ + popularity·b_i).
    """
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((m, rank)) / np.sqrt(rank)
    Q = rng.standard_normal((n, rank)) / np.sqrt(rank)
    bias = popularity * rng.standard_normal(n)
    records = []
    for u in range(m):
        logits = sharpness * (Q @ P[u]) + bias
        w = np.exp(logits - logits.max())
        k = int(min(n - 1, max(2, rng.poisson(per_user))))
        items = rng.choice(n, size=k, replace=False, p=w / w.sum())
        records.extend(InteractionRecord(f"u{u}", f"i{i}") for i in sorted(items))
    return records


def random_bipartite(m: int, n: int, density: float, rng: np.random.Generator) -> np.ndarray:
    """Dense 0/1 matrix with every user and every item touched at least once."""
    R = (rng.random((m, n)) < density).astype(np.float64)
    for u in np.flatnonzero(R.sum(axis=1) == 0):
        R[u, rng.integers(n)] = 1.0
    return R
