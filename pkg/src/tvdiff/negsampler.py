"""Acceptance-rejection negative sampling with timestep-tempered Gumbel draws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

STRATEGIES = ("ar_gsp", "rns", "sublinear")
SUBLINEAR_EXPONENT = 0.75

# dataset-size presets for the negative factor
GAMMA_PRESETS = {"default": 0.05, "small": 0.5, "large": 0.2}


@dataclass(frozen=True)
class NegSamplerConfig:
    gamma: float = 0.05
    lam: float = 3.0
    epsilon: float = 1e-10
    strategy: str = "ar_gsp"

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")


@dataclass(frozen=True)
class NegativeDraw:
    user: int
    positive: int
    negative: int
    draw_prob: float
    timestep: int


@dataclass
class NegativeBatch:
    """Columnar form of many :class:`NegativeDraw` records.

    ``rows`` indexes the batch matrix the draws were computed from.
    """

    rows: np.ndarray
    users: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray
    probs: np.ndarray
    timesteps: np.ndarray

    def __len__(self):
        return len(self.rows)

    def records(self) -> list[NegativeDraw]:
        return [
            NegativeDraw(int(u), int(p), int(n), float(q), int(t))
            for u, p, n, q, t in zip(self.users, self.positives, self.negatives, self.probs, self.timesteps)
        ]


def accepted_count(gamma: float, n: int) -> int:
    """⌈γ·n⌉, robust to binary rounding of the product."""
    return max(1, math.ceil(round(gamma * n, 9)))


def _accepted_mask(scores: np.ndarray, free: np.ndarray, k: int) -> np.ndarray:
    """Top-k free entries per row by descending score, ties to the lower index."""
    B, n = scores.shape
    masked = np.where(free, scores, -np.inf)
    n_free = free.sum(axis=1)
    accepted = np.zeros((B, n), dtype=bool)
    if k >= n:
        return free.copy()
    kth = -np.partition(-masked, k - 1, axis=1)[:, k - 1]
    above = masked > kth[:, None]
    tie = (masked == kth[:, None]) & free
    need = k - above.sum(axis=1)
    take_tie = tie & (np.cumsum(tie, axis=1) <= need[:, None])
    accepted = above | take_tie
    short = n_free <= k
    accepted[short] = free[short]
    return accepted


def ar_distribution_batch(scores, train_mask, gamma: float, epsilon: float = 1e-10):
    """Row-wise acceptance-rejection distribution; see :func:`ar_distribution`."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    train = np.atleast_2d(np.asarray(train_mask, dtype=bool))
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    free = ~train
    if np.any(free.sum(axis=1) == 0):
        raise ValueError("a user has interacted with every item; no negatives exist")
    n = scores.shape[1]
    k = accepted_count(gamma, n)
    accepted = _accepted_mask(scores, free, k)
    p = np.where(accepted, 1.0 / k, np.where(free, epsilon, 0.0))
    return p / p.sum(axis=1, keepdims=True), accepted


def ar_distribution(scores, train_mask, gamma: float, epsilon: float = 1e-10) -> np.ndarray:
    """Negative distribution over items for one user.

    Non-train items are ranked by descending score; the first ⌈γ·n⌉ receive
    mass 1/⌈γ·n⌉, the rest ε, train items 0, then the row is renormalized.
    """
    p, _ = ar_distribution_batch(np.asarray(scores)[None, :], np.asarray(train_mask)[None, :], gamma, epsilon)
    return p[0]


def tau(t, T: int, lam: float):
    """Gumbel temperature exp(-λ(1 - t/T)); equals 1 at t = T."""
    return np.exp(-lam * (1.0 - np.asarray(t, dtype=np.float64) / T))


def _safe_log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


def softmax(logits, axis=-1):
    logits = np.asarray(logits, dtype=np.float64)
    shift = np.max(logits, axis=axis, keepdims=True)
    e = np.exp(logits - shift)
    return e / e.sum(axis=axis, keepdims=True)


def tempered(p_n, temperature):
    """Noise-free tempered distribution softmax(log p_n / τ) ∝ p_n^(1/τ)."""
    return softmax(_safe_log(p_n) / temperature)


def gumbel_max(logits, rng: np.random.Generator, size=None):
    """Categorical draw(s) as argmax(logits + Gumbel(0, 1) noise)."""
    logits = np.asarray(logits, dtype=np.float64)
    shape = logits.shape if size is None else (size,) + logits.shape
    g = rng.gumbel(size=shape)
    return np.argmax(logits + g, axis=-1)


def gumbel_temper(p_n, t, T: int, lam: float, rng: np.random.Generator):
    """Timestep-tempered Gumbel softmax over one user's negative distribution.

    Returns ``(p_hat, draw)`` where ``p_hat = softmax((log p_n + g)/τ)`` for
    one Gumbel sample g and ``draw = argmax(log p_n/τ + g)``, which is an
    exact sample from softmax(log p_n / τ).
    """
    temperature = float(tau(t, T, lam))
    logp = _safe_log(np.asarray(p_n, dtype=np.float64))
    g = rng.gumbel(size=logp.shape)
    p_hat = softmax((logp + g) / temperature)
    draw = int(np.argmax(logp / temperature + g))
    return p_hat, draw


def inverse_cdf_draws(p, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` draws from the categorical ``p``; never returns a zero-mass index."""
    cdf = np.cumsum(p)
    u = rng.random(count) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    last = int(np.flatnonzero(p > 0)[-1])
    return np.minimum(idx, last)


def negative_distribution(scores, train_mask, t, T: int, config: NegSamplerConfig):
    """Per-row distribution that :func:`sample_negatives` draws from."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    train = np.atleast_2d(np.asarray(train_mask, dtype=bool))
    free = ~train
    if np.any(free.sum(axis=1) == 0):
        raise ValueError("a user has interacted with every item; no negatives exist")
    if config.strategy == "rns":
        return free / free.sum(axis=1, keepdims=True)
    if config.strategy == "sublinear":
        logits = np.where(free, SUBLINEAR_EXPONENT * scores, -np.inf)
        return softmax(logits, axis=1)
    p_n, _ = ar_distribution_batch(scores, train, config.gamma, config.epsilon)
    temps = tau(np.broadcast_to(np.asarray(t), (scores.shape[0],)), T, config.lam)
    return softmax(_safe_log(p_n) / temps[:, None], axis=1)


def sample_negatives(rows, users, positives, scores, train_mask, t, T: int, config: NegSamplerConfig, rng: np.random.Generator) -> NegativeBatch:
    """One negative per (row, positive) request.

    ``scores``/``train_mask`` are batch matrices ``[B x n]``; ``rows[k]``
    selects the batch row for request k and ``t`` holds one timestep per
    batch row. For the AR-GSP strategy each draw is the Gumbel-max of the
    tempered logits log p_n/τ(t); it is sampled here through the inverse CDF
    of the identical categorical law.
    """
    rows = np.asarray(rows, dtype=np.int64)
    users = np.asarray(users, dtype=np.int64)
    positives = np.asarray(positives, dtype=np.int64)
    t = np.broadcast_to(np.asarray(t, dtype=np.int64), (np.atleast_2d(scores).shape[0],))
    dist = negative_distribution(scores, train_mask, t, T, config)
    negatives = np.empty(len(rows), dtype=np.int64)
    order = np.argsort(rows, kind="stable")
    uniq, starts, counts = np.unique(rows[order], return_index=True, return_counts=True)
    for r, s0, c in zip(uniq, starts, counts):
        negatives[order[s0:s0 + c]] = inverse_cdf_draws(dist[r], int(c), rng)
    probs = dist[rows, negatives]
    return NegativeBatch(rows, users, positives, negatives, probs, t[rows].copy())


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
