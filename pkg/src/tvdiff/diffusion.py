"""Linear noise schedule, closed-form forward corruption and the deterministic reverse chain."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    T: int
    s: float
    beta_min: float
    beta_max: float
    beta: np.ndarray       # index t-1 holds beta_t
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def alpha_bar_at(self, t):
        """ᾱ_t with the convention ᾱ_0 = 1."""
        t = np.asarray(t)
        padded = np.concatenate(([1.0], self.alpha_bar))
        return padded[t]


def build_schedule(T: int, s: float, beta_min: float, beta_max: float) -> NoiseSchedule:
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    if not (0.0 < beta_min <= beta_max < 1.0):
        raise ValueError(f"need 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})")
    if s < 0:
        raise ValueError(f"noise scale s must be >= 0, got {s}")
    T = int(T)
    frac = np.arange(T, dtype=np.float64) / max(T - 1, 1)
    beta = beta_min + frac * (beta_max - beta_min)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    for arr in (beta, alpha, alpha_bar):
        arr.setflags(write=False)
    return NoiseSchedule(T, float(s), float(beta_min), float(beta_max), beta, alpha, alpha_bar)


def forward_sample(x0: np.ndarray, t, schedule: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """Draw x_t ~ q(x_t | x_0) = N(√ᾱ_t x_0, s²(1-ᾱ_t) I).

    ``x0`` may be a single row or a batch; ``t`` a scalar or one step per row.
    No random numbers are consumed when ``s == 0``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    t = np.asarray(t)
    if np.any(t < 1) or np.any(t > schedule.T):
        raise ValueError(f"timestep out of range [1, {schedule.T}]")
    ab = schedule.alpha_bar_at(t)
    if x0.ndim == 2 and ab.ndim == 1:
        ab = ab[:, None]
    mean = np.sqrt(ab) * x0
    if schedule.s == 0:
        return mean
    noise = rng.standard_normal(x0.shape)
    return mean + schedule.s * np.sqrt(1.0 - ab) * noise


def posterior_coefficients(t, schedule: NoiseSchedule) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (c0, ct) of the posterior mean μ̃ = c0·x̂_0 + ct·x_t.

    For t = 1 the posterior collapses onto x̂_0, i.e. (1, 0).
    """
    t = np.asarray(t)
    if np.any(t < 1) or np.any(t > schedule.T):
        raise ValueError(f"timestep out of range [1, {schedule.T}]")
    ab_t = schedule.alpha_bar_at(t)
    ab_prev = schedule.alpha_bar_at(t - 1)
    beta_t = schedule.beta[t - 1]
    alpha_t = schedule.alpha[t - 1]
    c0 = np.sqrt(ab_prev) * beta_t / (1.0 - ab_t)
    ct = np.sqrt(alpha_t) * (1.0 - ab_prev) / (1.0 - ab_t)
    last = t == 1
    c0 = np.where(last, 1.0, c0)
    ct = np.where(last, 0.0, ct)
    return c0, ct


def posterior_step(xt: np.ndarray, x0_hat: np.ndarray, t, schedule: NoiseSchedule) -> np.ndarray:
    c0, ct = posterior_coefficients(t, schedule)
    xt = np.asarray(xt, dtype=np.float64)
    x0_hat = np.asarray(x0_hat, dtype=np.float64)
    if np.ndim(t) == 0:
        if int(t) == 1:
            return x0_hat.copy()
        return float(c0) * x0_hat + float(ct) * xt
    if xt.ndim == 2:
        c0, ct = c0[:, None], ct[:, None]
    return c0 * x0_hat + ct * xt


def reverse_trajectory(
    x0: np.ndarray,
    schedule: NoiseSchedule,
    denoise: Callable[[np.ndarray, int], np.ndarray],
    rng: np.random.Generator | None = None,
    train_mask=None,
) -> np.ndarray:
    """Corrupt ``x0`` to x_T and walk the posterior mean back to x̃_0.

    ``denoise(x_t, t)`` must return the x̂_0 prediction for the batch.
    Entries flagged by ``train_mask`` (dense bool or sparse) are set to -inf
    in the returned scores so they can never be ranked.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    T = schedule.T
    if schedule.s > 0:
        if rng is None:
            raise ValueError("an rng is required when s > 0")
        xt = forward_sample(x0, T, schedule, rng)
    else:
        xt = np.sqrt(schedule.alpha_bar[T - 1]) * x0
    for t in range(T, 0, -1):
        x0_hat = denoise(xt, t)
        xt = posterior_step(xt, x0_hat, t, schedule)
    return mask_scores(xt, train_mask)


def mask_scores(scores: np.ndarray, train_mask) -> np.ndarray:
    if train_mask is None:
        return scores
    out = np.array(scores, dtype=np.float64, copy=True)
    if hasattr(train_mask, "tocoo"):
        coo = train_mask.tocoo()
        out[coo.row, coo.col] = -np.inf
    else:
        out[np.asarray(train_mask, dtype=bool)] = -np.inf
    return out
