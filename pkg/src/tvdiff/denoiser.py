"""Anisotropic denoiser: a user-state branch and a graph-propagated item branch.

    h  = tanh(x_t W_I + e_t)            [B x d]
    H  = tanh(R̄ᵀ W_U)                  [n x d]
    x̃  = h Hᵀ                           [B x n]
    r̂' = x̃ / ‖x̃‖₁                       row-wise

Gradients are derived by hand; :func:`backward` mirrors :func:`forward`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import NoiseSchedule, forward_sample, mask_scores, posterior_coefficients

DEGENERATE_NORM = 1e-12


@dataclass
class DenoiserParams:
    W_I: np.ndarray
    W_U: np.ndarray
    E_time: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int, int]:
        """(m, n, T, d)."""
        return self.W_U.shape[0], self.W_I.shape[0], self.E_time.shape[0] - 1, self.W_I.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W_I": self.W_I, "W_U": self.W_U, "E_time": self.E_time}

    def copy(self) -> "DenoiserParams":
        return DenoiserParams(self.W_I.copy(), self.W_U.copy(), self.E_time.copy())


@dataclass
class DenoiserCache:
    xt: np.ndarray
    t: np.ndarray
    pre_h: np.ndarray
    h: np.ndarray
    pre_H: np.ndarray
    H: np.ndarray
    scores: np.ndarray
    norms: np.ndarray
    degenerate: np.ndarray


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_params(m: int, n: int, T: int, d: int = 64, seed: int = 0) -> DenoiserParams:
    if min(m, n, d) < 1 or T < 1:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    return DenoiserParams(
        W_I=xavier_uniform(rng, n, d),
        W_U=xavier_uniform(rng, m, d),
        E_time=xavier_uniform(rng, T + 1, d),
    )


def item_branch(R_bar, params: DenoiserParams) -> tuple[np.ndarray, np.ndarray]:
    """Return (R̄ᵀ W_U, tanh(R̄ᵀ W_U)); independent of x_t and t."""
    pre_H = np.asarray(R_bar.T @ params.W_U)
    return pre_H, np.tanh(pre_H)


def _check_shapes(xt, t, R_bar, params):
    m, n, T, d = params.shape
    if xt.ndim != 2 or xt.shape[1] != n:
        raise ValueError(f"x_t must be [B x {n}], got {xt.shape}")
    if R_bar.shape != (m, n):
        raise ValueError(f"R_bar must be [{m} x {n}], got {R_bar.shape}")
    if t.shape != (xt.shape[0],):
        raise ValueError("need exactly one timestep per row")
    if np.any(t < 0) or np.any(t > T):
        raise ValueError(f"timestep out of range [0, {T}]")


def forward(xt, t, R_bar, params: DenoiserParams, item=None):
    """Predict x̂_0 for a batch.

    Returns ``(scores, normalized, cache)``. ``item`` may carry a
    precomputed :func:`item_branch` result to share across batches.
    Rows whose L1 norm falls below 1e-12 are returned unnormalized and
    flagged in ``cache.degenerate``.
    """
    xt = np.atleast_2d(np.asarray(xt, dtype=np.float64))
    t = np.broadcast_to(np.asarray(t, dtype=np.int64), (xt.shape[0],)).copy()
    _check_shapes(xt, t, R_bar, params)
    pre_H, H = item if item is not None else item_branch(R_bar, params)
    pre_h = xt @ params.W_I + params.E_time[t]
    h = np.tanh(pre_h)
    scores = h @ H.T
    norms = np.abs(scores).sum(axis=1)
    degenerate = norms < DEGENERATE_NORM
    safe = np.where(degenerate, 1.0, norms)
    normalized = scores / safe[:, None]
    cache = DenoiserCache(xt, t, pre_h, h, pre_H, H, scores, norms, degenerate)
    return scores, normalized, cache


def backward(cache: DenoiserCache, grad_normalized, params: DenoiserParams, R_bar) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. W_I, W_U, E_time given dL/dr̂'."""
    g = np.asarray(grad_normalized, dtype=np.float64)
    if g.shape != cache.scores.shape:
        raise ValueError(f"upstream gradient shape {g.shape} does not match cache {cache.scores.shape}")
    m, n, T, d = params.shape
    if cache.h.shape[1] != d or cache.H.shape != (n, d):
        raise ValueError("stale cache: parameter shapes changed since forward")

    # through r̂' = x̃ / Σ|x̃|;  sign(0) := 0
    N = np.where(cache.degenerate, 1.0, cache.norms)[:, None]
    dot = np.einsum("ij,ij->i", g, cache.scores)[:, None]
    g_scores = g / N - np.sign(cache.scores) * dot / (N * N)
    g_scores[cache.degenerate] = g[cache.degenerate]

    g_h = g_scores @ cache.H
    g_H = g_scores.T @ cache.h
    g_pre_h = g_h * (1.0 - cache.h * cache.h)
    g_pre_H = g_H * (1.0 - cache.H * cache.H)

    grad_W_I = cache.xt.T @ g_pre_h
    grad_E = np.zeros_like(params.E_time)
    np.add.at(grad_E, cache.t, g_pre_h)
    grad_W_U = np.asarray(R_bar @ g_pre_H)
    return {"W_I": grad_W_I, "W_U": grad_W_U, "E_time": grad_E}


def reconstruct(x0, R_bar, params: DenoiserParams, schedule: NoiseSchedule, rng=None, train_mask=None, chunk: int = 512):
    """Run the full reverse chain and return x̃_0 scores.

    Equivalent to ``diffusion.reverse_trajectory`` with this denoiser, but
    the chain is carried in the d-dimensional pre-activation space: since
    x_{t-1} = c0·x̂_0 + ct·x_t is linear, x_{t-1} W_I = c0·(h Hᵀ W_I)/‖x̃‖₁ + ct·x_t W_I.
    Only the row L1 norm requires the full item dimension per step.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    if x0.shape[1] != params.W_I.shape[0]:
        raise ValueError("x0 width does not match the item count")
    if schedule.T != params.E_time.shape[0] - 1:
        raise ValueError("schedule T does not match the time embedding")
    T = schedule.T
    _, H = item_branch(R_bar, params)
    HtW = H.T @ params.W_I  # [d x d]
    out = np.empty_like(x0)
    for start in range(0, x0.shape[0], chunk):
        block = x0[start:start + chunk]
        if schedule.s > 0:
            if rng is None:
                raise ValueError("an rng is required when s > 0")
            xT = forward_sample(block, T, schedule, rng)
        else:
            xT = np.sqrt(schedule.alpha_bar[T - 1]) * block
        z = xT @ params.W_I
        for t in range(T, 1, -1):
            h = np.tanh(z + params.E_time[t])
            norms = np.abs(h @ H.T).sum(axis=1)
            norms = np.where(norms < DEGENERATE_NORM, 1.0, norms)
            c0, ct = posterior_coefficients(t, schedule)
            z = float(c0) * (h @ HtW) / norms[:, None] + float(ct) * z
        h = np.tanh(z + params.E_time[1])
        scores = h @ H.T
        norms = np.abs(scores).sum(axis=1)
        norms = np.where(norms < DEGENERATE_NORM, 1.0, norms)
        out[start:start + chunk] = scores / norms[:, None]
    return mask_scores(out, train_mask)


def denoise_fn(R_bar, params: DenoiserParams):
    """Adapter exposing the normalized prediction as ``f(x_t, t)``."""
    item = item_branch(R_bar, params)

    def f(xt, t):
        _, normalized, _ = forward(xt, t, R_bar, params, item=item)
        return normalized

    return f
