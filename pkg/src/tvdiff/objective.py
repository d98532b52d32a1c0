"""Free-energy training objective: reconstruction energy plus a weighted entropy loss.

All losses are returned in *minimized* form together with their gradient
with respect to the normalized reconstruction r̂'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_CLAMP = 1e-12
VARIANTS = ("bce", "bpr", "nll", "none")


@dataclass(frozen=True)
class ObjectiveConfig:
    temperature_H: float = 1.0
    entropy_variant: str = "bce"
    target_mode: str = "normalized"
    bce_label_mode: str = "binary"
    paper_literal_sign: bool = False

    def __post_init__(self):
        if not self.temperature_H > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature_H}")
        if self.entropy_variant not in VARIANTS:
            raise ValueError(f"entropy_variant must be one of {VARIANTS}, got {self.entropy_variant!r}")
        if self.target_mode not in ("normalized", "binary"):
            raise ValueError(f"target_mode must be 'normalized' or 'binary', got {self.target_mode!r}")
        if self.bce_label_mode not in ("normalized", "binary"):
            raise ValueError(f"bce_label_mode must be 'normalized' or 'binary', got {self.bce_label_mode!r}")


@dataclass
class LossBreakdown:
    energy_term: float
    entropy_term: float
    total: float
    grad: np.ndarray


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def _clamped_log_sigmoid(x):
    """(log max(σ(x), 1e-12), mask of unclamped entries)."""
    raw = -np.logaddexp(0.0, -x)
    floor = np.log(LOG_CLAMP)
    return np.maximum(raw, floor), raw > floor


def energy_loss(target, recon):
    diff = np.asarray(recon, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.sum(diff * diff)), 2.0 * diff


def entropy_loss_bce(labels, recon, negative_mask, paper_literal_sign: bool = False):
    """-Σ [y·log σ(r̂') + c·(1-y)·log(1-σ(r̂'))], logs clamped at 1e-12.

    With ``paper_literal_sign`` the c-weighted term enters with the opposite
    sign, i.e. it is rewarded rather than penalised.
    """
    y = np.asarray(labels, dtype=np.float64)
    x = np.asarray(recon, dtype=np.float64)
    c = np.asarray(negative_mask, dtype=np.float64)
    grad = np.zeros(np.broadcast_shapes(x.shape, y.shape, c.shape))
    # only labelled or sampled entries contribute; skip the rest of the row
    idx = np.nonzero((y != 0) | (c != 0))
    y, x, c = (np.broadcast_to(a, grad.shape)[idx] for a in (y, x, c))
    log_p, ok_p = _clamped_log_sigmoid(x)
    log_q, ok_q = _clamped_log_sigmoid(-x)  # log(1 - σ(x)) = log σ(-x)
    sign = -1.0 if paper_literal_sign else 1.0
    weight_neg = c * (1.0 - y)
    value = -np.sum(y * log_p) - sign * np.sum(weight_neg * log_q)
    s = sigmoid(x)
    # d/dx log σ(x) = 1 - σ(x);  d/dx log σ(-x) = -σ(x)
    grad[idx] = -y * (1.0 - s) * ok_p + sign * weight_neg * s * ok_q
    return float(value), grad


def entropy_loss_bpr(recon, rows, positives, negatives):
    """Σ over (row, i+, j-) of -log σ(r̂'[row, i+] - r̂'[row, j-])."""
    x = np.asarray(recon, dtype=np.float64)
    grad = np.zeros_like(x)
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        return 0.0, grad
    pos = np.asarray(positives, dtype=np.int64)
    neg = np.asarray(negatives, dtype=np.int64)
    diff = x[rows, pos] - x[rows, neg]
    value = float(np.sum(np.logaddexp(0.0, -diff)))
    coef = -(1.0 - sigmoid(diff))
    np.add.at(grad, (rows, pos), coef)
    np.add.at(grad, (rows, neg), -coef)
    return value, grad


def log_softmax(x, axis=-1):
    x = np.asarray(x, dtype=np.float64)
    shift = x.max(axis=axis, keepdims=True)
    z = x - shift
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))


def entropy_loss_nll(recon, rows, positives):
    """-Σ log softmax_row(r̂')[i+] over positive (row, item) pairs."""
    x = np.atleast_2d(np.asarray(recon, dtype=np.float64))
    grad = np.zeros_like(x)
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        return 0.0, grad
    pos = np.asarray(positives, dtype=np.int64)
    ls = log_softmax(x, axis=1)
    value = -float(np.sum(ls[rows, pos]))
    counts = np.bincount(rows, minlength=x.shape[0]).astype(np.float64)
    grad += counts[:, None] * np.exp(ls)
    np.add.at(grad, (rows, pos), -1.0)
    return value, grad


def helmholtz_loss(config: ObjectiveConfig, target, recon, draws=None, negative_mask=None) -> LossBreakdown:
    """Minimized free-energy loss: energy + temperature_H · entropy.

    ``draws`` is a :class:`~tvdiff.negsampler.NegativeBatch` (needed by BPR,
    and by BCE unless an explicit ``negative_mask`` is given). NLL uses the
    nonzero entries of ``target`` as positives.
    """
    target = np.asarray(target, dtype=np.float64)
    energy, g_energy = energy_loss(target, recon)
    variant = config.entropy_variant
    if variant == "none":
        return LossBreakdown(energy, 0.0, energy, g_energy)
    if variant == "bce":
        labels = (target > 0).astype(np.float64) if config.bce_label_mode == "binary" else target
        if negative_mask is None:
            negative_mask = np.zeros_like(target)
            if draws is not None and len(draws):
                negative_mask[draws.rows, draws.negatives] = 1.0
        ent, g_ent = entropy_loss_bce(labels, recon, negative_mask, config.paper_literal_sign)
    elif variant == "bpr":
        if draws is None:
            raise ValueError("BPR entropy loss needs sampled (positive, negative) pairs")
        ent, g_ent = entropy_loss_bpr(recon, draws.rows, draws.positives, draws.negatives)
    else:
        rows, cols = np.nonzero(target)
        ent, g_ent = entropy_loss_nll(recon, rows, cols)
    tH = config.temperature_H
    return LossBreakdown(energy, ent, energy + tH * ent, g_energy + tH * g_ent)


def bernoulli_confidence(binary, rng: np.random.Generator):
    """Fallback negative indicators c ~ Bernoulli(|N(u)| / n) on non-interacted entries."""
    binary = np.asarray(binary) > 0
    rate = binary.sum(axis=1, keepdims=True) / binary.shape[1]
    draw = rng.random(binary.shape) < rate
    return (draw & ~binary).astype(np.float64)
