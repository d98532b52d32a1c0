"""BPR matrix factorization, used as the reference classic recommender."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import KIND_MF, load_arrays, save_arrays
from .dataset import InteractionDataset, holdout_validation, interaction_matrix
from .denoiser import xavier_uniform
from .evalrank import evaluate
from .negsampler import NegSamplerConfig, sample_negatives
from .objective import sigmoid
from .optim import OptimizerState, adam_update
from .thermo import normalize_reconstruction, row_entropy

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    pass


@dataclass
class MFParams:
    E_U: np.ndarray
    E_I: np.ndarray

    def arrays(self):
        return {"E_U": self.E_U, "E_I": self.E_I}

    def copy(self):
        return MFParams(self.E_U.copy(), self.E_I.copy())

    def scores(self, users=None):
        E_U = self.E_U if users is None else self.E_U[users]
        return E_U @ self.E_I.T


@dataclass(frozen=True)
class MFConfig:
    d: int = 64
    lr: float = 1e-3
    reg: float = 1e-4
    epochs: int = 200
    batch_size: int = 2048
    patience: int = 10
    monitor: str = "recall@20"
    val_fraction: float = 0.05
    sampler: NegSamplerConfig = field(default_factory=lambda: NegSamplerConfig(strategy="rns"))


@dataclass
class MFResult:
    params: MFParams
    initial_params: MFParams
    entropy: list          # mean user entropy of softmax(E_U E_Iᵀ); index 0 = initialization
    log: list
    best_epoch: int


def mf_score(params: MFParams, u: int, i: int) -> float:
    return float(params.E_U[u] @ params.E_I[i])


def init_mf(m: int, n: int, d: int, seed: int) -> MFParams:
    rng = np.random.default_rng(seed)
    return MFParams(xavier_uniform(rng, m, d), xavier_uniform(rng, n, d))


def mean_softmax_entropy(params: MFParams, users=None) -> float:
    P = normalize_reconstruction(params.scores(users), "softmax")
    return float(row_entropy(P).mean())


def bpr_batch_loss(params: MFParams, u, i, j, reg: float):
    """Mean over pairs of -log σ(s_ui - s_uj) + reg·(‖e_u‖² + ‖e_i‖² + ‖e_j‖²), with gradients."""
    eu, ei, ej = params.E_U[u], params.E_I[i], params.E_I[j]
    diff = np.einsum("bd,bd->b", eu, ei - ej)
    B = len(u)
    sq = (eu * eu).sum() + (ei * ei).sum() + (ej * ej).sum()
    loss = (np.logaddexp(0.0, -diff).sum() + reg * sq) / B
    coef = (-(1.0 - sigmoid(diff)) / B)[:, None]
    g_eu = coef * (ei - ej) + 2 * reg * eu / B
    g_ei = coef * eu + 2 * reg * ei / B
    g_ej = -coef * eu + 2 * reg * ej / B
    gU = np.zeros_like(params.E_U)
    gI = np.zeros_like(params.E_I)
    np.add.at(gU, u, g_eu)
    np.add.at(gI, i, g_ei)
    np.add.at(gI, j, g_ej)
    return float(loss), {"E_U": gU, "E_I": gI}


def _draw_negatives(params, R, users, positives, config: MFConfig, rng):
    uniq, inv = np.unique(users, return_inverse=True)
    mask = R[uniq].toarray() > 0
    if config.sampler.strategy == "rns":
        scores = np.zeros(mask.shape)
    else:
        scores = params.scores(uniq)
    # no diffusion timestep here: t = T gives unit Gumbel temperature
    draws = sample_negatives(inv, users, positives, scores, mask, 1, 1, config.sampler, rng)
    return draws.negatives


def train_bpr_mf(dataset: InteractionDataset, config: MFConfig = MFConfig(), seed: int = 0) -> MFResult:
    if config.val_fraction > 0:
        fit, val_items = holdout_validation(dataset, config.val_fraction, seed=seed)
    else:
        fit, val_items = dataset, dataset.test_items
    R = interaction_matrix(fit.m, fit.n, fit.train_items)
    params = init_mf(fit.m, fit.n, config.d, seed)
    initial = params.copy()
    state = OptimizerState(lr=config.lr)
    rng = np.random.default_rng(seed)
    users_all, items_all = fit.train_pairs()
    val_users = np.array([u for u in range(fit.m) if len(val_items[u]) and fit.user_degree[u] > 0], dtype=np.int64)
    metric, k = config.monitor.split("@")
    k = int(k)

    entropies = [mean_softmax_entropy(params)]
    history = []
    best_value, best_epoch, best_params, best_entropy = -np.inf, 0, params.copy(), entropies[0]
    stale = 0
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        perm = rng.permutation(len(users_all))
        total = 0.0
        for lo in range(0, len(perm), config.batch_size):
            sel = perm[lo:lo + config.batch_size]
            u, i = users_all[sel], items_all[sel]
            j = _draw_negatives(params, R, u, i, config, rng)
            loss, grads = bpr_batch_loss(params, u, i, j, config.reg)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite BPR loss at epoch {epoch} (lr={config.lr}, reg={config.reg})")
            total += loss * len(sel)
            adam_update(params.arrays(), grads, state, lr=config.lr)
        ent = mean_softmax_entropy(params)
        entropies.append(ent)
        value = float("nan")
        if len(val_users):
            res = evaluate(params.scores(val_users), fit.train_items, val_items, Ks=(k,), users=val_users)
            value = res.aggregate[f"{metric}@{k}"]
        history.append({"epoch": epoch, "loss": total / len(perm), "entropy": ent,
                        "monitor_value": value, "seconds": time.perf_counter() - start})
        if not len(val_users):
            continue  # nothing to monitor: run all epochs, keep the last state
        if value > best_value:
            best_value, best_epoch, best_params = value, epoch, params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    if not len(val_users):
        best_params, best_epoch = params.copy(), len(history)
    return MFResult(best_params, initial, entropies, history, best_epoch)


def save_mf(params: MFParams, path) -> None:
    m, d = params.E_U.shape
    save_arrays(path, KIND_MF, (m, params.E_I.shape[0], 0, d), params.arrays())


def load_mf(path) -> MFParams:
    kind, _, arrays = load_arrays(path)
    if kind != KIND_MF:
        raise ValueError(f"{path} does not hold matrix-factorization parameters")
    return MFParams(arrays["E_U"], arrays["E_I"])
