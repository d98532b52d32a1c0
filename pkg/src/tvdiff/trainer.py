"""Training loop for the diffusion recommender."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import denoiser as dn
from .dataset import InteractionDataset, build_matrices, holdout_validation
from .diffusion import NoiseSchedule, build_schedule, forward_sample
from .evalrank import evaluate
from .negsampler import NegSamplerConfig, sample_negatives
from .objective import ObjectiveConfig, helmholtz_loss
from .optim import OptimizerState, adam_update

log = logging.getLogger(__name__)

LOG_FIELDS = ("epoch", "loss", "energy_term", "entropy_term", "monitor_value", "seconds")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 400
    lr: float = 1e-3
    reg: float = 1e-4
    max_epochs: int = 200
    patience: int = 10
    monitor: str = "recall@20"
    seed: int = 0
    d: int = 64
    T: int = 50
    s: float = 1e-4
    beta_min: float = 5e-4
    beta_max: float = 5e-3
    val_fraction: float = 0.05
    val_max_users: int = 1024
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    sampler: NegSamplerConfig = field(default_factory=NegSamplerConfig)

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        for name in ("batch_size", "max_epochs", "d", "T", "val_max_users"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be >= 1")
        if self.patience < 1:
            out.append("patience must be >= 1")
        if not self.lr > 0:
            out.append("lr must be > 0")
        if self.reg < 0:
            out.append("reg must be >= 0")
        if not 0.0 <= self.val_fraction < 1.0:
            out.append("val_fraction must lie in [0, 1)")
        if not (0.0 < self.beta_min <= self.beta_max < 1.0):
            out.append("need 0 < beta_min <= beta_max < 1")
        if self.s < 0:
            out.append("s must be >= 0")
        if "@" not in self.monitor:
            out.append("monitor must look like 'recall@20'")
        return out

    def schedule(self) -> NoiseSchedule:
        return build_schedule(self.T, self.s, self.beta_min, self.beta_max)


@dataclass
class TrainResult:
    params: dn.DenoiserParams
    initial_params: dn.DenoiserParams
    log: list
    best_epoch: int
    best_value: float
    steps: int


def input_rows(matrices, users, target_mode: str) -> np.ndarray:
    src = matrices.R_hat if target_mode == "normalized" else matrices.R
    return src[users].toarray()


def validation_scores(params, matrices, schedule, users, target_mode, rng):
    x0 = input_rows(matrices, users, target_mode)
    return dn.reconstruct(x0, matrices.R_bar, params, schedule, rng=rng)


def train_step(params, state, matrices, users, config: TrainConfig, schedule, rng):
    """One optimization step on a user batch; returns the loss breakdown."""
    obj = config.objective
    x0 = input_rows(matrices, users, obj.target_mode)
    B = len(users)
    t = rng.integers(1, schedule.T + 1, size=B)
    xt = forward_sample(x0, t, schedule, rng)
    item = dn.item_branch(matrices.R_bar, params)
    scores, recon, cache = dn.forward(xt, t, matrices.R_bar, params, item=item)
    if not np.all(np.isfinite(scores)):
        raise TrainingError("non-finite reconstruction")

    draws = None
    if obj.entropy_variant in ("bce", "bpr"):
        sub = matrices.R[users]
        train_mask = sub.toarray() > 0
        coo = sub.tocoo()
        draws = sample_negatives(coo.row, users[coo.row], coo.col, scores, train_mask, t, schedule.T, config.sampler, rng)
    target = x0
    breakdown = helmholtz_loss(obj, target, recon, draws=draws)
    grads = dn.backward(cache, breakdown.grad, params, matrices.R_bar)
    adam_update(params.arrays(), grads, state, lr=config.lr, reg=config.reg)
    return breakdown


def train(dataset: InteractionDataset, config: TrainConfig, matrices=None, callback=None) -> TrainResult:
    """Fit the denoiser with early stopping on a per-user validation fold.

    ``config.val_fraction`` of each user's train items is held out (test
    items are never touched); at most ``config.val_max_users`` of those
    users are scored each epoch. ``matrices``, if given, must be built from the
    reduced training set and is used instead of rebuilding it.
    """
    schedule = config.schedule()
    if config.val_fraction > 0:
        fit, val_items = holdout_validation(dataset, config.val_fraction, seed=config.seed)
    else:
        fit, val_items = dataset, dataset.test_items
    if matrices is None:
        matrices = build_matrices(fit)
    m, n = fit.m, fit.n
    params = dn.init_params(m, n, config.T, config.d, seed=config.seed)
    initial = params.copy()
    state = OptimizerState(lr=config.lr)
    rng = np.random.default_rng(config.seed)
    eval_rng = np.random.default_rng(config.seed + 1)

    active = np.flatnonzero(fit.user_degree > 0)
    val_users = np.array([u for u in active if len(val_items[u])], dtype=np.int64)
    if len(val_users) > config.val_max_users:
        # a fixed user subsample keeps the per-epoch reverse chain affordable
        pick = np.random.default_rng(config.seed + 3).choice(len(val_users), config.val_max_users, replace=False)
        val_users = val_users[np.sort(pick)]
    metric, k = config.monitor.split("@")
    k = int(k)

    best_value, best_epoch, best_params = -np.inf, 0, params.copy()
    stale = 0
    history = []
    steps = 0
    for epoch in range(1, config.max_epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(active)
        totals = np.zeros(3)
        n_batches = 0
        for b, lo in enumerate(range(0, len(order), config.batch_size)):
            users = order[lo:lo + config.batch_size]
            try:
                br = train_step(params, state, matrices, users, config, schedule, rng)
            except TrainingError as exc:
                raise TrainingError(f"{exc} at epoch {epoch}, batch {b}") from None
            if not np.isfinite(br.total):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            totals += (br.total, br.energy_term, br.entropy_term)
            n_batches += 1
            steps += 1
        value = float("nan")
        if len(val_users):
            scores = validation_scores(params, matrices, schedule, val_users, config.objective.target_mode, eval_rng)
            res = evaluate(scores, fit.train_items, val_items, Ks=(k,), users=val_users)
            value = res.aggregate[f"{metric}@{k}"]
        row = {
            "epoch": epoch,
            "loss": totals[0] / n_batches,
            "energy_term": totals[1] / n_batches,
            "entropy_term": totals[2] / n_batches,
            "monitor_value": value,
            "seconds": time.perf_counter() - start,
        }
        history.append(row)
        log.info("epoch %d loss %.6g %s %.4f (%.2fs)", epoch, row["loss"], config.monitor, value, row["seconds"])
        if callback is not None:
            callback(row, params)
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
    return TrainResult(best_params, initial, history, best_epoch, best_value, steps)


def write_train_log(history, path, fingerprint: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if fingerprint:
            fh.write(f"# config {fingerprint}\n")
        w = csv.DictWriter(fh, fieldnames=LOG_FIELDS)
        w.writeheader()
        for row in history:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def predict(params, dataset: InteractionDataset, config: TrainConfig, matrices=None, users=None, mask: bool = True) -> np.ndarray:
    """Full reverse-chain scores for ``users`` (default: all), train items at -inf."""
    if matrices is None:
        matrices = build_matrices(dataset)
    if users is None:
        users = np.arange(dataset.m)
    schedule = config.schedule()
    x0 = input_rows(matrices, users, config.objective.target_mode)
    rng = np.random.default_rng(config.seed + 2)
    scores = dn.reconstruct(x0, matrices.R_bar, params, schedule, rng=rng)
    if mask:
        sub = matrices.R[users].tocoo()
        scores[sub.row, sub.col] = -np.inf
    return scores


def with_overrides(config: TrainConfig, **kw) -> TrainConfig:
    obj_keys = {"temperature_H", "entropy_variant", "target_mode", "bce_label_mode", "paper_literal_sign"}
    smp_keys = {"gamma", "lam", "epsilon", "strategy"}
    obj = {k: kw.pop(k) for k in list(kw) if k in obj_keys}
    smp = {k: kw.pop(k) for k in list(kw) if k in smp_keys}
    return replace(config, objective=replace(config.objective, **obj), sampler=replace(config.sampler, **smp), **kw)
