"""Adaptive-moment (Adam) updates with L2 regularization folded into the gradient."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_update(params: dict, grads: dict, state: OptimizerState, lr: float | None = None, reg: float = 0.0) -> dict:
    """Apply one bias-corrected Adam step to ``params`` in place.

    ``reg * θ`` is added to each gradient before the moment updates.
    """
    lr = state.lr if lr is None else lr
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter {theta.shape}")
        if reg:
            g = g + reg * theta
        if name not in state.m:
            state.m[name] = np.zeros_like(theta)
            state.v[name] = np.zeros_like(theta)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        theta -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params
