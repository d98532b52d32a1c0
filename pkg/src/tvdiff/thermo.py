"""Energy / entropy diagnostics of user-item probability matrices."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dataset import matrices_from_binary

log = logging.getLogger(__name__)

GENRES = ("diffusion_norm", "softmax")


@dataclass
class ProbabilityMatrix:
    rows: np.ndarray
    genre: str
    degenerate: np.ndarray  # rows excluded from aggregates


@dataclass
class ThermoReport:
    phase: str
    U: float
    S: float
    dU: float = 0.0
    dS: float = 0.0


def normalize_reconstruction(scores, genre: str = "diffusion_norm") -> ProbabilityMatrix:
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if genre == "diffusion_norm":
        mag = np.abs(scores)
        norms = mag.sum(axis=1)
        degenerate = norms == 0
        rows = mag / np.where(degenerate, 1.0, norms)[:, None]
    elif genre == "softmax":
        z = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(z)
        rows = e / e.sum(axis=1, keepdims=True)
        degenerate = np.zeros(len(rows), dtype=bool)
    else:
        raise ValueError(f"genre must be one of {GENRES}, got {genre!r}")
    return ProbabilityMatrix(rows, genre, degenerate)


def _rows(P):
    if isinstance(P, ProbabilityMatrix):
        return P.rows, P.degenerate
    arr = P.toarray() if sp.issparse(P) else np.atleast_2d(np.asarray(P, dtype=np.float64))
    return arr, np.zeros(arr.shape[0], dtype=bool)


def energy(P_recon, P_orig, R) -> float:
    """Σ over observed (u, i): 1 if p'_{u,i} >= p_{u,i} else p'_{u,i} / p_{u,i}."""
    recon, degenerate = _rows(P_recon)
    R = sp.csr_matrix(R)
    orig = P_orig.rows if isinstance(P_orig, ProbabilityMatrix) else P_orig
    coo = R.tocoo()
    keep = ~degenerate[coo.row]
    u, i = coo.row[keep], coo.col[keep]
    p_new = recon[u, i]
    if sp.issparse(orig):
        p_old = np.asarray(sp.csr_matrix(orig)[u, i]).ravel()
    else:
        p_old = np.asarray(orig, dtype=np.float64)[u, i]
    hit = p_new >= p_old
    ratio = np.divide(p_new, p_old, out=np.zeros_like(p_new), where=p_old > 0)
    return float(np.sum(np.where(hit, 1.0, ratio)))


def row_entropy(P) -> np.ndarray:
    rows, _ = _rows(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rows > 0, -rows * np.log(rows), 0.0)
    return terms.sum(axis=1)


def entropy(P) -> float:
    """Σ_u Σ_i -p log p with 0·log 0 = 0; degenerate rows are skipped."""
    _, degenerate = _rows(P)
    return float(row_entropy(P)[~degenerate].sum())


def theorem1_delta_S(R) -> float:
    """S(row-normalized D_U^-1/2 R D_I^-1/2) - S(D_U^-1 R) over users with d_u > 0."""
    R = sp.csr_matrix(R, dtype=np.float64)
    if R.nnz == 0:
        raise ValueError("empty graph")
    mats = matrices_from_binary(R)
    active = np.asarray(mats.R.sum(axis=1)).ravel() > 0
    bar = mats.R_bar.toarray()[active]
    lightgcn = bar / bar.sum(axis=1, keepdims=True)
    bpr = mats.R_hat.toarray()[active]
    return entropy(lightgcn) - entropy(bpr)


def multilayer_entropy_probe(R, K: int) -> list[float]:
    """Entropy of user→item mass after k = 1..K alternating R̄ propagations.

    Layer k uses R̄ (R̄ᵀ R̄)^(k-1), row-normalized; users whose mass row is
    empty are flagged in the log and left out.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    mats = matrices_from_binary(R)
    bar = mats.R_bar.toarray()
    gram = bar.T @ bar
    mass = bar.copy()
    out = []
    for k in range(1, K + 1):
        if k > 1:
            mass = mass @ gram
        sums = mass.sum(axis=1)
        ok = sums > 0
        if not np.all(ok):
            log.warning("multilayer probe: %d disconnected user rows skipped", int((~ok).sum()))
        out.append(entropy(mass[ok] / sums[ok, None]))
    return out


def pilot_report(recon_before, recon_after, P_orig, R, label: str = "") -> list[ThermoReport]:
    """Energy/entropy before and after training plus their differences."""
    U0, S0 = energy(recon_before, P_orig, R), entropy(recon_before)
    U1, S1 = energy(recon_after, P_orig, R), entropy(recon_after)
    prefix = f"{label}:" if label else ""
    return [
        ThermoReport(prefix + "before", U0, S0, 0.0, 0.0),
        ThermoReport(prefix + "after", U1, S1, U1 - U0, S1 - S0),
    ]


def delta_ratio(numerator: ThermoReport, denominator: ThermoReport, field: str = "dS") -> float:
    """Ratio of two models' training differences, e.g. ΔS_D / ΔS_T."""
    return getattr(numerator, field) / getattr(denominator, field)


def write_reports(reports, path, fingerprint: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if fingerprint:
            fh.write(f"# config {fingerprint}\n")
        w = csv.writer(fh)
        w.writerow(["phase", "U", "S", "dU", "dS"])
        for r in reports:
            w.writerow([r.phase, repr(r.U), repr(r.S), repr(r.dU), repr(r.dS)])
