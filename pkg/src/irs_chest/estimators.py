"""Classical channel estimators and the NMSE benchmark metric.

Least squares treats the channel as an unknown constant; the linear MMSE
family shrinks the LS estimate using second-order channel statistics. Two
algebraically equivalent LMMSE forms are kept: a small (N+1)-sized solve
that is valid whenever the pattern book satisfies P P^H = C I, and the
general C-sized solve that works for any full-rank book (including the
binary one). Their agreement on DFT books is a free correctness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import frobenius_norm_sq, solve_hermitian


@dataclass(frozen=True)
class LmmseContext:
    """Second-order statistics needed by the LMMSE family.

    corr is the (N+1) x (N+1) channel correlation matrix E[H^H H];
    bs_antennas and num_patterns scale the regularizer M sigma_z^2.
    """

    corr: np.ndarray
    bs_antennas: int
    noise_var: float
    num_patterns: int

    def __post_init__(self):
        corr = np.asarray(self.corr)
        if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
            raise ValueError(f"corr must be square, got shape {corr.shape}")
        if not np.allclose(corr, corr.conj().T, atol=1e-10):
            raise ValueError("corr must be Hermitian within 1e-10")
        if self.noise_var <= 0:
            raise ValueError(f"noise_var must be > 0, got {self.noise_var}")


@dataclass(frozen=True)
class EstimateReport:
    """A labelled estimate with optional per-block NMSE breakdown."""

    estimate: np.ndarray
    estimator_name: str
    per_block_nmse: tuple[float, float] | None = None


def evaluate_estimate(name: str, estimate: np.ndarray, truth: np.ndarray) -> EstimateReport:
    """Wrap an estimate with its direct/cascaded NMSE pair against a truth."""
    direct = nmse([estimate], [truth], column_mask=[0])
    cascaded = nmse([estimate], [truth], column_mask=range(1, truth.shape[1]))
    return EstimateReport(estimate=estimate, estimator_name=name,
                          per_block_nmse=(direct, cascaded))


def ls_estimate(observed: np.ndarray, patterns: np.ndarray) -> np.ndarray:
    """Least-squares estimate X P^H (P P^H)^{-1}.

    For books with P P^H = C I this reduces to X P^H / C; the general
    solve below gives the same result to machine precision.
    """
    observed = np.asarray(observed)
    patterns = np.asarray(patterns)
    gram = patterns @ patterns.conj().T
    # X P^H G^{-1} computed as (G^{-1} (X P^H)^H)^H to keep one Hermitian solve
    rhs = patterns @ observed.conj().T
    return solve_hermitian(gram, rhs).conj().T


def lmmse_estimate_dft(observed: np.ndarray, patterns: np.ndarray,
                       ctx: LmmseContext) -> np.ndarray:
    """LMMSE via the (N+1)-sized shrinkage of the LS estimate.

    H_ls (R + (M sigma_z^2 / C) I)^{-1} R. Requires P P^H = C I.
    """
    c = ctx.num_patterns
    h_ls = np.asarray(observed) @ np.asarray(patterns).conj().T / c
    corr = np.asarray(ctx.corr)
    reg = corr + (ctx.bs_antennas * ctx.noise_var / c) * np.eye(corr.shape[0])
    return h_ls @ solve_hermitian(reg, corr)


def lmmse_estimate_general(observed: np.ndarray, patterns: np.ndarray,
                           ctx: LmmseContext) -> np.ndarray:
    """LMMSE via the C-sized solve, valid for any full-rank pattern book.

    X (P^H R P + M sigma_z^2 I_C)^{-1} P^H R.
    """
    observed = np.asarray(observed)
    patterns = np.asarray(patterns)
    p_h = patterns.conj().T
    corr = np.asarray(ctx.corr)
    gram = p_h @ corr @ patterns
    gram = gram + (ctx.bs_antennas * ctx.noise_var) * np.eye(gram.shape[0])
    return observed @ solve_hermitian(gram, p_h @ corr)


def _is_scaled_unitary_rows(patterns: np.ndarray) -> bool:
    """True when P P^H equals C I to working precision."""
    c = patterns.shape[1]
    gram = patterns @ patterns.conj().T
    return bool(
        np.linalg.norm(gram - c * np.eye(patterns.shape[0])) <= 1e-9 * c
    )


def lmmse_estimate(observed: np.ndarray, patterns: np.ndarray,
                   ctx: LmmseContext) -> np.ndarray:
    """LMMSE estimate, dispatching to the cheap form when the book allows."""
    patterns = np.asarray(patterns)
    if _is_scaled_unitary_rows(patterns):
        return lmmse_estimate_dft(observed, patterns, ctx)
    return lmmse_estimate_general(observed, patterns, ctx)


def blmmse_estimate(observed: np.ndarray, binary_patterns: np.ndarray,
                    ctx: LmmseContext) -> np.ndarray:
    """LMMSE under the binary one-element-at-a-time book.

    The binary book is not row-unitary, so only the general form applies.
    """
    return lmmse_estimate_general(observed, binary_patterns, ctx)


def linear_residual_estimate(h_ls: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """One linear residual-subtraction step: H_ls (I - W)."""
    h_ls = np.asarray(h_ls)
    weight = np.asarray(weight)
    if h_ls.shape[1] != weight.shape[0] or weight.shape[0] != weight.shape[1]:
        raise ValueError(
            f"shape mismatch: estimate {h_ls.shape} vs weight {weight.shape}"
        )
    return h_ls @ (np.eye(weight.shape[0]) - weight)


def lmmse_residual_weight(corr: np.ndarray, bs_antennas: int, noise_var: float,
                          num_patterns: int) -> np.ndarray:
    """The residual weight W* = R^{-1} (R^{-1} + (C / (M sigma_z^2)) I)^{-1}.

    Feeding this into linear_residual_estimate reproduces the LMMSE
    estimate exactly (for positive-definite R and row-unitary books).
    """
    corr = np.asarray(corr)
    eye = np.eye(corr.shape[0])
    corr_inv = solve_hermitian(corr, eye)
    scale = num_patterns / (bs_antennas * noise_var)
    return corr_inv @ solve_hermitian(corr_inv + scale * eye, eye)


def nmse(estimates: Sequence[np.ndarray], truths: Sequence[np.ndarray],
         column_mask: Iterable[int] | None = None) -> float:
    """Normalized MSE: sum ||H_est - H||_F^2 / sum ||H||_F^2.

    column_mask restricts both norms to the given columns (mask [0] is the
    direct link, mask 1..N the cascaded block).
    """
    if len(estimates) != len(truths):
        raise ValueError(
            f"got {len(estimates)} estimates for {len(truths)} truths"
        )
    if len(truths) == 0:
        raise ValueError("nmse needs at least one pair")
    mask = None if column_mask is None else list(column_mask)
    err = 0.0
    sig = 0.0
    for est, truth in zip(estimates, truths):
        est = np.asarray(est)
        truth = np.asarray(truth)
        if est.shape != truth.shape:
            raise ValueError(f"shape mismatch: {est.shape} vs {truth.shape}")
        if mask is not None:
            est = est[:, mask]
            truth = truth[:, mask]
        err += frobenius_norm_sq(est - truth)
        sig += frobenius_norm_sq(truth)
    if sig == 0.0:
        raise ValueError("nmse undefined for all-zero truths")
    return err / sig
