"""Gaussian negative log-likelihood, MCP penalty, and the eBIC criterion.

For a lower-triangular factor L, an ordering P and a sample covariance
S, the negative log-likelihood (up to constants, per observation) is

    nll(L, P, S) = 1/2 tr(P S P^t L^t L) - sum_j log L_jj

and the penalized score adds the minimax concave penalty over the
strict lower triangle of L.  Diagonal entries are never penalized: the
row-decoupled solver subproblems penalize only the regression
coefficients, and the score used for reporting matches the solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from birkdag.sem import CholeskyFactor, Permutation, SampleCovariance


@dataclass(frozen=True)
class McpParams:
    """Minimax concave penalty parameters (lambda >= 0, gamma > 1)."""

    lam: float
    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be a nonnegative real, got {self.lam}")
        if not (np.isfinite(self.gamma) and self.gamma > 1):
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")


@dataclass(frozen=True)
class ScoreBreakdown:
    """Penalized score split into likelihood and penalty parts."""

    nll: float
    penalty: float

    @property
    def total(self) -> float:
        return self.nll + self.penalty


def mcp(theta, params: McpParams):
    """MCP value rho(theta): lambda|t| - t^2/(2 gamma) inside |t| < gamma lambda,
    flat at gamma lambda^2 / 2 beyond.  Vectorized over theta."""
    t = np.abs(np.asarray(theta, dtype=float))
    inner = params.lam * t - t * t / (2.0 * params.gamma)
    flat = 0.5 * params.gamma * params.lam**2
    out = np.where(t < params.gamma * params.lam, inner, flat)
    return out if out.ndim else float(out)


def _permuted_cov(perm: Permutation, s: SampleCovariance) -> np.ndarray:
    if perm.p != s.p:
        raise ValueError("permutation and covariance dimensions disagree")
    return perm.apply_to_matrix(s.s)


def neg_log_likelihood(l: CholeskyFactor, perm: Permutation, s: SampleCovariance) -> float:
    """1/2 tr(P S P^t L^t L) - sum_j log L_jj."""
    if l.p != s.p:
        raise ValueError("factor and covariance dimensions disagree")
    sp = _permuted_cov(perm, s)
    # tr(Sp L^t L) = <L Sp, L>
    quad = float(np.einsum("ij,ij->", l.l @ sp, l.l))
    return 0.5 * quad - float(np.log(np.diag(l.l)).sum())


def penalized_score(
    l: CholeskyFactor,
    perm: Permutation,
    s: SampleCovariance,
    params: McpParams,
) -> ScoreBreakdown:
    """Negative log-likelihood plus MCP over the strict lower triangle."""
    nll = neg_log_likelihood(l, perm, s)
    tl = np.tril_indices(l.p, -1)
    penalty = float(np.sum(mcp(l.l[tl], params)))
    return ScoreBreakdown(nll=nll, penalty=penalty)


def nll_gradient_in_l(l: CholeskyFactor, perm: Permutation, s: SampleCovariance) -> np.ndarray:
    """Gradient of the negative log-likelihood in the free entries of L.

    The free entries are the lower triangle including the diagonal; the
    returned matrix is exactly zero above the diagonal.
    """
    sp = _permuted_cov(perm, s)
    g = l.l @ sp
    g[np.diag_indices(l.p)] -= 1.0 / np.diag(l.l)
    return np.tril(g)


def ebic(nll_value: float, support_size: int, n: int, p: int, gamma_bic: float) -> float:
    """Extended BIC: -2 Ln + s log n + 4 s gamma_bic log p.

    ``nll_value`` is the negative log-likelihood at the fitted factor, so
    the maximized log-likelihood is Ln = -nll_value and the first term is
    2 * nll_value.  Callers that want the criterion on the full-data
    scale pass n * neg_log_likelihood(...); see ``pipeline.tune``.
    ``gamma_bic = 0`` reproduces the classical BIC.
    """
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    if support_size < 0:
        raise ValueError("support size must be nonnegative")
    if not 0.0 <= gamma_bic <= 1.0:
        raise ValueError(f"gamma_bic must lie in [0, 1], got {gamma_bic}")
    s = support_size
    return 2.0 * nll_value + s * np.log(n) + 4.0 * s * gamma_bic * np.log(p)
