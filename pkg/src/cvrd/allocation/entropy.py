"""Eigen-contribution entropy of a weight vector and its gradient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegeneratePortfolioError, ValidationError
from ..risk_models import SpectralDecomposition

NULL_EIGEN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiversificationProfile:
    transformed_weights: np.ndarray  # U w
    contributions: np.ndarray  # lambda_m |(U w)_m|^2
    probabilities: np.ndarray
    entropy: float


def _effective_eigenvalues(decomp: SpectralDecomposition) -> np.ndarray:
    lam = np.asarray(decomp.eigenvalues, dtype=float)
    top = lam[0] if lam.size else 0.0
    return np.where(lam <= NULL_EIGEN_RTOL * top, 0.0, lam)


def diversification_entropy(w, decomp: SpectralDecomposition) -> DiversificationProfile:
    """Project ``w`` onto the principal axes and return the risk-share entropy.

    ``v_m = lambda_m |(U w)_m|^2``, ``p = v / sum(v)``, ``H = -sum p log p``
    (natural log, ``0 log 0 = 0``). Eigenvalues at or below ``1e-12`` times
    the largest contribute nothing.
    """
    w = np.asarray(w, dtype=float)
    U = decomp.eigenvectors
    if w.shape != (U.shape[1],):
        raise ValidationError(f"weights of length {w.size} do not match {U.shape[1]} assets")
    wt = U @ w
    v = _effective_eigenvalues(decomp) * np.abs(wt) ** 2
    total = v.sum()
    if not total > 0:
        raise DegeneratePortfolioError("weights lie in the null space of the covariance")
    p = v / total
    nz = p > 0
    h = float(-np.sum(p[nz] * np.log(p[nz])))
    return DiversificationProfile(wt, v, p, h)


class EntropyObjective:
    """Callable ``w -> (H(w), dH/dw)`` for a fixed decomposition."""

    def __init__(self, decomp: SpectralDecomposition):
        self.decomp = decomp
        self.U = np.asarray(decomp.eigenvectors)
        self.lam = _effective_eigenvalues(decomp)

    def value(self, w) -> float:
        return diversification_entropy(w, self.decomp).entropy

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        wt = self.U @ w
        v = self.lam * np.abs(wt) ** 2
        total = v.sum()
        if not total > 0:
            raise DegeneratePortfolioError("weights lie in the null space of the covariance")
        p = v / total
        nz = p > 0
        logp = np.zeros_like(p)
        logp[nz] = np.log(p[nz])
        h = float(-np.sum(p[nz] * logp[nz]))
        # dH/dv_k = -(log p_k + H) / S ; dv_k/dw = 2 lam_k Re(conj(wt_k) U_k)
        dh_dv = np.where(nz, -(logp + h) / total, 0.0)
        grad = np.real((2.0 * dh_dv * self.lam * np.conj(wt)) @ self.U)
        return h, grad

    def hessian(self, w) -> np.ndarray:
        """Second derivative of H with respect to the (real) weights."""
        w = np.asarray(w, dtype=float)
        U, lam = self.U, self.lam
        wt = U @ w
        v = lam * np.abs(wt) ** 2
        total = v.sum()
        if not total > 0:
            raise DegeneratePortfolioError("weights lie in the null space of the covariance")
        nz = v > 0
        p = v[nz] / total
        logp = np.log(p)
        h = -np.sum(p * logp)
        a = -(logp + h) / total  # dH/dv on the support
        Uz = U[nz]
        # rows: dv_k/dw = 2 lam_k Re(conj(wt_k) U_k)
        J = np.real(2.0 * (lam[nz] * np.conj(wt[nz]))[:, None] * Uz)
        c = (1.0 + logp + h) / total**2
        B = c[:, None] + c[None, :] - 1.0 / total**2 - np.diag(1.0 / (total * v[nz]))
        # d2v_k/dw2 = 2 lam_k Re(U_k^H U_k)
        curv = np.real(Uz.conj().T @ ((2.0 * a * lam[nz])[:, None] * Uz))
        hess = J.T @ B @ J + curv
        return 0.5 * (hess + hess.T)
