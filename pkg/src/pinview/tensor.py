"""Tensor kernel stage: joint image/eye-feature representation.

Eye-movement features exist only for already-seen images.  To let them
influence the ranking of unseen images, a kernel SVM is trained on the
entrywise product of the image-feature and eye-feature Gram matrices,
and its weight matrix is factorised into per-view components without
touching the explicit feature spaces.  With gamma the signed SVM dual
weights and D_g = diag(gamma):

- alpha columns are top eigenvectors of D_g K_psi D_g K_phi, scaled so
  a^T K_phi a = 1;
- beta  columns are top eigenvectors of D_g K_phi D_g K_psi, scaled so
  b^T K_psi b = 1;
- the shared eigenvalues are the squared singular values of the implicit
  weight matrix.

Unseen images are then embedded with image-feature kernel rows alone:
projected(I)_d = sum_u k_phi(I_u, I) * beta[u, d], and the projected
kernel is the dot product of embeddings.  Eigenvector sign is fixed by
making the first non-negligible coordinate positive; columns beyond the
numerical rank are zeroed.  Repeated singular values make individual
columns basis-dependent (the embedding span is still well defined).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_C = 1.0
DEFAULT_MAX_COMPONENTS = 5
_RANK_TOL = 1e-10
_SIGN_TOL = 1e-10


class SingleClassError(ValueError):
    """Raised when binarised feedback has only one class; stage must be skipped."""


class DecompositionError(ValueError):
    """Raised when the eigen decomposition is numerically unusable."""


def tensor_kernel(k_phi: np.ndarray, k_psi: np.ndarray) -> np.ndarray:
    """Entrywise product of two Gram matrices (a valid kernel by Schur)."""
    k_phi = np.asarray(k_phi, dtype=np.float64)
    k_psi = np.asarray(k_psi, dtype=np.float64)
    if k_phi.shape != k_psi.shape or k_phi.ndim != 2:
        raise ValueError("gram matrices must share the same square shape")
    return k_phi * k_psi


@dataclass
class TensorSvmResult:
    """Box-constrained SVM dual solution on the tensor kernel."""

    alpha: np.ndarray      # dual variables in [0, C]
    y: np.ndarray          # binarised labels in {-1, +1}
    gamma: np.ndarray      # y * alpha
    n_sweeps: int
    converged: bool


def binarize_relevance(r, threshold: float = 0.5) -> np.ndarray:
    """Map relevance scores to {-1, +1} labels (>= threshold is positive)."""
    r = np.asarray(r, dtype=np.float64)
    y = np.where(r >= threshold, 1.0, -1.0)
    if np.all(y == y[0]):
        raise SingleClassError(
            "all feedback falls in one class; tensor stage cannot train")
    return y


def train_tensor_svm(K, r, C: float = DEFAULT_C, tol: float = 1e-10,
                     max_sweeps: int = 2000) -> TensorSvmResult:
    """Coordinate ascent on the SVM dual (no bias term).

    Maximises sum(alpha) - 0.5 alpha^T Q alpha with Q = (y y^T) * K over
    the box [0, C]^t, sweeping coordinates in index order until the
    largest single-coordinate move falls below ``tol * C``.
    """
    K = np.asarray(K, dtype=np.float64)
    y = binarize_relevance(r)
    t = len(y)
    if K.shape != (t, t):
        raise ValueError("kernel and relevance sizes disagree")
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(t)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_move = 0.0
        for u in range(t):
            grad = 1.0 - Q[u] @ alpha
            if Q[u, u] > 1e-12:
                new = min(max(alpha[u] + grad / Q[u, u], 0.0), C)
            else:
                new = C if grad > 0 else (0.0 if grad < 0 else alpha[u])
            max_move = max(max_move, abs(new - alpha[u]))
            alpha[u] = new
        if max_move < tol * C:
            converged = True
            break
    return TensorSvmResult(alpha=alpha, y=y, gamma=y * alpha,
                           n_sweeps=sweeps, converged=converged)


@dataclass
class TensorModel:
    """Factorised tensor SVM: per-view coefficient columns."""

    gamma: np.ndarray
    alpha_view: np.ndarray        # (t, D), image-view components
    beta_view: np.ndarray         # (t, D), eye-view components
    singular_values: np.ndarray   # (D,)

    @property
    def n_components(self) -> int:
        return self.alpha_view.shape[1]

    def project(self, k_phi_rows: np.ndarray) -> np.ndarray:
        """Embed images given kernel rows k_phi(I_u, I) against seen images."""
        rows = np.atleast_2d(np.asarray(k_phi_rows, dtype=np.float64))
        return rows @ self.beta_view

    def projected_kernel(self, k_rows_a, k_rows_b=None) -> np.ndarray:
        """Kernel in the projected space: dot products of embeddings."""
        pa = self.project(k_rows_a)
        pb = pa if k_rows_b is None else self.project(k_rows_b)
        return pa @ pb.T


def _top_components(M, metric, n_components):
    """Top eigenvectors of a (possibly non-symmetric) product matrix,
    scaled to unit norm under ``metric`` with a deterministic sign."""
    t = M.shape[0]
    vals, vecs = scipy.linalg.eig(M)
    scale = max(1.0, float(np.abs(vals.real).max(initial=0.0)))
    if np.any(np.abs(vals.imag) > 1e-6 * scale):
        raise DecompositionError("eigenvalues are not numerically real")
    order = np.argsort(-vals.real)
    vals = vals.real[order]
    vecs = vecs[:, order].real
    rank_cut = _RANK_TOL * scale
    cols = np.zeros((t, n_components))
    kept_vals = np.zeros(n_components)
    for d in range(min(n_components, t)):
        if vals[d] <= rank_cut:
            break
        q = vecs[:, d]
        s2 = float(q @ metric @ q)
        if s2 <= _RANK_TOL:
            continue
        q = q / np.sqrt(s2)
        nz = np.flatnonzero(np.abs(q) > _SIGN_TOL)
        if nz.size and q[nz[0]] < 0:
            q = -q
        cols[:, d] = q
        kept_vals[d] = vals[d]
    return cols, kept_vals


def decompose(gamma, k_phi, k_psi,
              n_components: int = DEFAULT_MAX_COMPONENTS) -> TensorModel:
    """Factorise the implicit tensor weight matrix into per-view columns.

    Requires at least one non-zero dual weight.  ``n_components`` beyond
    the numerical rank yields zero columns and zero singular values.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    k_phi = np.asarray(k_phi, dtype=np.float64)
    k_psi = np.asarray(k_psi, dtype=np.float64)
    t = gamma.shape[0]
    if n_components < 0:
        raise ValueError("n_components must be non-negative")
    if not np.any(gamma):
        raise ValueError("all dual weights are zero; nothing to decompose")
    if k_phi.shape != (t, t) or k_psi.shape != (t, t):
        raise ValueError("gram matrices must be (t, t) with t = len(gamma)")
    dg = np.diag(gamma)
    m_alpha = dg @ k_psi @ dg @ k_phi
    m_beta = dg @ k_phi @ dg @ k_psi
    alpha_view, vals_a = _top_components(m_alpha, k_phi, n_components)
    beta_view, vals_b = _top_components(m_beta, k_psi, n_components)
    vals = np.maximum((vals_a + vals_b) / 2.0, 0.0)
    return TensorModel(gamma=gamma, alpha_view=alpha_view,
                       beta_view=beta_view,
                       singular_values=np.sqrt(vals))
