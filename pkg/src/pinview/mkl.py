"""Multiple-kernel learning of a per-session image similarity.

Base kernels are cosine similarities in each visual feature space.  Given
relevance scores r over the seen images, we minimise

    J(f, eta) = mu * sum_i (lam/eta_i + 1 - lam) * ||f_i||^2
                + || sum_i predictions_i - r ||^2        s.t. eta in simplex

by alternating two exact coordinate steps.  With d_i = lam/eta_i + 1 - lam
and a shared dual vector c solving  (sum_i K_i/d_i + mu I) c = r,  the
per-kernel functions are f_i = Phi_i^T c / d_i, giving
||f_i||^2 = c^T K_i c / d_i^2; the eta step is eta_i proportional to
||f_i||.  Both steps decrease J, so the recorded objective trace is
non-increasing.  The kernel weights eta concentrate on feature spaces
that explain the feedback.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_LAMBDA = 0.5
DEFAULT_MU = 0.1
ETA_FLOOR = 1e-8
JITTER = 1e-8


def cosine_rows(X: np.ndarray) -> np.ndarray:
    """L2-normalise each row; all-zero rows stay zero."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.where(norms > 0, norms, 1.0)


def base_kernel(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity between two raw feature vectors (0 for zero vectors)."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v / (nu * nv))


@dataclass
class KernelBundle:
    """Per-space Gram matrices over seen images, plus candidate cross rows.

    grams[i] is (t, t); cross[i], when present, is (n_candidates, t) with
    cross[i][c, u] = k_i(candidate_c, seen_u).
    """

    names: tuple
    grams: list
    cross: list | None = None

    def __post_init__(self):
        t = self.grams[0].shape[0]
        for name, K in zip(self.names, self.grams):
            if K.shape != (t, t):
                raise ValueError(f"gram {name!r} is not ({t}, {t})")
            if not np.allclose(K, K.T, atol=1e-10):
                raise ValueError(f"gram {name!r} is not symmetric")
        if self.cross is not None:
            for name, X in zip(self.names, self.cross):
                if X.shape[1] != t:
                    raise ValueError(f"cross rows {name!r} do not match t={t}")

    @property
    def n_seen(self) -> int:
        return self.grams[0].shape[0]

    def __len__(self) -> int:
        return len(self.grams)


@dataclass
class MklModel:
    """Result of one MKL solve."""

    names: tuple
    eta: np.ndarray
    duals: np.ndarray
    d: np.ndarray                      # per-kernel scale lam/eta_i + 1 - lam
    lam: float
    mu_shared: float
    objective_trace: list = field(default_factory=list)
    n_iter: int = 0
    converged: bool = True

    def predictions(self, kernel_rows: list) -> np.ndarray:
        """sum_i rows_i @ (duals / d_i) for per-space kernel rows vs seen."""
        out = np.zeros(kernel_rows[0].shape[0])
        for rows, d in zip(kernel_rows, self.d):
            out += rows @ self.duals / d
        return out


def mkl_objective(grams, r, coefs, eta, lam=DEFAULT_LAMBDA, mu=DEFAULT_MU,
                  eta_floor=ETA_FLOOR) -> float:
    """Evaluate J at functions f_i = Phi_i^T g_i given per-kernel coefs g_i."""
    r = np.asarray(r, dtype=np.float64)
    preds = np.zeros_like(r)
    penalty = 0.0
    for K, g, e in zip(grams, coefs, eta):
        sq = float(g @ K @ g)
        preds += K @ g
        if sq > 0.0:
            penalty += (lam / max(e, eta_floor) + 1.0 - lam) * sq
    return mu * penalty + float(np.sum((preds - r) ** 2))


def solve_mkl(bundle: KernelBundle, r, lam: float = DEFAULT_LAMBDA,
              mu_shared: float = DEFAULT_MU, eta0=None, tol: float = 1e-6,
              max_iter: int = 100) -> MklModel:
    """Alternating minimisation for the kernel weights and dual vector.

    eta0 warm-starts the kernel weights (defaults to uniform); the
    returned objective trace is non-increasing and the solve stops when
    the decrease falls below ``tol`` or after ``max_iter`` iterations.
    An all-zero r short-circuits to uniform weights and zero duals.
    """
    r = np.asarray(r, dtype=np.float64)
    n_kernels = len(bundle)
    t = bundle.n_seen
    if r.shape != (t,):
        raise ValueError(f"relevance vector must have length {t}")
    if not (0.0 <= lam <= 1.0):
        raise ValueError("lam must lie in [0, 1]")
    mu = mu_shared if mu_shared > 0 else JITTER

    if eta0 is None:
        eta = np.full(n_kernels, 1.0 / n_kernels)
    else:
        eta = np.asarray(eta0, dtype=np.float64).copy()
        if eta.shape != (n_kernels,) or np.any(eta < 0) or eta.sum() <= 0:
            raise ValueError("eta0 must be a nonnegative simplex vector")
        eta = eta / eta.sum()

    if not np.any(r):
        model = MklModel(bundle.names, np.full(n_kernels, 1.0 / n_kernels),
                         np.zeros(t), np.full(n_kernels, lam * n_kernels + 1 - lam),
                         lam, mu, [0.0], 0, True)
        return model

    eye = np.eye(t)
    trace = []
    converged = False
    d = None
    c = None
    for it in range(1, max_iter + 1):
        d = lam / np.maximum(eta, ETA_FLOOR) + (1.0 - lam)
        M = sum(K / di for K, di in zip(bundle.grams, d)) + mu * eye
        try:
            c = np.linalg.solve(M, r)
        except np.linalg.LinAlgError:
            c = np.linalg.solve(M + JITTER * eye, r)
        sq = np.array([max(float(c @ K @ c), 0.0) / di ** 2
                       for K, di in zip(bundle.grams, d)])
        norms = np.sqrt(sq)
        total = norms.sum()
        if total > 0:
            eta = norms / total
        preds = np.zeros(t)
        for K, di in zip(bundle.grams, d):
            preds += K @ c / di
        penalty = sum(
            (lam / max(e, ETA_FLOOR) + 1.0 - lam) * s
            for e, s in zip(eta, sq) if s > 0.0
        )
        obj = mu * penalty + float(np.sum((preds - r) ** 2))
        trace.append(obj)
        if len(trace) >= 2 and trace[-2] - trace[-1] < tol:
            converged = True
            break

    return MklModel(tuple(bundle.names), eta, c, d, lam, mu, trace,
                    len(trace), converged)


def combined_gram(model: MklModel, grams) -> np.ndarray:
    """eta-weighted sum of per-space Gram matrices."""
    out = np.zeros_like(np.asarray(grams[0], dtype=np.float64))
    for e, K in zip(model.eta, grams):
        out += e * K
    return out


def combined_kernel(model: MklModel, feats_i: dict, feats_j: dict) -> float:
    """eta-weighted cosine similarity between two images' raw features."""
    return float(sum(
        e * base_kernel(feats_i[name], feats_j[name])
        for name, e in zip(model.names, model.eta)
    ))


class CorpusKernels:
    """Cosine-normalised feature rows per space for a whole corpus.

    Precomputes full Gram matrices once so per-round bundles are cheap
    slices.  With ``precompute=False`` Grams are formed on demand from
    the normalised rows instead.
    """

    def __init__(self, corpus, feature_names=None, precompute=True):
        self.names = tuple(feature_names or corpus.feature_names())
        if not self.names:
            raise ValueError("corpus exposes no feature spaces")
        self._ids = list(corpus.ids)
        self._index = {image_id: k for k, image_id in enumerate(self._ids)}
        self.rows = {name: cosine_rows(corpus.feature_matrix(name))
                     for name in self.names}
        self._grams = ({name: self.rows[name] @ self.rows[name].T
                        for name in self.names} if precompute else None)

    def indices(self, ids) -> np.ndarray:
        return np.array([self._index[i] for i in ids], dtype=np.intp)

    def bundle(self, seen_ids, candidate_ids=None) -> KernelBundle:
        si = self.indices(seen_ids)
        grams, cross = [], []
        for name in self.names:
            if self._grams is not None:
                G = self._grams[name]
                grams.append(np.ascontiguousarray(G[np.ix_(si, si)]))
            else:
                rows = self.rows[name][si]
                grams.append(rows @ rows.T)
            if candidate_ids is not None:
                ci = self.indices(candidate_ids)
                if self._grams is not None:
                    cross.append(np.ascontiguousarray(
                        self._grams[name][np.ix_(ci, si)]))
                else:
                    cross.append(self.rows[name][ci] @ self.rows[name][si].T)
        return KernelBundle(self.names, grams,
                            cross if candidate_ids is not None else None)
