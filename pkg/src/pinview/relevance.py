"""Relevance prediction from eye-movement features, fused with clicks.

A regularized logistic model maps the 19 per-image eye features to a
relevance probability; an explicit click adds a fixed bonus so the final
score is ``sigmoid(v.psi - b) + alpha * clicked``.  Images never viewed
get a configurable small default instead of the model output.  Training
standardizes features and picks the regularization strength by
stratified cross-validated log-loss.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from pinview.gaze.features import EYE_FEATURE_NAMES, N_EYE_FEATURES

DEFAULT_ALPHA = 1.0
DEFAULT_UNVIEWED_SCORE = 0.05
DEFAULT_REG_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0)


class TrainingError(ValueError):
    """Raised when a training set cannot produce a predictor."""


def loss_and_grad(params, X, y, reg):
    """Mean log-loss with L2 penalty on the weights, and its gradient.

    ``params`` packs the weight vector followed by the bias; the decision
    value is ``X @ v - b``.  Returns (loss, gradient) suitable for
    gradient-based minimizers.
    """
    v, b = params[:-1], params[-1]
    z = X @ v - b
    loss = float(np.mean(np.logaddexp(0.0, -z) + (1.0 - y) * z)
                 + 0.5 * reg * (v @ v))
    resid = (expit(z) - y) / len(y)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ resid + reg * v
    grad[-1] = -resid.sum()
    return loss, grad


def _fit(X, y, reg):
    x0 = np.zeros(X.shape[1] + 1)
    res = minimize(loss_and_grad, x0, args=(X, y, reg), jac=True,
                   method="L-BFGS-B",
                   options={"maxiter": 1000, "ftol": 1e-12, "gtol": 1e-10})
    return res.x


def _stratified_folds(y, folds, seed):
    """Round-robin fold assignment per class after a seeded shuffle."""
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(y), dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        assignment[idx] = np.arange(len(idx)) % folds
    return assignment


@dataclass
class RelevancePredictor:
    """Trained logistic relevance model in standardized feature space."""

    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray
    alpha: float = DEFAULT_ALPHA
    default_unviewed: float = DEFAULT_UNVIEWED_SCORE
    reg: float = 0.0
    cv_losses: tuple = ()
    feature_names: tuple = tuple(EYE_FEATURE_NAMES)

    def standardize(self, psi: np.ndarray) -> np.ndarray:
        return (np.asarray(psi, dtype=np.float64) - self.mean) / self.std

    def decision_value(self, psi: np.ndarray) -> float:
        return float(self.standardize(psi) @ self.weights - self.bias)

    def predict(self, psi, clicked: bool = False) -> float:
        """Relevance score for one image; psi=None means never viewed.

        The click bonus is additive, so scores may exceed 1.
        """
        bonus = self.alpha if clicked else 0.0
        if psi is None:
            return self.default_unviewed + bonus
        return float(expit(self.decision_value(psi))) + bonus

    def score_collage(self, feedback: dict) -> dict:
        """Scores for a whole collage.

        ``feedback`` maps image id to (psi-or-None, clicked).
        """
        return {image_id: self.predict(psi, clicked)
                for image_id, (psi, clicked) in feedback.items()}

    # ----------------------------------------------------------- persistence
    def to_json(self) -> dict:
        return {
            "format": 1,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "alpha": self.alpha,
            "default_unviewed": self.default_unviewed,
            "reg": self.reg,
            "cv_losses": [[float(r), float(l)] for r, l in self.cv_losses],
            "feature_names": list(self.feature_names),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True,
                                         indent=2) + "\n")

    @classmethod
    def from_json(cls, obj: dict) -> "RelevancePredictor":
        return cls(
            weights=np.array(obj["weights"], dtype=np.float64),
            bias=float(obj["bias"]),
            mean=np.array(obj["mean"], dtype=np.float64),
            std=np.array(obj["std"], dtype=np.float64),
            alpha=float(obj.get("alpha", DEFAULT_ALPHA)),
            default_unviewed=float(obj.get("default_unviewed",
                                           DEFAULT_UNVIEWED_SCORE)),
            reg=float(obj.get("reg", 0.0)),
            cv_losses=tuple((r, l) for r, l in obj.get("cv_losses", ())),
            feature_names=tuple(obj.get("feature_names", EYE_FEATURE_NAMES)),
        )

    @classmethod
    def load(cls, path) -> "RelevancePredictor":
        return cls.from_json(json.loads(Path(path).read_text()))


def train_predictor(X, y, reg_grid=DEFAULT_REG_GRID, folds: int = 5,
                    seed: int = 0, alpha: float = DEFAULT_ALPHA,
                    default_unviewed: float = DEFAULT_UNVIEWED_SCORE,
                    ) -> RelevancePredictor:
    """Train the logistic relevance model with CV-selected regularization.

    X is (n, 19) eye features, y is binary labels.  Each class must have
    at least ``folds`` members so every fold sees both classes.  Ties in
    CV loss go to the smaller regularization value.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_EYE_FEATURES:
        raise TrainingError(
            f"expected (n, {N_EYE_FEATURES}) features, got {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise TrainingError("features and labels disagree in length")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        raise TrainingError(f"non-finite features in row {int(np.flatnonzero(bad)[0])}")
    if not np.isin(y, (0.0, 1.0)).all():
        raise TrainingError("labels must be 0 or 1")
    n_pos, n_neg = int(y.sum()), int((1 - y).sum())
    if min(n_pos, n_neg) < folds:
        raise TrainingError(
            f"need at least {folds} examples per class, "
            f"got {n_pos} positive / {n_neg} negative")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Xs = (X - mean) / std

    assignment = _stratified_folds(y, folds, seed)
    cv_losses = []
    for reg in reg_grid:
        losses = []
        for k in range(folds):
            train, held = assignment != k, assignment == k
            params = _fit(Xs[train], y[train], reg)
            loss, _ = loss_and_grad(params, Xs[held], y[held], 0.0)
            losses.append(loss)
        cv_losses.append((float(reg), float(np.mean(losses))))
    best_reg = min(cv_losses, key=lambda rl: (rl[1], rl[0]))[0]

    params = _fit(Xs, y, best_reg)
    return RelevancePredictor(
        weights=params[:-1], bias=float(params[-1]), mean=mean, std=std,
        alpha=alpha, default_unviewed=default_unviewed, reg=best_reg,
        cv_losses=tuple(cv_losses),
    )


def load_training_csv(path):
    """Read a training table with the 19 eye-feature columns plus ``label``."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(EYE_FEATURE_NAMES) | {"label"}
        missing -= set(reader.fieldnames or ())
        if missing:
            raise TrainingError(f"missing columns: {sorted(missing)}")
        rows, labels = [], []
        for row in reader:
            rows.append([float(row[name]) for name in EYE_FEATURE_NAMES])
            labels.append(float(row["label"]))
    if not rows:
        raise TrainingError("empty training table")
    return np.array(rows), np.array(labels)


def write_training_csv(path, X, y) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(EYE_FEATURE_NAMES) + ["label"])
        for row, label in zip(np.asarray(X), np.asarray(y)):
            writer.writerow([f"{v:.10g}" for v in row] + [int(label)])
