"""C-SVM on a precomputed kernel, solved by SMO, with one-vs-one multiclass voting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

log = logging.getLogger(__name__)

TAU = 1e-12


@dataclass
class BinarySvm:
    classes: tuple[int, int]      # positive, negative class label
    index: np.ndarray             # rows of the training set used by this submodel
    alpha: np.ndarray
    y: np.ndarray
    rho: float
    n_iter: int = 0

    @property
    def support(self) -> np.ndarray:
        return self.index[self.alpha > 0]

    @property
    def dual_coef(self) -> np.ndarray:
        return (self.alpha * self.y)[self.alpha > 0]

    def decision(self, K_cross: np.ndarray) -> np.ndarray:
        """``K_cross`` has one column per training point of the full model."""
        return K_cross[:, self.support] @ self.dual_coef - self.rho


@dataclass
class SvmModel:
    classes: np.ndarray
    submodels: list[BinarySvm] = field(default_factory=list)
    n_train: int = 0
    train_ids: list[str] | None = None
    C: float = 1.0


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3, max_iter: int = 100_000):
    """Dual C-SVM by SMO with second-order working-set selection.

    Minimises ``0.5 a'Qa - sum(a)`` with ``Q = yy' * K``, ``0 <= a <= C`` and
    ``y'a = 0``. Ties in the working-set choice go to the lowest index.
    Returns ``(alpha, rho, n_iter)``; the decision function is
    ``sum_i a_i y_i K(x_i, x) - rho``.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        score = -y * G
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        gmax = score[i]
        gmax2 = np.max(-score[low])
        if gmax + gmax2 < tol:
            break
        # second-order choice of j among violators
        grad_diff = gmax - score
        quad = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        quad = np.where(quad > 0, quad, TAU)
        cand = low & (grad_diff > 0)
        if not cand.any():
            break
        obj = np.where(cand, -(grad_diff**2) / quad, np.inf)
        j = int(np.argmin(obj))

        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            qc = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
            qc = qc if qc > 0 else TAU
            delta = (-G[i] - G[j]) / qc
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            qc = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
            qc = qc if qc > 0 else TAU
            delta = (G[i] - G[j]) / qc
            s = ai + aj
            ni, nj = ai - delta, aj + delta
            if s > C:
                if ni > C:
                    ni, nj = C, s - C
            elif nj < 0:
                nj, ni = 0.0, s
            if s > C:
                if nj > C:
                    nj, ni = C, s - C
            elif ni < 0:
                ni, nj = 0.0, s
        G += Q[:, i] * (ni - ai) + Q[:, j] * (nj - aj)
        alpha[i], alpha[j] = ni, nj
        it += 1
    else:
        log.warning("SMO stopped at max_iter=%d before reaching tolerance %g", max_iter, tol)

    # threshold from free vectors, else the midpoint of the feasible interval
    yG = y * G
    at_ub = alpha >= C
    at_lb = alpha <= 0
    free = ~at_ub & ~at_lb
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (at_ub & (y < 0)) | (at_lb & (y > 0))
        lb_mask = (at_ub & (y > 0)) | (at_lb & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub + lb) else float(ub if np.isfinite(ub) else lb)
    return alpha, rho, it


def dual_objective(K, y, alpha) -> float:
    y = np.asarray(y, dtype=float)
    Q = (y[:, None] * y[None, :]) * np.asarray(K, dtype=float)
    return float(0.5 * alpha @ Q @ alpha - alpha.sum())


def svm_train(K: np.ndarray, labels, C: float = 1.0, tol: float = 1e-3, train_ids=None) -> SvmModel:
    K = np.asarray(K, dtype=float)
    labels = np.asarray(labels)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("kernel matrix must be square")
    if K.shape[0] != labels.size:
        raise ValueError("kernel matrix and labels differ in size")
    if C <= 0:
        raise ValueError("C must be positive")
    if K.size:
        ev = np.linalg.eigvalsh((K + K.T) / 2).min()
        if ev < -1e-8 * max(np.trace(K), 1.0):
            log.warning("kernel matrix is not PSD (min eigenvalue %g)", ev)
    classes = np.unique(labels)
    model = SvmModel(classes=classes, n_train=labels.size, train_ids=train_ids, C=C)
    for a, b in combinations(classes, 2):
        idx = np.flatnonzero((labels == a) | (labels == b))
        y = np.where(labels[idx] == a, 1.0, -1.0)
        alpha, rho, it = smo_solve(K[np.ix_(idx, idx)], y, C, tol)
        model.submodels.append(BinarySvm((a, b), idx, alpha, y, rho, it))
    return model


def svm_predict(model: SvmModel, K_cross: np.ndarray) -> np.ndarray:
    """One-vs-one voting; vote ties go to the lowest class label."""
    K_cross = np.atleast_2d(np.asarray(K_cross, dtype=float))
    if K_cross.shape[1] != model.n_train:
        raise ValueError(f"kernel rows have {K_cross.shape[1]} columns, model has {model.n_train} training points")
    if len(model.classes) == 1:
        return np.full(K_cross.shape[0], model.classes[0])
    pos = {c: k for k, c in enumerate(model.classes)}
    votes = np.zeros((K_cross.shape[0], len(model.classes)), dtype=np.int64)
    for sub in model.submodels:
        dec = sub.decision(K_cross)
        a, b = sub.classes
        votes[:, pos[a]] += dec > 0
        votes[:, pos[b]] += dec <= 0
    return model.classes[np.argmax(votes, axis=1)]
