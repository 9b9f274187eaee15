"""Sentence-level GOP features computed from log posteriorgrams.

Two fixed-size statistics summarise an utterance of any length:

* the average-GOP vector (length C), the mean log posterior of each phoneme
  over the frames aligned to it, and
* the confusion-GOP vector (length 2C-2), the time mean and standard
  deviation of the competing (non-target) log posteriors after sorting each
  frame in descending order.

Their concatenation (length 3C-2) is the input to the rankers.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import alignment_to_matrix

EPS = 1e-6
AGOP_MODES = ("diagonal", "literal")


def compute_agop(u, mode="diagonal"):
    """Average GOP per phoneme.

    ``mode="diagonal"`` averages ``log_ppg[t, c]`` over the frames aligned to
    ``c``.  ``mode="literal"`` evaluates the matrix form ``E_C X^T Y / (E_T Y +
    eps)``, whose numerator sums every phoneme's log posterior in each aligned
    frame.  Phonemes without aligned frames come out as 0 in both modes.
    """
    X = u.log_ppg
    Y = alignment_to_matrix(u.alignment, X.shape[1]).astype(np.float64)
    counts = Y.sum(axis=0)
    if mode == "diagonal":
        num = (X * Y).sum(axis=0)
    elif mode == "literal":
        num = X.sum(axis=1) @ Y
    else:
        raise ValueError(f"unknown agop mode {mode!r}; expected one of {AGOP_MODES}")
    return num / (counts + EPS)


def compute_cgop(u):
    X = u.log_ppg
    T, C = X.shape
    keep = np.ones((T, C), dtype=bool)
    keep[np.arange(T), u.alignment] = False
    # sort ascending, then flip columns -> descending per frame
    Xs = np.sort(X[keep].reshape(T, C - 1), axis=1)[:, ::-1]
    mean = Xs.mean(axis=0)
    # deviations from the first frame keep constant columns at exactly 0
    std = (Xs - Xs[0]).std(axis=0)
    return np.concatenate([mean, std])


@dataclass(frozen=True)
class FeatureVector:
    agop: np.ndarray
    cgop: np.ndarray

    @property
    def combined(self):
        return np.concatenate([self.agop, self.cgop])

    def __len__(self):
        return self.agop.size + self.cgop.size


def extract_features(u, agop_mode="diagonal"):
    return FeatureVector(compute_agop(u, agop_mode), compute_cgop(u))


def feature_matrix(utterances, agop_mode="diagonal"):
    """Stack combined feature vectors, one row per utterance."""
    rows = [extract_features(u, agop_mode).combined for u in utterances]
    if not rows:
        return np.zeros((0, 0))
    return np.vstack(rows)


def feature_dim(C):
    return 3 * C - 2


def classic_gop_sentence_score(u):
    """Mean of the per-phoneme average GOPs over phonemes that occur."""
    v = compute_agop(u)
    occupied = np.bincount(u.alignment, minlength=v.size) > 0
    return float(v[occupied].mean())


# --- PCA -------------------------------------------------------------------

def jacobi_eigh(A, tol=1e-15, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns, in
    no particular order.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0))):
        raise ValueError("matrix must be square and symmetric")
    A = (A + A.T) / 2
    V = np.eye(n)
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-100 * abs(diff):
                    # theta would overflow; t ~ 1 / (2 theta)
                    t = apq / diff
                else:
                    theta = diff / (2 * apq)
                    t = 1.0 if theta == 0 else \
                        np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1))
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * ap - s * aq, s * ap + c * aq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    return np.diag(A).copy(), V


@dataclass(frozen=True)
class PcaFit:
    mean: np.ndarray
    components: np.ndarray  # (k, d), rows are unit principal axes
    eigenvalues: np.ndarray  # all d covariance eigenvalues, descending

    @property
    def explained_variance_ratio(self):
        total = self.eigenvalues.sum()
        k = self.components.shape[0]
        return self.eigenvalues[:k] / total if total > 0 else np.zeros(k)

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T


def _as_matrix(vectors):
    rows = [v.combined if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
            for v in vectors]
    return np.vstack(rows) if rows else np.zeros((0, 0))


def pca_fit(vectors, k=2):
    X = _as_matrix(vectors)
    if X.shape[0] < 2:
        raise ValueError("PCA needs at least 2 vectors")
    d = X.shape[1]
    if not 1 <= k <= d:
        raise ValueError(f"component count k={k} not in [1, {d}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    vals, vecs = jacobi_eigh(cov)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    comps = vecs[:, :k].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return PcaFit(mean, comps, np.maximum(vals, 0.0))


def pca_project(vectors, k=2):
    """Coordinates of ``vectors`` on their top-k principal axes."""
    fit = pca_fit(vectors, k)
    return fit.transform(_as_matrix(vectors))
