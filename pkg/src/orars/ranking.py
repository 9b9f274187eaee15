"""Pairwise comparison classifier and the two ways of turning comparisons
into a score, plus the direct neural regressor used as a baseline.

The classifier sees ``z = [f(x_i), f(x_j)]`` and is trained to output
``p1 = P(y_i > y_j)``.  A test utterance is then scored either

* by rank placement: ``k = sum_i P(y_t > y_i) + 1`` over a reference set,
  and the reference score of rank ``floor(k)`` is returned; or
* against an anchor set holding N utterances per score rank:
  ``sum_i P(y_anchor_i < y_t) / N``.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, SCORE_MAX, SCORE_MIN, rank_to_score
from .features import FeatureVector, feature_matrix
from .nn import (TrainConfig, classifier_mlp, forward, pair_weight, regressor_mlp,
                 train_mlp)


@dataclass(frozen=True)
class ScoredPair:
    z: np.ndarray
    label: int
    weight: float


def _vec(f):
    return f.combined if isinstance(f, FeatureVector) else np.asarray(f, dtype=np.float64)


def make_pair(a, b):
    """``a`` and ``b`` are ``(features, score)`` tuples."""
    (fa, ya), (fb, yb) = a, b
    fa, fb = _vec(fa), _vec(fb)
    if fa.shape != fb.shape:
        raise ValueError(f"feature dimensions differ: {fa.shape} vs {fb.shape}")
    return ScoredPair(np.concatenate([fa, fb]), int(ya > yb), float(pair_weight(ya, yb)))


def pair_arrays(X, y, i, j):
    """Vectorised ``make_pair`` for index arrays ``i`` and ``j``."""
    z = np.hstack([X[i], X[j]])
    return z, (y[i] > y[j]).astype(np.float64), pair_weight(y[i], y[j])


def standardizer(X):
    """Per-column mean and std; constant columns get scale 1."""
    shift = X.mean(axis=0)
    scale = X.std(axis=0)
    return shift, np.where(scale > 1e-12, scale, 1.0)


def holdout_split(n, fraction, seed):
    """Seeded ``(train_idx, val_idx)`` split with ``round(fraction * n)``
    validation items (at least one when ``n >= 2``)."""
    n_val = int(round(fraction * n))
    if n >= 2:
        n_val = min(max(n_val, 1), n - 1)
    else:
        n_val = 0
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _features_and_scores(data, agop_mode):
    if isinstance(data, Dataset):
        return feature_matrix(data, agop_mode), data.scores()
    X, y = data
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)


# --- binary comparison classifier -----------------------------------------

def fit_classifier(X, y, cfg=None, validation=None):
    """Train the comparison classifier on feature rows ``X`` with scores ``y``.

    Each epoch draws ``cfg.pairs_per_epoch`` ordered pairs (default
    ``pairs_per_utterance * len(y)``) uniformly with replacement.  With
    ``validation=(Xv, yv)`` a fixed pair set is drawn once from it and the
    epoch with the lowest validation loss wins.  Returns a ``TrainResult``.
    """
    cfg = cfg or TrainConfig()
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if len(y) < 2 or np.unique(y).size < 2:
        raise ValueError("need at least 2 distinct scores to form informative pairs")
    n = len(y)
    n_pairs = cfg.pairs_per_epoch or cfg.pairs_per_utterance * n
    shift, scale = standardizer(X)
    rng = np.random.default_rng(cfg.seed)
    model = classifier_mlp(2 * X.shape[1], seed=rng,
                           input_shift=np.tile(shift, 2), input_scale=np.tile(scale, 2))

    def draw_epoch(rng):
        return pair_arrays(X, y, rng.integers(n, size=n_pairs), rng.integers(n, size=n_pairs))

    val = None
    if validation is not None and len(validation[1]):
        Xv, yv = (np.asarray(a, dtype=np.float64) for a in validation)
        vrng = np.random.default_rng([cfg.seed, 1])
        m = cfg.pairs_per_utterance * len(yv)
        val = pair_arrays(Xv, yv, vrng.integers(len(yv), size=m), vrng.integers(len(yv), size=m))
    return train_mlp(model, cfg, draw_epoch, val, rng)


def train_classifier(train, cfg=None, validation=None, agop_mode="diagonal"):
    """Train on a ``Dataset`` (or ``(X, y)``) and return the selected model.

    Without an explicit ``validation`` set, ``cfg.validation_fraction`` of
    ``train`` is held out for model selection.
    """
    cfg = cfg or TrainConfig()
    X, y = _features_and_scores(train, agop_mode)
    if validation is None:
        tr, va = holdout_split(len(y), cfg.validation_fraction, cfg.seed)
        X, y, validation = X[tr], y[tr], (X[va], y[va])
    else:
        validation = _features_and_scores(validation, agop_mode)
    return fit_classifier(X, y, cfg, validation).model


def comparison_prob(model, a, b):
    """Classifier probability that ``a`` scores higher than ``b``."""
    return float(forward(model, np.concatenate([_vec(a), _vec(b)]))[1])


def comparison_probs(model, x_t, refs):
    """``P(x_t > ref_i)`` for each reference row, one forward pass per pair."""
    x_t = _vec(x_t)
    return np.array([comparison_prob(model, x_t, r) for r in np.asarray(refs)])


@dataclass(frozen=True)
class RankPrediction:
    k: float
    predicted_score: float
    comparison_probs: np.ndarray


def rank_from_probs(probs, ref_scores):
    """Place a sample among ``ref_scores`` given its win probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    ref = np.asarray(ref_scores, dtype=np.float64)
    if ref.size == 0:
        raise ValueError("reference set is empty")
    if probs.shape != ref.shape:
        raise ValueError("one probability per reference sample required")
    # cumsum adds strictly left to right
    k = float(np.cumsum(probs)[-1]) + 1.0
    r = min(max(int(np.floor(k)), 1), ref.size)
    return RankPrediction(k, float(np.sort(ref)[r - 1]), probs)


def score_rank_placement(model, ref_features, ref_scores, x_t):
    """Score ``x_t`` by its expected rank among the reference samples."""
    refs = np.asarray(ref_features, dtype=np.float64)
    if len(refs) == 0:
        raise ValueError("reference set is empty")
    return rank_from_probs(comparison_probs(model, x_t, refs), ref_scores)


def anchor_score_from_probs(probs, N):
    return float(np.cumsum(np.asarray(probs, dtype=np.float64))[-1]) / N


def check_balanced(anchor_ranks, N):
    ranks, counts = np.unique(np.asarray(anchor_ranks), return_counts=True)
    if ranks.size == 0 or np.any(counts != N):
        raise ValueError(f"anchor set is not balanced at N={N} per rank "
                         f"(counts {dict(zip(ranks.tolist(), counts.tolist()))})")


def score_anchor_set(model, anchor_features, anchor_ranks, N, x_t):
    """Sum over anchors of ``P(y_anchor < y_t)``, divided by N.

    The result lies in ``[0, M]`` for M occupied ranks; see
    ``anchor_value_to_score`` to map it back onto the score scale.
    """
    check_balanced(anchor_ranks, N)
    x_t = _vec(x_t)
    # P(y_a < y_t) is the classifier's p1 for the ordered pair (t, a)
    probs = [comparison_prob(model, x_t, a) for a in np.asarray(anchor_features)]
    return anchor_score_from_probs(probs, N)


def anchor_value_to_score(value, anchor_ranks, M):
    """Map an anchor-set value onto the 0-5 scale.

    A value of ``j`` means the sample beats the anchors of the ``j`` lowest
    occupied ranks, so it lands on the centre score of the ``j``-th occupied
    rank (0-based); values in between are interpolated linearly.
    """
    occupied = np.unique(np.asarray(anchor_ranks))
    centres = rank_to_score(occupied, M)
    return float(np.interp(value, np.arange(occupied.size), centres))


# --- neural regressor baseline --------------------------------------------

def fit_nnr(X, y, cfg=None, validation=None):
    cfg = cfg or TrainConfig(batch_size=4)
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise ValueError("cannot train a regressor on an empty dataset")
    shift, scale = standardizer(X)
    rng = np.random.default_rng(cfg.seed)
    model = regressor_mlp(X.shape[1], seed=rng, input_shift=shift, input_scale=scale)
    # start from the constant mean predictor
    model.weights[-1][:] = 0.0
    model.biases[-1][:] = y.mean()

    def draw_epoch(rng):
        perm = rng.permutation(len(y))
        return X[perm], y[perm], None

    val = None
    if validation is not None and len(validation[1]):
        val = (np.asarray(validation[0], dtype=np.float64),
               np.asarray(validation[1], dtype=np.float64), None)
    return train_mlp(model, cfg, draw_epoch, val, rng)


def train_nnr(train, cfg=None, validation=None, agop_mode="diagonal"):
    cfg = cfg or TrainConfig(batch_size=4)
    X, y = _features_and_scores(train, agop_mode)
    if validation is None:
        tr, va = holdout_split(len(y), cfg.validation_fraction, cfg.seed)
        X, y, validation = X[tr], y[tr], (X[va], y[va])
    else:
        validation = _features_and_scores(validation, agop_mode)
    return fit_nnr(X, y, cfg, validation).model


def predict_nnr(model, x_t):
    """Regressor output clamped to the 0-5 score range."""
    x = np.asarray(_vec(x_t) if isinstance(x_t, FeatureVector) else x_t, dtype=np.float64)
    out = forward(model, x)
    if x.ndim == 1:
        return float(np.clip(out[0], SCORE_MIN, SCORE_MAX))
    return np.clip(out[:, 0], SCORE_MIN, SCORE_MAX)
