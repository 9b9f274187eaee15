"""K-fold cross-validation of the sentence scorers.

Algorithms:

``gop_mean``      mean phoneme GOP, no training (unbounded, so no MAE)
``nnr``           feature -> score regressor trained with squared error
``orars_rank``    comparison classifier + rank placement among the fold's
                  training utterances
``orars_anchor``  comparison classifier + balanced anchor set
"""

import os
from contextlib import nullcontext
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dataset import Dataset, load_dataset, score_to_rank, split_anchor_set
from .features import AGOP_MODES, classic_gop_sentence_score, feature_matrix
from .metrics import EvalReport, evaluate
from .nn import TrainConfig
from .ranking import (anchor_value_to_score, fit_classifier, fit_nnr, holdout_split,
                      predict_nnr, score_anchor_set, score_rank_placement)

ALGORITHMS = ("gop_mean", "nnr", "orars_rank", "orars_anchor")
THREADS_ENV = "ORARS_THREADS"


@dataclass
class ExperimentConfig:
    dataset: Optional[str] = None
    algorithm: str = "orars_rank"
    folds: int = 5
    M: int = 21
    N: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    nnr_batch_size: int = 4
    agop_mode: str = "diagonal"
    output: Optional[str] = None
    seed: int = 0
    stratify: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.folds < 2:
            raise ValueError(f"folds={self.folds}; at least 2 required")
        if self.agop_mode not in AGOP_MODES:
            raise ValueError(f"unknown agop mode {self.agop_mode!r}")
        if self.M < 2 or self.N < 1 or self.nnr_batch_size < 1:
            raise ValueError("M >= 2, N >= 1 and nnr_batch_size >= 1 required")

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("algorithm", "folds", "M", "N", "nnr_batch_size",
                                           "agop_mode", "seed", "stratify")}
        d["train"] = self.train.to_dict()
        return d


def fold_assignment(n, folds, seed, strata=None):
    """Fold index per item: seeded shuffle, then round-robin.

    With ``strata`` the shuffled items are ordered by stratum first (stable),
    so every fold receives a near-equal share of each stratum.
    """
    if folds > n:
        raise ValueError(f"{folds} folds requested for {n} utterances")
    order = np.random.default_rng(seed).permutation(n)
    if strata is not None:
        order = order[np.argsort(np.asarray(strata)[order], kind="stable")]
    out = np.empty(n, dtype=np.int64)
    out[order] = np.arange(n) % folds
    return out


def thread_limit():
    """Context manager capping BLAS threads at ``$ORARS_THREADS``, if set."""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=max(int(value), 1))


@dataclass
class FoldPlan:
    test: np.ndarray
    train: np.ndarray  # fitting portion
    val: np.ndarray    # model-selection portion


def plan_folds(n, cfg, scores=None):
    strata = score_to_rank(scores, cfg.M) if cfg.stratify else None
    assign = fold_assignment(n, cfg.folds, cfg.seed, strata)
    plans = []
    for k in range(cfg.folds):
        test = np.flatnonzero(assign == k)
        rest = np.flatnonzero(assign != k)
        tr, va = holdout_split(rest.size, cfg.train.validation_fraction, [cfg.seed, k])
        plans.append(FoldPlan(test, rest[tr], rest[va]))
    return plans


def _predict_fold(cfg, k, plan, X, y, d):
    if cfg.algorithm == "gop_mean":
        return np.array([classic_gop_sentence_score(d[i]) for i in plan.test])
    tcfg = replace(cfg.train, seed=cfg.train.seed + 1000 * cfg.seed + k)
    val = (X[plan.val], y[plan.val])
    if cfg.algorithm == "nnr":
        model = fit_nnr(X[plan.train], y[plan.train],
                        replace(tcfg, batch_size=cfg.nnr_batch_size), val).model
        return predict_nnr(model, X[plan.test])
    if cfg.algorithm == "orars_rank":
        model = fit_classifier(X[plan.train], y[plan.train], tcfg, val).model
        ref = np.concatenate([plan.train, plan.val])
        return np.array([score_rank_placement(model, X[ref], y[ref], X[i]).predicted_score
                         for i in plan.test])
    # orars_anchor
    sub = d.subset(plan.train)
    anchors, rest = split_anchor_set(sub, cfg.M, cfg.N, tcfg.seed)
    pos = {u.id: i for i, u in zip(plan.train, sub)}
    a_idx = np.array([pos[u.id] for u in anchors])
    r_idx = np.array([pos[u.id] for u in rest])
    a_ranks = score_to_rank(y[a_idx], cfg.M)
    model = fit_classifier(X[r_idx], y[r_idx], tcfg, val).model
    return np.array([
        anchor_value_to_score(score_anchor_set(model, X[a_idx], a_ranks, cfg.N, X[i]),
                              a_ranks, cfg.M)
        for i in plan.test])


@dataclass
class CrossValidationResult:
    report: EvalReport
    ids: list
    predictions: np.ndarray
    truth: np.ndarray
    fold_of: np.ndarray


def cross_validate(cfg, dataset=None):
    """Run the experiment; returns predictions alongside the report."""
    d = dataset if dataset is not None else load_dataset(cfg.dataset)
    y = d.scores()
    if len(d) < cfg.folds:
        raise ValueError(f"{cfg.folds} folds requested for {len(d)} utterances")
    X = feature_matrix(d, cfg.agop_mode) if cfg.algorithm != "gop_mean" else None
    plans = plan_folds(len(d), cfg, y)
    pred = np.full(len(d), np.nan)
    fold_of = np.empty(len(d), dtype=np.int64)
    per_fold = []
    with_mae = cfg.algorithm != "gop_mean"
    with thread_limit():
        for k, plan in enumerate(plans):
            p = _predict_fold(cfg, k, plan, X, y, d)
            pred[plan.test] = p
            fold_of[plan.test] = k
            r = evaluate(p, y[plan.test], with_mae)
            per_fold.append((r.mae, r.pcc, r.scc))
    report = evaluate(pred, y, with_mae, label=cfg.algorithm)
    report.per_fold = per_fold
    return CrossValidationResult(report, d.ids, pred, y, fold_of)


def run_cross_validation(cfg, dataset=None):
    return cross_validate(cfg, dataset).report
