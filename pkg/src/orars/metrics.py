"""Agreement metrics between predicted and human scores."""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import rankdata


class UndefinedCorrelationError(ValueError):
    pass


def _pair(x, y, min_len):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_len:
        raise ValueError(f"need at least {min_len} values, got {x.size}")
    return x, y


def mae(x, y):
    x, y = _pair(x, y, 1)
    return float(np.mean(np.abs(x - y)))


def pcc(x, y):
    """Pearson correlation; raises ``UndefinedCorrelationError`` on a
    constant input."""
    x, y = _pair(x, y, 2)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant sequence")
    r = np.dot(dx, dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def scc(x, y):
    """Spearman correlation: Pearson of average (tie-aware) ranks."""
    x, y = _pair(x, y, 2)
    return pcc(rankdata(x), rankdata(y))


@dataclass
class EvalReport:
    """Metrics over ``n`` items; ``mae`` is None for unbounded predictors
    such as the raw GOP average."""

    mae: Optional[float]
    pcc: float
    scc: float
    n: int
    per_fold: list = field(default_factory=list)
    label: str = ""

    def to_dict(self):
        return {"label": self.label, "n": self.n, "mae": self.mae, "pcc": self.pcc,
                "scc": self.scc,
                "per_fold": [dict(zip(("mae", "pcc", "scc"), f)) for f in self.per_fold]}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def table(self):
        def fmt(v):
            return "/" if v is None else f"{v:.4f}"

        head = f"{'':<10}{'MAE':>9}{'PCC':>9}{'SCC':>9}"
        rows = [head]
        for i, (m, p, s) in enumerate(self.per_fold):
            rows.append(f"{'fold ' + str(i + 1):<10}{fmt(m):>9}{fmt(p):>9}{fmt(s):>9}")
        rows.append(f"{'all':<10}{fmt(self.mae):>9}{fmt(self.pcc):>9}{fmt(self.scc):>9}")
        title = f"{self.label} (n={self.n})" if self.label else f"n={self.n}"
        return title + "\n" + "\n".join(rows) + "\n"


def evaluate(pred, truth, with_mae=True, label=""):
    m = mae(pred, truth) if with_mae else None
    return EvalReport(m, pcc(pred, truth), scc(pred, truth), len(np.ravel(truth)), label=label)


def inter_rater_baseline(rater_scores, method="leave_one_out"):
    """Human agreement from a ``(raters, utterances)`` score matrix.

    ``leave_one_out`` compares each rater with the mean of the others;
    ``pairwise`` compares every pair of raters.  Metrics are averaged over
    the comparisons made.
    """
    R = np.asarray(rater_scores, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] < 2:
        raise ValueError("need a (raters, utterances) matrix with at least 2 raters")
    if np.any(np.isnan(R)):
        raise ValueError("missing ratings")
    if method == "leave_one_out":
        total = R.sum(axis=0)
        comps = [(R[r], (total - R[r]) / (R.shape[0] - 1)) for r in range(R.shape[0])]
    elif method == "pairwise":
        comps = [(R[a], R[b]) for a in range(R.shape[0]) for b in range(a + 1, R.shape[0])]
    else:
        raise ValueError(f"unknown inter-rater method {method!r}")
    vals = np.array([(mae(a, b), pcc(a, b), scc(a, b)) for a, b in comps])
    m = vals.mean(axis=0)
    return EvalReport(float(m[0]), float(m[1]), float(m[2]), R.shape[1],
                      label=f"inter-rater ({method})")
