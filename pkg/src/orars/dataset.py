"""Utterances, datasets and the newline-delimited dataset file format.

A dataset file starts with a header line::

    {"format_version": 1, "phoneme_count": 40}

followed by one JSON object per utterance with the fields ``id``,
``log_ppg`` (T rows of C natural-log posteriors), ``alignment`` (T phoneme
indices) and optionally ``score`` and ``rater_scores``.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FORMAT_VERSION = 1
LOG_FLOOR = math.log(1e-10)
SCORE_MIN, SCORE_MAX = 0.0, 5.0
_ROW_SUM_TOL = 1e-3


class DatasetError(ValueError):
    pass


class ParseError(DatasetError):
    """A dataset record could not be decoded."""

    def __init__(self, index, reason):
        super().__init__(f"record {index}: {reason}")
        self.index = index


class ValidationError(DatasetError):
    """An utterance violates one of its invariants."""

    def __init__(self, utt_id, reason):
        super().__init__(f"utterance {utt_id!r}: {reason}")
        self.utt_id = utt_id


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Utterance:
    """One scored (or unscored) utterance.

    ``log_ppg`` entries that are ``-inf`` (probability exactly zero) are
    floored at ``log(1e-10)``.  When only ``rater_scores`` are given the
    score is filled in as their mean.
    """

    id: str
    log_ppg: np.ndarray
    alignment: np.ndarray
    score: Optional[float] = None
    rater_scores: Optional[np.ndarray] = None

    def __post_init__(self):
        uid = self.id
        x = np.array(self.log_ppg, dtype=np.float64)
        if x.ndim != 2:
            raise ValidationError(uid, f"log_ppg must be 2-D, got {x.ndim}-D")
        T, C = x.shape
        if T < 1:
            raise ValidationError(uid, "log_ppg has no frames (T >= 1 required)")
        if C < 2:
            raise ValidationError(uid, f"phoneme count C={C} < 2")
        x[np.isneginf(x)] = LOG_FLOOR
        if not np.all(np.isfinite(x)):
            raise ValidationError(uid, "log_ppg contains NaN or +inf")
        if np.any(x > 0):
            raise ValidationError(uid, "log_ppg has entries > 0 (not a log probability)")
        sums = np.exp(x).sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > _ROW_SUM_TOL)
        if bad.size:
            raise ValidationError(
                uid, f"frame {bad[0]} posteriors sum to {sums[bad[0]]:.6g}, not 1")

        ali = np.asarray(self.alignment)
        if ali.ndim != 1:
            raise ValidationError(uid, "alignment must be a flat sequence")
        if ali.size and not np.issubdtype(ali.dtype, np.integer):
            if not (np.issubdtype(ali.dtype, np.floating) and np.all(np.mod(ali, 1) == 0)):
                raise ValidationError(uid, "alignment must contain integers")
        if ali.size != T:
            raise ValidationError(uid, f"alignment length {ali.size} != T={T}")
        if np.any((ali < 0) | (ali >= C)):
            raise ValidationError(uid, f"alignment index outside [0, {C})")

        raters = self.rater_scores
        if raters is not None:
            raters = np.array(raters, dtype=np.float64)
            if raters.ndim != 1 or raters.size == 0:
                raise ValidationError(uid, "rater_scores must be a non-empty list")
            if np.any((raters < SCORE_MIN) | (raters > SCORE_MAX)):
                raise ValidationError(uid, "rater score outside [0, 5]")
        score = self.score
        if score is None and raters is not None:
            score = float(np.mean(raters))
        if score is not None:
            score = float(score)
            if not SCORE_MIN <= score <= SCORE_MAX:
                raise ValidationError(uid, f"score {score} outside [0, 5]")
            if raters is not None and abs(score - np.mean(raters)) > 1e-9:
                raise ValidationError(uid, "score differs from mean of rater_scores")

        object.__setattr__(self, "log_ppg", _frozen(x, np.float64))
        object.__setattr__(self, "alignment", _frozen(ali, np.int64))
        object.__setattr__(self, "score", score)
        object.__setattr__(
            self, "rater_scores", None if raters is None else _frozen(raters, np.float64))

    @property
    def n_frames(self):
        return self.log_ppg.shape[0]

    @property
    def phoneme_count(self):
        return self.log_ppg.shape[1]


@dataclass(frozen=True)
class Dataset:
    utterances: tuple
    phoneme_count: int
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        utts = tuple(self.utterances)
        if self.phoneme_count < 2:
            raise DatasetError(f"phoneme_count={self.phoneme_count} < 2")
        index = {}
        for u in utts:
            if u.phoneme_count != self.phoneme_count:
                raise ValidationError(
                    u.id, f"C={u.phoneme_count} != dataset phoneme_count={self.phoneme_count}")
            if u.id in index:
                raise ValidationError(u.id, "duplicate id")
            index[u.id] = len(index)
        object.__setattr__(self, "utterances", utts)
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.utterances[self._index[key]]
        return self.utterances[key]

    @property
    def ids(self):
        return [u.id for u in self.utterances]

    def scores(self):
        """Scores as a float array; raises if any utterance is unscored."""
        missing = [u.id for u in self.utterances if u.score is None]
        if missing:
            raise ValidationError(missing[0], "utterance has no score")
        return np.array([u.score for u in self.utterances], dtype=np.float64)

    def subset(self, indices):
        return Dataset(tuple(self.utterances[i] for i in indices), self.phoneme_count)


# --- serialization ---------------------------------------------------------

def format_real(x):
    """17 significant digits, enough to round-trip any float64."""
    return format(float(x), ".17g")


def format_array(a):
    """JSON text for a (nested) real array at full precision."""
    a = np.asarray(a)
    if a.ndim == 0:
        return format_real(a)
    return "[" + ",".join(format_array(row) for row in a) + "]"


def _record_text(u):
    parts = [
        f'"id":{json.dumps(u.id)}',
        f'"log_ppg":{format_array(u.log_ppg)}',
        f'"alignment":[{",".join(str(int(i)) for i in u.alignment)}]',
    ]
    if u.score is not None:
        parts.append(f'"score":{format_real(u.score)}')
    if u.rater_scores is not None:
        parts.append(f'"rater_scores":{format_array(u.rater_scores)}')
    return "{" + ",".join(parts) + "}"


def save_dataset(d, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"format_version": FORMAT_VERSION,
                            "phoneme_count": d.phoneme_count}) + "\n")
        for u in d.utterances:
            f.write(_record_text(u) + "\n")


def _parse_utterance(rec, index):
    if not isinstance(rec, dict):
        raise ParseError(index, "record is not an object")
    for key in ("id", "log_ppg", "alignment"):
        if key not in rec:
            raise ParseError(index, f"missing field {key!r}")
    if not isinstance(rec["id"], str):
        raise ParseError(index, "field 'id' must be a string")
    try:
        log_ppg = np.array(rec["log_ppg"], dtype=np.float64)
        alignment = np.array(rec["alignment"])
    except (TypeError, ValueError) as e:
        raise ParseError(index, f"bad numeric array ({e})") from None
    return Utterance(rec["id"], log_ppg, alignment,
                     rec.get("score"), rec.get("rater_scores"))


def load_dataset(path):
    """Read and validate a dataset file.

    Record indices in error messages count utterance records from 0
    (the header is not counted).
    """
    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines:
        raise ParseError("header", "empty file, header line required")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ParseError("header", f"invalid JSON ({e.msg})") from None
    if not isinstance(header, dict) or "phoneme_count" not in header:
        raise ParseError("header", "header must be an object with phoneme_count")
    if header.get("format_version") != FORMAT_VERSION:
        raise ParseError("header", f"unsupported format_version {header.get('format_version')!r}")
    utts = []
    for i, line in enumerate(lines[1:]):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(i, f"invalid JSON ({e.msg})") from None
        utts.append(_parse_utterance(rec, i))
    return Dataset(tuple(utts), int(header["phoneme_count"]))


# --- alignment and ranks ---------------------------------------------------

def alignment_to_matrix(alignment, C):
    ali = np.asarray(alignment, dtype=np.int64)
    if np.any((ali < 0) | (ali >= C)):
        raise ValueError(f"alignment index outside [0, {C})")
    Y = np.zeros((ali.size, C), dtype=np.int8)
    Y[np.arange(ali.size), ali] = 1
    return Y


def score_to_rank(score, M):
    """Nearest of M evenly spaced levels on [0, 5], as a 1-based rank."""
    r = 1 + np.floor(np.asarray(score, dtype=np.float64) / SCORE_MAX * (M - 1) + 0.5)
    return np.clip(r, 1, M).astype(np.int64)


def rank_to_score(rank, M):
    return (np.asarray(rank, dtype=np.float64) - 1) * SCORE_MAX / (M - 1)


def discretize_scores(d, M=21):
    if M < 2:
        raise ValueError(f"rank count M={M} < 2")
    ranks = score_to_rank(d.scores(), M)
    return dict(zip(d.ids, ranks.tolist()))


def split_anchor_set(d, M, N, seed):
    """Split ``d`` into an anchor set with exactly N utterances per occupied
    rank, and the remainder.  Returns ``(anchors, rest)``."""
    if N < 1:
        raise ValueError(f"per-rank count N={N} < 1")
    ranks = np.array(list(discretize_scores(d, M).values()), dtype=np.int64)
    rng = np.random.default_rng(seed)
    picked = []
    for r in np.unique(ranks):
        members = np.flatnonzero(ranks == r)
        if members.size < N:
            raise DatasetError(
                f"rank {r} has {members.size} utterance(s), fewer than N={N}")
        picked.extend(rng.choice(members, size=N, replace=False).tolist())
    chosen = np.zeros(len(d), dtype=bool)
    chosen[picked] = True
    return d.subset(np.flatnonzero(chosen)), d.subset(np.flatnonzero(~chosen))
