"""Synthetic scored corpora with a known latent pronunciation quality.

Each utterance draws a quality ``q ~ U[0, 5]``.  In every frame the aligned
phoneme gets posterior ``0.2 + 0.79 q / 5``, shifted by a per-phoneme
difficulty, a per-utterance channel offset and frame noise (all scaled by
``quality_noise``).  The rest of the mass is split over the competing
phonemes by a Dirichlet draw whose concentration grows with ``q``: poor
utterances put their confusion on a few competitors, good ones spread it
thinly.  Raters see ``q`` plus
Gaussian noise, rounded to quarter points.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, Utterance

PROB_MIN, PROB_MAX = 0.02, 0.995
COMPETITOR_FLOOR = 1e-10
MAX_SEGMENT = 5


@dataclass(frozen=True)
class SynthConfig:
    n_utterances: int = 500
    C: int = 20
    T_range: tuple = (20, 60)
    quality_noise: float = 0.1
    rater_noise: float = 0.5
    n_raters: int = 4
    seed: int = 0
    difficulty_scale: float = 2.0
    channel_scale: float = 2.0

    def __post_init__(self):
        lo, hi = self.T_range
        if self.n_utterances < 1 or self.n_raters < 1:
            raise ValueError("n_utterances and n_raters must be positive")
        if self.C < 2:
            raise ValueError("phoneme inventory C must be >= 2")
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid T_range {self.T_range}")
        if min(self.quality_noise, self.rater_noise, self.difficulty_scale,
               self.channel_scale) < 0:
            raise ValueError("noise levels must be non-negative")


def target_posterior(q):
    return 0.2 + 0.79 * np.asarray(q) / 5.0


def confusion_concentration(q):
    return 0.2 + 0.6 * np.asarray(q)


def _alignment(rng, T, C):
    out = []
    prev = -1
    while len(out) < T:
        ph = int(rng.integers(C - 1))
        if ph >= prev >= 0:
            ph += 1  # never repeat the previous phoneme
        out += [ph] * int(rng.integers(1, MAX_SEGMENT + 1))
        prev = ph
    return np.array(out[:T])


def _utterance(rng, uid, q, cfg, difficulty):
    C = cfg.C
    T = int(rng.integers(cfg.T_range[0], cfg.T_range[1] + 1))
    ali = _alignment(rng, T, C)
    channel = cfg.channel_scale * rng.normal()
    pi = target_posterior(q) - cfg.quality_noise * (
        cfg.difficulty_scale * difficulty[ali] + channel + rng.normal(size=T))
    pi = np.clip(pi, PROB_MIN, PROB_MAX)
    others = rng.dirichlet(np.full(C - 1, confusion_concentration(q)), size=T)
    others = np.maximum(others, COMPETITOR_FLOOR)
    others *= ((1 - pi) / others.sum(axis=1))[:, None]
    P = np.empty((T, C))
    keep = np.ones((T, C), dtype=bool)
    keep[np.arange(T), ali] = False
    P[keep] = others.ravel()
    P[np.arange(T), ali] = pi
    raters = np.clip(q + cfg.rater_noise * rng.normal(size=cfg.n_raters), 0.0, 5.0)
    raters = np.round(raters * 4) / 4
    return Utterance(uid, np.log(P), ali, rater_scores=raters)


def generate_corpus(cfg=None, return_quality=False):
    """Build a ``Dataset``; with ``return_quality`` also return the latent
    qualities in utterance order."""
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(cfg.seed)
    difficulty = rng.uniform(0.0, 1.0, size=cfg.C)
    qs = rng.uniform(0.0, 5.0, size=cfg.n_utterances)
    utts = tuple(_utterance(rng, f"utt{i:05d}", q, cfg, difficulty) for i, q in enumerate(qs))
    d = Dataset(utts, cfg.C)
    return (d, qs) if return_quality else d
