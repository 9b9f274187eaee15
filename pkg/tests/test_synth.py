import numpy as np
import pytest

from orars.features import classic_gop_sentence_score
from orars.metrics import scc
from orars.synth import SynthConfig, generate_corpus


def test_noiseless_gop_ranks_match_quality():
    cfg = SynthConfig(n_utterances=150, C=10, quality_noise=0.0, rater_noise=0.0, seed=3)
    d, q = generate_corpus(cfg, return_quality=True)
    gop = np.array([classic_gop_sentence_score(u) for u in d])
    assert np.array_equal(np.argsort(gop), np.argsort(q))
    assert scc(gop, q) == pytest.approx(1.0, abs=1e-12)


def test_same_seed_same_corpus():
    cfg = SynthConfig(n_utterances=20, seed=9)
    a, b = generate_corpus(cfg), generate_corpus(cfg)
    for u, v in zip(a, b):
        assert u.id == v.id
        assert np.array_equal(u.log_ppg, v.log_ppg)
        assert np.array_equal(u.rater_scores, v.rater_scores)


def test_rows_normalised_and_scores_valid():
    d = generate_corpus(SynthConfig(n_utterances=40, C=7, T_range=(1, 30), seed=1))
    for u in d:
        assert np.all(np.abs(np.exp(u.log_ppg).sum(axis=1) - 1) <= 1e-9)
        assert u.rater_scores.size == 4
        assert np.all(np.mod(u.rater_scores * 4, 1) == 0)
        assert 1 <= u.n_frames <= 30
        assert u.score == pytest.approx(u.rater_scores.mean(), abs=1e-12)


def test_quality_raises_target_posterior():
    d, q = generate_corpus(SynthConfig(n_utterances=300, seed=2), return_quality=True)
    gop = np.array([classic_gop_sentence_score(u) for u in d])
    assert scc(gop, q) > 0.5


@pytest.mark.parametrize("kw", [{"n_utterances": 0}, {"C": 1}, {"T_range": (5, 2)},
                                {"rater_noise": -1.0}])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        SynthConfig(**kw)
