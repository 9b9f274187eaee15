"""
Five-fold comparison of the sentence scorers
=============================================

Runs the same cross-validation split for the classic GOP average, the
direct neural regressor, and both comparison-based scorers, then prints
one summary line per method.  Set ``ORARS_THREADS`` to cap BLAS threads.
"""

from orars import ExperimentConfig, SynthConfig, TrainConfig, cross_validate, generate_corpus

corpus = generate_corpus(SynthConfig(n_utterances=300, seed=3))

# fewer epochs than the defaults so the whole script runs in about a minute
train = TrainConfig(epochs=8)

for algorithm in ("gop_mean", "nnr", "orars_rank", "orars_anchor"):
    cfg = ExperimentConfig(algorithm=algorithm, folds=5, seed=0, train=train)
    rep = cross_validate(cfg, corpus).report
    mae = "    /" if rep.mae is None else f"{rep.mae:.3f}"
    print(f"{algorithm:13s} MAE {mae}  PCC {rep.pcc:.3f}  SCC {rep.scc:.3f}")
