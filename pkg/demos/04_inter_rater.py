"""
How well do the raters agree with each other?
=============================================

Every synthetic utterance carries four noisy rater scores.  Comparing
each rater with the mean of the others gives a human-agreement reference
for the automatic scorers.
"""

import numpy as np

from orars import SynthConfig, generate_corpus, inter_rater_baseline

for noise in (0.25, 0.5, 1.0):
    corpus = generate_corpus(SynthConfig(n_utterances=300, rater_noise=noise, seed=4))
    # raters x utterances
    R = np.stack([u.rater_scores for u in corpus], axis=1)
    loo = inter_rater_baseline(R, "leave_one_out")
    pair = inter_rater_baseline(R, "pairwise")
    print(f"rater noise {noise:4.2f}: leave-one-out PCC {loo.pcc:.3f} MAE {loo.mae:.3f} | "
          f"pairwise PCC {pair.pcc:.3f} MAE {pair.mae:.3f}")
