"""
Sentence-level GOP features and a 2-D PCA view
===============================================

Generates a small synthetic corpus, extracts the aGOP and cGOP vectors of
every utterance, and projects the cGOP vectors onto their first two
principal components.  Good and poor speakers separate along the first
component.
"""

import numpy as np

from orars import SynthConfig, extract_features, generate_corpus, pca_fit

# a corpus of 200 utterances over a 20-phoneme inventory
corpus = generate_corpus(SynthConfig(n_utterances=200, seed=1))
u = corpus[0]
print(f"{u.id}: {u.n_frames} frames, log-PPG {u.log_ppg.shape}, score {u.score:.2f}")

# aGOP: one average log posterior per phoneme (0 for phonemes never aligned)
f = extract_features(u)
print("aGOP of occupied phonemes:", np.round(f.agop[f.agop != 0], 3))

# cGOP: mean and std of the sorted competitor log posteriors
C = corpus.phoneme_count
print("cGOP means (top 5 competitors):", np.round(f.cgop[:5], 3))
print("cGOP stds  (top 5 competitors):", np.round(f.cgop[C - 1:C + 4], 3))

# project all cGOP vectors onto two principal components
cgop = np.array([extract_features(v).cgop for v in corpus])
fit = pca_fit(cgop, 2)
coords = fit.transform(cgop)
print("explained variance ratio:", np.round(fit.explained_variance_ratio, 3))

# bucket by human score to see the separation along pc1
scores = corpus.scores()
for lo, hi in [(0, 2), (2, 3.5), (3.5, 5)]:
    sel = (scores >= lo) & ((scores < hi) | (hi == 5))
    print(f"score {lo:3.1f}-{hi:3.1f}: n={sel.sum():3d}  mean pc1={coords[sel, 0].mean():+.3f}")
