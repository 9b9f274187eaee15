"""
Training a comparison classifier and scoring by rank placement
==============================================================

The classifier learns P(score_i > score_j) from pairs of feature vectors.
A new utterance is compared with every reference utterance; the summed win
probability gives its expected rank among the references, and the score
at that rank is the prediction.
"""

import numpy as np

from orars import (SynthConfig, TrainConfig, feature_matrix, generate_corpus, pcc,
                   score_rank_placement, train_classifier)

corpus = generate_corpus(SynthConfig(n_utterances=250, seed=2))
train, test = corpus.subset(range(200)), corpus.subset(range(200, 250))

# a short run keeps the demo quick; the defaults use 30 epochs
model = train_classifier(train, TrainConfig(epochs=10, seed=0))

# the training utterances serve as the reference set
R, ref_scores = feature_matrix(train), train.scores()
X = feature_matrix(test)

# look at one placement in detail
r = score_rank_placement(model, R, ref_scores, X[0])
print(f"{test[0].id}: expected rank k={r.k:.2f} of {len(ref_scores)}, "
      f"predicted {r.predicted_score:.2f}, human {test[0].score:.2f}")

preds = np.array([score_rank_placement(model, R, ref_scores, x).predicted_score for x in X])
print(f"held-out PCC over {len(test)} utterances: {pcc(preds, test.scores()):.3f}")
