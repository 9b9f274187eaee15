"""Sentence-level pronunciation scoring with GOP statistics and ordinal
regression over anchored reference samples."""

from .dataset import (Dataset, Utterance, alignment_to_matrix, discretize_scores,
                      load_dataset, save_dataset, split_anchor_set)
from .features import (FeatureVector, classic_gop_sentence_score, compute_agop, compute_cgop,
                       extract_features, feature_matrix, pca_fit, pca_project)
from .metrics import EvalReport, inter_rater_baseline, mae, pcc, scc
from .nn import MlpModel, TrainConfig, load_model, save_model
from .ranking import (make_pair, predict_nnr, score_anchor_set, score_rank_placement,
                      train_classifier, train_nnr)
from .synth import SynthConfig, generate_corpus
from .experiment import ExperimentConfig, cross_validate, run_cross_validation

__version__ = "0.1.0"
