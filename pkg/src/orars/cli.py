"""Command-line interface: ``orars <subcommand> [options]``.

Every subcommand accepts ``--config FILE``: a text file of ``key = value``
lines whose keys are the long option names (dashes or underscores).  Values
given on the command line win over the file.
"""

import argparse
import csv
import json
import sys
from dataclasses import replace

import numpy as np

from .dataset import DatasetError, format_real, load_dataset, save_dataset, score_to_rank, \
    split_anchor_set
from .experiment import ALGORITHMS, ExperimentConfig, cross_validate, thread_limit
from .features import AGOP_MODES, extract_features, feature_matrix, pca_project
from .metrics import evaluate, inter_rater_baseline
from .nn import CheckpointError, TrainConfig, load_model, save_model
from .ranking import (anchor_value_to_score, predict_nnr, score_anchor_set,
                      score_rank_placement, train_classifier, train_nnr)
from .synth import SynthConfig, generate_corpus

TRAINABLE = ("orars_rank", "orars_anchor", "nnr")
USER_ERRORS = (DatasetError, CheckpointError, ValueError, OSError, KeyError)


class UsageError(Exception):
    pass


def read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def _apply_config(parser, values):
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in values.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} expects true/false, got {value!r}")
            value = value.lower() in ("true", "1", "yes")
        elif action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[key] = value
        action.required = False
    parser.set_defaults(**defaults)


# --- argument definitions --------------------------------------------------

def _add_train_flags(p):
    g = p.add_argument_group("training")
    g.add_argument("--lr", type=float, default=1e-4, help="Adam learning rate")
    g.add_argument("--epochs", type=int, default=30)
    g.add_argument("--batch-size", type=int, default=None,
                   help="mini-batch size (default 1024 for the classifier, 4 for nnr)")
    g.add_argument("--validation-fraction", type=float, default=0.10)
    g.add_argument("--pairs-per-utterance", type=int, default=50,
                   help="classifier pairs drawn per epoch, per training utterance")
    g.add_argument("--pairs-per-epoch", type=int, default=None,
                   help="fixed pair count per epoch (overrides --pairs-per-utterance)")
    g.add_argument("--agop-mode", choices=AGOP_MODES, default="diagonal")
    g.add_argument("--M", type=int, default=21, help="score ranks for anchor mode")
    g.add_argument("--N", type=int, default=1, help="anchors per rank")


def _train_config(args, batch_size):
    return TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                       batch_size=args.batch_size or batch_size, seed=args.seed,
                       validation_fraction=args.validation_fraction,
                       pairs_per_epoch=args.pairs_per_epoch,
                       pairs_per_utterance=args.pairs_per_utterance)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orars",
        description="Sentence-level pronunciation scoring from phonetic posteriorgrams.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs = {}

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.add_argument("--config", help="key = value file providing option defaults")
        subs[name] = p
        return p

    p = add("synth", "Write a synthetic scored corpus.")
    p.add_argument("--out", required=True, help="dataset file to write")
    p.add_argument("--n-utterances", type=int, default=500)
    p.add_argument("--phonemes", type=int, default=20, help="phoneme inventory size C")
    p.add_argument("--t-min", type=int, default=20)
    p.add_argument("--t-max", type=int, default=60)
    p.add_argument("--quality-noise", type=float, default=0.1)
    p.add_argument("--rater-noise", type=float, default=0.5)
    p.add_argument("--raters", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)

    p = add("extract-features", "Write aGOP+cGOP feature vectors as CSV.")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--agop-mode", choices=AGOP_MODES, default="diagonal")

    p = add("train", "Train a comparison classifier or the regressor baseline.")
    p.add_argument("--dataset", required=True)
    p.add_argument("--algorithm", choices=TRAINABLE, default="orars_rank")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)

    p = add("score", "Score utterances with a trained checkpoint.")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="dataset file to score")
    p.add_argument("--train-ref", help="reference dataset (required for orars checkpoints)")

    p = add("evaluate", "Compare predictions with human scores.")
    p.add_argument("--dataset", required=True, help="dataset holding the human scores")
    p.add_argument("--predictions", help="CSV of id,score lines")
    p.add_argument("--inter-rater", action="store_true",
                   help="report human agreement from rater_scores instead")
    p.add_argument("--method", choices=("leave_one_out", "pairwise"), default="leave_one_out")
    p.add_argument("--no-mae", action="store_true", help="predictions are not on the 0-5 scale")
    p.add_argument("--json", help="also write the report as JSON here")

    p = add("cross-validate", "K-fold cross-validation of one algorithm.")
    p.add_argument("--dataset", required=True)
    p.add_argument("--algorithm", choices=ALGORITHMS, default="orars_rank")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratify", action="store_true", help="stratify folds by score rank")
    p.add_argument("--nnr-batch-size", type=int, default=4)
    p.add_argument("--out", default="cv_report.json", help="JSON report path")
    p.add_argument("--predictions-out", help="optional CSV of per-utterance predictions")
    _add_train_flags(p)

    p = add("pca-project", "Project feature vectors onto their principal axes (CSV).")
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--features", choices=("cgop", "agop", "combined"), default="cgop")
    p.add_argument("--agop-mode", choices=AGOP_MODES, default="diagonal")
    p.add_argument("--out", default="-")

    return parser, subs


# --- subcommands -----------------------------------------------------------

def _open_out(path):
    return sys.stdout if path == "-" else open(path, "w", newline="", encoding="utf-8")


def _close_out(f):
    if f is not sys.stdout:
        f.close()


def cmd_synth(args):
    cfg = SynthConfig(n_utterances=args.n_utterances, C=args.phonemes,
                      T_range=(args.t_min, args.t_max), quality_noise=args.quality_noise,
                      rater_noise=args.rater_noise, n_raters=args.raters, seed=args.seed)
    save_dataset(generate_corpus(cfg), args.out)
    print(f"wrote {cfg.n_utterances} utterances to {args.out}", file=sys.stderr)


def cmd_extract_features(args):
    d = load_dataset(args.dataset)
    X = feature_matrix(d, args.agop_mode)
    f = _open_out(args.out)
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["id", "score"] + [f"f{i}" for i in range(X.shape[1])])
    for u, row in zip(d, X):
        w.writerow([u.id, "" if u.score is None else format_real(u.score)]
                   + [format_real(v) for v in row])
    _close_out(f)


def cmd_train(args):
    d = load_dataset(args.dataset)
    config = {"algorithm": args.algorithm, "agop_mode": args.agop_mode,
              "M": args.M, "N": args.N, "phoneme_count": d.phoneme_count}
    with thread_limit():
        if args.algorithm == "nnr":
            cfg = _train_config(args, 4)
            model = train_nnr(d, cfg, agop_mode=args.agop_mode)
        else:
            cfg = _train_config(args, 1024)
            train = d
            if args.algorithm == "orars_anchor":
                _, train = split_anchor_set(d, args.M, args.N, args.seed)
            model = train_classifier(train, cfg, agop_mode=args.agop_mode)
    config["train"] = cfg.to_dict()
    save_model(args.out, model, config, args.seed)
    print(f"wrote {args.algorithm} checkpoint to {args.out}", file=sys.stderr)


def cmd_score(args):
    model, meta = load_model(args.model)
    config = meta["config"]
    algorithm = config.get("algorithm", "orars_rank")
    mode = config.get("agop_mode", "diagonal")
    d = load_dataset(args.input)
    X = feature_matrix(d, mode)
    if X.shape[1] * (1 if algorithm == "nnr" else 2) != model.input_dim:
        raise UsageError(f"{args.input}: feature width {X.shape[1]} does not fit the model")
    if algorithm == "nnr":
        preds = predict_nnr(model, X)
    else:
        if not args.train_ref:
            raise UsageError(f"--train-ref is required to score with a {algorithm} model")
        ref = load_dataset(args.train_ref)
        if algorithm == "orars_rank":
            R = feature_matrix(ref, mode)
            y = ref.scores()
            preds = [score_rank_placement(model, R, y, x).predicted_score for x in X]
        else:
            M, N = config["M"], config["N"]
            anchors, _ = split_anchor_set(ref, M, N, meta["seed"])
            A = feature_matrix(anchors, mode)
            ranks = score_to_rank(anchors.scores(), M)
            preds = [anchor_value_to_score(score_anchor_set(model, A, ranks, N, x), ranks, M)
                     for x in X]
    for u, p in zip(d, preds):
        print(f"{u.id}, {p:.6f}")


def _read_predictions(path):
    out = {}
    with open(path, newline="", encoding="utf-8") as f:
        for lineno, row in enumerate(csv.reader(f), 1):
            if not row or row[0].strip() in ("", "id"):
                continue
            if len(row) < 2:
                raise UsageError(f"{path}:{lineno}: expected 'id, score'")
            try:
                out[row[0].strip()] = float(row[1])
            except ValueError:
                raise UsageError(f"{path}:{lineno}: score {row[1]!r} is not a number") from None
    return out


def cmd_evaluate(args):
    d = load_dataset(args.dataset)
    if args.inter_rater:
        missing = [u.id for u in d if u.rater_scores is None]
        if missing:
            raise UsageError(f"utterance {missing[0]!r} has no rater_scores")
        counts = {u.rater_scores.size for u in d}
        if len(counts) != 1:
            raise UsageError("all utterances must have the same number of raters")
        report = inter_rater_baseline(np.stack([u.rater_scores for u in d], axis=1), args.method)
    else:
        if not args.predictions:
            raise UsageError("either --predictions or --inter-rater is required")
        preds = _read_predictions(args.predictions)
        missing = [i for i in d.ids if i not in preds]
        if missing:
            raise UsageError(f"no prediction for utterance {missing[0]!r}")
        p = np.array([preds[i] for i in d.ids])
        report = evaluate(p, d.scores(), not args.no_mae, label=args.predictions)
    sys.stdout.write(report.table())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as f:
            f.write(report.to_json())


def cmd_cross_validate(args):
    # --seed is the experiment seed; per-fold training seeds are derived from it
    train = replace(_train_config(args, 1024), seed=TrainConfig().seed)
    cfg = ExperimentConfig(dataset=args.dataset, algorithm=args.algorithm, folds=args.folds,
                           M=args.M, N=args.N, train=train,
                           nnr_batch_size=args.nnr_batch_size, agop_mode=args.agop_mode,
                           output=args.out, seed=args.seed, stratify=args.stratify)
    result = cross_validate(cfg)
    record = {"config": cfg.to_dict(), "dataset": args.dataset,
              "report": result.report.to_dict()}
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(json.dumps(record, sort_keys=True, indent=2) + "\n")
    if args.predictions_out:
        with open(args.predictions_out, "w", encoding="utf-8") as f:
            for uid, p, k in zip(result.ids, result.predictions, result.fold_of):
                f.write(f"{uid}, {format_real(p)}, {k}\n")
    sys.stdout.write(result.report.table())


def cmd_pca_project(args):
    d = load_dataset(args.dataset)
    feats = [extract_features(u, args.agop_mode) for u in d]
    pick = {"cgop": lambda f: f.cgop, "agop": lambda f: f.agop, "combined": lambda f: f.combined}
    coords = pca_project([pick[args.features](f) for f in feats], args.k)
    f = _open_out(args.out)
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["id", "score"] + [f"pc{i + 1}" for i in range(args.k)])
    for u, row in zip(d, coords):
        w.writerow([u.id, "" if u.score is None else format_real(u.score)]
                   + [format_real(v) for v in row])
    _close_out(f)


COMMANDS = {
    "synth": cmd_synth,
    "extract-features": cmd_extract_features,
    "train": cmd_train,
    "score": cmd_score,
    "evaluate": cmd_evaluate,
    "cross-validate": cmd_cross_validate,
    "pca-project": cmd_pca_project,
}


def main(argv=None):
    """Run the CLI; returns the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    args = None
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    try:
        early, _ = pre.parse_known_args(argv)
        if early.config and early.command in subs:
            _apply_config(subs[early.command], read_config_file(early.config))
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("orars: error: a subcommand is required", file=sys.stderr)
            return 2
        COMMANDS[args.command](args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    except UsageError as e:
        print(f"orars {args.command}: error: {e}" if args else f"orars: error: {e}",
              file=sys.stderr)
        return 2
    except USER_ERRORS as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"orars {args.command}: error: {msg}" if args else f"orars: error: {msg}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
