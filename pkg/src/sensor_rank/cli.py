"""Command-line pipeline: keywords, train, eval, classify, rank, report, synth.

Every command is a thin composition of module operations. Given identical
inputs, config, and seed, outputs are byte-identical; all diagnostics go to
stderr (SENSOR_RANK_LOG selects the level), data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .classify import (
    TrainingConfig,
    cross_validate,
    dataset_from_corpus,
    dumps_json,
    load_model,
    predict_many,
    rebalance,
    save_model,
    train_mnnb,
    train_rf,
)
from .corpus import (
    Corpus,
    load_corpus,
    load_exclusions,
    load_follower_graph,
    write_corpus,
    write_follower_graph,
)
from .keywords import SEED_KEYWORDS, expand_keywords
from .rank import (
    RankConfig,
    REPORT_METRICS,
    build_transition,
    candidate_filter,
    compute_user_stats,
    connected_components,
    ranking_report,
    report_to_tsv,
    twitterrank,
    write_report,
)
from .synth import SynthConfig, generate
from .text import ReplacementTable, build_vocabulary, load_stopwords, normalize, tfidf_rank, vectorize

log = logging.getLogger("sensor_rank")

_CONFIG_KEYS = {
    "corpus", "graph", "model", "out", "seed", "gamma", "tol", "max_iter",
    "min_relevant", "k", "ngrams", "classifier", "trees", "alpha",
    "smote_percent", "smote_k", "spread_ratio", "folds", "exclusions",
    "table", "stopwords", "seeds", "metric",
}

_FLAG_KEYS = (
    "corpus", "graph", "model", "out", "seed", "gamma", "tol", "max_iter",
    "min_relevant", "k", "ngrams", "classifier", "trees", "alpha",
    "smote_percent", "smote_k", "spread_ratio", "folds", "exclusions",
)


class Settings:
    """Config-file values overlaid with command-line flags; flags win.

    The synth command interprets --config as a SynthConfig file instead, so
    it constructs Settings with use_config_file=False.
    """

    def __init__(self, args: argparse.Namespace, use_config_file: bool = True):
        values: dict = {}
        if use_config_file and args.config:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
            if not isinstance(raw, dict):
                raise ValueError(f"{args.config}: config must be a JSON object")
            unknown = set(raw) - _CONFIG_KEYS
            if unknown:
                raise ValueError(
                    f"{args.config}: unknown config key(s) {sorted(unknown)}"
                )
            values.update(raw)
        for key in _FLAG_KEYS:
            flag = getattr(args, key, None)
            if flag is not None:
                values[key] = flag
        self.values = values

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, key: str):
        value = self.values.get(key)
        if value is None:
            hint = "--" + key.replace("_", "-")
            raise ValueError(f"{hint} is required for this command")
        return value


def _table(settings: Settings) -> ReplacementTable:
    path = settings.get("table")
    return ReplacementTable.from_csv(path) if path else ReplacementTable.default()


def _stopwords(settings: Settings) -> frozenset[str]:
    path = settings.get("stopwords")
    return load_stopwords(path) if path else frozenset()

def _exclusions(settings: Settings) -> frozenset[str]:
    path = settings.get("exclusions")
    return load_exclusions(path) if path else frozenset()


def _out_dir(settings: Settings) -> Path:
    out = Path(settings.require("out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _training_config(settings: Settings) -> TrainingConfig:
    return TrainingConfig(
        classifier=settings.get("classifier", "rf"),
        alpha=float(settings.get("alpha", 1.0)),
        n_trees=int(settings.get("trees", 100)),
        smote_percent=int(settings.get("smote_percent", 100)),
        smote_k=int(settings.get("smote_k", 5)),
        spread_ratio=(
            float(settings.values["spread_ratio"])
            if settings.get("spread_ratio") is not None
            else None
        ),
    )


def _rank_config(settings: Settings) -> RankConfig:
    return RankConfig(
        gamma=float(settings.get("gamma", 0.85)),
        tol=float(settings.get("tol", 1e-9)),
        max_iter=int(settings.get("max_iter", 1000)),
        min_relevant=int(settings.get("min_relevant", 3)),
        k=int(settings.get("k", 10)),
    )


def _fmt4(x: float) -> str:
    return f"{x:.4f}"


def _labeled_corpus(settings: Settings) -> Corpus:
    corpus = load_corpus(settings.require("corpus")).labeled()
    if len(corpus) == 0:
        raise ValueError("corpus contains no labeled records")
    return corpus


def cmd_keywords(settings: Settings) -> int:
    table = _table(settings)
    stopwords = _stopwords(settings)
    corpus = load_corpus(settings.require("corpus"))
    seeds = [str(s) for s in settings.get("seeds", SEED_KEYWORDS)]
    top_n = int(settings.get("k", 10))
    vocab = build_vocabulary(corpus, table, n_max=1)
    blocked = set(seeds)
    expansion = [
        (term, score)
        for term, score in tfidf_rank(corpus, vocab, stopwords)
        if term not in blocked
    ][:top_n]
    merged = expand_keywords(seeds, corpus, stopwords, table, top_n)
    lines = [f"seed keywords ({len(seeds)}):"]
    lines += [f"  {s}" for s in seeds]
    lines.append(f"expansion candidates (top {top_n}):")
    lines += [f"  {term}\t{score:.4f}" for term, score in expansion]
    lines.append(f"merged keywords ({len(merged)}):")
    lines += [f"  {term}" for term in merged]
    print("\n".join(lines))
    if settings.get("out"):
        out = _out_dir(settings)
        (out / "keywords.txt").write_text(
            "".join(term + "\n" for term in merged), encoding="utf-8"
        )
        log.info("wrote %s", out / "keywords.txt")
    return 0


def _fit(settings: Settings, corpus: Corpus):
    """Shared by train: vocabulary, rebalanced dataset, fitted model."""
    table = _table(settings)
    tcfg = _training_config(settings)
    seed = int(settings.require("seed"))
    n_max = int(settings.get("ngrams", 3))
    vocab = build_vocabulary(corpus, table, n_max=n_max)
    data = dataset_from_corpus(corpus, vocab, table)
    data = rebalance(data, tcfg, [seed])
    if tcfg.classifier == "mnnb":
        model = train_mnnb(data, tcfg.alpha)
    else:
        model = train_rf(data, tcfg.n_trees, seed)
    return model, vocab, table, data


def cmd_train(settings: Settings) -> int:
    corpus = _labeled_corpus(settings)
    model_path = settings.require("model")
    model, vocab, table, data = _fit(settings, corpus)
    save_model(model, vocab, table.table_hash(), model_path)
    log.info(
        "trained %s on %d instances (%d features) -> %s",
        type(model).__name__, len(data), len(vocab), model_path,
    )
    return 0


def cmd_eval(settings: Settings) -> int:
    corpus = _labeled_corpus(settings)
    table = _table(settings)
    tcfg = _training_config(settings)
    seed = int(settings.require("seed"))
    folds = int(settings.get("folds", 10))
    n_max = int(settings.get("ngrams", 3))
    out = _out_dir(settings)
    vocab = build_vocabulary(corpus, table, n_max=n_max)
    data = dataset_from_corpus(corpus, vocab, table)
    report = cross_validate(data, folds, tcfg, seed)
    doc = {
        "accuracy": report.accuracy,
        "weighted_f": report.weighted_f,
        "rmse": report.rmse,
        "per_class": {
            label.value: {
                "precision": p, "recall": r, "f1": f,
            }
            for label, (p, r, f) in report.per_class.items()
        },
        "confusion": [[int(x) for x in row] for row in report.confusion],
    }
    (out / "eval.json").write_text(dumps_json(doc, _fmt4) + "\n", encoding="utf-8")
    tsv = [
        f"accuracy\t{report.accuracy:.4f}",
        f"weighted_f\t{report.weighted_f:.4f}",
        f"rmse\t{report.rmse:.4f}",
    ]
    for label, (p, r, f) in report.per_class.items():
        tsv.append(f"precision_{label.value}\t{p:.4f}")
        tsv.append(f"recall_{label.value}\t{r:.4f}")
        tsv.append(f"f1_{label.value}\t{f:.4f}")
    for i, label in enumerate(report.per_class):
        row = "\t".join(str(int(x)) for x in report.confusion[i])
        tsv.append(f"confusion_{label.value}\t{row}")
    (out / "eval.tsv").write_text("\n".join(tsv) + "\n", encoding="utf-8")
    print(
        f"accuracy={report.accuracy:.4f} "
        f"weighted_f={report.weighted_f:.4f} rmse={report.rmse:.4f}"
    )
    return 0


def cmd_classify(settings: Settings) -> int:
    corpus = load_corpus(settings.require("corpus"))
    table = _table(settings)
    out = _out_dir(settings)
    model, vocab, saved_hash = load_model(settings.require("model"))
    if saved_hash != table.table_hash():
        raise ValueError(
            "replacement table hash mismatch: the model was trained with a "
            "different normalization table"
        )
    vectors = [
        {k: float(v) for k, v in vectorize(normalize(r.text, table), vocab).items()}
        for r in corpus.records
    ]
    predictions = predict_many(model, vectors)
    records = tuple(
        dataclasses.replace(record, label=pred)
        for record, (pred, _) in zip(corpus.records, predictions)
    )
    write_corpus(Corpus(records), out / "classified.jsonl")
    tally: dict[str, int] = {}
    for pred, _ in predictions:
        tally[pred.value] = tally.get(pred.value, 0) + 1
    print(
        f"classified {len(records)} records: "
        + " ".join(f"{name.lower()}={tally.get(name, 0)}" for name in ("Relevant", "News", "Noise"))
    )
    return 0


def _rank_pipeline(settings: Settings):
    corpus = load_corpus(settings.require("corpus"))
    graph = load_follower_graph(settings.require("graph"))
    rcfg = _rank_config(settings)
    pairs = []
    for record in corpus.records:
        if record.label is None:
            raise ValueError(
                f"record {record.id} has no label; classify the corpus first"
            )
        pairs.append((record, record.label))
    stats = compute_user_stats(pairs)
    candidates = candidate_filter(stats, rcfg, _exclusions(settings))
    matrix = build_transition(candidates, graph)
    rank_vector = twitterrank(matrix, candidates, rcfg)
    return graph, rcfg, candidates, rank_vector


def cmd_rank(settings: Settings) -> int:
    out = _out_dir(settings)
    graph, rcfg, candidates, rank_vector = _rank_pipeline(settings)
    for metric in REPORT_METRICS:
        report = ranking_report(candidates, rank_vector, rcfg, metric)
        for path in write_report(report, out):
            log.info("wrote %s", path)
    components, friend_pairs = connected_components(
        graph, {u.user_id for u in candidates}
    )
    comp_doc = {
        "components": components,
        "friend_pairs": [list(p) for p in friend_pairs],
    }
    (out / "components.json").write_text(
        json.dumps(comp_doc, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(
        f"candidates={len(candidates)} iterations={rank_vector.iterations} "
        f"converged={str(rank_vector.converged).lower()} "
        f"residual={rank_vector.final_residual:.3e}"
    )
    return 0


def cmd_report(settings: Settings) -> int:
    metric = str(settings.get("metric", "tr"))
    _, rcfg, candidates, rank_vector = _rank_pipeline(settings)
    report = ranking_report(candidates, rank_vector, rcfg, metric)
    print(report_to_tsv(report), end="")
    return 0


def cmd_synth(settings: Settings, args: argparse.Namespace) -> int:
    if args.config:
        config = SynthConfig.from_json(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
    else:
        if args.seed is None:
            raise ValueError("--seed is required when no --config is given")
        config = SynthConfig(seed=args.seed)
    out = _out_dir(settings)
    corpus, graph, _ = generate(config)
    write_corpus(corpus, out / "corpus.jsonl")
    write_follower_graph(graph, out / "graph.csv")
    print(f"wrote {len(corpus)} tweets and {len(graph.edges)} edges")
    return 0


_COMMANDS = {
    "keywords": "print the seed keyword set with its TF-IDF expansion",
    "train": "fit a classifier on a labeled corpus and save the model",
    "eval": "stratified cross-validation report for a labeled corpus",
    "classify": "label a corpus with a saved model",
    "rank": "rank candidate users and write all three metric reports",
    "report": "print one ranking report (config key 'metric': tr/tf/of) to stdout",
    "synth": "generate a synthetic corpus and follower graph",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensor-rank",
        description="Classify topic-relevant posts and rank candidate social sensors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--corpus", help="tweet corpus (JSONL)")
        sp.add_argument("--graph", help="follower graph (CSV: follower_id,friend_id)")
        sp.add_argument("--model", help="model file path")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="PRNG seed for stochastic steps")
        sp.add_argument("--gamma", type=float, help="teleportation damping (default 0.85)")
        sp.add_argument("--tol", type=float, help="L1 convergence threshold (default 1e-9)")
        sp.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap (default 1000)")
        sp.add_argument(
            "--min-relevant", dest="min_relevant", type=int,
            help="relevant-tweet threshold for candidates (default 3)",
        )
        sp.add_argument("--k", type=int, help="report size / keyword expansion size (default 10)")
        sp.add_argument("--ngrams", type=int, choices=(1, 2, 3), help="n-gram order (default 3)")
        sp.add_argument("--classifier", choices=("mnnb", "rf"), help="classifier kind (default rf)")
        sp.add_argument("--trees", type=int, help="forest size (default 100)")
        sp.add_argument("--alpha", type=float, help="smoothing constant (default 1.0)")
        sp.add_argument(
            "--smote-percent", dest="smote_percent", type=int,
            help="minority over-sampling percent, multiple of 100 (default 100)",
        )
        sp.add_argument("--smote-k", dest="smote_k", type=int, help="neighbors for SMOTE (default 5)")
        sp.add_argument(
            "--spread-ratio", dest="spread_ratio", type=float,
            help="majority sub-sampling ratio cap (default: off)",
        )
        sp.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
        sp.add_argument("--exclusions", help="file with one excluded user id per line")
    return parser


_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    raw = os.environ.get("SENSOR_RANK_LOG", "warn").lower()
    level = _LOG_LEVELS.get(raw)
    logging.basicConfig(
        stream=sys.stderr,
        level=level if level is not None else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if level is None and raw:
        log.warning("unknown SENSOR_RANK_LOG value %r; using warn", raw)


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        settings = Settings(args, use_config_file=args.command != "synth")
        if args.command == "keywords":
            return cmd_keywords(settings)
        if args.command == "train":
            return cmd_train(settings)
        if args.command == "eval":
            return cmd_eval(settings)
        if args.command == "classify":
            return cmd_classify(settings)
        if args.command == "rank":
            return cmd_rank(settings)
        if args.command == "report":
            return cmd_report(settings)
        if args.command == "synth":
            return cmd_synth(settings, args)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
