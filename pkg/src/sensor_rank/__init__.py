"""Classify short social-media posts and rank candidate social sensors.

The pipeline: normalize and vectorize post text, train a three-class
relevance model, aggregate per-user activity statistics, and rank candidate
users on a follower graph by an adapted topic-specific PageRank plus two
focus percentages.
"""

from .classify import (
    EvalReport,
    LabeledDataset,
    MnnbModel,
    TrainingConfig,
    cross_validate,
    dataset_from_corpus,
    evaluate,
    info_gain_rank,
    load_model,
    predict,
    predict_many,
    save_model,
    smote,
    subsample_spread,
    train_mnnb,
)
from .corpus import (
    LABEL_ORDER,
    Corpus,
    FollowerGraph,
    Label,
    TweetRecord,
    keyword_filter,
    load_corpus,
    load_exclusions,
    load_follower_graph,
    write_corpus,
    write_follower_graph,
)
from .forest import RfModel, train_rf
from .keywords import DEFAULT_KEYWORDS, EXPANSION_KEYWORDS, SEED_KEYWORDS, expand_keywords
from .rank import (
    RankConfig,
    RankingReport,
    RankVector,
    TransitionMatrix,
    UserStats,
    build_transition,
    candidate_filter,
    compute_user_stats,
    connected_components,
    overall_focus,
    ranking_report,
    topic_focus,
    twitterrank,
)
from .synth import SynthConfig, generate, oracle_linear_solve, oracle_nb_posterior
from .text import (
    DROP,
    ReplacementTable,
    Vocabulary,
    build_vocabulary,
    load_stopwords,
    ngrams,
    normalize,
    tfidf_rank,
    vectorize,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_KEYWORDS",
    "DROP",
    "EXPANSION_KEYWORDS",
    "EvalReport",
    "Corpus",
    "FollowerGraph",
    "LABEL_ORDER",
    "Label",
    "LabeledDataset",
    "MnnbModel",
    "RankConfig",
    "RankVector",
    "RankingReport",
    "ReplacementTable",
    "RfModel",
    "SEED_KEYWORDS",
    "SynthConfig",
    "TrainingConfig",
    "TransitionMatrix",
    "TweetRecord",
    "UserStats",
    "Vocabulary",
    "build_transition",
    "build_vocabulary",
    "candidate_filter",
    "compute_user_stats",
    "connected_components",
    "cross_validate",
    "dataset_from_corpus",
    "evaluate",
    "expand_keywords",
    "generate",
    "info_gain_rank",
    "keyword_filter",
    "load_corpus",
    "load_exclusions",
    "load_follower_graph",
    "load_model",
    "load_stopwords",
    "ngrams",
    "normalize",
    "oracle_linear_solve",
    "oracle_nb_posterior",
    "overall_focus",
    "predict",
    "predict_many",
    "ranking_report",
    "save_model",
    "smote",
    "subsample_spread",
    "tfidf_rank",
    "topic_focus",
    "train_mnnb",
    "train_rf",
    "twitterrank",
    "vectorize",
    "write_corpus",
    "write_follower_graph",
    "__version__",
]
