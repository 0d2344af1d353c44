"""Harvest keyword bootstrap: expert seed terms plus TF-IDF expansion."""

from __future__ import annotations

from typing import Iterable

from .corpus import Corpus
from .text import ReplacementTable, build_vocabulary, tfidf_rank

__all__ = ["SEED_KEYWORDS", "EXPANSION_KEYWORDS", "DEFAULT_KEYWORDS", "expand_keywords"]

#: Hand-picked high-recall seed terms for the mosquito-borne disease topic.
SEED_KEYWORDS: tuple[str, ...] = (
    "dengue",
    "combateadengue",
    "focodengue",
    "todoscontradengue",
    "aedeseagypti",
    "zika",
    "chikungunya",
    "virus",
)

#: Terms promoted from a TF-IDF ranking of an initial seed-keyword harvest.
EXPANSION_KEYWORDS: tuple[str, ...] = (
    "microcefalia",
    "transmitido",
    "epidemia",
    "transmissao",
    "doenca",
    "eagypti",
    "doencas",
    "gestantes",
    "infeccao",
    "mosquitos",
)

#: The operational harvesting set: seeds plus their expansion, in that order.
DEFAULT_KEYWORDS: tuple[str, ...] = SEED_KEYWORDS + EXPANSION_KEYWORDS


def expand_keywords(
    seed: Iterable[str],
    corpus: Corpus,
    stopwords: Iterable[str] = (),
    table: ReplacementTable | None = None,
    top_n: int = 10,
) -> list[str]:
    """Extend a seed keyword list with the corpus's top TF-IDF unigrams.

    The corpus is expected to be a harvest made with the seed terms. Seeds and
    stopwords never re-enter through the expansion; the result keeps the seed
    order followed by the new terms in descending score order.
    """
    if top_n < 0:
        raise ValueError(f"top_n must be >= 0, got {top_n}")
    seed = [str(s) for s in seed]
    vocab = build_vocabulary(corpus, table, n_max=1)
    blocked = set(seed)
    extra: list[str] = []
    for term, _score in tfidf_rank(corpus, vocab, stopwords):
        if term in blocked:
            continue
        extra.append(term)
        if len(extra) == top_n:
            break
    return seed + extra
