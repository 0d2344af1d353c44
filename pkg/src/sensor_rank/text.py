"""Text normalization, n-gram vocabularies, sparse count vectors, and TF-IDF ranking."""

from __future__ import annotations

import csv
import hashlib
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .corpus import Corpus

__all__ = [
    "DROP",
    "ReplacementTable",
    "Vocabulary",
    "normalize",
    "ngrams",
    "build_vocabulary",
    "vectorize",
    "tfidf_rank",
    "load_stopwords",
    "fold_accents",
]

#: Literal replacement value that deletes a token.
DROP = "<DROP>"

# Tokens are maximal ASCII alphanumeric runs of the lowercased, accent-folded text.
_TOKEN_RE = re.compile(r"[a-z0-9]+")
_VALID_TOKEN_RE = re.compile(r"^[a-z0-9]+$")

# Image links are recognized before generic URLs so they map to their own class.
_IMAGE_RE = re.compile(
    r"(?:https?://)?pic\.twitter\.com/\S+"
    r"|https?://\S+?\.(?:jpg|jpeg|png|gif)(?:\?\S*)?(?=\s|$)"
)
_URL_RE = re.compile(r"(?:https?://|www\.)\S+")

# ASCII emoticons: eyes, optional nose, one or more mouth characters. Unicode
# emoji need no rule of their own; they fall at token boundaries and vanish.
_EMOTICON_RE = re.compile(r"(?<![a-z0-9])(?:[:;=8][-'^o]?[()\[\]dpo3*\\/]+|<3+)(?![a-z0-9])")

# Laughter onomatopoeia mapped to the conventional token "funny".
_LAUGHTER_RE = re.compile(r"^(?:k{3,}|(?:ha){2,}|(?:rs){2,})$")

# Regional chat abbreviations removed outright by the default table.
_DEFAULT_LINGO = {
    "vc": DROP, "vcs": DROP, "q": DROP, "pq": DROP, "tb": DROP, "tbm": DROP,
    "td": DROP, "hj": DROP, "mt": DROP, "mto": DROP, "blz": DROP, "kd": DROP,
    "obg": DROP, "vlw": DROP, "flw": DROP, "rt": DROP, "mds": DROP, "sdds": DROP,
    "pfv": DROP, "pls": DROP,
}


def fold_accents(s: str) -> str:
    """Strip combining marks after NFD decomposition ("doença" -> "doenca")."""
    return "".join(c for c in unicodedata.normalize("NFD", s) if not unicodedata.combining(c))


def _canonical_token(tok: str) -> str:
    return fold_accents(tok.strip().lower())


@dataclass(frozen=True)
class ReplacementTable:
    """Exact token-to-token replacements applied after the built-in pattern classes.

    Keys and values are canonicalized (lowercase, accent-folded) and chains
    (a->b, b->c) are resolved at construction so that applying the table is
    idempotent. The value ``<DROP>`` deletes a token.
    """

    exact_map: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        canon: dict[str, str] = {}
        for key, value in self.exact_map.items():
            k = _canonical_token(key)
            v = value.strip() if value.strip() == DROP else _canonical_token(value)
            if not _VALID_TOKEN_RE.match(k):
                raise ValueError(f"replacement key is not a valid token: {key!r}")
            if v != DROP and not _VALID_TOKEN_RE.match(v):
                raise ValueError(f"replacement value is not a valid token: {value!r}")
            canon[k] = v
        object.__setattr__(self, "exact_map", _resolve_chains(canon))

    @classmethod
    def default(cls) -> "ReplacementTable":
        return cls(dict(_DEFAULT_LINGO))

    @classmethod
    def from_csv(cls, path: str | Path) -> "ReplacementTable":
        """Load a `from,to` CSV; the literal value <DROP> deletes the token."""
        entries: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                row = next(csv.reader([line]))
                if len(row) != 2:
                    raise ValueError(f"{path}: line {lineno}: expected 'from,to', got {line!r}")
                entries[row[0]] = row[1]
        return cls(entries)

    def table_hash(self) -> str:
        """Stable content hash used to pin preprocessing to a trained model."""
        payload = "\n".join(f"{k},{v}" for k, v in sorted(self.exact_map.items()))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _resolve_chains(mapping: dict[str, str]) -> dict[str, str]:
    resolved: dict[str, str] = {}
    for key in mapping:
        seen = {key}
        value = mapping[key]
        while value != DROP and value in mapping and mapping[value] != value:
            if value in seen:
                raise ValueError(f"replacement cycle involving {key!r}")
            seen.add(value)
            value = mapping[value]
        resolved[key] = value
    return resolved


def normalize(text: str, table: ReplacementTable | None = None) -> list[str]:
    """Turn raw post text into an ordered list of lowercase tokens.

    Lowercases, folds accents, maps URLs/image links to the tokens "url" and
    "image", drops emoticons, splits on non-alphanumeric boundaries, then maps
    pure digit runs to "number", laughter patterns to "funny", and applies the
    table's exact replacements. Any input yields a (possibly empty) sequence.
    """
    if table is None:
        table = ReplacementTable.default()
    s = fold_accents(text.lower())
    s = _IMAGE_RE.sub(" image ", s)
    s = _URL_RE.sub(" url ", s)
    s = _EMOTICON_RE.sub(" ", s)
    out: list[str] = []
    for tok in _TOKEN_RE.findall(s):
        if tok.isdigit():
            tok = "number"
        elif _LAUGHTER_RE.match(tok):
            tok = "funny"
        tok = table.exact_map.get(tok, tok)
        if tok != DROP:
            out.append(tok)
    return out


def ngrams(tokens: list[str], n_max: int) -> list[str]:
    """All contiguous k-grams for k=1..n_max, underscore-joined, ordered by (position, k)."""
    if not 1 <= n_max <= 3:
        raise ValueError(f"n_max must be in 1..3, got {n_max}")
    out: list[str] = []
    n = len(tokens)
    for i in range(n):
        for k in range(1, n_max + 1):
            if i + k <= n:
                out.append("_".join(tokens[i : i + k]))
    return out


@dataclass
class Vocabulary:
    """N-gram vocabulary with dense ids in first-appearance order.

    Immutable by convention once built; safe to share across workers.
    `term_freq` holds corpus-level total counts so TF-IDF ranking does not
    depend on re-tokenizing with the same replacement table.
    """

    term_to_id: dict[str, int]
    doc_freq: dict[int, int]
    n_max: int
    doc_count: int
    term_freq: dict[int, int]

    def __len__(self) -> int:
        return len(self.term_to_id)

    def terms_in_id_order(self) -> list[str]:
        return sorted(self.term_to_id, key=self.term_to_id.__getitem__)


def build_vocabulary(corpus: "Corpus", table: ReplacementTable | None = None, n_max: int = 1) -> Vocabulary:
    """Collect all n-grams of the corpus's normalized records into a Vocabulary."""
    if table is None:
        table = ReplacementTable.default()
    if len(corpus.records) == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    term_to_id: dict[str, int] = {}
    doc_freq: dict[int, int] = {}
    term_freq: dict[int, int] = {}
    for record in corpus.records:
        grams = ngrams(normalize(record.text, table), n_max)
        for g in grams:
            tid = term_to_id.setdefault(g, len(term_to_id))
            term_freq[tid] = term_freq.get(tid, 0) + 1
        for g in set(grams):
            tid = term_to_id[g]
            doc_freq[tid] = doc_freq.get(tid, 0) + 1
    return Vocabulary(term_to_id, doc_freq, n_max, len(corpus.records), term_freq)


def vectorize(tokens: list[str], vocab: Vocabulary) -> dict[int, int]:
    """Sparse counts of the in-vocabulary n-grams; unknown terms are ignored."""
    counts: Counter[int] = Counter()
    lookup = vocab.term_to_id
    for g in ngrams(tokens, vocab.n_max):
        tid = lookup.get(g)
        if tid is not None:
            counts[tid] += 1
    return dict(counts)


def tfidf_rank(
    corpus: "Corpus", vocab: Vocabulary, stopwords: Iterable[str] = ()
) -> list[tuple[str, float]]:
    """Rank vocabulary terms by corpus-level TF-IDF, descending.

    score(t) = tf_corpus(t) * ln(doc_count / doc_freq(t)). Stopword terms are
    excluded. Ties break lexicographically so the ordering is total.
    """
    if len(corpus.records) != vocab.doc_count:
        raise ValueError(
            f"vocabulary was built over {vocab.doc_count} documents, corpus has {len(corpus.records)}"
        )
    stop = {_canonical_token(s) for s in stopwords}
    scored = []
    for term, tid in vocab.term_to_id.items():
        if term in stop:
            continue
        score = vocab.term_freq[tid] * math.log(vocab.doc_count / vocab.doc_freq[tid])
        scored.append((term, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One term per line, UTF-8; terms are canonicalized like tokens."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(_canonical_token(line) for line in fh if line.strip())
