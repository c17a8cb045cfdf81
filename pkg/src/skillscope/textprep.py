"""Issue-text cleaning, tokenization and TF-IDF vectorization.

Cleaning strips the noise GitHub issue bodies accumulate (HTML tags, URLs,
emoji) and is idempotent. The vectorizer uses raw term counts weighted by
smoothed inverse document frequency, idf = ln((1+N)/(1+df)) + 1, followed by
l2 normalization. Fitted models are immutable; ``transform`` is pure.
"""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib.resources import files

import numpy as np

from .taxonomy import split_identifier

MIN_TOKEN_LEN = 2

_HTML_TAG_RE = re.compile(r"</?[A-Za-z][^>]*>")
_URL_RE = re.compile(r"(?:https?://|www\.)[^\s<>]+", re.IGNORECASE)
# Block-level emoji removal: symbol/emoticon planes plus dingbats, misc
# symbols, variation selectors, ZWJ and the combining keycap.
_EMOJI_RE = re.compile(
    "[\U0001F000-\U0001FAFF☀-➿⬀-⯿︀-️‍⃣]"
)
_WS_RE = re.compile(r"\s+")
_SEGMENT_RE = re.compile(r"[A-Za-z0-9]+")


class TextprepError(Exception):
    pass


class EmptyVocabularyError(TextprepError):
    """Every document in the corpus was empty after tokenization."""


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = files("skillscope.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w for w in text.split() if w)


def clean_text(raw: str) -> str:
    """Normalize raw issue text: drop HTML tags, URLs and emoji, collapse
    whitespace runs to single spaces, trim. Idempotent."""
    text = _HTML_TAG_RE.sub(" ", raw)
    text = _URL_RE.sub(" ", text)
    text = _EMOJI_RE.sub(" ", text)
    return _WS_RE.sub(" ", text).strip()


def tokenize(cleaned: str) -> list[str]:
    """Lowercase word tokens of cleaned text.

    Splits on non-alphanumeric characters and camelCase boundaries, then
    drops tokens shorter than two characters and stopwords. Order preserved.
    """
    drop = stopwords()
    out: list[str] = []
    for segment in _SEGMENT_RE.findall(cleaned):
        for word in split_identifier(segment):
            if len(word) >= MIN_TOKEN_LEN and word not in drop:
                out.append(word)
    return out


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]  # token -> column index, indices exactly 0..V-1
    idf: np.ndarray  # shape (V,)
    corpus_size: int
    l2_normalize: bool = True

    @property
    def size(self) -> int:
        return len(self.vocabulary)


def fit_tfidf(corpus: list[list[str]], l2_normalize: bool = True) -> TfidfModel:
    """Fit a TF-IDF model over tokenized documents.

    The vocabulary is every distinct token, sorted lexicographically;
    idf(t) = ln((1+N)/(1+df_t)) + 1 with N the corpus size.
    """
    if not corpus or all(len(doc) == 0 for doc in corpus):
        raise EmptyVocabularyError("empty vocabulary: corpus has no tokens")
    df: Counter[str] = Counter()
    for doc in corpus:
        df.update(set(doc))
    vocab = {token: i for i, token in enumerate(sorted(df))}
    n = len(corpus)
    idf = np.array(
        [math.log((1 + n) / (1 + df[token])) + 1.0 for token in sorted(df)],
        dtype=np.float64,
    )
    return TfidfModel(vocabulary=vocab, idf=idf, corpus_size=n, l2_normalize=l2_normalize)


def transform(model: TfidfModel, doc: list[str]) -> dict[int, float]:
    """Sparse TF-IDF vector of a tokenized document.

    weight(t) = count(t) * idf(t), l2-normalized when the model says so and
    the document has at least one in-vocabulary token. Unknown tokens are
    ignored; a fully unknown document yields the zero vector.
    """
    counts: Counter[int] = Counter()
    for token in doc:
        idx = model.vocabulary.get(token)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return {}
    vec = {idx: count * float(model.idf[idx]) for idx, count in counts.items()}
    if model.l2_normalize:
        norm = math.sqrt(sum(w * w for w in vec.values()))
        vec = {idx: w / norm for idx, w in vec.items()}
    return vec


def to_dense(vec: dict[int, float], size: int) -> np.ndarray:
    out = np.zeros(size, dtype=np.float64)
    for idx, w in vec.items():
        out[idx] = w
    return out


def model_to_json(model: TfidfModel) -> str:
    tokens = sorted(model.vocabulary, key=model.vocabulary.get)
    return json.dumps(
        {
            "format": "tfidf-1",
            "vocabulary": tokens,
            "idf": model.idf.tolist(),
            "n": model.corpus_size,
            "normalize": model.l2_normalize,
        },
        sort_keys=True,
    )


def model_from_json(payload: str) -> TfidfModel:
    data = json.loads(payload)
    if data.get("format") != "tfidf-1":
        raise TextprepError(f"unsupported tfidf model format: {data.get('format')!r}")
    vocab = {token: i for i, token in enumerate(data["vocabulary"])}
    return TfidfModel(
        vocabulary=vocab,
        idf=np.asarray(data["idf"], dtype=np.float64),
        corpus_size=int(data["n"]),
        l2_normalize=bool(data["normalize"]),
    )
