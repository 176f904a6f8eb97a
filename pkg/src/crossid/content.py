"""Content-based author identification features.

Per-user token counts are turned into weighted word vectors: each entry is
the user's share of a word across the training population, weighted by
ln(1/p(word)) + 1 where p(word) is the word's overall frequency, then
L2-normalized. One linear SVM per eligible author (at least `min_words`
tokens) is trained one-vs-rest against the remaining authors; cross-domain
candidates are scored with the signed decision value. Scoring direction is
fixed: models from the training domain score vectors from the other domain.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .learners import fit_one_vs_rest_svms
from .normalize import NormalizationConfig, normalize_text
from .records import Post

MIN_WORDS_DEFAULT = 200

_TOKEN_CONFIG = NormalizationConfig(apply_norm=True, apply_lowercase=True)
_URL_PREFIXES = ("http://", "https://", "www.")


@dataclass
class UserCountVector:
    """Sparse token counts for one user; total_words = sum of counts."""

    user_id: str
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def total_words(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class Vocabulary:
    """Token list plus population statistics of the model-training corpus."""

    words: tuple[str, ...]
    global_counts: tuple[int, ...]
    total_tokens: int
    index: Mapping[str, int]

    @classmethod
    def from_count_vectors(cls, users: Iterable[UserCountVector]) -> "Vocabulary":
        totals: Counter[str] = Counter()
        for user in users:
            totals.update(user.counts)
        words = tuple(sorted(totals))
        return cls(
            words=words,
            global_counts=tuple(totals[w] for w in words),
            total_tokens=sum(totals.values()),
            index={w: i for i, w in enumerate(words)},
        )


@dataclass
class ContentVector:
    """L2-normalized weighted word vector; empty when the user has no content."""

    user_id: str
    v: dict[int, float] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not self.v


def tokenize(text: str) -> list[str]:
    """Whitespace-split, drop URL tokens, normalize; '#' survives on hashtags."""
    tokens = []
    for raw in text.split():
        if raw.lower().startswith(_URL_PREFIXES):
            continue
        if raw.startswith("#"):
            tail = normalize_text(raw[1:], _TOKEN_CONFIG)
            if tail:
                tokens.append("#" + tail)
            continue
        token = normalize_text(raw, _TOKEN_CONFIG)
        if token:
            tokens.append(token)
    return tokens


def tokenize_posts(posts: Sequence[Post]) -> dict[str, UserCountVector]:
    """Count tokens per user over single-domain posts.

    Users whose posts yield no tokens keep an entry with total_words = 0.
    """
    domains = {p.domain for p in posts}
    if len(domains) > 1:
        raise ValueError(f"posts span multiple domains: {sorted(domains)}")
    out: dict[str, UserCountVector] = {}
    for post in posts:
        vector = out.setdefault(post.user_id, UserCountVector(post.user_id))
        for token in tokenize(post.text):
            vector.counts[token] = vector.counts.get(token, 0) + 1
    return out


def build_content_vector(
    user: UserCountVector,
    vocab: Vocabulary,
    word_prob: bool = False,
) -> ContentVector:
    """Weighted word vector v_i = c_i * p(w_i|user), L2-normalized.

    p(w_i|user) is the user's share of word i over the vocabulary population
    (count(w_i|user) / sum over users of count(w_i)); with word_prob=True it
    is instead the within-user word probability count(w_i|user)/total_words.
    c_i = ln(1 / p(w_i|all)) + 1 >= 1. Tokens outside the vocabulary are
    dropped; a user with no usable tokens yields an empty ("no content")
    vector.
    """
    raw: dict[int, float] = {}
    total = user.total_words
    for token, count in user.counts.items():
        i = vocab.index.get(token)
        if i is None or count == 0:
            continue
        p_all = vocab.global_counts[i] / vocab.total_tokens
        c = math.log(1.0 / p_all) + 1.0
        if word_prob:
            p_user = count / total
        else:
            p_user = count / vocab.global_counts[i]
        raw[i] = c * p_user
    norm = math.sqrt(sum(w * w for w in raw.values()))
    if norm == 0.0:
        return ContentVector(user.user_id)
    return ContentVector(user.user_id, {i: w / norm for i, w in raw.items()})


class AuthorIdentifier(BaseEstimator):
    """One-vs-rest linear author models over weighted word vectors.

    fit() consumes the training domain's per-user counts: it builds the
    vocabulary, drops users below `min_words`, and trains one linear SVM per
    eligible user against the rest. score() returns the signed decision value
    of the trial's training-side model on the other side's vector, or None
    when either the model or the content is missing.
    """

    def __init__(self, min_words: int = MIN_WORDS_DEFAULT, C: float = 1.0,
                 max_iter: int = 1000, tol: float = 1e-6, random_state: int = 0,
                 word_prob: bool = False):
        self.min_words = min_words
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state
        self.word_prob = word_prob

    def fit(self, count_vectors: Mapping[str, UserCountVector]):
        self.vocabulary_ = Vocabulary.from_count_vectors(count_vectors.values())
        eligible = sorted(
            uid for uid, cv in count_vectors.items() if cv.total_words >= self.min_words
        )
        if len(eligible) < 2:
            raise ValueError(
                f"insufficient authors: {len(eligible)} users with >= {self.min_words} words"
            )
        vectors = [
            build_content_vector(count_vectors[uid], self.vocabulary_, self.word_prob)
            for uid in eligible
        ]
        dim = len(self.vocabulary_.words)
        X = np.zeros((len(eligible), dim))
        for row, vec in enumerate(vectors):
            for i, w in vec.v.items():
                X[row, i] = w
        W, b = fit_one_vs_rest_svms(X, C=self.C, max_iter=self.max_iter,
                                    tol=self.tol, random_state=self.random_state)
        self.user_ids_ = tuple(eligible)
        self.weights_ = {uid: W[k] for k, uid in enumerate(eligible)}
        self.biases_ = {uid: float(b[k]) for k, uid in enumerate(eligible)}
        return self

    def has_model(self, user_id: str) -> bool:
        return user_id in self.weights_

    def vectorize(self, count_vectors: Mapping[str, UserCountVector]) -> dict[str, ContentVector]:
        """Build scoring-side vectors in the fitted vocabulary."""
        return {
            uid: build_content_vector(cv, self.vocabulary_, self.word_prob)
            for uid, cv in count_vectors.items()
        }

    def score(self, model_user_id: str, vector: ContentVector | None) -> float | None:
        """Signed decision value, or None (missing) when unavailable."""
        if vector is None or vector.is_empty or not self.has_model(model_user_id):
            return None
        w = self.weights_[model_user_id]
        total = self.biases_[model_user_id]
        for i, value in vector.v.items():
            total += w[i] * value
        return float(total)

    def save_models(self, path) -> None:
        """Write the model store: a JSONL file with one header record (format
        version, vocabulary, parameters) and one sparse (index, weight) record
        per author model. Round-trips exactly."""
        with open(path, "w", encoding="utf-8") as fh:
            header = {
                "format": "author_store/1",
                "params": self.get_params(),
                "vocabulary": {
                    "words": list(self.vocabulary_.words),
                    "global_counts": list(self.vocabulary_.global_counts),
                    "total_tokens": self.vocabulary_.total_tokens,
                },
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for uid in self.user_ids_:
                w = self.weights_[uid]
                pairs = [[int(i), float(w[i])] for i in np.nonzero(w)[0]]
                record = {"user_id": uid, "weights": pairs, "bias": self.biases_[uid]}
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    @classmethod
    def load_models(cls, path) -> "AuthorIdentifier":
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("format") != "author_store/1":
                raise ValueError(f"unknown author store format {header.get('format')!r}")
            model = cls(**header["params"])
            vocab_obj = header["vocabulary"]
            words = tuple(vocab_obj["words"])
            model.vocabulary_ = Vocabulary(
                words=words,
                global_counts=tuple(vocab_obj["global_counts"]),
                total_tokens=vocab_obj["total_tokens"],
                index={w: i for i, w in enumerate(words)},
            )
            dim = len(words)
            model.weights_ = {}
            model.biases_ = {}
            user_ids = []
            for line in fh:
                record = json.loads(line)
                w = np.zeros(dim)
                for i, value in record["weights"]:
                    w[i] = value
                uid = record["user_id"]
                user_ids.append(uid)
                model.weights_[uid] = w
                model.biases_[uid] = float(record["bias"])
            model.user_ids_ = tuple(user_ids)
        return model


def score_content(
    trials,
    identifier: AuthorIdentifier,
    scoring_vectors: Mapping[str, ContentVector],
) -> dict[str, float | None]:
    """Score each trial's scoring-side vector with its training-side model.

    Absence (no model, or an empty vector) is expressed as None, never 0.
    Keys are trial ids.
    """
    out: dict[str, float | None] = {}
    for trial in trials:
        out[trial.trial_id] = identifier.score(trial.u_t, scoring_vectors.get(trial.u_i))
    return out
