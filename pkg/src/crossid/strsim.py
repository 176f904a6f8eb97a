"""Approximate string similarity kernels and the profile comparison pipeline.

Kernels: lossy Burrows-Wheeler transform, Levenshtein, Damerau-Levenshtein
(optimal string alignment), Jaro, Jaro-Winkler, and token-based soft-TFIDF.
Edit distances are converted to [0,1] similarities with the normalization
nd = 2*d / (|a| + |b| + d), sim = 1 - nd; nd is a proper metric (triangle
inequality holds), which plain d/max(|a|,|b|) does not guarantee.

The profile pipeline applies, in order: normalization, lowercasing, the
lossy BW transform, then one similarity metric; every stage is optional.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .normalize import NormalizationConfig, normalize_text

METRICS = ("jaro", "jaro_winkler", "norm_levenshtein", "norm_damerau_levenshtein", "soft_tfidf")

_METRIC_SHORT = {
    "jaro": "jaro",
    "jaro_winkler": "jw",
    "norm_levenshtein": "nl",
    "norm_damerau_levenshtein": "ndl",
    "soft_tfidf": "soft-tfidf",
}
_SHORT_METRIC = {v: k for k, v in _METRIC_SHORT.items()}

JW_PREFIX_SCALE = 0.1
JW_MAX_PREFIX = 4
SOFT_TFIDF_THRESHOLD = 0.9


@dataclass(frozen=True)
class SimilarityScore:
    """A [0,1] similarity; `degenerate` marks comparisons of empty inputs."""

    value: float
    degenerate: bool = False


@dataclass(frozen=True)
class PipelineSpec:
    """One profile comparison system: which stages run and which metric scores.

    soft_tfidf is token-based, so it cannot follow the BW transform (the
    transform destroys token boundaries).
    """

    norm: bool
    lower: bool
    bw: bool
    metric: str

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        if self.metric == "soft_tfidf" and self.bw:
            raise ValueError("soft_tfidf cannot be combined with the BW transform")

    def label(self) -> str:
        """Short system id, e.g. 'jw, norm, lower, nobw'."""
        return ", ".join(
            (
                _METRIC_SHORT[self.metric],
                "norm" if self.norm else "nonorm",
                "lower" if self.lower else "nolower",
                "bw" if self.bw else "nobw",
            )
        )

    @classmethod
    def parse(cls, label: str) -> "PipelineSpec":
        """Parse 'jw,norm,lower,nobw' (spaces optional) back into a spec."""
        parts = [p.strip() for p in label.split(",")]
        if len(parts) == 1 and parts[0] in ("soft-tfidf", "soft_tfidf"):
            return cls(norm=True, lower=True, bw=False, metric="soft_tfidf")
        if len(parts) != 4:
            raise ValueError(f"cannot parse system label {label!r}")
        metric = _SHORT_METRIC.get(parts[0], parts[0])
        flags = set(parts[1:])
        unknown = flags - {"norm", "nonorm", "lower", "nolower", "bw", "nobw"}
        if unknown:
            raise ValueError(f"unknown pipeline flags {sorted(unknown)} in {label!r}")
        return cls(norm="norm" in flags, lower="lower" in flags, bw="bw" in flags, metric=metric)


def lossy_bw_transform(value: str) -> str:
    """Lossy Burrows-Wheeler transform: last column of the sorted rotations.

    No terminator is appended, so the output is invariant under circular
    rotation of the input (and therefore non-invertible). A string containing
    exactly one '@' is treated as a sigil-prefixed username: the sigil is
    rotated to the front and kept there, and the rotation matrix is built
    from the name part alone, so usernames whose name parts are circular
    shifts of each other ("bobtsmith" / "smithbobt") map to one transform no
    matter where the sigil sits.
    """
    if value.count("@") == 1:
        at = value.index("@")
        anchored = value[at:] + value[:at]
        return "@" + _plain_bw(anchored[1:])
    return _plain_bw(value)


def _plain_bw(value: str) -> str:
    n = len(value)
    if n == 0:
        return ""
    doubled = value + value
    order = sorted(range(n), key=lambda i: doubled[i : i + n])
    return "".join(doubled[i + n - 1] for i in order)


def levenshtein(a: str, b: str) -> int:
    """Minimum number of insertions, deletions, and substitutions a -> b."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,  # delete
                cur[j - 1] + 1,  # insert
                prev[j - 1] + (ca != cb),  # substitute / match
            )
        prev = cur
    return prev[-1]


def damerau_levenshtein(a: str, b: str) -> int:
    """Optimal string alignment distance: Levenshtein plus adjacent
    transposition, with no substring edited twice."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prevprev: list[int] | None = None
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
            if i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == cb and ca != cb:
                cur[j] = min(cur[j], prevprev[j - 2] + 1)
        prevprev, prev = prev, cur
    return prev[-1]


def normalized_edit_similarity(a: str, b: str, kind: str = "lev") -> float:
    """1 - 2*d/(|a|+|b|+d) for the chosen edit distance; ("","") -> 1.0."""
    if kind == "lev":
        d = levenshtein(a, b)
    elif kind == "dl":
        d = damerau_levenshtein(a, b)
    else:
        raise ValueError(f"unknown edit distance kind {kind!r}")
    denom = len(a) + len(b) + d
    if denom == 0:
        return 1.0
    return 1.0 - (2.0 * d) / denom


def jaro(a: str, b: str) -> float:
    """Jaro similarity in [0,1]; 1 iff equal (including both empty)."""
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    window = max(max(la, lb) // 2 - 1, 0)
    flags_a = [False] * la
    flags_b = [False] * lb
    matches = 0
    for i, ch in enumerate(a):
        lo = max(0, i - window)
        hi = min(lb - 1, i + window)
        for j in range(lo, hi + 1):
            if not flags_b[j] and b[j] == ch:
                flags_a[i] = flags_b[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    transpositions = 0
    k = 0
    for i in range(la):
        if flags_a[i]:
            while not flags_b[k]:
                k += 1
            if a[i] != b[k]:
                transpositions += 1
            k += 1
    transpositions //= 2
    m = float(matches)
    return (m / la + m / lb + (m - transpositions) / m) / 3.0


def jaro_winkler(a: str, b: str) -> float:
    """Jaro with a prefix boost: scale 0.1 over at most 4 shared leading
    characters, applied unconditionally (no boost threshold)."""
    base = jaro(a, b)
    prefix = 0
    for ca, cb in zip(a[:JW_MAX_PREFIX], b[:JW_MAX_PREFIX]):
        if ca != cb:
            break
        prefix += 1
    return base + prefix * JW_PREFIX_SCALE * (1.0 - base)


class CorpusStats:
    """Token document frequencies over a name corpus, for soft-TFIDF.

    Build once over the normalized full names of both domains and share
    read-only. Weighting: tf weight 1+ln(tf), smoothed idf
    1+ln((N+1)/(df+1)), L2-normalized per name.
    """

    def __init__(self, doc_count: int, doc_freq: Mapping[str, int]):
        self.doc_count = int(doc_count)
        self.doc_freq = dict(doc_freq)

    @classmethod
    def from_documents(cls, documents) -> "CorpusStats":
        df: Counter[str] = Counter()
        n = 0
        for doc in documents:
            n += 1
            df.update(set(doc.split()))
        return cls(n, df)

    def idf(self, token: str) -> float:
        return 1.0 + math.log((self.doc_count + 1) / (self.doc_freq.get(token, 0) + 1))

    def weights(self, tokens) -> dict[str, float]:
        counts = Counter(tokens)
        raw = {t: (1.0 + math.log(c)) * self.idf(t) for t, c in counts.items()}
        norm = math.sqrt(sum(w * w for w in raw.values()))
        if norm == 0.0:
            return {t: 0.0 for t in raw}
        return {t: w / norm for t, w in raw.items()}


def _soft_tfidf_directed(wa: dict[str, float], wb: dict[str, float], threshold: float) -> float:
    total = 0.0
    for t, va in wa.items():
        best_sim = 0.0
        best_weight = 0.0
        for u, vb in wb.items():
            s = jaro_winkler(t, u)
            if s > best_sim:
                best_sim = s
                best_weight = vb
        if best_sim >= threshold:
            total += va * best_weight * best_sim
    return total


def soft_tfidf(
    a: str,
    b: str,
    corpus_stats: CorpusStats,
    threshold: float = SOFT_TFIDF_THRESHOLD,
) -> SimilarityScore:
    """Soft-TFIDF: TF-IDF-weighted sum over token pairs whose Jaro-Winkler
    similarity reaches `threshold`, symmetrized by averaging the two
    directions and clamped to [0,1]. Empty token lists are degenerate."""
    tokens_a = a.split()
    tokens_b = b.split()
    if not tokens_a or not tokens_b:
        return SimilarityScore(0.0, degenerate=True)
    wa = corpus_stats.weights(tokens_a)
    wb = corpus_stats.weights(tokens_b)
    forward = _soft_tfidf_directed(wa, wb, threshold)
    backward = _soft_tfidf_directed(wb, wa, threshold)
    value = (forward + backward) / 2.0
    return SimilarityScore(min(max(value, 0.0), 1.0))


def profile_similarity(
    a: str,
    b: str,
    spec: PipelineSpec,
    corpus_stats: CorpusStats | None = None,
    full_name: bool = False,
) -> SimilarityScore:
    """Run the profile comparison pipeline on two field values.

    `full_name=True` enables "Last, First" reordering as part of the
    normalization stage (never applied to usernames). Comparisons where
    either processed string is empty are flagged degenerate; their value
    follows the identity convention (1 for two empties, else 0).
    """
    config = NormalizationConfig(
        apply_norm=spec.norm,
        apply_lowercase=spec.lower,
        reorder_full_name=spec.norm and full_name,
    )
    pa = normalize_text(a, config)
    pb = normalize_text(b, config)
    if spec.metric == "soft_tfidf":
        if corpus_stats is None:
            raise ValueError("soft_tfidf requires corpus_stats")
        return soft_tfidf(pa, pb, corpus_stats)
    if spec.bw:
        pa = lossy_bw_transform(pa)
        pb = lossy_bw_transform(pb)
    if not pa or not pb:
        return SimilarityScore(1.0 if pa == pb else 0.0, degenerate=True)
    if spec.metric == "jaro":
        value = jaro(pa, pb)
    elif spec.metric == "jaro_winkler":
        value = jaro_winkler(pa, pb)
    elif spec.metric == "norm_levenshtein":
        value = normalized_edit_similarity(pa, pb, "lev")
    else:
        value = normalized_edit_similarity(pa, pb, "dl")
    return SimilarityScore(value)
