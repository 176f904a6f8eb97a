"""Score fusion with one model per feature-presence combination.

The ScoreTable holds one row per trial with the seven per-feature scores,
each either present or missing (never a numeric sentinel). Fusion trains a
logistic-regression or random-forest model for every mask of present
(selected) features that has enough training rows of both labels; at scoring
time each row is routed to the model for its exact mask, falling back to the
largest strictly-contained trained mask and finally to the mask of features
present in every training row. Rows with no usable model come back missing.

Logistic inputs are standardized per feature with statistics computed on the
mask's training rows and stored with the model; forests consume raw scores.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .learners import LogisticRegression, RandomForest

logger = logging.getLogger(__name__)

FEATURE_COLUMNS = ("P_user", "P_full", "C", "Comm1", "NBR1", "Comm2", "NBR2")

# Named feature bundles, as used in fusion system expressions like "P+C+N1".
FEATURE_BUNDLES: dict[str, tuple[str, ...]] = {
    "P": ("P_user", "P_full"),
    "C": ("C",),
    "N1": ("Comm1", "NBR1"),
    "N2": ("Comm2", "NBR2"),
}

FUSION_KINDS = ("logit", "random_forest")
MIN_MASK_ROWS_DEFAULT = 20


@dataclass(frozen=True)
class ScoreRow:
    """One trial's feature scores; missing features are absent from `scores`."""

    trial_id: str
    label: bool
    scores: Mapping[str, float]

    def mask(self, columns: Sequence[str]) -> tuple[str, ...]:
        return tuple(c for c in columns if c in self.scores)


def assemble_score_table(
    trials,
    feature_scores: Mapping[str, Mapping[str, float | None]],
) -> list[ScoreRow]:
    """One row per trial; a feature score absent from its map (or None) is
    missing. Duplicate trial ids are an error."""
    unknown = set(feature_scores) - set(FEATURE_COLUMNS)
    if unknown:
        raise ValueError(f"unknown feature columns {sorted(unknown)}")
    rows = []
    seen = set()
    for trial in trials:
        if trial.trial_id in seen:
            raise ValueError(f"duplicate trial id {trial.trial_id!r}")
        seen.add(trial.trial_id)
        scores = {}
        for column in FEATURE_COLUMNS:
            value = feature_scores.get(column, {}).get(trial.trial_id)
            if value is not None:
                scores[column] = float(value)
        rows.append(ScoreRow(trial.trial_id, trial.label, scores))
    return rows


def select_columns(bundles: Sequence[str]) -> tuple[str, ...]:
    """Expand bundle names ("P", "C", "N1", "N2") to feature columns."""
    columns: list[str] = []
    for bundle in bundles:
        if bundle not in FEATURE_BUNDLES:
            raise ValueError(f"unknown feature bundle {bundle!r}")
        columns.extend(FEATURE_BUNDLES[bundle])
    return tuple(dict.fromkeys(columns))


@dataclass
class MaskModel:
    """Fusion model for one combination of present features."""

    mask: tuple[str, ...]
    model: LogisticRegression | RandomForest
    training_count: int
    means: np.ndarray | None = None  # standardization, logit only
    stds: np.ndarray | None = None

    def predict(self, row: ScoreRow) -> float:
        x = np.asarray([row.scores[c] for c in self.mask], dtype=np.float64)
        if self.means is not None:
            x = (x - self.means) / self.stds
        return float(self.model.predict_proba(x.reshape(1, -1))[0, 1])


class ScoreFusion(BaseEstimator):
    """Missingness-aware score fusion over a ScoreTable."""

    def __init__(self, kind: str = "random_forest", bundles: Sequence[str] = ("P", "C", "N1", "N2"),
                 min_mask_rows: int = MIN_MASK_ROWS_DEFAULT,
                 l2: float = 1e-3, trees: int = 100, max_depth: int = 8,
                 random_state: int = 0):
        self.kind = kind
        self.bundles = tuple(bundles)
        self.min_mask_rows = min_mask_rows
        self.l2 = l2
        self.trees = trees
        self.max_depth = max_depth
        self.random_state = random_state

    def _fit_mask(self, mask: tuple[str, ...], rows: list[ScoreRow]) -> MaskModel | None:
        y = np.asarray([1 if r.label else 0 for r in rows])
        if y.sum() == 0 or y.sum() == len(y):
            return None
        X = np.asarray([[r.scores[c] for c in mask] for r in rows], dtype=np.float64)
        if self.kind == "logit":
            means = X.mean(axis=0)
            stds = X.std(axis=0)
            stds[stds == 0.0] = 1.0
            model = LogisticRegression(l2=self.l2).fit((X - means) / stds, y)
            return MaskModel(mask, model, len(rows), means, stds)
        model = RandomForest(trees=self.trees, max_depth=self.max_depth,
                             random_state=self.random_state).fit(X, y)
        return MaskModel(mask, model, len(rows))

    def fit(self, rows: Sequence[ScoreRow]):
        if self.kind not in FUSION_KINDS:
            raise ValueError(f"unknown fusion kind {self.kind!r}; expected {FUSION_KINDS}")
        if not rows:
            raise ValueError("empty score table")
        self.columns_ = select_columns(self.bundles)
        by_mask: dict[tuple[str, ...], list[ScoreRow]] = {}
        for row in rows:
            by_mask.setdefault(row.mask(self.columns_), []).append(row)

        # the features present in every training row: the final fallback mask
        global_mask = tuple(
            c for c in self.columns_
            if all(c in row.scores for row in rows)
        )

        self.models_: dict[tuple[str, ...], MaskModel] = {}
        for mask, mask_rows in sorted(by_mask.items()):
            if not mask:
                continue
            if len(mask_rows) < self.min_mask_rows and mask != global_mask:
                continue
            model = self._fit_mask(mask, mask_rows)
            if model is not None:
                self.models_[mask] = model
        if global_mask and global_mask not in self.models_:
            eligible = [r for r in rows if all(c in r.scores for c in global_mask)]
            model = self._fit_mask(global_mask, eligible)
            if model is not None:
                self.models_[global_mask] = model
        self.global_mask_ = global_mask
        if not self.models_:
            raise ValueError("no trainable feature-presence combination")
        return self

    def _route(self, row: ScoreRow) -> MaskModel | None:
        present = set(row.mask(self.columns_))
        exact = tuple(c for c in self.columns_ if c in present)
        model = self.models_.get(exact)
        if model is not None:
            return model
        # largest strictly-contained trained mask; ties break on column order
        best = None
        for mask, candidate in self.models_.items():
            if set(mask) < present:
                key = (len(mask), tuple(-self.columns_.index(c) for c in mask))
                if best is None or key > best[0]:
                    best = (key, candidate)
        if best is not None:
            return best[1]
        fallback = self.models_.get(self.global_mask_)
        if fallback is not None and set(self.global_mask_) <= present:
            return fallback
        return None

    def predict(self, rows: Sequence[ScoreRow]) -> dict[str, float | None]:
        """Fused probability per trial id; None when no model applies."""
        return {tid: score for tid, score, _ in self.predict_with_provenance(rows)}

    def predict_with_provenance(
        self, rows: Sequence[ScoreRow]
    ) -> list[tuple[str, float | None, tuple[str, ...] | None]]:
        """(trial_id, fused score, mask of the model used) per row."""
        out = []
        unscored = 0
        for row in rows:
            model = self._route(row)
            if model is None:
                unscored += 1
                out.append((row.trial_id, None, None))
                continue
            out.append((row.trial_id, model.predict(row), model.mask))
        if unscored:
            logger.warning("%d rows had no usable fusion model and were left missing", unscored)
        return out


# ---------------------------------------------------------------------------
# ScoreTable TSV round trip (the contract between the score and fuse stages)
# ---------------------------------------------------------------------------

MISSING_TOKEN = "NA"


def score_table_lines(rows: Sequence[ScoreRow], header_comments: Sequence[str] = ()) -> list[str]:
    lines = [f"# {comment}" for comment in header_comments]
    lines.append("\t".join(("trial_id", "label") + FEATURE_COLUMNS))
    for row in rows:
        cells = [row.trial_id, "true" if row.label else "false"]
        for column in FEATURE_COLUMNS:
            value = row.scores.get(column)
            cells.append(MISSING_TOKEN if value is None else repr(value))
        lines.append("\t".join(cells))
    return lines


def parse_score_table(lines) -> list[ScoreRow]:
    rows = []
    header: list[str] | None = None
    for raw in lines:
        line = raw.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        cells = line.split("\t")
        if header is None:
            expected = ["trial_id", "label"] + list(FEATURE_COLUMNS)
            if cells != expected:
                raise ValueError(f"bad score table header: {cells!r}")
            header = cells
            continue
        if len(cells) != len(header):
            raise ValueError(f"bad score table row: {line!r}")
        scores = {}
        for column, cell in zip(FEATURE_COLUMNS, cells[2:]):
            if cell != MISSING_TOKEN:
                scores[column] = float(cell)
        rows.append(ScoreRow(cells[0], cells[1] == "true", scores))
    if header is None:
        raise ValueError("score table has no header")
    return rows
