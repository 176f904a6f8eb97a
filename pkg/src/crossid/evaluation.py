"""Trials, cross-validation splits, DET curves, and EER.

A trial is an ordered cross-domain user pair with a truth label. Scores are
swept over every distinct value (plus -inf/+inf sentinels): at threshold T a
true trial scoring below T is a miss and a false trial scoring at or above T
is a false alarm. The EER is the operating point where the two rates are
equal, linearly interpolated between the two bracketing curve points when no
sweep position hits it exactly.

Trials with a missing score are excluded from the sweep per feature and the
exclusion counts are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .validation import check_random_state

TRIAL_ID_SEP = "|"


@dataclass(frozen=True)
class Trial:
    """One cross-domain candidate pair. nontrivial means the two raw
    usernames are not an exact (case-sensitive) string match."""

    u_t: str
    u_i: str
    label: bool
    nontrivial: bool

    @property
    def trial_id(self) -> str:
        return f"{self.u_t}{TRIAL_ID_SEP}{self.u_i}"


def build_trials(
    links: Sequence[tuple[str, str]],
    instagram_pool: Sequence[str],
    twitter_usernames: Mapping[str, str],
    instagram_usernames: Mapping[str, str],
    negatives_per_true: int = 10,
    seed: int = 0,
) -> list[Trial]:
    """One true trial per link plus `negatives_per_true` false trials drawn
    without replacement from the Instagram pool (excluding the linked user).

    Deterministic given the seed. Linked users must be unique per side.
    """
    for side, ids in (("twitter", [t for t, _ in links]), ("instagram", [i for _, i in links])):
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate {side} user in links; discard multi-account users first")
    pool = sorted(set(instagram_pool))
    rng = check_random_state(seed)
    trials: list[Trial] = []

    def nontrivial(ut: str, ui: str) -> bool:
        return twitter_usernames.get(ut, ut) != instagram_usernames.get(ui, ui)

    for ut, ui in links:
        candidates = [u for u in pool if u != ui]
        if len(candidates) < negatives_per_true:
            raise ValueError(
                f"instagram pool too small: {len(candidates)} candidates, "
                f"{negatives_per_true} negatives required"
            )
        trials.append(Trial(ut, ui, True, nontrivial(ut, ui)))
        picks = rng.choice(len(candidates), size=negatives_per_true, replace=False)
        for k in sorted(picks.tolist()):
            vi = candidates[k]
            trials.append(Trial(ut, vi, False, nontrivial(ut, vi)))
    return trials


def kfold_split(trials: Sequence[Trial], k: int = 5, seed: int = 0) -> list[tuple[list[Trial], list[Trial]]]:
    """k (train, test) partitions; a true trial and all its false trials share
    a fold (they share u_t). Every trial appears in exactly one test fold."""
    if k < 2:
        raise ValueError("k must be >= 2")
    groups: dict[str, list[Trial]] = {}
    for trial in trials:
        groups.setdefault(trial.u_t, []).append(trial)
    keys = sorted(groups)
    if len(keys) < k:
        raise ValueError(f"only {len(keys)} trial groups for {k} folds")
    rng = check_random_state(seed)
    order = [keys[i] for i in rng.permutation(len(keys))]
    folds: list[list[Trial]] = [[] for _ in range(k)]
    for idx, key in enumerate(order):
        folds[idx % k].extend(groups[key])
    out = []
    for i in range(k):
        train = [t for j in range(k) if j != i for t in folds[j]]
        out.append((train, folds[i]))
    return out


def filter_nontrivial(trials: Sequence[Trial]) -> list[Trial]:
    return [t for t in trials if t.nontrivial]


@dataclass(frozen=True)
class DetCurve:
    """(threshold, P_fa, P_m) points sorted by threshold; P_m non-decreasing
    and P_fa non-increasing along the list."""

    points: tuple[tuple[float, float, float], ...]
    n_true: int
    n_false: int
    n_excluded: int

    def __post_init__(self):
        for (t0, fa0, m0), (t1, fa1, m1) in zip(self.points, self.points[1:]):
            if m1 < m0 - 1e-12 or fa1 > fa0 + 1e-12:
                raise ValueError("DET curve is not monotone")


def sweep_det(scores: Mapping[str, float | None], labels: Mapping[str, bool]) -> DetCurve:
    """Sweep all thresholds over the scored trials.

    `scores` may omit trials or hold None: those are excluded and counted.
    Requires at least one scored true and one scored false trial.
    """
    true_scores = []
    false_scores = []
    excluded = 0
    for trial_id, label in labels.items():
        value = scores.get(trial_id)
        if value is None:
            excluded += 1
            continue
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite score for trial {trial_id!r}")
        (true_scores if label else false_scores).append(value)
    if not true_scores or not false_scores:
        raise ValueError(
            f"cannot sweep: {len(true_scores)} true and {len(false_scores)} false scored trials"
        )
    ts = np.sort(np.asarray(true_scores))
    fs = np.sort(np.asarray(false_scores))
    thresholds = [-math.inf]
    thresholds.extend(np.unique(np.concatenate([ts, fs])).tolist())
    thresholds.append(math.inf)
    points = []
    for t in thresholds:
        p_m = float(np.searchsorted(ts, t, side="left")) / len(ts)
        p_fa = 1.0 - float(np.searchsorted(fs, t, side="left")) / len(fs)
        points.append((t, p_fa, p_m))
    return DetCurve(tuple(points), len(ts), len(fs), excluded)


def compute_eer(curve: DetCurve) -> tuple[float, bool]:
    """EER from the curve: the exact P_m = P_fa point when one exists,
    otherwise the linear interpolation across the sign change of P_m - P_fa."""
    prev = None
    for t, p_fa, p_m in curve.points:
        if p_m == p_fa:
            return p_m, False
        if prev is not None:
            _, pfa0, pm0 = prev
            d0 = pm0 - pfa0
            d1 = p_m - p_fa
            if d0 < 0.0 < d1:
                frac = d0 / (d0 - d1)
                return pm0 + frac * (p_m - pm0), True
        prev = (t, p_fa, p_m)
    raise ValueError("DET curve has no P_m = P_fa crossing")


@dataclass(frozen=True)
class EvalReport:
    """EER summary for one scored system."""

    feature: str
    system: str
    eer_all: float
    eer_nt: float
    interpolated_all: bool
    interpolated_nt: bool
    n_trials: int
    n_nontrivial: int
    n_excluded_all: int
    n_excluded_nt: int


def evaluate_system(
    feature: str,
    system: str,
    scores: Mapping[str, float | None],
    trials: Sequence[Trial],
) -> EvalReport:
    """EER over all trials and over the non-trivial subset."""
    labels_all = {t.trial_id: t.label for t in trials}
    nt = filter_nontrivial(trials)
    labels_nt = {t.trial_id: t.label for t in nt}
    curve_all = sweep_det(scores, labels_all)
    curve_nt = sweep_det(scores, labels_nt)
    eer_all, interp_all = compute_eer(curve_all)
    eer_nt, interp_nt = compute_eer(curve_nt)
    return EvalReport(
        feature=feature,
        system=system,
        eer_all=eer_all,
        eer_nt=eer_nt,
        interpolated_all=interp_all,
        interpolated_nt=interp_nt,
        n_trials=len(trials),
        n_nontrivial=len(nt),
        n_excluded_all=curve_all.n_excluded,
        n_excluded_nt=curve_nt.n_excluded,
    )
