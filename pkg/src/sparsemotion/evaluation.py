"""Scoring model velocity profiles against trials and rank-sum significance tests."""

from __future__ import annotations

import itertools
import math
import re
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import analytic
from .core import BallisticSegment, MovementTask, SampledSeries, Trial, check_order
from .movement import DEFAULT_SMOOTH_WINDOW, DegenerateSegmentError, velocity_profile

EXACT_MAX_TOTAL = 20

ORDER_NAMES = {3: "jerk", 4: "snap", 5: "crackle", 6: "pop"}


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # "sparse" (sup-norm) or "quintic" (L2 minimum jerk)
    order: int = 3

    def __post_init__(self):
        if self.kind not in ("sparse", "quintic"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        check_order(self.order)
        if self.kind == "quintic" and self.order != 3:
            raise ValueError("the quintic model is third order")

    @property
    def label(self) -> str:
        return "quintic" if self.kind == "quintic" else f"sparse{self.order}"

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        """Parse ``quintic`` or ``sparseN`` (e.g. ``sparse3``)."""
        text = text.strip().lower()
        if text in ("quintic", "l2", "quintic-l2"):
            return cls("quintic", 3)
        m = re.fullmatch(r"sparse-?(\d+)", text)
        if not m:
            raise ValueError(f"cannot parse model {text!r}; use 'quintic' or 'sparseN'")
        return cls("sparse", int(m.group(1)))

    def trajectory(self, task):
        return analytic.model_trajectory(task, self.kind, self.order)


@lru_cache(maxsize=None)
def threshold_crossing(model: ModelSpec, threshold: float) -> tuple[float, float]:
    """Where a unit rest-to-rest model first reaches ``threshold`` of its peak speed.

    Returns ``(time fraction, displacement fraction)`` at the crossing; by
    symmetry the second crossing is at ``1 - time fraction``.
    """
    traj = model.trajectory(MovementTask(0.0, 1.0, 1.0))
    peak = float(traj.evaluate(0.5, 1))
    tau = brentq(lambda t: float(traj.evaluate(t, 1)) - threshold * peak, 0.0, 0.5, xtol=1e-15)
    return tau, float(traj.evaluate(tau))


def model_placement(segment: BallisticSegment, onset_time: float, model: ModelSpec,
                    align: str = "threshold") -> tuple[MovementTask, float]:
    """Rest-to-rest task for the model and the trial time at which it starts.

    ``align="segment"`` runs the model from onset to offset. ``"threshold"``
    stretches it so that its own threshold crossings fall on the detected
    onset and offset, i.e. the model is segmented the same way as the data.
    Segments that were not threshold-detected on both sides use ``"segment"``.
    """
    task = segment.task
    if align == "segment" or segment.threshold is None or segment.onset_clamped or segment.offset_clamped:
        return task, onset_time
    if align != "threshold":
        raise ValueError(f"unknown alignment {align!r}")
    tau, xi = threshold_crossing(model, segment.threshold)
    T = task.duration / (1.0 - 2.0 * tau)
    D = task.displacement / (1.0 - 2.0 * xi)
    start = task.x_start - xi * D
    return MovementTask(start, start + D, T), onset_time - tau * T


@dataclass(frozen=True, eq=False)
class ModelFitResult:
    trial_id: str
    subject: str
    movement_type: str
    model: ModelSpec
    mse: float
    residuals: SampledSeries
    samples_used: int
    model_task: MovementTask
    model_start: float


def fit_and_score(segment: BallisticSegment, trial: Trial, model: ModelSpec, *,
                  exclude: int = 1, smooth_window: int = DEFAULT_SMOOTH_WINDOW,
                  align: str = "threshold", velocity: SampledSeries | None = None) -> ModelFitResult:
    """Mean squared velocity error of a model over a trial's ballistic segment.

    The model's velocity is evaluated at the trial's own timestamps inside the
    segment. ``exclude`` samples at each end, where the boundary conditions
    force agreement, are left out. See :func:`model_placement` for ``align``.
    """
    v = velocity_profile(trial, smooth_window) if velocity is None else velocity
    idx = segment.indices
    t = trial.times[idx]
    task, start = model_placement(segment, float(t[0]), model, align)
    v_trial = np.asarray(v.values)[idx]
    v_model = model.trajectory(task).evaluate(t - start, 1)
    resid = v_trial - v_model
    if exclude:
        resid, t = resid[exclude:-exclude], t[exclude:-exclude]
    if resid.size == 0:
        raise DegenerateSegmentError(f"trial {trial.id}: no samples left after excluding boundaries")
    mse = float(np.mean(resid**2))
    return ModelFitResult(trial.id, trial.subject, trial.movement_type, model, mse,
                          SampledSeries(t, resid), int(resid.size), task, start)


@dataclass(frozen=True)
class AggregateRow:
    subject: str
    movement_type: str
    model: str
    mean_mse: float
    n_trials: int


def aggregate(results: Sequence[ModelFitResult]) -> list[AggregateRow]:
    """Mean MSE per (subject, movement type, model), sorted by those keys."""
    if not results:
        raise ValueError("nothing to aggregate")
    groups: dict[tuple, list[float]] = defaultdict(list)
    for r in results:
        groups[(r.subject, r.movement_type, r.model.label)].append(r.mse)
    return [AggregateRow(s, m, label, math.fsum(v) / len(v), len(v))
            for (s, m, label), v in sorted(groups.items())]


# rank-sum test ----------------------------------------------------------------


@dataclass(frozen=True)
class RankSumResult:
    U: float
    p: float
    method: str  # "exact" or "normal"


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties given the average of the ranks they span."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@lru_cache(maxsize=None)
def _u_counts(m: int, n: int) -> tuple[int, ...]:
    """Number of rank arrangements giving each U in 0..m*n for samples of size m and n."""
    if m == 0 or n == 0:
        return (1,)
    # the largest observation belongs to the first sample (adds n to U) or the second
    with_first = _u_counts(m - 1, n)
    with_second = _u_counts(m, n - 1)
    out = [0] * (m * n + 1)
    for u, c in enumerate(with_first):
        out[u + n] += c
    for u, c in enumerate(with_second):
        out[u] += c
    return tuple(out)


def exact_p_value(U: float, m: int, n: int) -> float:
    counts = _u_counts(m, n)
    total = math.comb(m + n, m)
    u = int(round(U))
    lower = sum(counts[: u + 1])
    upper = sum(counts[u:])
    return min(1.0, 2.0 * min(lower, upper) / total)


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float]) -> RankSumResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) test.

    ``U`` counts pairs with ``a_i > b_j`` (ties count one half). The null
    distribution is enumerated exactly for small tie-free samples, otherwise
    a tie-corrected normal approximation with continuity correction is used.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = a.size, b.size
    if m == 0 or n == 0:
        raise ValueError("both samples must be non-empty")
    ranks = midranks(np.concatenate([a, b]))
    U = float(ranks[:m].sum() - m * (m + 1) / 2.0)
    N = m + n
    _, tie_sizes = np.unique(ranks, return_counts=True)
    has_ties = bool(np.any(tie_sizes > 1))
    if N <= EXACT_MAX_TOTAL and not has_ties:
        return RankSumResult(U, exact_p_value(U, m, n), "exact")
    mean = m * n / 2.0
    tie_term = float(np.sum(tie_sizes**3 - tie_sizes)) / (N * (N - 1))
    var = m * n / 12.0 * ((N + 1) - tie_term)
    if var <= 0:
        return RankSumResult(U, 1.0, "normal")
    z = (abs(U - mean) - 0.5) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0)) if z > 0 else 1.0
    return RankSumResult(U, min(1.0, p), "normal")


def brute_force_p_value(a: Sequence[float], b: Sequence[float]) -> float:
    """Exact two-sided p by enumerating every split of the pooled ranks."""
    m = len(a)
    ranks = midranks(np.concatenate([a, b]))
    U = ranks[:m].sum() - m * (m + 1) / 2.0
    lower = upper = total = 0
    for combo in itertools.combinations(range(ranks.size), m):
        u = ranks[list(combo)].sum() - m * (m + 1) / 2.0
        total += 1
        lower += u <= U + 1e-9
        upper += u >= U - 1e-9
    return min(1.0, 2.0 * min(lower, upper) / total)


@dataclass(frozen=True)
class ComparisonRow:
    model_a: str
    model_b: str
    U: float
    p: float


def compare_models(results: Sequence[ModelFitResult], labels: Sequence[str] | None = None) -> list[ComparisonRow]:
    """Rank-sum test on per-trial MSEs for every pair of models."""
    per_model: dict[str, list[float]] = defaultdict(list)
    for r in results:
        per_model[r.model.label].append(r.mse)
    labels = list(labels) if labels is not None else sorted(per_model)
    rows = []
    for la, lb in itertools.combinations(labels, 2):
        if per_model.get(la) and per_model.get(lb):
            res = wilcoxon_rank_sum(per_model[la], per_model[lb])
            rows.append(ComparisonRow(la, lb, res.U, res.p))
    return rows
