"""Trial ingestion, velocity estimation and ballistic-segment extraction."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic
from .core import BallisticSegment, MovementTask, SampledSeries, Trial, ValidationError
from .csvio import CSVFormatError, read_manifest, read_trial

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.05
DEFAULT_SMOOTH_WINDOW = 5
MIN_SEGMENT_DURATION = 0.05


class DataError(ValueError):
    """Input data cannot be processed."""


class NoMovementError(DataError):
    pass


class DegenerateSegmentError(DataError):
    pass


@dataclass(frozen=True)
class LoadFailure:
    file: str
    reason: str


def load_trials(manifest_path) -> tuple[list[Trial], list[LoadFailure]]:
    """Load every trial listed in a manifest.

    Paths in the manifest are resolved relative to the manifest's directory.
    Files that are missing or fail validation are reported individually and
    do not stop the others from loading.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"manifest not found: {manifest_path}")
    try:
        entries = read_manifest(manifest_path)
    except CSVFormatError as exc:
        raise DataError(str(exc)) from None
    trials, failures = [], []
    for entry in entries:
        path = manifest_path.parent / entry.file
        try:
            trials.append(read_trial(path, entry.subject, entry.movement_type))
        except FileNotFoundError:
            failures.append(LoadFailure(entry.file, f"missing file {path}"))
        except (CSVFormatError, ValidationError, UnicodeDecodeError) as exc:
            failures.append(LoadFailure(entry.file, str(exc)))
    for f in failures:
        log.warning("skipping %s: %s", f.file, f.reason)
    return trials, failures


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; near the ends the window shrinks symmetrically."""
    values = np.asarray(values, dtype=float)
    if window == 1:
        return values.copy()
    half = window // 2
    n = values.size
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(n)
    r = np.minimum(half, np.minimum(idx, n - 1 - idx))
    return (csum[idx + r + 1] - csum[idx - r]) / (2 * r + 1)


def velocity_profile(trial: Trial, smooth_window: int = DEFAULT_SMOOTH_WINDOW) -> SampledSeries:
    """Finite-difference velocity smoothed by a centered moving average.

    Central differences inside, second-order one-sided differences at the
    two ends.
    """
    w = smooth_window
    if int(w) != w or w < 1 or w % 2 == 0 or w >= len(trial):
        raise ValueError(f"smooth_window must be odd, >= 1 and < {len(trial)}, got {w}")
    v = np.gradient(trial.positions, trial.times, edge_order=2)
    return SampledSeries(trial.times, moving_average(v, int(w)))


@dataclass(frozen=True)
class Detection:
    onset: int
    peak: int
    offset: int
    onset_clamped: bool
    offset_clamped: bool


def detect_ballistic(v: SampledSeries, threshold_frac: float = DEFAULT_THRESHOLD) -> Detection:
    """Locate the ballistic portion around the speed peak.

    From the first sample of maximal speed, walk backwards to the last sample
    whose speed is below ``threshold_frac * peak`` (onset) and forwards to the
    first such sample (offset). A walk that runs off the series clamps to its
    end and is flagged.
    """
    if not 0 < threshold_frac < 1:
        raise ValueError(f"threshold_frac must be in (0, 1), got {threshold_frac}")
    speed = np.abs(np.asarray(v.values, dtype=float))
    peak = int(np.argmax(speed))
    if speed[peak] == 0:
        raise NoMovementError("velocity is zero everywhere")
    below = speed < threshold_frac * speed[peak]
    before = np.flatnonzero(below[:peak])
    after = np.flatnonzero(below[peak + 1:])
    onset = int(before[-1]) if before.size else 0
    offset = peak + 1 + int(after[0]) if after.size else speed.size - 1
    return Detection(onset, peak, offset, not before.size, not after.size)


def task_from_segment(trial: Trial, onset: int, offset: int) -> MovementTask:
    if not 0 <= onset < offset < len(trial):
        raise DegenerateSegmentError(f"invalid segment [{onset}, {offset}] for {len(trial)} samples")
    if offset - onset + 1 <= 2:
        raise DegenerateSegmentError(f"segment [{onset}, {offset}] has too few samples")
    x, t = trial.positions, trial.times
    return MovementTask(float(x[onset]), float(x[offset]), float(t[offset] - t[onset]))


def extract_segment(trial: Trial, threshold_frac: float = DEFAULT_THRESHOLD,
                    smooth_window: int = DEFAULT_SMOOTH_WINDOW,
                    velocity: SampledSeries | None = None) -> BallisticSegment:
    """Full detection pipeline for one trial; outlier conditions are recorded as flags."""
    v = velocity_profile(trial, smooth_window) if velocity is None else velocity
    det = detect_ballistic(v, threshold_frac)
    task = task_from_segment(trial, det.onset, det.offset)
    flags = []
    if det.onset_clamped:
        flags.append("onset_clamped")
    if det.offset_clamped:
        flags.append("offset_clamped")
    if task.duration < MIN_SEGMENT_DURATION:
        flags.append("short_segment")
    return BallisticSegment(det.onset, det.peak, det.offset, task,
                            det.onset_clamped, det.offset_clamped, tuple(flags), threshold_frac)


def full_segment(trial: Trial) -> BallisticSegment:
    """Segment spanning the whole trial, for data already clipped to the movement."""
    last = len(trial) - 1
    task = task_from_segment(trial, 0, last)
    v = np.gradient(trial.positions, trial.times)
    peak = int(np.argmax(np.abs(v)))
    return BallisticSegment(0, peak, last, task)


def synthesize_trial(task: MovementTask, n: int = 3, model: str = "sparse", noise_std: float = 0.0,
                     rate: float = 1000.0, pre_pad: float = 0.0, post_pad: float = 0.0,
                     rng: np.random.Generator | None = None, trial_id: str = "synthetic",
                     subject: str = "", movement_type: str = "") -> Trial:
    """Sample a model trajectory at ``rate`` Hz, pad with rest and add position noise."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    if noise_std < 0 or pre_pad < 0 or post_pad < 0:
        raise ValueError("noise_std and padding must be non-negative")
    traj = analytic.model_trajectory(task, model, n)
    h = 1.0 / rate
    n_pre = int(round(pre_pad * rate))
    n_move = int(round(task.duration * rate))
    n_post = int(round(post_pad * rate))
    k = np.arange(-n_pre, n_move + n_post + 1)
    t_local = k * h
    x = traj.evaluate(t_local)
    if noise_std > 0:
        if rng is None:
            raise ValueError("noise requires a seeded generator")
        x = x + rng.normal(0.0, noise_std, size=x.size)
    times = np.arange(k.size) * h
    return Trial(trial_id, times, x, subject, movement_type)
