"""Domain types shared by the solvers, the movement pipeline and the CLI.

Every type is an immutable value object. Array-valued fields are stored as
read-only numpy arrays so instances can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_ORDER = 12

# relative tolerance used for the switch-time symmetry check
SYMMETRY_RTOL = 1e-9


class ValidationError(ValueError):
    """Raised when a domain object is constructed with invalid data."""


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def check_order(n: int) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise ValidationError(f"order must be an integer, got {n!r}")
    n = int(n)
    if not 1 <= n <= MAX_ORDER:
        raise ValidationError(f"order must be in 1..{MAX_ORDER}, got {n}")
    return n


def check_duration(T: float) -> float:
    T = float(T)
    if not math.isfinite(T) or T <= 0:
        raise ValidationError(f"duration must be positive and finite, got {T}")
    return T


@dataclass(frozen=True)
class IntegratorChain:
    """An n-th order integrator: the control is the n-th derivative of position."""

    order: int

    def __post_init__(self):
        object.__setattr__(self, "order", check_order(self.order))

    @property
    def A(self) -> np.ndarray:
        return np.eye(self.order, k=1)

    @property
    def B(self) -> np.ndarray:
        b = np.zeros((self.order, 1))
        b[-1, 0] = 1.0
        return b


@dataclass(frozen=True, eq=False)
class StateVector:
    """Position followed by its first ``n - 1`` time derivatives."""

    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.ndim != 1 or vals.size == 0:
            raise ValidationError("state vector must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("state vector entries must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def at_rest(cls, position: float, order: int) -> "StateVector":
        vals = np.zeros(check_order(order))
        vals[0] = position
        return cls(vals)

    @property
    def order(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class MovementTask:
    """Rest-to-rest point-to-point movement along a single axis."""

    x_start: float
    x_end: float
    duration: float

    def __post_init__(self):
        for name in ("x_start", "x_end"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "duration", check_duration(self.duration))

    @property
    def displacement(self) -> float:
        return self.x_end - self.x_start


@dataclass(frozen=True)
class BangBangSignal:
    """Piecewise-constant control alternating between ``+K`` and ``-K``.

    The value on ``[t_i, t_{i+1})`` is ``first_sign * (-1)**i * amplitude``.
    Outside ``[0, duration]`` the signal is zero.
    """

    amplitude: float
    switch_times: tuple[float, ...]
    first_sign: int
    duration: float

    def __post_init__(self):
        K = float(self.amplitude)
        if not math.isfinite(K) or K < 0:
            raise ValidationError(f"amplitude must be finite and >= 0, got {K}")
        T = check_duration(self.duration)
        if self.first_sign not in (1, -1):
            raise ValidationError(f"first_sign must be +1 or -1, got {self.first_sign}")
        ts = tuple(float(t) for t in self.switch_times)
        if len(ts) < 2:
            raise ValidationError("a signal needs at least two switch times")
        check_order(len(ts) - 1)
        if ts[0] != 0.0 or ts[-1] != T:
            raise ValidationError("switch times must start at 0 and end at the duration")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValidationError("switch times must be strictly increasing")
        n = len(ts) - 1
        for i in range(n + 1):
            if abs(ts[i] + ts[n - i] - T) > SYMMETRY_RTOL * T:
                raise ValidationError(
                    f"switch times are not symmetric about T/2: t_{i} + t_{n - i} != T"
                )
        object.__setattr__(self, "amplitude", K)
        object.__setattr__(self, "switch_times", ts)
        object.__setattr__(self, "duration", T)

    @property
    def order(self) -> int:
        return len(self.switch_times) - 1

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    def interval_values(self) -> np.ndarray:
        """Control value on each of the ``n`` intervals between switches."""
        signs = self.first_sign * (-1.0) ** np.arange(self.order)
        return signs * self.amplitude

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        edges = np.asarray(self.switch_times)
        idx = np.searchsorted(edges, t, side="right") - 1
        vals = np.append(self.interval_values(), 0.0)
        # the final instant t == T belongs to the last interval
        idx = np.where(t == self.duration, self.order - 1, idx)
        out = np.where((idx >= 0) & (idx < self.order), vals[np.clip(idx, 0, self.order)], 0.0)
        return out


@dataclass(frozen=True)
class SpikeTrain:
    """Signed, timed impulse weights representing a piecewise-constant signal."""

    impulses: tuple[tuple[float, float], ...]
    duration: float

    def __post_init__(self):
        T = check_duration(self.duration)
        imp = tuple((float(t), float(w)) for t, w in self.impulses)
        times = [t for t, _ in imp]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValidationError("impulse times must be non-decreasing")
        if any(t < 0 or t > T for t in times):
            raise ValidationError("impulse times must lie within [0, duration]")
        object.__setattr__(self, "impulses", imp)
        object.__setattr__(self, "duration", T)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.impulses], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.impulses], dtype=float)

    def __len__(self):
        return len(self.impulses)


@dataclass(frozen=True, eq=False)
class Segment:
    """Polynomial piece: position(start + s) = sum(coeffs[k] * s**k) for s in [0, end - start]."""

    start: float
    end: float
    coeffs: np.ndarray

    def __post_init__(self):
        if not self.end > self.start:
            raise ValidationError("segment must have positive length")
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))

    def derivative_coeffs(self, k: int) -> np.ndarray:
        c = np.asarray(self.coeffs)
        for _ in range(k):
            if c.size <= 1:
                return np.zeros(1)
            c = c[1:] * np.arange(1, c.size)
        return c

    def evaluate(self, t, derivative: int = 0) -> np.ndarray:
        c = self.derivative_coeffs(derivative)
        s = np.asarray(t, dtype=float) - self.start
        return np.polynomial.polynomial.polyval(s, c)


@dataclass(frozen=True, eq=False)
class PiecewiseTrajectory:
    """Exact piecewise-polynomial position trajectory of an integrator chain.

    Position and its first ``order - 1`` derivatives are continuous across
    segment boundaries.
    """

    segments: tuple[Segment, ...]
    order: int

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValidationError("trajectory needs at least one segment")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "order", check_order(self.order))
        for a, b in zip(segs, segs[1:]):
            if a.end != b.start:
                raise ValidationError("segments must tile the time span without gaps")
            for k in range(self.order):
                left = float(a.evaluate(a.end, k))
                right = float(b.evaluate(b.start, k))
                # rounding in polyval is bounded by sum |c_j| L^j, not by the result
                c = np.abs(a.derivative_coeffs(k))
                scale = max(1.0, float(np.polynomial.polynomial.polyval(a.end - a.start, c)), abs(right))
                if abs(left - right) > 1e-9 * scale:
                    raise ValidationError(
                        f"derivative {k} is discontinuous at t={a.end}: {left} vs {right}"
                    )

    @property
    def start(self) -> float:
        return self.segments[0].start

    @property
    def end(self) -> float:
        return self.segments[-1].end

    @property
    def duration(self) -> float:
        return self.end - self.start

    def evaluate(self, t, derivative: int = 0) -> np.ndarray:
        """Evaluate the ``derivative``-th time derivative of position at ``t``.

        Times outside the span are clamped to its ends.
        """
        t = np.clip(np.asarray(t, dtype=float), self.start, self.end)
        bounds = np.array([s.start for s in self.segments[1:]])
        idx = np.searchsorted(bounds, t, side="right")
        out = np.empty_like(t)
        for i, seg in enumerate(self.segments):
            mask = idx == i
            if np.any(mask):
                out[mask] = seg.evaluate(t[mask], derivative)
        return out if out.ndim else out[()]

    def state_at(self, t: float) -> np.ndarray:
        return np.array([float(self.evaluate(t, k)) for k in range(self.order)])

    def sample(self, times, derivatives: int | None = None) -> np.ndarray:
        """Array of shape ``(len(times), derivatives + 1)``; column k is the k-th derivative."""
        d = self.order if derivatives is None else derivatives
        times = np.asarray(times, dtype=float)
        return np.column_stack([self.evaluate(times, k) for k in range(d + 1)])


@dataclass(frozen=True, eq=False)
class SampledSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _frozen(self.times)
        v = _frozen(self.values)
        if t.ndim != 1 or v.shape[:1] != t.shape:
            raise ValidationError("times and values must have matching lengths")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        if not isinstance(other, SampledSeries):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self.values, other.values)

    __hash__ = None


MIN_TRIAL_SAMPLES = 8


@dataclass(frozen=True, eq=False)
class Trial:
    """One recorded (or synthetic) 1-D movement."""

    id: str
    times: np.ndarray
    positions: np.ndarray
    subject: str = ""
    movement_type: str = ""

    def __post_init__(self):
        t = _frozen(self.times)
        x = _frozen(self.positions)
        if t.ndim != 1 or x.shape != t.shape:
            raise ValidationError(f"trial {self.id}: times and positions must have equal length")
        if t.size < MIN_TRIAL_SAMPLES:
            raise ValidationError(
                f"trial {self.id}: needs at least {MIN_TRIAL_SAMPLES} samples, got {t.size}"
            )
        if np.any(np.diff(t) <= 0):
            raise ValidationError(f"trial {self.id}: times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValidationError(f"trial {self.id}: non-finite samples")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        if not isinstance(other, Trial):
            return NotImplemented
        return (
            (self.id, self.subject, self.movement_type)
            == (other.id, other.subject, other.movement_type)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.positions, other.positions)
        )

    __hash__ = None


@dataclass(frozen=True)
class BallisticSegment:
    """Fast feedforward portion of a trial, as sample indices into the trial."""

    onset_index: int
    peak_index: int
    offset_index: int
    task: MovementTask
    onset_clamped: bool = False
    offset_clamped: bool = False
    flags: tuple[str, ...] = field(default=())
    # speed fraction that defined onset/offset; None when the segment was not detected
    threshold: float | None = None

    def __post_init__(self):
        if not self.onset_index <= self.peak_index <= self.offset_index:
            raise ValidationError("segment indices must satisfy onset <= peak <= offset")
        if self.onset_index == self.offset_index:
            raise ValidationError("segment must span more than one sample")

    @property
    def indices(self) -> slice:
        return slice(self.onset_index, self.offset_index + 1)


def project_onto_axis(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Project multi-dimensional samples onto the line from first to last sample.

    Returns the signed distance along that line measured from the first sample.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        return p - p[0]
    axis = p[-1] - p[0]
    length = np.linalg.norm(axis)
    if length == 0:
        return np.zeros(p.shape[0])
    return (p - p[0]) @ (axis / length)
