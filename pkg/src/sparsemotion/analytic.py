"""Closed-form sparse minimum-effort controls for integrator chains.

Under the sup-norm effort measure the optimal rest-to-rest control of an
n-th order integrator is a bang-bang signal with amplitude

    K = 2**(2(n-1)) (n-1)! |D| / T**n

and switch times ``t_i = T sin^2(pi i / 2n)``, ``i = 0..n``.
"""

from __future__ import annotations

import math
from typing import Literal, Sequence

import numpy as np

from .core import (
    BangBangSignal,
    MovementTask,
    PiecewiseTrajectory,
    SampledSeries,
    Segment,
    SpikeTrain,
    ValidationError,
    check_duration,
    check_order,
)

SpikeMode = Literal["paper", "derivative"]


class DecodeError(ValueError):
    """A spike train does not describe a valid bang-bang signal."""


def amplitude_factor(n: int) -> float:
    """``2**(2(n-1)) * (n-1)!``, exact in floating point for n <= 12."""
    n = check_order(n)
    return float(4 ** (n - 1) * math.factorial(n - 1))


def optimal_amplitude(n: int, D: float, T: float) -> float:
    """Smallest bound K for which a control with ``|u| <= K`` moves the chain by D in time T."""
    T = check_duration(T)
    return amplitude_factor(n) * abs(float(D)) / T**n


def switch_times(n: int, T: float) -> tuple[float, ...]:
    """Optimal switch times ``T sin^2(pi i / 2n)``, computed to be exactly symmetric."""
    n = check_order(n)
    T = check_duration(T)
    ts = [0.0] * (n + 1)
    for i in range(1, (n + 1) // 2):
        ts[i] = T * math.sin(math.pi * i / (2 * n)) ** 2
    if n % 2 == 0:
        ts[n // 2] = T / 2
    for i in range((n + 2) // 2, n):
        ts[i] = T - ts[n - i]
    ts[n] = T
    return tuple(ts)


def sparse_min_effort_signal(task: MovementTask, n: int) -> BangBangSignal:
    K = optimal_amplitude(n, task.displacement, task.duration)
    sign = -1 if task.displacement < 0 else 1
    return BangBangSignal(K, switch_times(n, task.duration), sign, task.duration)


def encode_spike_train(signal: BangBangSignal, mode: SpikeMode = "derivative") -> SpikeTrain:
    """Encode a bang-bang signal as weighted impulses at its switch times.

    ``mode="paper"`` places weight ``s K (-1)**i`` at each switch time ``t_i``.
    ``mode="derivative"`` places the actual jump of the signal at each switch
    (``+-K`` at the ends, ``+-2K`` in between) so a running sum of the weights
    rebuilds the signal.
    """
    if signal.is_zero:
        return SpikeTrain((), signal.duration)
    n = signal.order
    K = signal.amplitude
    s = signal.first_sign
    if mode == "paper":
        weights = [s * K * (-1) ** i for i in range(n + 1)]
    elif mode == "derivative":
        vals = np.concatenate(([0.0], signal.interval_values(), [0.0]))
        weights = list(np.diff(vals))
    else:
        raise ValueError(f"unknown spike mode {mode!r}")
    return SpikeTrain(tuple(zip(signal.switch_times, weights)), signal.duration)


def decode_spike_train(spikes: SpikeTrain, duration: float | None = None,
                       order: int | None = None) -> BangBangSignal:
    """Rebuild a bang-bang signal from a derivative-mode spike train.

    An empty train decodes to the zero signal; its switch grid is the optimal
    one for ``order`` when given, else the bare interval ``[0, T]``.
    """
    T = spikes.duration if duration is None else check_duration(duration)
    if len(spikes) == 0:
        ts = switch_times(order, T) if order is not None else (0.0, T)
        return BangBangSignal(0.0, ts, 1, T)
    times = spikes.times
    levels = np.cumsum(spikes.weights)
    if len(np.unique(times)) != times.size:
        raise DecodeError("coincident impulse times")
    if times.size < 2:
        raise DecodeError("a spike train needs at least two impulses")
    if times[0] != 0.0 or times[-1] != T:
        raise DecodeError("impulses must start at t=0 and end at t=T")
    K = abs(levels[0])
    # levels are exact sums of +-K and +-2K, so the tolerance only absorbs
    # rounding in externally supplied weights
    tol = 1e-12 * K
    if K == 0 or abs(levels[-1]) > tol:
        raise DecodeError("cumulative weights do not return to zero at T")
    plateau = levels[:-1]
    if np.any(np.abs(np.abs(plateau) - K) > tol):
        raise DecodeError(f"cumulative weights {plateau.tolist()} are not a +-K square wave")
    signs = np.sign(plateau)
    if np.any(signs[1:] == signs[:-1]):
        raise DecodeError("consecutive plateaus do not alternate in sign")
    try:
        return BangBangSignal(float(K), tuple(times.tolist()), int(signs[0]), T)
    except ValidationError as exc:
        raise DecodeError(str(exc)) from None


def _propagate(state: np.ndarray, u: float, h: float) -> np.ndarray:
    n = state.size
    out = np.empty(n)
    for j in range(n):
        acc = u * h ** (n - j) / math.factorial(n - j)
        for k in range(n - j):
            acc += state[j + k] * h**k / math.factorial(k)
        out[j] = acc
    return out


def integrate_piecewise_constant(breaks: Sequence[float], values: Sequence[float], n: int,
                                 initial_state) -> PiecewiseTrajectory:
    """Exactly integrate a piecewise-constant n-th derivative of position.

    ``values[i]`` is the control on ``[breaks[i], breaks[i+1])``.
    """
    n = check_order(n)
    breaks = np.asarray(breaks, dtype=float)
    values = np.asarray(values, dtype=float)
    if breaks.size != values.size + 1:
        raise ValidationError("need one more break than control values")
    state = np.array(initial_state, dtype=float)
    if state.size != n:
        raise ValidationError(f"initial state has {state.size} entries, order is {n}")
    fact = np.array([math.factorial(k) for k in range(n + 1)], dtype=float)
    segments = []
    for a, b, u in zip(breaks[:-1], breaks[1:], values):
        coeffs = np.append(state / fact[:n], u / fact[n])
        segments.append(Segment(float(a), float(b), coeffs))
        state = _propagate(state, float(u), float(b - a))
    return PiecewiseTrajectory(tuple(segments), n)


def integrate_trajectory(signal: BangBangSignal, n: int, x_start: float = 0.0) -> PiecewiseTrajectory:
    """Trajectory produced by ``signal`` driving an n-th order chain from rest at ``x_start``."""
    n = check_order(n)
    if signal.order != n:
        raise ValidationError(
            f"signal has {signal.order + 1} switch times, order {n} needs {n + 1}"
        )
    x0 = np.zeros(n)
    x0[0] = x_start
    return integrate_piecewise_constant(signal.switch_times, signal.interval_values(), n, x0)


def minimum_time(n: int, D: float, B: float) -> float:
    """Shortest duration in which a control bounded by ``B`` moves the chain by ``D``."""
    n = check_order(n)
    B = float(B)
    if B < 0 or not math.isfinite(B):
        raise ValidationError(f"bound must be finite and >= 0, got {B}")
    if D == 0:
        return 0.0
    if B == 0:
        raise ValidationError("infeasible: zero bound cannot produce a nonzero displacement")
    return (amplitude_factor(n) * abs(float(D)) / B) ** (1.0 / n)


def min_jerk_l2_trajectory(task: MovementTask) -> PiecewiseTrajectory:
    """Minimum squared-jerk quintic ``x_i + D(10 tau^3 - 15 tau^4 + 6 tau^5)``."""
    D, T = task.displacement, task.duration
    coeffs = [task.x_start, 0.0, 0.0, 10 * D / T**3, -15 * D / T**4, 6 * D / T**5]
    return PiecewiseTrajectory((Segment(0.0, T, coeffs),), 3)


def model_trajectory(task: MovementTask, kind: str, n: int = 3) -> PiecewiseTrajectory:
    """Trajectory of a named model: ``"sparse"`` (sup-norm, order n) or ``"quintic"``."""
    if kind == "sparse":
        return integrate_trajectory(sparse_min_effort_signal(task, n), n, task.x_start)
    if kind == "quintic":
        return min_jerk_l2_trajectory(task)
    raise ValueError(f"unknown model kind {kind!r}")


def sample_trajectory(traj: PiecewiseTrajectory, times=None, rate: float | None = None,
                      derivatives: int | None = None) -> SampledSeries:
    """Sample a trajectory; values column k holds the k-th derivative of position."""
    if times is None:
        if rate is None:
            raise ValueError("give either times or rate")
        count = int(round(traj.duration * rate)) + 1
        times = traj.start + np.arange(count) / rate
        times[-1] = min(times[-1], traj.end)
    times = np.asarray(times, dtype=float)
    return SampledSeries(times, traj.sample(times, derivatives))
