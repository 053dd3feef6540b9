"""Sparse bang-bang minimum-effort control of integrator chains and its evaluation on reaching data."""

from .analytic import (
    decode_spike_train,
    encode_spike_train,
    integrate_trajectory,
    min_jerk_l2_trajectory,
    minimum_time,
    optimal_amplitude,
    sparse_min_effort_signal,
    switch_times,
)
from .core import (
    BallisticSegment,
    BangBangSignal,
    IntegratorChain,
    MovementTask,
    PiecewiseTrajectory,
    SampledSeries,
    SpikeTrain,
    StateVector,
    Trial,
    ValidationError,
)

__version__ = "0.1.0"
