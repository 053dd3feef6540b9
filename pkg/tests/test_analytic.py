import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsemotion import analytic
from sparsemotion.analytic import (
    DecodeError,
    decode_spike_train,
    encode_spike_train,
    integrate_trajectory,
    min_jerk_l2_trajectory,
    minimum_time,
    optimal_amplitude,
    sparse_min_effort_signal,
    switch_times,
)
from sparsemotion.core import BangBangSignal, MovementTask, SpikeTrain, ValidationError


def sympy_position(K, times, n, first_sign=1):
    """Exact position by n-fold symbolic integration of a +-K square wave."""
    t = sp.Symbol("t")
    state = [sp.Integer(0)] * n  # x, x', ..., x^(n-1) at the current break
    pieces = []
    for i in range(len(times) - 1):
        a, b = times[i], times[i + 1]
        u = first_sign * K * (-1) ** i
        # integrate u n times from the stored state
        expr = sp.Integer(u)
        derivs = [expr]
        for j in range(n - 1, -1, -1):
            expr = state[j] + sp.integrate(expr, (t, a, t))
            derivs.append(expr)
        derivs = derivs[::-1]  # x, x', ...
        pieces.append((a, b, derivs))
        state = [d.subs(t, b) for d in derivs[:n]]
    return t, pieces, state


@pytest.mark.parametrize("n,D,T,K", [(1, 5, 2, 2.5), (2, 1, 1, 4.0), (3, 1, 1, 32.0), (4, 0, 1, 0.0)])
def test_optimal_amplitude_examples(n, D, T, K):
    assert optimal_amplitude(n, D, T) == pytest.approx(K, rel=1e-12, abs=0)


def test_amplitude_n3_via_symbolic_integration():
    # with K symbolic, x(1) = 1 pins K
    Ks = sp.Symbol("K")
    t, pieces, final = sympy_position(1, [0, sp.Rational(1, 4), sp.Rational(3, 4), 1], 3)
    assert final[0] == sp.Rational(1, 32)
    assert final[1] == 0 and final[2] == 0
    assert sp.solve(Ks * final[0] - 1, Ks) == [32]


def test_switch_time_examples():
    assert switch_times(3, 1.0) == pytest.approx((0, 0.25, 0.75, 1), abs=1e-15)
    assert switch_times(2, 2.0) == (0.0, 1.0, 2.0)
    for n in range(1, 13):
        ts = switch_times(n, 3.0)
        assert ts[0] == 0.0 and ts[-1] == 3.0
        assert all(b > a for a, b in zip(ts, ts[1:]))
        for i in range(n + 1):
            assert abs(ts[i] + ts[n - i] - 3.0) <= 1e-12


def test_switch_times_match_sin_squared():
    for n in range(1, 9):
        ref = [math.sin(math.pi * i / (2 * n)) ** 2 for i in range(n + 1)]
        np.testing.assert_allclose(switch_times(n, 1.0), ref, atol=1e-15)


def test_invalid_arguments():
    with pytest.raises(ValidationError):
        optimal_amplitude(0, 1, 1)
    with pytest.raises(ValidationError):
        optimal_amplitude(3, 1, 0)
    with pytest.raises(ValidationError):
        switch_times(13, 1)


def test_signal_examples(unit_task):
    s = sparse_min_effort_signal(unit_task, 3)
    assert s.amplitude == pytest.approx(32)
    np.testing.assert_array_equal(np.sign(s.interval_values()), [1, -1, 1])
    m = sparse_min_effort_signal(MovementTask(1, 0, 1), 3)
    assert m.amplitude == s.amplitude and m.first_sign == -1
    z = sparse_min_effort_signal(MovementTask(0, 0, 1), 5)
    assert z.is_zero and z.first_sign == 1


def test_spike_encoding_examples(unit_task):
    s = sparse_min_effort_signal(unit_task, 3)
    unit = encode_spike_train(s, "paper")
    deriv = encode_spike_train(s, "derivative")
    np.testing.assert_allclose(unit.weights, [32, -32, 32, -32])
    np.testing.assert_allclose(deriv.weights, [32, -64, 64, -32])
    np.testing.assert_array_equal(unit.times, s.switch_times)
    assert len(encode_spike_train(sparse_min_effort_signal(MovementTask(0, 0, 1), 5))) == 0


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("D", [1.0, -0.37])
def test_round_trip_exact(n, D):
    s = sparse_min_effort_signal(MovementTask(0, D, 0.8), n)
    back = decode_spike_train(encode_spike_train(s))
    assert back == s  # dataclass equality: bitwise on floats


def test_decode_empty_and_unit_weight_mode(unit_task):
    z = decode_spike_train(SpikeTrain((), 1.0))
    assert z.is_zero
    z5 = decode_spike_train(SpikeTrain((), 1.0), order=5)
    assert z5 == sparse_min_effort_signal(MovementTask(0, 0, 1), 5)
    unit = encode_spike_train(sparse_min_effort_signal(unit_task, 3), "paper")
    # running sum 32, 0, 32, 0 is not a square wave
    np.testing.assert_allclose(np.cumsum(unit.weights), [32, 0, 32, 0])
    with pytest.raises(DecodeError):
        decode_spike_train(unit)


def test_decode_rejects_unbalanced():
    with pytest.raises(DecodeError):
        decode_spike_train(SpikeTrain(((0, 1.0), (0.5, -2.0), (1, 0.5)), 1.0))


def test_trajectory_matches_symbolic_oracle(unit_task):
    traj = integrate_trajectory(sparse_min_effort_signal(unit_task, 3), 3)
    t, pieces, _ = sympy_position(32, [0, sp.Rational(1, 4), sp.Rational(3, 4), 1], 3)
    for a, b, derivs in pieces:
        # interior points only: the control itself is two-valued at a break
        for tv in np.linspace(float(a), float(b), 9)[1:-1]:
            for k in range(4):
                assert float(traj.evaluate(tv, k)) == pytest.approx(float(derivs[k].subs(t, tv)), abs=1e-12)
    assert float(traj.evaluate(0.5)) == pytest.approx(0.5, abs=1e-14)
    assert float(traj.evaluate(0.5, 1)) == pytest.approx(2.0, abs=1e-12)


def test_trajectory_n2_hand_values():
    traj = integrate_trajectory(sparse_min_effort_signal(MovementTask(0, 1, 1), 2), 2)
    # accelerate at 4 for half the time: x(1/2) = 4 * (1/2)^2 / 2
    assert float(traj.evaluate(0.5)) == pytest.approx(0.5, abs=1e-15)
    assert float(traj.evaluate(0.25)) == pytest.approx(0.125, abs=1e-15)


def test_zero_signal_constant_position():
    z = sparse_min_effort_signal(MovementTask(0.2, 0.2, 1), 4)
    traj = integrate_trajectory(z, 4, 0.2)
    np.testing.assert_array_equal(traj.evaluate(np.linspace(0, 1, 11)), 0.2)


def test_order_mismatch():
    s = sparse_min_effort_signal(MovementTask(0, 1, 1), 3)
    with pytest.raises(ValidationError):
        integrate_trajectory(s, 4)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 6), D=st.floats(-2, 2).filter(lambda d: abs(d) > 1e-3),
       T=st.floats(0.1, 3.0), x0=st.floats(-1, 1))
def test_boundary_conditions(n, D, T, x0):
    task = MovementTask(x0, x0 + D, T)
    s = sparse_min_effort_signal(task, n)
    end = integrate_trajectory(s, n, x0).state_at(T)
    assert abs(end[0] - task.x_end) <= 1e-9 * max(1.0, abs(D))
    assert np.all(np.abs(end[1:]) <= 1e-9 * s.amplitude)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 6), D=st.floats(0.01, 2), T=st.floats(0.1, 3.0))
def test_velocity_symmetry(n, D, T):
    traj = integrate_trajectory(sparse_min_effort_signal(MovementTask(0, D, T), n), n)
    g = np.linspace(0, T, 1001)
    v = traj.evaluate(g, 1)
    np.testing.assert_allclose(v, v[::-1], atol=1e-9 * max(1.0, np.max(np.abs(v))))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 8), D=st.floats(0.01, 5), T=st.floats(0.05, 5), c=st.floats(0.1, 10))
def test_scaling_laws(n, D, T, c):
    K = optimal_amplitude(n, D, T)
    assert optimal_amplitude(n, c * D, T) == pytest.approx(c * K, rel=1e-12)
    assert optimal_amplitude(n, D, c * T) == pytest.approx(K / c**n, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 8), D=st.floats(-5, 5).filter(lambda d: abs(d) > 1e-6), T=st.floats(0.05, 5))
def test_minimum_time_inverts_amplitude(n, D, T):
    assert minimum_time(n, D, optimal_amplitude(n, D, T)) == pytest.approx(T, rel=1e-12)


def test_minimum_time_examples():
    assert minimum_time(2, 1, 4) == pytest.approx(1.0, rel=1e-15)
    assert minimum_time(1, 5, 2.5) == pytest.approx(2.0, rel=1e-15)
    assert minimum_time(3, 1, 32) == pytest.approx(1.0, rel=1e-15)
    assert minimum_time(3, 0, 0) == 0.0
    with pytest.raises(ValidationError):
        minimum_time(3, 1, 0)


def test_quintic_baseline():
    task = MovementTask(0.1, 0.5, 0.4)
    q = min_jerk_l2_trajectory(task)
    assert float(q.evaluate(0.2)) == pytest.approx(0.3, abs=1e-15)
    assert float(q.evaluate(0.2, 1)) == pytest.approx(1.875 * 0.4 / 0.4, rel=1e-12)
    for t in (0.0, 0.4):
        for k in (1, 2):
            assert float(q.evaluate(t, k)) == pytest.approx(0, abs=1e-12)
    assert float(q.evaluate(0.0)) == 0.1 and float(q.evaluate(0.4)) == pytest.approx(0.5, abs=1e-15)
    # independent polynomial oracle
    tau = np.linspace(0, 1, 21)
    np.testing.assert_allclose(q.evaluate(tau * 0.4), 0.1 + 0.4 * (10 * tau**3 - 15 * tau**4 + 6 * tau**5), atol=1e-15)


def test_peak_speeds():
    task = MovementTask(0, 1, 1)
    # quintic: maximize 30 t^2 - 60 t^3 + 30 t^4 on a dense grid
    g = np.linspace(0, 1, 200001)
    assert np.max(30 * g**2 - 60 * g**3 + 30 * g**4) == pytest.approx(1.875, rel=1e-9)
    assert float(min_jerk_l2_trajectory(task).evaluate(0.5, 1)) == pytest.approx(1.875, rel=1e-12)
    traj = integrate_trajectory(sparse_min_effort_signal(task, 3), 3)
    assert np.max(traj.evaluate(g, 1)) == pytest.approx(2.0, rel=1e-9)


def test_sample_trajectory(unit_task):
    traj = analytic.model_trajectory(unit_task, "sparse", 3)
    s = analytic.sample_trajectory(traj, rate=10)
    assert len(s) == 11 and s.values.shape == (11, 4)
    with pytest.raises(ValueError):
        analytic.model_trajectory(unit_task, "cubic", 3)
