import numpy as np
import pytest
from scipy.optimize import brentq

from sparsemotion import csvio
from sparsemotion.analytic import integrate_trajectory, min_jerk_l2_trajectory, sparse_min_effort_signal
from sparsemotion.core import MovementTask, SampledSeries, Trial
from sparsemotion.movement import (
    DataError,
    DegenerateSegmentError,
    NoMovementError,
    detect_ballistic,
    extract_segment,
    full_segment,
    load_trials,
    moving_average,
    synthesize_trial,
    task_from_segment,
    velocity_profile,
)

REACH_TASK = MovementTask(0.0, 0.1, 0.33)


def ramp(slope=0.7, n=50, rate=100.0):
    t = np.arange(n) / rate
    return Trial("ramp", t, slope * t)


def test_velocity_of_ramp_is_constant():
    v = velocity_profile(ramp(), 5)
    np.testing.assert_allclose(v.values, 0.7, rtol=1e-12)


def test_velocity_of_constant_is_zero():
    t = np.arange(20) * 0.01
    v = velocity_profile(Trial("c", t, np.full(20, 0.4)), 3)
    np.testing.assert_allclose(v.values, 0.0, atol=1e-12)


def test_quintic_peak_velocity():
    tr = synthesize_trial(REACH_TASK, model="quintic", rate=1000)
    v = velocity_profile(tr, 5)
    assert np.max(v.values) == pytest.approx(1.875 * 0.1 / 0.33, rel=0.005)


@pytest.mark.parametrize("w", [0, 2, 4, 51])
def test_window_validation(w):
    with pytest.raises(ValueError):
        velocity_profile(ramp(n=50), w)


def test_moving_average_shrinks_at_ends():
    x = np.array([0.0, 1.0, 2.0, 10.0, 4.0])
    np.testing.assert_allclose(moving_average(x, 3), [0.0, 1.0, 13 / 3, 16 / 3, 4.0])


def test_velocity_converges_second_order():
    task = MovementTask(0, 1, 1)
    traj = integrate_trajectory(sparse_min_effort_signal(task, 4), 4)
    errs = []
    for rate in (200, 400):
        tr = synthesize_trial(task, 4, rate=rate)
        v = velocity_profile(tr, 1)
        errs.append(np.max(np.abs(v.values[1:-1] - traj.evaluate(tr.times[1:-1], 1))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_detect_quintic_symmetric():
    tr = synthesize_trial(MovementTask(0, 1, 1), model="quintic", rate=1000, pre_pad=0.1, post_pad=0.1)
    v = velocity_profile(tr, 1)
    det = detect_ballistic(v, 0.05)
    # oracle: root of the normalized quintic speed at 5% of its peak
    tau = brentq(lambda s: 30 * s**2 - 60 * s**3 + 30 * s**4 - 0.05 * 1.875, 0, 0.5)
    assert abs((det.peak - det.onset) - (det.offset - det.peak)) <= 1
    assert abs(tr.times[det.onset] - (0.1 + tau)) <= 0.0011
    assert not det.onset_clamped and not det.offset_clamped


def test_detect_clamps_on_ramp():
    t = np.arange(30) * 0.01
    det = detect_ballistic(SampledSeries(t, t.copy()), 0.05)
    assert det.offset == 29 and det.offset_clamped
    # only speeds 0 and 0.01 are below 0.05 * 0.29
    assert det.onset == 1 and not det.onset_clamped


def test_threshold_monotone():
    tr = synthesize_trial(REACH_TASK, model="quintic", rate=1000, pre_pad=0.05, post_pad=0.05)
    v = velocity_profile(tr, 5)
    prev = None
    for th in (0.5, 0.2, 0.05, 0.01):
        d = detect_ballistic(v, th)
        assert d.onset <= d.peak <= d.offset
        if prev is not None:
            assert d.onset <= prev.onset and d.offset >= prev.offset
        prev = d
    assert detect_ballistic(v, 0.5).offset - detect_ballistic(v, 0.5).onset < \
        detect_ballistic(v, 0.05).offset - detect_ballistic(v, 0.05).onset


def test_detect_peak_tie_earliest():
    v = SampledSeries(np.arange(7.0), [0, 1, 3, 1, 3, 1, 0])
    assert detect_ballistic(v, 0.5).peak == 2


def test_no_movement():
    with pytest.raises(NoMovementError):
        detect_ballistic(SampledSeries(np.arange(10.0), np.zeros(10)))
    t = np.arange(20) * 0.01
    with pytest.raises(NoMovementError):
        extract_segment(Trial("z", t, np.zeros(20)))


def test_task_from_segment():
    tr = synthesize_trial(REACH_TASK, rate=1000)
    task = task_from_segment(tr, 0, len(tr) - 1)
    assert task.x_start == 0.0
    assert task.x_end == pytest.approx(0.1, abs=1e-15)
    assert task.duration == pytest.approx(0.33, abs=1e-12)
    with pytest.raises(DegenerateSegmentError):
        task_from_segment(tr, 10, 11)


def test_extract_segment_flags():
    t = np.arange(100) * 0.01
    seg = extract_segment(Trial("acc", t, t**2), 0.05, 3)  # still speeding up at the end
    assert seg.flags == ("offset_clamped",)
    tr = synthesize_trial(MovementTask(0, 0.1, 0.04), rate=1000, pre_pad=0.05, post_pad=0.05)
    assert "short_segment" in extract_segment(tr, 0.05, 1).flags


def test_synthesize_exact_without_noise():
    task = MovementTask(0.0, 0.1, 0.33)
    tr = synthesize_trial(task, 3, rate=1000)
    traj = integrate_trajectory(sparse_min_effort_signal(task, 3), 3)
    np.testing.assert_array_equal(tr.positions, traj.evaluate(tr.times))
    q = synthesize_trial(task, model="quintic", rate=500)
    np.testing.assert_array_equal(q.positions, min_jerk_l2_trajectory(task).evaluate(q.times))


def test_synthesize_deterministic():
    a = synthesize_trial(REACH_TASK, noise_std=1e-3, rng=np.random.default_rng(3))
    b = synthesize_trial(REACH_TASK, noise_std=1e-3, rng=np.random.default_rng(3))
    assert a == b
    with pytest.raises(ValueError):
        synthesize_trial(REACH_TASK, noise_std=1e-3)


def test_synthesize_padding():
    tr = synthesize_trial(REACH_TASK, rate=1000, pre_pad=0.1, post_pad=0.2)
    assert len(tr) == 100 + 330 + 200 + 1
    np.testing.assert_array_equal(tr.positions[:101], 0.0)
    np.testing.assert_allclose(tr.positions[-200:], 0.1, atol=1e-15)


def test_full_segment_recovers_task():
    tr = synthesize_trial(REACH_TASK, rate=1000)
    seg = full_segment(tr)
    assert seg.task.duration == pytest.approx(0.33)
    assert seg.threshold is None


# loading --------------------------------------------------------------------


def write_manifest(tmp_path, rows):
    csvio.write_manifest([csvio.ManifestEntry(*r) for r in rows], tmp_path / "manifest.csv")
    return tmp_path / "manifest.csv"


def test_load_empty_manifest(tmp_path):
    trials, failures = load_trials(write_manifest(tmp_path, []))
    assert trials == [] and failures == []


def test_load_one_and_bad(tmp_path):
    good = synthesize_trial(REACH_TASK, trial_id="good")
    csvio.write_trial(good, tmp_path)
    (tmp_path / "back.csv").write_text("t,x\n" + "".join(f"{0.01 * (9 - i)},0\n" for i in range(10)))
    m = write_manifest(tmp_path, [("good.csv", "S1", "AB"), ("back.csv", "S1", "AB"), ("gone.csv", "S2", "AB")])
    trials, failures = load_trials(m)
    assert [t.id for t in trials] == ["good"]
    assert trials[0].subject == "S1"
    assert {f.file for f in failures} == {"back.csv", "gone.csv"}


def test_missing_manifest(tmp_path):
    with pytest.raises(DataError):
        load_trials(tmp_path / "nope.csv")
