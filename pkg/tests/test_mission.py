import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oriwheel.errors import InvalidParams
from oriwheel.mission import (ChannelScenario, Decision, RobotSpec, State, decide,
                              reference_spec, robot_width, run_mission, sense_channel)
from oriwheel.terra import CALIBRATED_SOIL

SPEC = reference_spec()


def test_reference_robot_widths():
    lo, hi = SPEC.width_range
    assert lo == pytest.approx(247.0, abs=1e-9)
    assert hi == pytest.approx(347.0, abs=1e-9)
    assert hi / lo == pytest.approx(1.40, abs=0.005)


def test_noise_free_sensing_is_exact():
    assert sense_channel(ChannelScenario(300.0)) == 300.0


def test_sensing_is_seeded():
    a = ChannelScenario(300.0, sensor_sigma=2.0, seed=11)
    assert sense_channel(a) == sense_channel(a)
    assert sense_channel(a) != sense_channel(ChannelScenario(300.0, sensor_sigma=2.0, seed=12))


def test_median_within_three_sigma():
    sigma, hits, trials = 2.0, 0, 10_000
    for seed in range(trials):
        m = sense_channel(ChannelScenario(300.0, sensor_sigma=sigma, n_readings=9, seed=seed))
        hits += abs(m - 300.0) < 3 * sigma
    assert hits / trials >= 0.99


@pytest.mark.parametrize("width,expected", [
    (400.0, Decision.DIRECT_PASS),
    (352.0, Decision.DIRECT_PASS),
    (351.9, Decision.FOLD_AND_PASS),
    (300.0, Decision.FOLD_AND_PASS),
    (252.0, Decision.FOLD_AND_PASS),
    (251.9, Decision.RETURN),
    (200.0, Decision.RETURN),
])
def test_decision_table(width, expected):
    assert decide(SPEC, width) is expected


@given(st.floats(1.0, 1000.0), st.floats(0.0, 200.0))
def test_decision_monotone_in_width(w, dw):
    order = [Decision.RETURN, Decision.FOLD_AND_PASS, Decision.DIRECT_PASS]
    assert order.index(decide(SPEC, w + dw)) >= order.index(decide(SPEC, w))


@given(st.floats(100.0, 500.0), st.floats(-50.0, 50.0))
def test_decision_translation_invariant(w, c):
    shifted = RobotSpec(SPEC.wheel, frame_const=SPEC.frame_const + c)
    assert decide(shifted, w + c + 60.0) is decide(SPEC, w + 60.0)


def test_invalid_measurement():
    with pytest.raises(InvalidParams):
        decide(SPEC, 0.0)


def test_direct_pass_trace():
    tr = run_mission(SPEC, ChannelScenario(400.0))
    assert tr.states() == [State.INITIAL, State.SENSING, State.THROUGH, State.DONE]
    assert tr.events[-1].t == pytest.approx(5.0)


def test_fold_and_pass_trace_and_timing():
    tr = run_mission(SPEC, ChannelScenario(300.0), channel_length=500.0, speed=100.0)
    assert tr.states() == [State.INITIAL, State.SENSING, State.FOLDING, State.THROUGH,
                           State.UNFOLDING, State.DONE]
    fold, through, unfold, done = tr.events[2:]
    d_theta = fold.theta - through.theta
    assert through.t - fold.t == pytest.approx(d_theta / SPEC.fold_rate, rel=1e-12)
    assert done.t - unfold.t == pytest.approx(d_theta / SPEC.fold_rate, rel=1e-12)
    assert unfold.t - through.t == pytest.approx(5.0)
    # Folds just far enough: the margin is used up exactly.
    assert through.width == pytest.approx(300.0 - SPEC.safety_margin, abs=1e-9)
    assert done.width == pytest.approx(347.0, abs=1e-9)


def test_return_trace():
    tr = run_mission(SPEC, ChannelScenario(200.0))
    assert tr.decision is Decision.RETURN
    assert tr.states() == [State.INITIAL, State.SENSING, State.RETURNING, State.DONE]
    assert not tr.actuation_limited


@settings(max_examples=200)
@given(st.floats(150.0, 500.0), st.floats(0.0, 5.0), st.integers(0, 2**31))
def test_through_width_fits_measured_channel(width, sigma, seed):
    tr = run_mission(SPEC, ChannelScenario(width, sensor_sigma=sigma, seed=seed))
    for e in tr.events:
        if e.state is State.THROUGH:
            assert e.width <= tr.measured - SPEC.safety_margin + 1e-9
    times = [e.t for e in tr.events]
    assert times == sorted(times)
    assert tr.states()[-1] is State.DONE


def test_trace_jsonl():
    tr = run_mission(SPEC, ChannelScenario(300.0))
    rows = [json.loads(line) for line in tr.to_jsonl().splitlines()]
    assert [r["state"] for r in rows] == [s.value for s in tr.states()]
    assert set(rows[0]) == {"t", "state", "width_mm"}


def test_robot_width_outside_range():
    with pytest.raises(InvalidParams):
        robot_width(SPEC, 0.1)


@pytest.mark.parametrize("kw", [dict(fold_rate=0.0), dict(safety_margin=-1.0),
                                dict(initial_theta=0.1), dict(mass=math.nan)])
def test_invalid_spec(kw):
    with pytest.raises(InvalidParams):
        reference_spec(**kw)


@pytest.mark.parametrize("kw", [dict(channel_width=-1.0), dict(channel_width=300.0, n_readings=4),
                                dict(channel_width=300.0, sensor_sigma=-1.0),
                                dict(channel_width=300.0, seed=1.5)])
def test_invalid_scenario(kw):
    with pytest.raises(InvalidParams):
        ChannelScenario(**kw)


def test_sand_drive_completes_on_calibrated_soil():
    tr = run_mission(SPEC, ChannelScenario(400.0), channel_length=100.0, terrain=CALIBRATED_SOIL)
    assert not tr.stalled
    assert tr.states()[-2:] == [State.THROUGH, State.DONE]
    assert 0 < tr.events[-1].t < 30.0


def test_sand_drive_stalls_on_soft_soil():
    soft = CALIBRATED_SOIL.with_(k_sink=2e-5)
    tr = run_mission(SPEC, ChannelScenario(300.0), terrain=soft, sand_budget=3.0)
    assert tr.stalled
    assert tr.states()[-3:] == [State.THROUGH, State.RETURNING, State.DONE]
    assert np.isclose(tr.events[-1].t - tr.events[3].t, 3.0)
