"""Capacity traces: construction, evaluation, integration, events, CSV."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccbound.trace import (
    Breakpoint,
    CapacityTrace,
    SegmentMode,
    TraceParseError,
    detect_events,
    make_ramp_trace,
    make_step_trace,
    trace_from_csv,
    trace_to_csv,
)

MBPS = 1e6


@st.composite
def traces(draw):
    n = draw(st.integers(min_value=1, max_value=6))
    gaps = draw(
        st.lists(st.floats(min_value=1e-3, max_value=10.0), min_size=n - 1, max_size=n - 1)
    )
    times = [0.0]
    for g in gaps:
        times.append(times[-1] + g)
    rates = draw(
        st.lists(st.floats(min_value=1e3, max_value=1e9), min_size=n, max_size=n)
    )
    modes = draw(
        st.lists(st.sampled_from([SegmentMode.HOLD, SegmentMode.LINEAR]), min_size=n, max_size=n)
    )
    modes[-1] = SegmentMode.HOLD
    tail = draw(st.floats(min_value=0.0, max_value=5.0))
    bps = tuple(Breakpoint(t, r, m) for t, r, m in zip(times, rates, modes))
    return CapacityTrace(bps, times[-1] + tail if times[-1] + tail > 0 else 1.0)


class TestConstruction:
    def test_step_trace_shape(self):
        t = make_step_trace(100 * MBPS, 10 * MBPS, 1.0, 5.0)
        assert t.capacity_at(0.0) == 100 * MBPS
        assert t.capacity_at(1.0 - 1e-9) == 100 * MBPS
        assert t.capacity_at(1.0) == 10 * MBPS  # right-continuous at the drop
        assert t.capacity_at(5.0) == 10 * MBPS

    def test_step_trace_single_event_with_c10(self):
        t = make_step_trace(100 * MBPS, 10 * MBPS, 1.0, 5.0)
        events = detect_events(t)
        assert len(events) == 1
        ev = events[0]
        assert ev.onset == 1.0
        assert ev.ramp_duration == 0.0
        assert ev.c_factor == pytest.approx(10.0, rel=1e-12)

    def test_step_rejects_non_reduction(self):
        with pytest.raises(ValueError, match="reduction"):
            make_step_trace(1e8, 1e8, 1.0, 5.0)
        with pytest.raises(ValueError, match="reduction"):
            make_step_trace(1e7, 1e8, 1.0, 5.0)

    def test_step_rejects_onset_outside_window(self):
        with pytest.raises(ValueError, match="onset"):
            make_step_trace(1e8, 1e7, 0.0, 5.0)
        with pytest.raises(ValueError, match="onset"):
            make_step_trace(1e8, 1e7, 5.0, 5.0)
        with pytest.raises(ValueError, match="onset"):
            make_step_trace(1e8, 1e7, 6.0, 5.0)

    def test_ramp_midpoint_interpolates(self):
        t = make_ramp_trace(100 * MBPS, 10 * MBPS, 1.0, 0.2, 5.0)
        assert t.capacity_at(1.1) == pytest.approx(55 * MBPS, rel=1e-12)

    def test_ramp_zero_duration_degenerates_to_step(self):
        ramp = make_ramp_trace(1e8, 1e7, 1.0, 0.0, 5.0)
        step = make_step_trace(1e8, 1e7, 1.0, 5.0)
        assert ramp == step

    def test_ramp_event_roundtrip(self):
        t = make_ramp_trace(100 * MBPS, 10 * MBPS, 1.0, 0.1, 5.0)
        events = detect_events(t)
        assert len(events) == 1
        ev = events[0]
        assert ev.c_factor == pytest.approx(10.0, rel=1e-12)
        assert ev.ramp_duration == pytest.approx(0.1, rel=1e-12)
        assert ev.onset == 1.0

    def test_ramp_rejects_overflowing_horizon(self):
        with pytest.raises(ValueError, match="horizon"):
            make_ramp_trace(1e8, 1e7, 4.0, 2.0, 5.0)

    def test_zero_rate_rejected(self):
        with pytest.raises(ValueError, match="> 0"):
            Breakpoint(0.0, 0.0)

    def test_last_breakpoint_must_hold(self):
        with pytest.raises(ValueError, match="hold"):
            CapacityTrace((Breakpoint(0.0, 1e8, SegmentMode.LINEAR),), 5.0)

    def test_times_strictly_increasing(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            CapacityTrace((Breakpoint(0.0, 1e8), Breakpoint(0.0, 1e7)), 5.0)


class TestCapacityAt:
    def test_linear_segment_endpoints_exact(self):
        t = make_ramp_trace(1e8, 1e7, 1.0, 0.25, 5.0)
        assert t.capacity_at(1.0) == 1e8
        assert t.capacity_at(1.25) == 1e7

    def test_three_level_mcs_trace(self):
        t = CapacityTrace(
            (Breakpoint(0.0, 144.4 * MBPS), Breakpoint(1.0, 14.4 * MBPS), Breakpoint(2.0, 144.4 * MBPS)),
            3.0,
        )
        assert t.capacity_at(1.5) == 14.4 * MBPS

    def test_out_of_domain_rejected(self):
        t = make_step_trace(1e8, 1e7, 1.0, 5.0)
        with pytest.raises(ValueError):
            t.capacity_at(-0.1)
        with pytest.raises(ValueError):
            t.capacity_at(5.1)
        with pytest.raises(ValueError):
            t.capacity_at(math.nan)

    def test_left_limit_at_step(self):
        t = make_step_trace(1e8, 1e7, 1.0, 5.0)
        assert t.left_limit_at(1.0) == 1e8
        assert t.capacity_at(1.0) == 1e7

    @given(traces())
    @settings(max_examples=50, deadline=None)
    def test_breakpoint_rates_reproduced(self, trace):
        for bp in trace.breakpoints:
            assert trace.capacity_at(bp.time) == bp.rate


class TestIntegrate:
    def test_empty_interval(self):
        t = make_step_trace(1e8, 1e7, 1.0, 5.0)
        assert t.integrate(2.0, 2.0) == 0.0

    def test_constant_segment(self):
        t = make_step_trace(1e8, 1e7, 1.0, 5.0)
        assert t.integrate(2.0, 3.0) == pytest.approx(1e7, rel=1e-12)

    def test_linear_drop_trapezoid_vs_riemann(self):
        # 100 -> 10 Mbit/s linearly over one second: trapezoid says 55e6 bits
        t = make_ramp_trace(100 * MBPS, 10 * MBPS, 1.0, 1.0, 5.0)
        exact = t.integrate(1.0, 2.0)
        assert exact == pytest.approx(55e6, rel=1e-12)
        n = 200_000
        dt = 1.0 / n
        riemann = sum(t.capacity_at(1.0 + (k + 0.5) * dt) for k in range(n)) * dt
        assert exact == pytest.approx(riemann, rel=1e-9)

    def test_inverted_interval_rejected(self):
        t = make_step_trace(1e8, 1e7, 1.0, 5.0)
        with pytest.raises(ValueError):
            t.integrate(3.0, 2.0)
        with pytest.raises(ValueError):
            t.integrate(0.0, 6.0)

    @given(traces(), st.data())
    @settings(max_examples=60, deadline=None)
    def test_additive_over_adjacent_intervals(self, trace, data):
        ts = sorted(
            data.draw(
                st.lists(
                    st.floats(min_value=0.0, max_value=trace.horizon),
                    min_size=3,
                    max_size=3,
                )
            )
        )
        t0, t1, t2 = ts
        whole = trace.integrate(t0, t2)
        split = trace.integrate(t0, t1) + trace.integrate(t1, t2)
        assert math.isclose(whole, split, rel_tol=1e-12, abs_tol=1e-6)


class TestDetectEvents:
    def test_purely_increasing_yields_nothing(self):
        t = CapacityTrace((Breakpoint(0.0, 1e7), Breakpoint(1.0, 1e8)), 2.0)
        assert detect_events(t) == []

    def test_ramp_down_then_step_up(self):
        t = CapacityTrace(
            (
                Breakpoint(0.0, 1e8),
                Breakpoint(1.0, 1e8, SegmentMode.LINEAR),
                Breakpoint(1.1, 1e7),
                Breakpoint(2.0, 1e8),
            ),
            3.0,
        )
        events = detect_events(t)
        assert len(events) == 1
        assert events[0].c_factor == pytest.approx(10.0, rel=1e-12)
        assert events[0].ramp_duration == pytest.approx(0.1, rel=1e-12)

    def test_plateau_separates_events(self):
        t = CapacityTrace(
            (Breakpoint(0.0, 8e8), Breakpoint(1.0, 1e8), Breakpoint(2.0, 1e7)), 3.0
        )
        events = detect_events(t)
        assert [e.onset for e in events] == [1.0, 2.0]
        assert [e.pre_rate for e in events] == [8e8, 1e8]

    def test_contiguous_step_and_ramp_merge(self):
        # hold at 100 jumps to 50 at t=1, then declines linearly to 10 by 1.2:
        # one maximal decreasing run from just before t=1
        t = CapacityTrace(
            (
                Breakpoint(0.0, 100 * MBPS),
                Breakpoint(1.0, 50 * MBPS, SegmentMode.LINEAR),
                Breakpoint(1.2, 10 * MBPS),
            ),
            3.0,
        )
        events = detect_events(t)
        assert len(events) == 1
        ev = events[0]
        assert ev.onset == 1.0
        assert ev.pre_rate == 100 * MBPS
        assert ev.post_rate == 10 * MBPS
        assert ev.ramp_duration == pytest.approx(0.2, rel=1e-12)

    def test_adjacent_linear_declines_merge(self):
        t = CapacityTrace(
            (
                Breakpoint(0.0, 1e8),
                Breakpoint(1.0, 1e8, SegmentMode.LINEAR),
                Breakpoint(1.2, 5e7, SegmentMode.LINEAR),
                Breakpoint(1.5, 1e7),
            ),
            3.0,
        )
        events = detect_events(t)
        assert len(events) == 1
        assert events[0].ramp_duration == pytest.approx(0.5, rel=1e-12)

    @given(
        st.floats(min_value=1.01, max_value=1000.0),
        st.floats(min_value=1e4, max_value=1e9),
        st.floats(min_value=1e-3, max_value=10.0),
        st.floats(min_value=0.0, max_value=5.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_constructor_parameters_recovered(self, c, pre, onset, ramp):
        post = pre / c
        horizon = onset + ramp + 1.0
        trace = make_ramp_trace(pre, post, onset, ramp, horizon)
        events = detect_events(trace)
        assert len(events) == 1
        ev = events[0]
        assert ev.onset == onset
        assert ev.pre_rate == pre
        assert ev.post_rate == post
        assert math.isclose(ev.ramp_duration, ramp, rel_tol=1e-12, abs_tol=1e-15)
        assert math.isclose(ev.c_factor, c, rel_tol=1e-12)


class TestCsv:
    def test_parse_step_trace(self):
        text = "0,100000000,hold\n1,10000000,hold\n"
        assert trace_from_csv(text, horizon=5.0) == make_step_trace(1e8, 1e7, 1.0, 5.0)

    def test_header_optional(self):
        with_header = "time_s,rate_bps,mode\n0,1e8,hold\n1,1e7,hold\n"
        without = "0,1e8,hold\n1,1e7,hold\n"
        assert trace_from_csv(with_header) == trace_from_csv(without)

    def test_horizon_defaults_to_last_row(self):
        t = trace_from_csv("0,1e8,hold\n1,1e7,hold\n4,1e7,hold\n")
        assert t.horizon == 4.0

    def test_negative_rate_names_line(self):
        with pytest.raises(TraceParseError, match="line 2"):
            trace_from_csv("0,100000000,hold\n1,-5,hold\n")

    def test_non_monotone_times_name_line(self):
        with pytest.raises(TraceParseError, match="line 3"):
            trace_from_csv("0,1e8,hold\n2,5e7,hold\n1,1e7,hold\n")

    def test_unknown_mode_token(self):
        with pytest.raises(TraceParseError, match="mode"):
            trace_from_csv("0,1e8,step\n")

    def test_malformed_number(self):
        with pytest.raises(TraceParseError, match="malformed"):
            trace_from_csv("0,abc,hold\n")

    def test_empty_input(self):
        with pytest.raises(TraceParseError, match="no data"):
            trace_from_csv("\n\n")

    def test_first_row_must_start_at_zero(self):
        with pytest.raises(TraceParseError, match="time 0"):
            trace_from_csv("1,1e8,hold\n2,1e7,hold\n")

    def test_roundtrip_canonical_identity(self):
        t = make_step_trace(1e8, 1e7, 1.0, 5.0)
        once = trace_to_csv(t)
        again = trace_to_csv(trace_from_csv(once))
        assert once == again

    def test_roundtrip_preserves_horizon_and_function(self):
        t = make_ramp_trace(1e8, 1e7, 1.0, 0.25, 5.0)
        back = trace_from_csv(trace_to_csv(t))
        assert back.horizon == t.horizon
        for k in range(51):
            x = k * 0.1
            assert back.capacity_at(x) == t.capacity_at(x)

    @given(traces())
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_any_trace_byte_stable(self, trace):
        once = trace_to_csv(trace)
        parsed = trace_from_csv(once)
        assert trace_to_csv(parsed) == once
        assert parsed.horizon == trace.horizon
