"""Exact fluid simulation of the bottleneck queue under idealized senders.

Sender rate and capacity are both piecewise linear in time, so the backlog
is piecewise quadratic and every quantity of interest (peaks, busy/idle
transitions, served bits) is computed segment by segment in closed form.
There is no time-stepped integration anywhere in this module; queue-empty
instants are located by quadratic root-finding inside segments.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from itertools import pairwise

from .trace import (
    Breakpoint,
    CapacityEvent,
    CapacityTrace,
    SegmentMode,
    check_rate,
    check_seconds,
    detect_events,
)

__all__ = [
    "ModelViolationError",
    "OracleFinal",
    "OracleTracking",
    "FixedRate",
    "ControllerSpec",
    "SimConfig",
    "BacklogSegment",
    "FluidResult",
    "FluidSample",
    "sender_rate_trace",
    "sender_rate",
    "simulate_fluid",
    "fifo_delay_at",
    "sample_result",
    "samples_to_csv",
    "result_to_json_dict",
]

# Sender/capacity differences below this relative level are floating-point
# dust from interpolating the same breakpoints, not a real rate mismatch.
_RATE_NOISE = 1e-12


class ModelViolationError(ValueError):
    """A configuration the model has no defined behaviour for."""


@dataclass(frozen=True)
class OracleFinal:
    """Sender that is told each reduction's final capacity the instant the
    reduction starts and applies it exactly ``signal_delay`` seconds later.

    Until the first signal lands it transmits at the initial capacity;
    afterwards it holds each event's final rate until the next signal.
    Capacity increases are never chased.
    """

    signal_delay: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "signal_delay", check_seconds(self.signal_delay, "signal_delay"))


@dataclass(frozen=True)
class OracleTracking:
    """Sender whose rate always equals the capacity ``signal_delay`` seconds ago."""

    signal_delay: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "signal_delay", check_seconds(self.signal_delay, "signal_delay"))


@dataclass(frozen=True)
class FixedRate:
    """Open-loop sender at a constant rate."""

    rate: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "rate", check_rate(self.rate, "rate"))


ControllerSpec = OracleFinal | OracleTracking | FixedRate


@dataclass(frozen=True)
class SimConfig:
    """One fluid run: a trace, a sender policy, and an optional sub-horizon."""

    trace: CapacityTrace
    controller: ControllerSpec
    horizon: float | None = None

    def __post_init__(self) -> None:
        h = self.trace.horizon if self.horizon is None else check_seconds(self.horizon, "horizon")
        if h <= 0.0:
            raise ValueError(f"horizon must be > 0, got {h!r}")
        if h > self.trace.horizon:
            raise ModelViolationError(
                f"simulation horizon {h!r} exceeds the trace horizon {self.trace.horizon!r}"
            )
        object.__setattr__(self, "horizon", h)
        if isinstance(self.controller, OracleFinal):
            d = self.controller.signal_delay
            events = detect_events(self.trace)
            for prev, cur in zip(events, events[1:]):
                if cur.onset < prev.onset + d:
                    raise ModelViolationError(
                        "overlapping signal windows: the reduction at "
                        f"{cur.onset!r}s starts before the signal for the one at "
                        f"{prev.onset!r}s arrives at {prev.onset + d!r}s"
                    )


def _oracle_final_trace(trace: CapacityTrace, delay: float, horizon: float) -> CapacityTrace:
    bps = [Breakpoint(0.0, trace.capacity_at(0.0))]
    for ev in detect_events(trace):
        t = ev.onset + delay
        if t >= horizon:
            break
        if t == bps[-1].time:
            bps[-1] = Breakpoint(t, ev.post_rate)
        else:
            bps.append(Breakpoint(t, ev.post_rate))
    return CapacityTrace(tuple(bps), horizon)


def _shifted_trace(trace: CapacityTrace, delay: float, horizon: float) -> CapacityTrace:
    """The trace delayed by ``delay`` (initial value held) and truncated."""
    bps: list[Breakpoint] = []
    if delay > 0.0:
        bps.append(Breakpoint(0.0, trace.capacity_at(0.0)))
    truncated = False
    for bp in trace.breakpoints:
        t = bp.time + delay
        if t > horizon:
            truncated = True
            break
        mode = bp.mode if t < horizon else SegmentMode.HOLD
        bps.append(Breakpoint(t, bp.rate, mode))
    if truncated and bps[-1].mode is SegmentMode.LINEAR:
        # a linear segment straddles the horizon: pin its value there
        bps.append(Breakpoint(horizon, trace.capacity_at(horizon - delay)))
    if bps[-1].mode is SegmentMode.LINEAR:
        bps[-1] = Breakpoint(bps[-1].time, bps[-1].rate, SegmentMode.HOLD)
    return CapacityTrace(tuple(bps), horizon)


def sender_rate_trace(config: SimConfig) -> CapacityTrace:
    """The sender's transmit rate as a piecewise-linear trace on [0, horizon]."""
    assert config.horizon is not None
    if isinstance(config.controller, FixedRate):
        return CapacityTrace((Breakpoint(0.0, config.controller.rate),), config.horizon)
    if isinstance(config.controller, OracleFinal):
        return _oracle_final_trace(config.trace, config.controller.signal_delay, config.horizon)
    return _shifted_trace(config.trace, config.controller.signal_delay, config.horizon)


def sender_rate(config: SimConfig, t: float) -> float:
    """The sender's rate at ``t``; see the controller classes for the policies."""
    t = float(t)
    assert config.horizon is not None
    if not 0.0 <= t <= config.horizon:
        raise ValueError(f"t={t!r} outside the simulation window [0, {config.horizon!r}]")
    return sender_rate_trace(config).capacity_at(t)


@dataclass(frozen=True)
class BacklogSegment:
    """Backlog on [t_start, t_end]: b(t) = c0 + c1*dt + c2*dt^2, dt = t - t_start."""

    t_start: float
    t_end: float
    c0: float
    c1: float
    c2: float

    def value_at(self, t: float) -> float:
        dt = t - self.t_start
        v = self.c0 + (self.c1 + self.c2 * dt) * dt
        return v if v > 0.0 else 0.0

    def max_on_segment(self) -> tuple[float, float]:
        """(backlog, time) of the segment maximum; earliest time wins ties."""
        length = self.t_end - self.t_start
        best_v, best_t = self.c0, self.t_start
        if self.c2 < 0.0:
            dtv = -self.c1 / (2.0 * self.c2)
            if 0.0 < dtv < length:
                vv = self.c0 + (self.c1 + self.c2 * dtv) * dtv
                if vv > best_v:
                    best_v, best_t = vv, self.t_start + dtv
        end_v = self.value_at(self.t_end)
        if end_v > best_v:
            best_v, best_t = end_v, self.t_end
        return best_v, best_t


@dataclass(frozen=True)
class FluidResult:
    """Exact piecewise-quadratic backlog trajectory plus peak statistics.

    ``peak_delay_final_norm`` is the peak backlog divided by the rate after
    the reduction that caused it (the capacity at the peak instant when no
    reduction precedes the peak), i.e. the time the final capacity would
    need to drain the peak.  ``peak_fifo_delay`` instead asks how long the
    bit arriving at the worst instant actually waits given the future
    capacity; instants whose backlog outlives the horizon cannot be
    evaluated and are skipped, with ``fifo_beyond_horizon`` set.
    """

    segments: tuple[BacklogSegment, ...]
    peak_backlog: float
    peak_time: float
    peak_delay_final_norm: float
    peak_fifo_delay: float
    fifo_beyond_horizon: bool
    final_norm_rate: float
    bits_in: float
    bits_out: float
    sender_trace: CapacityTrace
    trace: CapacityTrace
    events: tuple[CapacityEvent, ...]
    horizon: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "_starts", tuple(s.t_start for s in self.segments))

    def backlog_at(self, t: float) -> float:
        """Exact backlog in bits at ``t`` in [0, horizon]."""
        t = float(t)
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t={t!r} outside [0, {self.horizon!r}]")
        i = bisect_right(self._starts, t) - 1  # type: ignore[attr-defined]
        return self.segments[i].value_at(t)


def _first_zero_crossing(q0: float, q1: float, q2: float, length: float) -> float | None:
    """Smallest x in (0, length] where q0 + q1*x + q2*x^2 crosses zero from
    above (derivative negative there); None if the backlog stays positive."""
    roots: list[float] = []
    if q2 == 0.0:
        if q1 < 0.0 and q0 > 0.0:
            roots.append(-q0 / q1)
    else:
        disc = q1 * q1 - 4.0 * q2 * q0
        if disc >= 0.0:
            s = math.sqrt(disc)
            qq = -0.5 * (q1 + s) if q1 >= 0.0 else -0.5 * (q1 - s)
            roots.append(qq / q2)
            if qq != 0.0:
                roots.append(q0 / qq)
    best: float | None = None
    for x in roots:
        if 0.0 < x <= length and q1 + 2.0 * q2 * x < 0.0:
            if best is None or x < best:
                best = x
    return best


def _fifo_from_backlog(bits: float, trace: CapacityTrace, t: float) -> float | None:
    """Smallest delta >= 0 that drains ``bits`` starting at ``t`` at the
    trace's capacity; None when the horizon arrives first."""
    if bits <= 0.0:
        return 0.0
    remaining = bits
    cur = float(t)
    times = trace.times
    n = len(times)
    while cur < trace.horizon:
        i = bisect_right(times, cur) - 1
        seg_end = times[i + 1] if i + 1 < n else trace.horizon
        end = min(seg_end, trace.horizon)
        width = end - cur
        if width <= 0.0:
            break
        v0 = trace.capacity_at(cur)
        v1 = trace.left_limit_at(end)
        chunk = 0.5 * (v0 + v1) * width
        if chunk >= remaining:
            slope = (v1 - v0) / width
            disc = max(0.0, v0 * v0 + 2.0 * slope * remaining)
            x = 2.0 * remaining / (v0 + math.sqrt(disc))
            return (cur - t) + x
        remaining -= chunk
        cur = end
    return None


def simulate_fluid(config: SimConfig) -> FluidResult:
    """Solve b' = sender - service exactly over the configured window.

    Service equals the capacity while the queue is busy and the arrival
    rate while it is empty (nothing is ever lost: the buffer is infinite).
    Within each cell of the merged breakpoint grid the rate difference is
    linear, so the backlog is one or two quadratic pieces per cell.
    """
    trace = config.trace
    h = config.horizon
    assert h is not None
    arrival = sender_rate_trace(config)

    cuts = {0.0, h}
    for src in (trace, arrival):
        cuts.update(t for t in src.times if 0.0 < t < h)
    grid = sorted(cuts)

    segs: list[BacklogSegment] = []
    b = 0.0
    bits_out = 0.0
    for u, v in pairwise(grid):
        width = v - u
        a0 = arrival.capacity_at(u)
        a1 = arrival.left_limit_at(v)
        c0 = trace.capacity_at(u)
        c1 = trace.left_limit_at(v)
        g = ((a1 - a0) - (c1 - c0)) / width
        noise = _RATE_NOISE * max(a0, a1, c0, c1, 1.0)
        cur = u
        while cur < v:
            f_cur = (a0 - c0) + g * (cur - u)
            if abs(f_cur) <= noise:
                f_cur = 0.0
            if b > 0.0 or f_cur > 0.0 or (f_cur == 0.0 and g > 0.0):
                # busy: the queue absorbs the arrival/capacity difference
                length = v - cur
                root = _first_zero_crossing(b, f_cur, 0.5 * g, length)
                if root is None:
                    end = v
                    b_end = b + (f_cur + 0.5 * g * length) * length
                    if b_end < 0.0:  # crossing missed by rounding only
                        b_end = 0.0
                else:
                    end = min(cur + root, v)
                    b_end = 0.0
                if end > cur:
                    segs.append(BacklogSegment(cur, end, b, f_cur, 0.5 * g))
                    bits_out += trace.integrate(cur, end)
                b = b_end
                cur = end if end > cur else v
            else:
                # idle: queue empty and arrival <= capacity, output = input
                if f_cur < 0.0 and g > 0.0:
                    end = min(cur + (-f_cur) / g, v)
                else:
                    end = v
                if end <= cur:
                    end = v
                segs.append(BacklogSegment(cur, end, 0.0, 0.0, 0.0))
                bits_out += arrival.integrate(cur, end)
                b = 0.0
                cur = end

    if not segs:  # unreachable for a valid config; keep the result total
        segs.append(BacklogSegment(0.0, h, 0.0, 0.0, 0.0))

    peak_b, peak_t = 0.0, 0.0
    for seg in segs:
        val, at = seg.max_on_segment()
        if val > peak_b:
            peak_b, peak_t = val, at

    events = tuple(detect_events(trace))
    norm_rate: float | None = None
    for ev in events:
        if ev.onset <= peak_t:
            norm_rate = ev.post_rate
    if norm_rate is None:
        norm_rate = trace.capacity_at(peak_t)

    # Candidate instants for the worst FIFO wait: segment boundaries plus
    # interior backlog maxima.  Exact whenever the worst instant is a kink
    # or local maximum of the backlog, which covers every piecewise-constant
    # sender phase; in mixed ramp phases it is a tight lower envelope.
    peak_fifo = 0.0
    fifo_censored = False
    candidates: list[tuple[float, float]] = []
    for seg in segs:
        candidates.append((seg.t_start, seg.value_at(seg.t_start)))
        if seg.c2 < 0.0:
            dtv = -seg.c1 / (2.0 * seg.c2)
            if 0.0 < dtv < seg.t_end - seg.t_start:
                candidates.append((seg.t_start + dtv, seg.value_at(seg.t_start + dtv)))
    candidates.append((h, segs[-1].value_at(h)))
    for t_cand, b_cand in candidates:
        delta = _fifo_from_backlog(b_cand, trace, t_cand)
        if delta is None:
            fifo_censored = True
        elif delta > peak_fifo:
            peak_fifo = delta

    return FluidResult(
        segments=tuple(segs),
        peak_backlog=peak_b,
        peak_time=peak_t,
        peak_delay_final_norm=peak_b / norm_rate,
        peak_fifo_delay=peak_fifo,
        fifo_beyond_horizon=fifo_censored,
        final_norm_rate=norm_rate,
        bits_in=arrival.integrate(0.0, h),
        bits_out=bits_out,
        sender_trace=arrival,
        trace=trace,
        events=events,
        horizon=h,
    )


def fifo_delay_at(result: FluidResult, trace: CapacityTrace, t: float) -> float | None:
    """How long the bit arriving at ``t`` waits before transmission.

    Smallest delta >= 0 with the capacity integral over [t, t + delta]
    covering the backlog at ``t``, solved in closed form over the trace
    segments; None when the backlog cannot drain before the horizon.
    """
    return _fifo_from_backlog(result.backlog_at(t), trace, t)


@dataclass(frozen=True)
class FluidSample:
    """One sampled point of the exact solution; fifo_delay is NaN when the
    backlog at ``t`` cannot drain before the horizon."""

    t: float
    backlog: float
    delay_final_norm: float
    fifo_delay: float


def sample_result(result: FluidResult, step: float) -> list[FluidSample]:
    """Sample the exact solution every ``step`` seconds from 0 to horizon.

    Sampling is presentation only: peak statistics come from the segments,
    so a sampled maximum can only undershoot ``result.peak_backlog``.
    """
    step = float(step)
    if not (math.isfinite(step) and step > 0.0):
        raise ValueError(f"step must be a finite value > 0 seconds, got {step!r}")
    samples: list[FluidSample] = []
    k = 0
    while True:
        t = k * step
        if t > result.horizon:
            if t - result.horizon < step * 1e-9:  # last grid point == horizon
                t = result.horizon
            else:
                break
        b = result.backlog_at(t)
        fifo = _fifo_from_backlog(b, result.trace, t)
        samples.append(
            FluidSample(t, b, b / result.final_norm_rate, math.nan if fifo is None else fifo)
        )
        if t == result.horizon:
            break
        k += 1
    return samples


def samples_to_csv(samples: list[FluidSample]) -> str:
    lines = ["t_s,backlog_bits,delay_final_norm_s,fifo_delay_s"]
    lines += [f"{s.t!r},{s.backlog!r},{s.delay_final_norm!r},{s.fifo_delay!r}" for s in samples]
    return "\n".join(lines) + "\n"


def result_to_json_dict(result: FluidResult) -> dict:
    """Peak statistics plus the exact piecewise-quadratic description."""
    return {
        "peak_backlog_bits": result.peak_backlog,
        "peak_time_s": result.peak_time,
        "peak_delay_final_norm_s": result.peak_delay_final_norm,
        "peak_fifo_delay_s": result.peak_fifo_delay,
        "fifo_beyond_horizon": result.fifo_beyond_horizon,
        "final_norm_rate_bps": result.final_norm_rate,
        "bits_in": result.bits_in,
        "bits_out": result.bits_out,
        "backlog_end_bits": result.backlog_at(result.horizon),
        "horizon_s": result.horizon,
        "events": [
            {
                "onset_s": e.onset,
                "pre_rate_bps": e.pre_rate,
                "post_rate_bps": e.post_rate,
                "ramp_duration_s": e.ramp_duration,
                "c_factor": e.c_factor,
            }
            for e in result.events
        ],
        "segments": [
            {
                "t_start_s": s.t_start,
                "t_end_s": s.t_end,
                "c0_bits": s.c0,
                "c1_bits_per_s": s.c1,
                "c2_bits_per_s2": s.c2,
            }
            for s in result.segments
        ],
    }
