"""Piecewise-linear bottleneck capacity traces and reduction-event detection.

Everything here works in SI base units: seconds and bits per second.
Milliseconds and Mbit/s exist only at the command-line boundary.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_right
from dataclasses import dataclass

__all__ = [
    "SegmentMode",
    "Breakpoint",
    "CapacityTrace",
    "CapacityEvent",
    "TraceParseError",
    "check_seconds",
    "check_rate",
    "check_bits",
    "make_step_trace",
    "make_ramp_trace",
    "detect_events",
    "trace_from_csv",
    "trace_to_csv",
]


def check_seconds(value: float, name: str = "time") -> float:
    """Validate an instant or duration: finite and >= 0 seconds."""
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be finite and >= 0 seconds, got {value!r}")
    return value


def check_rate(value: float, name: str = "rate") -> float:
    """Validate a link or sender rate: finite and strictly positive bit/s.

    Zero is rejected everywhere: a reduction factor is a ratio of rates and
    is undefined for a link that is actually down.
    """
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be finite and > 0 bit/s, got {value!r}")
    return value


def check_bits(value: float, name: str = "bits") -> float:
    """Validate an amount of data: finite and >= 0 bits."""
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be finite and >= 0 bits, got {value!r}")
    return value


class SegmentMode(enum.Enum):
    """How capacity evolves between a breakpoint and the next one."""

    HOLD = "hold"
    LINEAR = "linear"


@dataclass(frozen=True)
class Breakpoint:
    """One (time, rate) anchor plus the behaviour of the segment it opens."""

    time: float
    rate: float
    mode: SegmentMode = SegmentMode.HOLD

    def __post_init__(self) -> None:
        object.__setattr__(self, "time", check_seconds(self.time, "breakpoint time"))
        object.__setattr__(self, "rate", check_rate(self.rate, "breakpoint rate"))
        if not isinstance(self.mode, SegmentMode):
            try:
                object.__setattr__(self, "mode", SegmentMode(self.mode))
            except ValueError:
                raise ValueError(
                    f"unknown segment mode {self.mode!r} (expected 'hold' or 'linear')"
                ) from None


@dataclass(frozen=True)
class CapacityTrace:
    """Bottleneck capacity as a total piecewise-linear function on [0, horizon].

    A ``hold`` segment keeps its left breakpoint's rate until the next
    breakpoint and the trace is right-continuous at the jump; a ``linear``
    segment interpolates to the next breakpoint's rate.  The segment after
    the last breakpoint always holds, so the last breakpoint's mode must be
    ``hold``.
    """

    breakpoints: tuple[Breakpoint, ...]
    horizon: float

    def __post_init__(self) -> None:
        bps = tuple(self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if not bps:
            raise ValueError("a trace needs at least one breakpoint")
        if bps[0].time != 0.0:
            raise ValueError(f"first breakpoint must be at time 0, got {bps[0].time!r}")
        for prev, cur in zip(bps, bps[1:]):
            if cur.time <= prev.time:
                raise ValueError(
                    "breakpoint times must be strictly increasing "
                    f"({cur.time!r} follows {prev.time!r})"
                )
        if bps[-1].mode is not SegmentMode.HOLD:
            raise ValueError("last breakpoint must use mode 'hold' (nothing to interpolate toward)")
        horizon = check_seconds(self.horizon, "horizon")
        if horizon <= 0.0:
            raise ValueError(f"horizon must be > 0 seconds, got {horizon!r}")
        if horizon < bps[-1].time:
            raise ValueError(
                f"horizon {horizon!r} lies before the last breakpoint at {bps[-1].time!r}"
            )
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "_times", tuple(bp.time for bp in bps))

    @property
    def times(self) -> tuple[float, ...]:
        """Breakpoint times, ascending."""
        return self._times  # type: ignore[attr-defined]

    def _index_at(self, t: float) -> int:
        return bisect_right(self._times, t) - 1  # type: ignore[attr-defined]

    def capacity_at(self, t: float) -> float:
        """Exact capacity at ``t`` in [0, horizon]; right-continuous at holds."""
        t = float(t)
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t={t!r} outside trace domain [0, {self.horizon!r}]")
        i = self._index_at(t)
        bp = self.breakpoints[i]
        if bp.mode is SegmentMode.LINEAR and i + 1 < len(self.breakpoints):
            nxt = self.breakpoints[i + 1]
            u = (t - bp.time) / (nxt.time - bp.time)
            return bp.rate + u * (nxt.rate - bp.rate)
        return bp.rate

    def left_limit_at(self, t: float) -> float:
        """Capacity approaching ``t`` from below.

        Differs from :meth:`capacity_at` only at the jump instant that ends
        a hold segment.
        """
        t = float(t)
        if t == 0.0:
            return self.capacity_at(0.0)
        if not 0.0 < t <= self.horizon:
            raise ValueError(f"t={t!r} outside trace domain [0, {self.horizon!r}]")
        i = self._index_at(t)
        bp = self.breakpoints[i]
        if bp.time == t:
            prev = self.breakpoints[i - 1]
            if prev.mode is SegmentMode.HOLD:
                return prev.rate
            return bp.rate  # linear segments are continuous at their right end
        return self.capacity_at(t)

    def integrate(self, t0: float, t1: float) -> float:
        """Exact bits through the link at full utilisation over [t0, t1].

        Closed form per segment (rectangle for holds, trapezoid for linear
        pieces), so the result is additive over adjacent intervals up to
        rounding.
        """
        t0 = float(t0)
        t1 = float(t1)
        if not (0.0 <= t0 <= t1 <= self.horizon):
            raise ValueError(
                f"integration interval [{t0!r}, {t1!r}] invalid for domain [0, {self.horizon!r}]"
            )
        if t0 == t1:
            return 0.0
        total = 0.0
        i = self._index_at(t0)
        cur = t0
        n = len(self.breakpoints)
        while cur < t1:
            seg_end = self._times[i + 1] if i + 1 < n else self.horizon  # type: ignore[attr-defined]
            end = min(seg_end, t1)
            bp = self.breakpoints[i]
            if bp.mode is SegmentMode.LINEAR:
                va = self.capacity_at(cur)
                vb = self.left_limit_at(end)
                total += 0.5 * (va + vb) * (end - cur)
            else:
                total += bp.rate * (end - cur)
            cur = end
            i += 1
        return total


@dataclass(frozen=True)
class CapacityEvent:
    """One maximal capacity reduction: a step (ramp_duration 0) or a ramp."""

    onset: float
    pre_rate: float
    post_rate: float
    ramp_duration: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "onset", check_seconds(self.onset, "event onset"))
        object.__setattr__(self, "pre_rate", check_rate(self.pre_rate, "pre_rate"))
        object.__setattr__(self, "post_rate", check_rate(self.post_rate, "post_rate"))
        object.__setattr__(
            self, "ramp_duration", check_seconds(self.ramp_duration, "ramp_duration")
        )
        if self.post_rate >= self.pre_rate:
            raise ValueError(
                "an event is a reduction: post_rate must be < pre_rate "
                f"(got {self.pre_rate!r} -> {self.post_rate!r})"
            )

    @property
    def c_factor(self) -> float:
        """Reduction factor pre_rate / post_rate, always > 1."""
        return self.pre_rate / self.post_rate


def make_step_trace(pre_rate: float, post_rate: float, onset: float, horizon: float) -> CapacityTrace:
    """Constant ``pre_rate``, instantaneous drop to ``post_rate`` at ``onset``."""
    pre_rate = check_rate(pre_rate, "pre_rate")
    post_rate = check_rate(post_rate, "post_rate")
    onset = check_seconds(onset, "onset")
    horizon = check_seconds(horizon, "horizon")
    if post_rate >= pre_rate:
        raise ValueError(
            f"a step must be a reduction: post_rate < pre_rate required, got {pre_rate!r} -> {post_rate!r}"
        )
    if not 0.0 < onset < horizon:
        raise ValueError(f"onset must lie strictly inside (0, horizon), got onset={onset!r}, horizon={horizon!r}")
    return CapacityTrace((Breakpoint(0.0, pre_rate), Breakpoint(onset, post_rate)), horizon)


def make_ramp_trace(
    pre_rate: float, post_rate: float, onset: float, ramp_duration: float, horizon: float
) -> CapacityTrace:
    """``pre_rate`` until ``onset``, linear decline to ``post_rate`` over
    ``ramp_duration``, then ``post_rate``.  A zero ramp (or one below the
    floating-point resolution at ``onset``) degenerates to
    :func:`make_step_trace` with identical breakpoints."""
    ramp_duration = check_seconds(ramp_duration, "ramp_duration")
    onset = check_seconds(onset, "onset")
    if ramp_duration == 0.0 or onset + ramp_duration <= onset:
        return make_step_trace(pre_rate, post_rate, onset, horizon)
    pre_rate = check_rate(pre_rate, "pre_rate")
    post_rate = check_rate(post_rate, "post_rate")
    onset = check_seconds(onset, "onset")
    horizon = check_seconds(horizon, "horizon")
    if post_rate >= pre_rate:
        raise ValueError(
            f"a ramp must be a reduction: post_rate < pre_rate required, got {pre_rate!r} -> {post_rate!r}"
        )
    if onset <= 0.0:
        raise ValueError(f"onset must be > 0, got {onset!r}")
    if onset + ramp_duration > horizon:
        raise ValueError(
            f"ramp ends at {onset + ramp_duration!r}, past the horizon {horizon!r}"
        )
    return CapacityTrace(
        (
            Breakpoint(0.0, pre_rate),
            Breakpoint(onset, pre_rate, SegmentMode.LINEAR),
            Breakpoint(onset + ramp_duration, post_rate),
        ),
        horizon,
    )


def detect_events(trace: CapacityTrace) -> list[CapacityEvent]:
    """Find the maximal decreasing runs of capacity.

    Each run becomes one event: onset is the run start, pre/post rates are
    the capacity just before and at the end of the run, ramp_duration is
    the run length (0 for a pure step).  Increases and plateaus never
    produce events, and runs separated by a plateau stay separate events.
    """
    # A "move" is one monotone piece of the capacity profile:
    # (t_start, t_end, value before, value after); steps have zero width.
    moves: list[tuple[float, float, float, float]] = []
    bps = trace.breakpoints
    for a, b in zip(bps, bps[1:]):
        if b.rate == a.rate:
            continue
        if a.mode is SegmentMode.HOLD:
            moves.append((b.time, b.time, a.rate, b.rate))
        else:
            moves.append((a.time, b.time, a.rate, b.rate))

    events: list[CapacityEvent] = []
    run: list[float] | None = None

    def flush() -> None:
        nonlocal run
        if run is not None:
            events.append(
                CapacityEvent(
                    onset=run[0], pre_rate=run[2], post_rate=run[3], ramp_duration=run[1] - run[0]
                )
            )
            run = None

    for ts, te, vs, ve in moves:
        if ve < vs:
            if run is not None and ts == run[1]:
                run[1], run[3] = te, ve
            else:
                flush()
                run = [ts, te, vs, ve]
        else:
            flush()
    flush()
    return events


class TraceParseError(ValueError):
    """Malformed trace CSV; carries the offending 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if line_no is not None else message)


_HEADER_TOKENS = {"time_s", "time", "t_s", "t"}
_ROW_FIELDS = 3


def trace_from_csv(text: str, horizon: float | None = None) -> CapacityTrace:
    """Parse ``time_s,rate_bps,mode`` rows (header optional) into a trace.

    The final row's time defines the horizon unless one is given
    explicitly.  All errors are :class:`TraceParseError` and name the
    offending line where one exists.
    """
    rows: list[tuple[int, float, float, str]] = []
    header_allowed = True
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if header_allowed and fields and fields[0].lower() in _HEADER_TOKENS:
            header_allowed = False
            continue
        header_allowed = False
        if len(fields) != _ROW_FIELDS:
            raise TraceParseError(
                f"expected 3 comma-separated fields (time_s,rate_bps,mode), got {len(fields)}", line_no
            )
        try:
            t = float(fields[0])
        except ValueError:
            raise TraceParseError(f"malformed time {fields[0]!r}", line_no) from None
        try:
            r = float(fields[1])
        except ValueError:
            raise TraceParseError(f"malformed rate {fields[1]!r}", line_no) from None
        mode = fields[2].lower()
        if mode not in ("hold", "linear"):
            raise TraceParseError(f"unknown mode {fields[2]!r} (expected 'hold' or 'linear')", line_no)
        if not math.isfinite(t) or t < 0.0:
            raise TraceParseError(f"time must be finite and >= 0, got {fields[0]}", line_no)
        if not math.isfinite(r) or r <= 0.0:
            raise TraceParseError(f"rate must be finite and > 0, got {fields[1]}", line_no)
        if not rows and t != 0.0:
            raise TraceParseError(f"first breakpoint must be at time 0, got {fields[0]}", line_no)
        if rows and t <= rows[-1][1]:
            raise TraceParseError(
                f"times must be strictly increasing, got {fields[0]} after {rows[-1][1]!r}", line_no
            )
        rows.append((line_no, t, r, mode))
    if not rows:
        raise TraceParseError("no data rows found")
    if rows[-1][3] != "hold":
        raise TraceParseError("last row must use mode 'hold'", rows[-1][0])
    h = rows[-1][1] if horizon is None else check_seconds(horizon, "horizon")
    if h < rows[-1][1]:
        raise TraceParseError(
            f"explicit horizon {h!r} lies before the last breakpoint at {rows[-1][1]!r}"
        )
    try:
        return CapacityTrace(
            tuple(Breakpoint(t, r, SegmentMode(m)) for _, t, r, m in rows), h
        )
    except ValueError as exc:
        raise TraceParseError(str(exc)) from None


def trace_to_csv(trace: CapacityTrace) -> str:
    """Canonical CSV: header, repr-formatted numbers, LF endings.

    When the horizon lies beyond the last breakpoint an explicit final row
    is added at the horizon (same rate, hold), so parsing the output
    reproduces both the capacity function and the horizon exactly.
    """
    lines = ["time_s,rate_bps,mode"]
    for bp in trace.breakpoints:
        lines.append(f"{bp.time!r},{bp.rate!r},{bp.mode.value}")
    if trace.horizon > trace.breakpoints[-1].time:
        lines.append(f"{trace.horizon!r},{trace.capacity_at(trace.horizon)!r},hold")
    return "\n".join(lines) + "\n"
