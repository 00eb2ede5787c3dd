"""ACK-clocked AIMD packet baseline over a capacity trace.

A single flow crosses one FIFO bottleneck with an infinite buffer, so
nothing is ever dropped; congestion is signaled purely by marking packets
whose queue sojourn exceeds a threshold and echoing the mark on the ACK.
On a marked ACK the sender multiplies its window once per round trip;
otherwise it grows by ``additive_increase`` packets per round trip.  The
event loop is keyed by (time, sequence), so equal configs and seeds
produce bit-identical event logs.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass

from .bounds import peak_delay_ramp
from .trace import CapacityEvent, CapacityTrace, check_seconds, detect_events

__all__ = [
    "AimdParams",
    "PacketSimConfig",
    "LogEntry",
    "PacketSimResult",
    "BoundComparison",
    "simulate_packets",
    "compare_to_bound",
    "event_log_to_csv",
]

_ARRIVE, _DEPART, _ACK = 0, 1, 2
_THROUGHPUT_BUCKET = 0.1  # seconds


@dataclass(frozen=True)
class AimdParams:
    """Additive increase (packets per round trip) / multiplicative decrease."""

    additive_increase: float = 1.0
    multiplicative_decrease: float = 0.5

    def __post_init__(self) -> None:
        if not (math.isfinite(self.additive_increase) and self.additive_increase > 0.0):
            raise ValueError(
                f"additive_increase must be > 0 packets per round trip, got {self.additive_increase!r}"
            )
        if not 0.0 < self.multiplicative_decrease < 1.0:
            raise ValueError(
                f"multiplicative_decrease must lie in (0, 1), got {self.multiplicative_decrease!r}"
            )


@dataclass(frozen=True)
class PacketSimConfig:
    trace: CapacityTrace
    packet_size: float = 12000.0  # bits (1500-byte packets)
    forward_delay: float = 0.002  # sender -> bottleneck
    x_to_b_delay: float = 0.005  # bottleneck -> receiver
    reverse_delay: float = 0.005  # receiver -> sender (ACK path)
    aimd: AimdParams = AimdParams()
    mark_threshold: float = 0.02  # queue sojourn that gets a packet marked
    initial_window: int = 10  # packets
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.packet_size) and self.packet_size > 0.0):
            raise ValueError(f"packet_size must be > 0 bits, got {self.packet_size!r}")
        check_seconds(self.forward_delay, "forward_delay")
        check_seconds(self.x_to_b_delay, "x_to_b_delay")
        check_seconds(self.reverse_delay, "reverse_delay")
        check_seconds(self.mark_threshold, "mark_threshold")
        if self.initial_window < 0:
            raise ValueError(f"initial_window must be >= 0 packets, got {self.initial_window!r}")


@dataclass(frozen=True)
class LogEntry:
    t: float
    event: str  # enqueue | dequeue | mark | ack | window
    packet_id: int
    queue_bits: float
    detail: str = ""


@dataclass(frozen=True)
class PacketSimResult:
    config: PacketSimConfig
    log: tuple[LogEntry, ...]
    queue_delay_series: tuple[tuple[float, float], ...]  # (dequeue time, sojourn)
    peak_queue_delay: float
    throughput_series: tuple[tuple[float, float], ...]  # (bucket end, delivered bit/s)
    congestion_reached: bool
    packets_sent: int
    packets_delivered: int


def simulate_packets(config: PacketSimConfig) -> PacketSimResult:
    """Run the discrete-event loop up to the trace horizon.

    A packet's service time is packet_size / capacity at its service start,
    held for the whole packet; the queue is work-conserving and FIFO.  A
    run whose queue never holds a waiting packet before the first capacity
    reduction is flagged ``congestion_reached=False`` (the sender never
    actually pressed against the link, so bound comparisons are vacuous).
    """
    trace = config.trace
    horizon = trace.horizon
    pkt = config.packet_size
    ai = config.aimd.additive_increase
    md = config.aimd.multiplicative_decrease
    rng = random.Random(config.seed)

    events = detect_events(trace)
    warm_end = events[0].onset if events else horizon

    heap: list[tuple[float, int, int, int]] = []
    seq = 0

    def push(t: float, kind: int, pid: int) -> None:
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, pid))
        seq += 1

    cwnd = float(config.initial_window)
    in_flight = 0
    next_pid = 0
    send_time: dict[int, float] = {}
    arrive_time: dict[int, float] = {}
    marked: dict[int, bool] = {}
    queue: deque[int] = deque()
    server_busy = False
    queue_bits = 0.0
    # One decrease per window of data: marks on packets sent before the last
    # decrease are stale echoes of the congestion already reacted to.
    recovery_end_pid = 0
    congestion_seen = False

    log: list[LogEntry] = []
    delays: list[tuple[float, float]] = []
    delivered: list[tuple[float, float]] = []

    def send_packet(t: float) -> None:
        nonlocal next_pid, in_flight
        pid = next_pid
        next_pid += 1
        in_flight += 1
        send_time[pid] = t
        push(t + config.forward_delay, _ARRIVE, pid)

    def start_service(t: float) -> None:
        nonlocal congestion_seen
        head = queue[0]
        service = pkt / trace.capacity_at(t)
        # saturated means a packet waited at least one full packet behind
        # others, not just the phase overlap of the initial burst
        if t <= warm_end and t - arrive_time[head] > service:
            congestion_seen = True
        push(t + service, _DEPART, head)

    # Initial burst, paced at the initial link rate with seeded phase jitter
    # to break synchronization artifacts while staying deterministic.
    spacing = pkt / trace.capacity_at(0.0)
    for k in range(config.initial_window):
        t0 = k * spacing + rng.random() * spacing * 0.5
        if t0 >= horizon:
            break
        send_packet(t0)

    while heap and heap[0][0] <= horizon:
        t, _, kind, pid = heapq.heappop(heap)
        if kind == _ARRIVE:
            arrive_time[pid] = t
            queue.append(pid)
            queue_bits += pkt
            log.append(LogEntry(t, "enqueue", pid, queue_bits))
            if not server_busy:
                server_busy = True
                start_service(t)
        elif kind == _DEPART:
            head = queue.popleft()
            assert head == pid  # FIFO service order
            queue_bits -= pkt
            sojourn = t - arrive_time[pid]
            delays.append((t, sojourn))
            delivered.append((t, pkt))
            mark = sojourn > config.mark_threshold
            marked[pid] = mark
            log.append(LogEntry(t, "dequeue", pid, queue_bits, "marked" if mark else ""))
            if mark:
                log.append(LogEntry(t, "mark", pid, queue_bits, f"sojourn={sojourn:.6f}"))
            push(t + config.x_to_b_delay + config.reverse_delay, _ACK, pid)
            if queue:
                start_service(t)
            else:
                server_busy = False
        else:  # ACK back at the sender
            in_flight -= 1
            was_marked = marked.get(pid, False)
            if was_marked:
                if pid >= recovery_end_pid:
                    cwnd = max(1.0, cwnd * md)
                    recovery_end_pid = next_pid
                    log.append(LogEntry(t, "window", pid, queue_bits, f"decrease cwnd={cwnd:.3f}"))
            else:
                cwnd += ai / max(cwnd, 1.0)
            log.append(
                LogEntry(
                    t, "ack", pid, queue_bits,
                    ("marked " if was_marked else "") + f"cwnd={cwnd:.3f}",
                )
            )
            while in_flight < int(cwnd + 1e-9) and t < horizon:
                send_packet(t)

    throughput: list[tuple[float, float]] = []
    if delivered:
        n_buckets = int(horizon / _THROUGHPUT_BUCKET) + 1
        acc = [0.0] * n_buckets
        for td, bits in delivered:
            acc[min(int(td / _THROUGHPUT_BUCKET), n_buckets - 1)] += bits
        throughput = [
            ((i + 1) * _THROUGHPUT_BUCKET, acc[i] / _THROUGHPUT_BUCKET) for i in range(n_buckets)
        ]

    return PacketSimResult(
        config=config,
        log=tuple(log),
        queue_delay_series=tuple(delays),
        peak_queue_delay=max((q for _, q in delays), default=0.0),
        throughput_series=tuple(throughput),
        congestion_reached=congestion_seen,
        packets_sent=next_pid,
        packets_delivered=len(delivered),
    )


@dataclass(frozen=True)
class BoundComparison:
    """Measured post-onset peak against the analytic floor for one event."""

    bound: float
    measured_peak: float
    ratio: float | None  # measured / bound; None when the bound is 0
    slack: float
    violation: bool  # measured < bound - slack


def compare_to_bound(
    result: PacketSimResult,
    event: CapacityEvent,
    signal_delay: float,
    slack: float | None = None,
) -> BoundComparison:
    """Compare the measured peak queue delay after ``event.onset`` with the
    closed-form floor for the event.

    ``slack`` defaults to one packet serialization time at the event's
    final rate, the discretization a fluid model does not see.  A
    measurement below bound - slack is flagged as a violation.
    """
    d = check_seconds(signal_delay, "signal_delay")
    post = [q for t, q in result.queue_delay_series if t >= event.onset]
    if not post:
        raise ValueError(
            f"no dequeues at or after the event onset {event.onset!r}s; "
            "the simulation does not cover the event window"
        )
    measured = max(post)
    bound = peak_delay_ramp(event.c_factor, d, event.ramp_duration)
    if slack is None:
        slack = result.config.packet_size / event.post_rate
    ratio = measured / bound if bound > 0.0 else None
    return BoundComparison(bound, measured, ratio, slack, measured < bound - slack)


def event_log_to_csv(result: PacketSimResult) -> str:
    lines = ["t_s,event_type,packet_id,queue_bits,detail"]
    lines += [f"{e.t!r},{e.event},{e.packet_id},{e.queue_bits!r},{e.detail}" for e in result.log]
    return "\n".join(lines) + "\n"
