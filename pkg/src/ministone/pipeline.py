"""Actor-learner data flow. Actors produce trajectory segments into a
bounded buffer; the learner consumes batches out of it.

Two disciplines:
  queue: producers block when full; delivery is first-in-first-out and
         each segment is handed out exactly `sample_reuse` times, one
         full pass per reuse round, then retired.
  ring:  producers never block; a full buffer overwrites the oldest
         slot whether or not it was ever consumed; the consumer samples
         uniformly with replacement over live slots.

The production/consumption ratio c = s_p / s_c is measured over a
sliding window. The clock is injectable so rate tests are deterministic.
"""

from __future__ import annotations

import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field


class BufferShutdown(Exception):
    """Raised to waiters when the buffer is shut down."""


@dataclass
class BufferConfig:
    discipline: str = "queue"  # or "ring"
    capacity: int = 64
    sample_reuse: int = 2

    def __post_init__(self):
        if self.discipline not in ("queue", "ring"):
            raise ValueError(f"unknown discipline {self.discipline!r}")
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if self.sample_reuse < 1:
            raise ValueError("sample_reuse must be >= 1")


@dataclass
class PipelineMetrics:
    s_p: float                 # segments produced per second (windowed)
    s_c: float                 # segments consumed per second (windowed)
    c: float                   # s_p / s_c; nan when undefined (idle)
    overwrites: int            # ring only; 0 under queue discipline
    blocked_ms: float          # cumulative producer block time (queue)
    consumption_counts: dict   # push sequence number -> times delivered

    def log_line(self) -> str:
        return (f"ts={time.time():.3f} s_p={self.s_p:.2f} s_c={self.s_c:.2f} "
                f"c={self.c:.3f} overwrites={self.overwrites} "
                f"blocked_ms={self.blocked_ms:.1f}")


class SegmentBuffer:
    """Linearizable many-producer one-consumer segment buffer."""

    def __init__(self, cfg: BufferConfig, window_s: float = 60.0,
                 clock=time.monotonic, rng_seed: int = 0):
        self.cfg = cfg
        self.window_s = window_s
        self.clock = clock
        self._t0 = clock()
        self._lock = threading.Lock()
        self._not_full = threading.Condition(self._lock)
        self._not_empty = threading.Condition(self._lock)
        self._shutdown = False
        self._seq = 0
        self._counts: dict[int, int] = {}
        self._push_times: deque[float] = deque()
        self._pop_times: deque[float] = deque()
        self._overwrites = 0
        self._blocked_s = 0.0
        self._pushed_total = 0
        self._delivered_total = 0
        if cfg.discipline == "queue":
            # entries: [seq, segment, deliveries_remaining]
            self._q: deque[list] = deque()
        else:
            self._slots: list = [None] * cfg.capacity  # (seq, segment) or None
            self._write_idx = 0
            import random
            self._rng = random.Random(rng_seed)

    # -- producers ----------------------------------------------------------

    def push(self, segment) -> str:
        """Returns "accepted" or "overwrote"; blocks under queue discipline
        while the buffer is full."""
        with self._lock:
            if self.cfg.discipline == "queue":
                t0 = self.clock()
                while len(self._q) >= self.cfg.capacity and not self._shutdown:
                    self._not_full.wait(timeout=0.1)
                self._blocked_s += self.clock() - t0
                if self._shutdown:
                    raise BufferShutdown
                seq = self._seq
                self._seq += 1
                self._counts[seq] = 0
                self._q.append([seq, segment, self.cfg.sample_reuse])
                status = "accepted"
            else:
                if self._shutdown:
                    raise BufferShutdown
                seq = self._seq
                self._seq += 1
                self._counts[seq] = 0
                if self._slots[self._write_idx] is not None:
                    self._overwrites += 1
                self._slots[self._write_idx] = (seq, segment)
                self._write_idx = (self._write_idx + 1) % self.cfg.capacity
                status = "accepted"
            self._pushed_total += 1
            now = self.clock()
            self._push_times.append(now)
            self._trim(now)
            self._not_empty.notify_all()
            return status

    # -- consumer -----------------------------------------------------------

    def pop_batch(self, n: int) -> list:
        if self.cfg.discipline == "queue" and n > self.cfg.capacity * self.cfg.sample_reuse:
            raise ValueError("batch exceeds one buffer generation "
                             "(capacity * sample_reuse); would deadlock")
        out = []
        with self._lock:
            while len(out) < n:
                while not self._has_data() and not self._shutdown:
                    self._not_empty.wait(timeout=0.1)
                if self._shutdown and not self._has_data():
                    raise BufferShutdown
                out.append(self._take_one())
            now = self.clock()
            for _ in out:
                self._pop_times.append(now)
            self._trim(now)
        return out

    def _has_data(self) -> bool:
        if self.cfg.discipline == "queue":
            return bool(self._q)
        return any(s is not None for s in self._slots)

    def _take_one(self):
        if self.cfg.discipline == "queue":
            entry = self._q.popleft()
            seq, segment, remaining = entry
            remaining -= 1
            if remaining > 0:
                # Requeue at the tail: one full FIFO pass per reuse round.
                self._q.append([seq, segment, remaining])
            else:
                self._not_full.notify_all()
            self._counts[seq] += 1
            self._delivered_total += 1
            return segment
        live = [s for s in self._slots if s is not None]
        seq, segment = self._rng.choice(live)
        self._counts[seq] += 1
        self._delivered_total += 1
        return segment

    # -- introspection --------------------------------------------------------

    def _trim(self, now: float) -> None:
        cutoff = now - self.window_s
        while self._push_times and self._push_times[0] < cutoff:
            self._push_times.popleft()
        while self._pop_times and self._pop_times[0] < cutoff:
            self._pop_times.popleft()

    def metrics(self) -> PipelineMetrics:
        with self._lock:
            now = self.clock()
            self._trim(now)
            span = min(self.window_s, max(now - self._t0, 1e-9))
            n_p, n_c = len(self._push_times), len(self._pop_times)
            s_p = n_p / span
            s_c = n_c / span
            c = n_p / n_c if n_c > 0 else math.nan
            return PipelineMetrics(s_p, s_c, c, self._overwrites,
                                   self._blocked_s * 1000.0, dict(self._counts))

    @property
    def pushed_total(self) -> int:
        with self._lock:
            return self._pushed_total

    @property
    def delivered_total(self) -> int:
        with self._lock:
            return self._delivered_total

    def deliverable(self) -> int:
        """Deliveries available without waiting for more pushes (queue)."""
        with self._lock:
            if self.cfg.discipline == "queue":
                return sum(e[2] for e in self._q)
            return sum(1 for s in self._slots if s is not None)

    def pending(self) -> int:
        """Distinct segments currently occupying buffer slots."""
        with self._lock:
            if self.cfg.discipline == "queue":
                return len(self._q)
            return sum(1 for s in self._slots if s is not None)

    def shutdown(self) -> None:
        with self._lock:
            self._shutdown = True
            self._not_full.notify_all()
            self._not_empty.notify_all()


def governor_decision(c: float, low: float = 1.0, high: float = 1.2) -> str:
    """Actor governor: pause actors when production outruns consumption,
    resume them when it falls behind, otherwise hold."""
    if math.isnan(c):
        return "hold"
    if c > high:
        return "pause"
    if c < low:
        return "resume"
    return "hold"


@dataclass
class ActorPool:
    """Thread-based actors driving a produce() callable into a buffer."""
    buffer: SegmentBuffer
    produce: object               # callable(actor_index) -> segment
    n_actors: int = 2
    governor: bool = False
    threads: list = field(default_factory=list)
    _stop: threading.Event = field(default_factory=threading.Event)
    _paused: threading.Event = field(default_factory=threading.Event)

    def start(self) -> None:
        for i in range(self.n_actors):
            t = threading.Thread(target=self._run, args=(i,), daemon=True)
            t.start()
            self.threads.append(t)

    def _run(self, idx: int) -> None:
        while not self._stop.is_set():
            if self.governor:
                decision = governor_decision(self.buffer.metrics().c)
                if decision == "pause":
                    self._paused.set()
                elif decision == "resume":
                    self._paused.clear()
                if self._paused.is_set() and idx >= max(1, self.n_actors // 2):
                    time.sleep(0.01)
                    continue
            try:
                seg = self.produce(idx)
                if seg is not None:
                    self.buffer.push(seg)
            except BufferShutdown:
                return

    def stop(self) -> None:
        self._stop.set()
        self.buffer.shutdown()
        for t in self.threads:
            t.join(timeout=5.0)
