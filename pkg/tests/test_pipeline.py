"""Buffer discipline contracts: blocking, reuse exactness, FIFO order,
overwrite behavior, rate measurement, and a multi-producer stress run."""

import threading
import time

import pytest

from ministone import pipeline


def queue_buffer(capacity=4, reuse=2, **kw):
    return pipeline.SegmentBuffer(
        pipeline.BufferConfig("queue", capacity, reuse), **kw)


def ring_buffer(capacity=4, **kw):
    return pipeline.SegmentBuffer(
        pipeline.BufferConfig("ring", capacity, 1), **kw)


class TestQueueDiscipline:
    def test_full_queue_blocks_fifth_push_until_pop(self):
        buf = queue_buffer(capacity=4, reuse=1)
        for i in range(4):
            buf.push(i)
        state = {"pushed": False}

        def producer():
            buf.push(4)
            state["pushed"] = True

        t = threading.Thread(target=producer, daemon=True)
        t.start()
        time.sleep(0.15)
        assert not state["pushed"]
        assert buf.pop_batch(1) == [0]
        t.join(timeout=2.0)
        assert state["pushed"]
        assert buf.metrics().blocked_ms > 0

    def test_reuse_two_delivers_each_segment_exactly_twice(self):
        buf = queue_buffer(capacity=16, reuse=2)
        for i in range(10):
            buf.push(i)
        got = buf.pop_batch(20)
        counts = buf.metrics().consumption_counts
        assert all(counts[i] == 2 for i in range(10))
        assert sorted(got) == sorted(list(range(10)) * 2)

    def test_fifo_order_per_reuse_round(self):
        buf = queue_buffer(capacity=8, reuse=2)
        for i in range(5):
            buf.push(i)
        got = buf.pop_batch(10)
        assert got == [0, 1, 2, 3, 4, 0, 1, 2, 3, 4]

    def test_quiescent_accounting(self):
        buf = queue_buffer(capacity=8, reuse=3)
        for i in range(8):
            buf.push(i)
        buf.pop_batch(12)
        # Mid-generation: one full round (8) plus half of round two.
        counts = buf.metrics().consumption_counts
        assert buf.delivered_total == 12
        assert sorted(counts.values()) == [1, 1, 1, 1, 2, 2, 2, 2]
        assert buf.pending() == 8
        buf.pop_batch(12)
        # Quiescent: every pushed segment delivered exactly reuse times.
        counts = buf.metrics().consumption_counts
        assert all(v == 3 for v in counts.values())
        assert buf.delivered_total == (buf.pushed_total - buf.pending()) * 3
        assert buf.pending() == 0

    def test_pop_from_empty_waits_for_data(self):
        buf = queue_buffer()
        out = {}

        def consumer():
            out["batch"] = buf.pop_batch(1)

        t = threading.Thread(target=consumer, daemon=True)
        t.start()
        time.sleep(0.1)
        assert "batch" not in out
        buf.push("late")
        t.join(timeout=2.0)
        assert out["batch"] == ["late"]

    def test_no_torn_segments(self):
        buf = queue_buffer(capacity=8, reuse=1)
        payload = {"deep": [1, 2, {"x": "y"}]}
        buf.push(payload)
        assert buf.pop_batch(1)[0] is payload

    def test_shutdown_unblocks_waiters(self):
        buf = queue_buffer(capacity=1, reuse=1)
        buf.push(0)
        errors = []

        def producer():
            try:
                buf.push(1)
            except pipeline.BufferShutdown:
                errors.append("producer")

        t = threading.Thread(target=producer, daemon=True)
        t.start()
        time.sleep(0.05)
        buf.shutdown()
        t.join(timeout=2.0)
        assert errors == ["producer"]
        with pytest.raises(pipeline.BufferShutdown):
            queue_shutdown = queue_buffer()
            queue_shutdown.shutdown()
            queue_shutdown.pop_batch(1)

    def test_multi_producer_stress_no_loss(self):
        buf = queue_buffer(capacity=32, reuse=1)
        per_producer = 150
        n_producers = 8
        produced = []

        def producer(pid):
            for j in range(per_producer):
                buf.push((pid, j))

        threads = [threading.Thread(target=producer, args=(p,), daemon=True)
                   for p in range(n_producers)]
        consumed = []

        def consumer():
            while len(consumed) < per_producer * n_producers:
                consumed.extend(buf.pop_batch(1))

        ct = threading.Thread(target=consumer, daemon=True)
        ct.start()
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=10.0)
        ct.join(timeout=10.0)
        assert sorted(consumed) == sorted(
            (p, j) for p in range(n_producers) for j in range(per_producer))


class TestRingDiscipline:
    def test_overwrite_without_pops(self):
        buf = ring_buffer(capacity=4)
        for i in range(5):
            assert buf.push(i) == "accepted"
        m = buf.metrics()
        assert m.overwrites == 1
        assert buf.pending() == 4
        live = set(buf.pop_batch(50))
        assert 0 not in live and live <= {1, 2, 3, 4}

    def test_push_never_blocks(self):
        buf = ring_buffer(capacity=2)
        t0 = time.monotonic()
        for i in range(1000):
            buf.push(i)
        assert time.monotonic() - t0 < 1.0
        assert buf.metrics().overwrites == 998

    def test_uniform_sampling_with_replacement(self):
        buf = ring_buffer(capacity=4)
        for i in range(4):
            buf.push(i)
        got = buf.pop_batch(4000)
        counts = [got.count(i) for i in range(4)]
        for c in counts:
            assert 800 < c < 1200

    def test_overproduction_gives_uneven_consumption(self):
        # Producer twice as fast as consumer: some segments are never
        # consumed, others more than the nominal reuse.
        buf = ring_buffer(capacity=8)
        for round_ in range(100):
            buf.push(round_ * 2)
            buf.push(round_ * 2 + 1)
            buf.pop_batch(1)
        counts = list(buf.metrics().consumption_counts.values())
        assert counts.count(0) > 0
        assert max(counts) >= 2


class TestMetrics:
    def test_idle_reports_zero_rates_and_nan_ratio(self):
        import math
        buf = queue_buffer()
        m = buf.metrics()
        assert m.s_p == 0.0 and m.s_c == 0.0
        assert math.isnan(m.c)
        assert "c=nan" in m.log_line()

    def test_ratio_with_fake_clock(self):
        # Fake clock: 100 pushes over 10s, 50 pops over the same span.
        now = [0.0]
        buf = queue_buffer(capacity=128, reuse=2, window_s=60.0,
                           clock=lambda: now[0])
        for i in range(100):
            now[0] += 0.1
            buf.push(i)
        for _ in range(50):
            buf.pop_batch(1)
        m = buf.metrics()
        assert m.c == pytest.approx(2.0, rel=0.1)

    def test_balanced_ratio(self):
        now = [0.0]
        buf = queue_buffer(capacity=128, reuse=1, clock=lambda: now[0])
        for i in range(60):
            now[0] += 0.1
            buf.push(i)
            buf.pop_batch(1)
        assert buf.metrics().c == pytest.approx(1.0, rel=0.1)

    def test_window_trims_old_events(self):
        now = [0.0]
        buf = queue_buffer(capacity=128, reuse=1, window_s=5.0,
                           clock=lambda: now[0])
        for i in range(10):
            buf.push(i)
        buf.pop_batch(10)
        now[0] = 100.0
        m = buf.metrics()
        assert m.s_p == 0.0 and m.s_c == 0.0


class TestGovernor:
    def test_decisions(self):
        import math
        assert pipeline.governor_decision(2.0) == "pause"
        assert pipeline.governor_decision(0.5) == "resume"
        assert pipeline.governor_decision(1.1) == "hold"
        assert pipeline.governor_decision(math.nan) == "hold"

    def test_actor_pool_produces_and_stops(self):
        buf = queue_buffer(capacity=64, reuse=1)
        pool = pipeline.ActorPool(buf, lambda idx: ("seg", idx), n_actors=3)
        pool.start()
        batch = buf.pop_batch(20)
        assert len(batch) == 20
        pool.stop()
        assert all(not t.is_alive() for t in pool.threads)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            pipeline.BufferConfig("stack", 4, 2)
        with pytest.raises(ValueError):
            pipeline.BufferConfig("queue", 0, 2)
        with pytest.raises(ValueError):
            pipeline.BufferConfig("queue", 4, 0)
        buf = queue_buffer(capacity=4, reuse=2)
        with pytest.raises(ValueError):
            buf.pop_batch(9)
