"""Link model: determinism, delay statistics, ordering, loss accounting."""
import statistics

import pytest

from uavaq.linksim import LinkConfig, LinkError, LinkSimulator


class TestIdentityChannel:
    def test_zero_config_is_identity(self):
        cfg = LinkConfig(base_delay_ms=(0.0, 0.0), spike_probability=0.0, loss_rate=0.0)
        sim = LinkSimulator(cfg)
        for i in range(100):
            d = sim.transmit(i, now=float(i))
            assert not d.dropped
            assert d.deliver_at == float(i)


class TestDeterminism:
    def test_same_seed_same_schedule(self):
        cfg = LinkConfig(seed=1234, loss_rate=0.05)
        a = LinkSimulator(cfg).schedule(list(range(500)), [i * 0.1 for i in range(500)])
        b = LinkSimulator(cfg).schedule(list(range(500)), [i * 0.1 for i in range(500)])
        assert a == b

    def test_reset_replays(self):
        sim = LinkSimulator(LinkConfig(seed=7))
        a = sim.schedule(list(range(100)))
        sim.reset()
        b = sim.schedule(list(range(100)))
        assert a == b

    def test_different_seed_differs(self):
        a = LinkSimulator(LinkConfig(seed=1)).schedule(list(range(100)))
        b = LinkSimulator(LinkConfig(seed=2)).schedule(list(range(100)))
        assert a != b


class TestStatistics:
    def test_mean_delay_and_spikes(self):
        sim = LinkSimulator(LinkConfig(seed=42))
        deliveries = sim.schedule(list(range(10_000)), [i * 1.0 for i in range(10_000)])
        delays = [d.delay_s * 1000 for d in deliveries]
        mean = statistics.fmean(delays)
        # mean of base U(10,50) plus 1% spikes of 1700 ms = 47 ms expected;
        # allow 3 sigma of the sample mean around the configured band
        sigma_mean = statistics.stdev(delays) / len(delays) ** 0.5
        assert 10.0 - 3 * sigma_mean <= mean <= 50.0 + 3 * sigma_mean
        assert max(delays) >= 1700.0
        assert any(d.spiked for d in deliveries)

    def test_no_loss_counts_preserved(self):
        sim = LinkSimulator(LinkConfig(seed=3, loss_rate=0.0))
        deliveries = sim.schedule(list(range(10_000)), [i * 0.5 for i in range(10_000)])
        assert sum(1 for d in deliveries if not d.dropped) == 10_000

    def test_loss_rate_drops_some(self):
        sim = LinkSimulator(LinkConfig(seed=3, loss_rate=0.2))
        deliveries = sim.schedule(list(range(5000)))
        dropped = sum(1 for d in deliveries if d.dropped)
        assert 0.15 * 5000 < dropped < 0.25 * 5000


class TestOrdering:
    def test_delivery_order_equals_send_order(self):
        sim = LinkSimulator(LinkConfig(seed=11, spike_probability=0.2))
        deliveries = sim.schedule(list(range(2000)), [i * 0.01 for i in range(2000)])
        times = [d.deliver_at for d in deliveries if not d.dropped]
        assert all(a <= b for a, b in zip(times, times[1:]))

    def test_spike_blocks_stream_head(self):
        cfg = LinkConfig(base_delay_ms=(0.0, 0.0), spike_delay_ms=1000.0,
                         spike_probability=1.0, seed=0)
        sim = LinkSimulator(cfg)
        first = sim.transmit("a", now=0.0)
        second = sim.transmit("b", now=0.001)
        assert second.deliver_at >= first.deliver_at


class TestValidation:
    def test_bad_configs_rejected(self):
        with pytest.raises(LinkError):
            LinkConfig(base_delay_ms=(50.0, 10.0))
        with pytest.raises(LinkError):
            LinkConfig(loss_rate=1.5)
        with pytest.raises(LinkError):
            LinkConfig(spike_probability=-0.1)
