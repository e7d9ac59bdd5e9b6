"""Deterministic cellular-link model: jitter, delay spikes and drops.

The link carries a reliable ordered byte stream, so per-payload delays are
forced monotone (a late payload holds back everything after it, like TCP
head-of-line blocking) and a "lost" payload models the connection dying:
the live stack reacts by reconnecting rather than skipping data.

All randomness comes from the config seed; the same seed and payload
sequence always produce the same schedule.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence


class LinkError(ValueError):
    pass


@dataclass(frozen=True)
class LinkConfig:
    """Delay model: uniform base delay, occasional spikes, rare drops.

    Defaults follow the measured cellular figures this system was sized
    for: 10-50 ms nominal one-way delay with worst-case spikes near 1.7 s.
    """

    base_delay_ms: tuple[float, float] = (10.0, 50.0)
    spike_delay_ms: float = 1700.0
    spike_probability: float = 0.01
    loss_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.base_delay_ms
        if lo < 0 or hi < lo:
            raise LinkError("base_delay_ms must be 0 <= lo <= hi")
        if self.spike_delay_ms < 0:
            raise LinkError("spike_delay_ms must be >= 0")
        if not 0 <= self.spike_probability <= 1:
            raise LinkError("spike_probability must be in [0, 1]")
        if not 0 <= self.loss_rate <= 1:
            raise LinkError("loss_rate must be in [0, 1]")


@dataclass(frozen=True)
class Delivery:
    payload: object
    sent_at: float
    deliver_at: float     # meaningless when dropped
    delay_s: float
    spiked: bool
    dropped: bool


@dataclass
class LinkSimulator:
    config: LinkConfig = field(default_factory=LinkConfig)

    def __post_init__(self) -> None:
        self._rng = random.Random(self.config.seed)
        self._last_delivery = 0.0

    def transmit(self, payload: object, now: float) -> Delivery:
        """Schedule one payload sent at `now`; returns its delivery record."""
        cfg = self.config
        dropped = self._rng.random() < cfg.loss_rate if cfg.loss_rate > 0 else False
        lo, hi = cfg.base_delay_ms
        delay = self._rng.uniform(lo, hi) / 1000.0
        spiked = False
        if cfg.spike_probability > 0 and self._rng.random() < cfg.spike_probability:
            delay += cfg.spike_delay_ms / 1000.0
            spiked = True
        if dropped:
            return Delivery(payload, now, float("inf"), delay, spiked, True)
        deliver_at = max(now + delay, self._last_delivery)  # stream ordering
        self._last_delivery = deliver_at
        return Delivery(payload, now, deliver_at, delay, spiked, False)

    def schedule(self, payloads: Sequence[object], times: Optional[Iterable[float]] = None,
                 ) -> list[Delivery]:
        """Schedule a batch; times default to all-zero (burst at t=0)."""
        ts = list(times) if times is not None else [0.0] * len(payloads)
        if len(ts) != len(payloads):
            raise LinkError("times and payloads must have equal length")
        return [self.transmit(p, t) for p, t in zip(payloads, ts)]

    def reset(self) -> None:
        """Re-arm from the seed; the next schedule replays identically."""
        self._rng = random.Random(self.config.seed)
        self._last_delivery = 0.0
