"""Broadcast channel: threshold reception, obstacle blocking, airtime,
destructive collisions and channel-busy-ratio bookkeeping."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

from . import kernels
from .geo import RoadMap, distance, line_of_sight
from .simcore import US_PER_S, RngStream, Simulator, to_us

SPEED_OF_LIGHT = 299_792_458.0
DATA_SIZE = 2312
BEACON_SIZE = 378
CBR_WINDOW_US = US_PER_S


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


@dataclass(frozen=True)
class RadioParams:
    tx_power: float = mw_to_dbm(300.0)  # dBm
    sensitivity: float = -100.0          # dBm
    path_loss_exponent: float = 3.0
    frequency: float = 5.89e9
    bitrate: float = 6e6
    mac_slot: float = 13e-6
    sifs: float = 32e-6
    cw_min: int = 15
    cw_max: int = 1023

    def __post_init__(self):
        if self.sensitivity >= self.tx_power:
            raise ValueError("sensitivity must be below tx_power")
        if self.path_loss_exponent <= 0 or self.frequency <= 0 or self.bitrate <= 0:
            raise ValueError("radio parameters must be positive")
        if not 0 <= self.cw_min <= self.cw_max:
            raise ValueError("need 0 <= cw_min <= cw_max")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def reference_loss(self) -> float:
        """Free-space loss at 1 m, ``20 log10(4 pi / lambda)`` in dB."""
        return 20.0 * math.log10(4.0 * math.pi / self.wavelength)

    @property
    def max_range(self) -> float:
        """Distance at which received power falls to the sensitivity."""
        budget = self.tx_power - self.sensitivity - self.reference_loss
        return 10.0 ** (budget / (10.0 * self.path_loss_exponent))


def received_power(params: RadioParams, dist: float) -> float:
    if dist <= 0:
        raise ValueError("distance must be positive")
    return params.tx_power - (params.reference_loss + 10.0 * params.path_loss_exponent * math.log10(dist))


def in_range(params: RadioParams, road_map: RoadMap, a, b) -> bool:
    d = distance(a, b)
    if d == 0:
        raise ValueError("in_range needs distinct positions")
    return received_power(params, d) >= params.sensitivity and line_of_sight(road_map, a, b)


@dataclass(frozen=True)
class Frame:
    kind: str  # "beacon" | "data"
    sender: int
    payload: Any = None
    size: int = 0

    def __post_init__(self):
        if self.size == 0:
            object.__setattr__(self, "size", DATA_SIZE if self.kind == "data" else BEACON_SIZE)
        if self.size <= 0:
            raise ValueError("frame size must be positive")


def airtime(params: RadioParams, frame: Frame) -> float:
    return frame.size * 8 / params.bitrate


def csma_access_delay(params: RadioParams, rng: RngStream) -> float:
    """SIFS plus a uniform backoff inside the minimum contention window."""
    return params.sifs + params.mac_slot * int(rng.integers(0, params.cw_min, endpoint=True))


# --- channel busy ratio ------------------------------------------------------------

@dataclass
class ChannelActivityLog:
    """Busy intervals (integer microseconds) seen by one node."""

    intervals: deque = field(default_factory=deque)

    def add(self, start: int, end: int) -> None:
        if end < start:
            raise ValueError("negative busy interval")
        self.intervals.append((start, end))

    def prune(self, now: int, window: int = CBR_WINDOW_US) -> None:
        lo = now - window
        iv = self.intervals
        while iv and iv[0][1] <= lo:
            iv.popleft()


def busy_time(intervals: Iterable[tuple[int, int]], lo: int, hi: int) -> int:
    """Length of the union of ``intervals`` clipped to ``[lo, hi]``."""
    clipped = sorted((max(s, lo), min(e, hi)) for s, e in intervals if e > lo and s < hi)
    total = 0
    cur_s = cur_e = None
    for s, e in clipped:
        if cur_e is None or s > cur_e:
            if cur_e is not None:
                total += cur_e - cur_s
            cur_s, cur_e = s, e
        elif e > cur_e:
            cur_e = e
    if cur_e is not None:
        total += cur_e - cur_s
    return total


def measure_cbr(log: ChannelActivityLog, now: int, window: int = CBR_WINDOW_US) -> float:
    """Busy fraction of the sliding window ``[now - window, now]``; times in microseconds."""
    log.prune(now, window)
    return busy_time(log.intervals, now - window, now) / window


# --- the shared medium ---------------------------------------------------------------

@dataclass
class Transmission:
    frame: Frame
    start: int
    end: int
    receivers: set
    collided: set = field(default_factory=set)


@dataclass(frozen=True)
class TxRecord:
    time: int
    sender: int
    kind: str
    data_id: int
    delivered: int
    collided: int
    cause: str = ""


class Channel:
    """Single shared broadcast medium.

    A frame reaches every active node in range (threshold + line of sight)
    after its airtime, unless another transmission overlapping in time is
    also in range of that receiver, in which case both frames are lost
    there. No capture; callers that want carrier sense consult ``busy_until``.
    """

    def __init__(self, sim: Simulator, params: RadioParams, road_map: RoadMap, fleet,
                 deliver: Callable[[int, Frame], None],
                 on_record: Callable[[TxRecord], None] | None = None) -> None:
        self.sim = sim
        self.params = params
        self.map = road_map
        self.fleet = fleet
        self.deliver = deliver
        self.on_record = on_record
        self.range = params.max_range
        self.in_flight: list[Transmission] = []
        self.logs: dict[int, ChannelActivityLog] = {}
        self._airtime_us = {}
        self._buildings = road_map.building_arrays

    def log(self, node: int) -> ChannelActivityLog:
        lg = self.logs.get(node)
        if lg is None:
            lg = self.logs[node] = ChannelActivityLog()
        return lg

    def cbr(self, node: int) -> float:
        return measure_cbr(self.log(node), self.sim.now)

    def busy_until(self, node: int) -> int | None:
        """End of the latest in-flight transmission ``node`` can sense, if any."""
        now = self.sim.now
        end = None
        for tx in self.in_flight:
            if tx.end > now and (tx.frame.sender == node or node in tx.receivers):
                if end is None or tx.end > end:
                    end = tx.end
        return end

    def audience(self, sender: int) -> np.ndarray:
        fleet = self.fleet
        eligible = fleet.active.copy()
        eligible[sender] = False
        sx, sy = fleet.pos[sender]
        verts, counts, boxes = self._buildings
        mask = kernels.link_mask(float(sx), float(sy), fleet.pos, eligible, self.range,
                                 verts, counts, boxes)
        return np.nonzero(mask)[0]

    def transmit(self, frame: Frame, cause: str = "") -> list[tuple[int, int]]:
        """Start ``frame`` now; return the tentative ``(receiver, delivery_us)`` audience."""
        now = self.sim.now
        dur = self._airtime_us.get(frame.size)
        if dur is None:
            dur = self._airtime_us[frame.size] = to_us(airtime(self.params, frame))
        rx = set(self.audience(frame.sender).tolist())
        tx = Transmission(frame, now, now + dur, rx)
        live = []
        for other in self.in_flight:
            if other.end <= now:
                continue
            live.append(other)
            common = rx & other.receivers
            if common:
                tx.collided |= common
                other.collided |= common
        live.append(tx)
        self.in_flight = live
        self.log(frame.sender).add(now, tx.end)
        for r in rx:
            self.log(r).add(now, tx.end)
        self.sim.call_at(tx.end, self._finish, tx, cause, kind="frame-delivery")
        return [(r, tx.end) for r in sorted(rx - tx.collided)]

    def _finish(self, tx: Transmission, cause: str) -> None:
        ok = sorted(tx.receivers - tx.collided)
        active = self.fleet.active
        delivered = 0
        for r in ok:
            if active[r]:
                delivered += 1
                self.deliver(r, tx.frame)
        if self.on_record is not None:
            payload = tx.frame.payload
            data_id = payload.data_id if tx.frame.kind == "data" else -1
            self.on_record(TxRecord(tx.start, tx.frame.sender, tx.frame.kind, data_id,
                                    delivered, len(tx.collided), cause))
