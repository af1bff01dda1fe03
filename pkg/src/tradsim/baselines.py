"""Reference dissemination protocols sharing the radio and mobility substrate."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geo import distance
from .radio import Frame
from .trad import DataMessage, Host


@dataclass(frozen=True)
class FloodingParams:
    jitter_max: float = 0.010

    def __post_init__(self):
        if self.jitter_max <= 0:
            raise ValueError("jitter_max must be positive")


@dataclass(frozen=True)
class Slotted1PParams:
    num_slots: int = 5
    slot_len: float = 0.005
    max_range: float = 366.0

    def __post_init__(self):
        if self.num_slots < 1:
            raise ValueError("num_slots must be >= 1")
        if self.slot_len <= 0 or self.max_range <= 0:
            raise ValueError("slot_len and max_range must be positive")


def slotted_1p_delay(dist_to_sender: float, params: Slotted1PParams) -> float:
    """Farther receivers take earlier slots."""
    if dist_to_sender < 0:
        raise ValueError("distance must be >= 0")
    ratio = min(dist_to_sender / params.max_range, 1.0)
    s = math.floor(params.num_slots * (1.0 - ratio))
    s = min(max(s, 0), params.num_slots - 1)
    return s * params.slot_len


class _BaselineNode:
    uses_beacons = False

    def __init__(self, node_id: int, host: Host) -> None:
        self.id = node_id
        self.host = host
        self.store: dict[int, DataMessage] = {}
        self.pending: dict[int, object] = {}

    def originate(self, data_id: int) -> DataMessage:
        me = self.host.position(self.id)
        msg = DataMessage(data_id, self.id, self.id, me, me, ())
        self.store[data_id] = msg
        self.host.received(self.id, data_id)
        self._send(data_id, "origin")
        return msg

    def _send(self, data_id: int, cause: str) -> None:
        me = self.host.position(self.id)
        msg = replace(self.store[data_id], sender_id=self.id, sender_pos=me)
        self.host.send(self.id, Frame("data", self.id, msg), cause)

    def _fire(self, data_id: int) -> None:
        wait = self.host.backoff(self.id)
        if wait is not None and data_id in self.pending:
            self.pending[data_id] = self.host.schedule(wait, self._fire, data_id)
            return
        self.pending.pop(data_id, None)
        if not self.host.active(self.id):
            return
        self.host.decision(self.id, data_id, "transmit", "rebroadcast")
        self._send(data_id, "rebroadcast")

    def on_frame(self, frame: Frame) -> None:
        if frame.kind == "data":
            self.on_data(frame.payload)

    def on_data(self, msg: DataMessage) -> None:
        raise NotImplementedError


class FloodingNode(_BaselineNode):
    """Every node rebroadcasts each message once after a random jitter."""

    def __init__(self, node_id: int, params: FloodingParams, host: Host) -> None:
        super().__init__(node_id, host)
        self.params = params

    def on_data(self, msg: DataMessage) -> None:
        if msg.data_id in self.store:
            return
        self.store[msg.data_id] = msg
        self.host.received(self.id, msg.data_id)
        delay = self.host.uniform(0.0, self.params.jitter_max)
        self.pending[msg.data_id] = self.host.schedule(delay, self._fire, msg.data_id)
        self.host.decision(self.id, msg.data_id, "schedule", "rebroadcast")


class Slotted1PNode(_BaselineNode):
    """Slotted 1-persistence: distance-keyed slot, cancelled by any overheard duplicate."""

    def __init__(self, node_id: int, params: Slotted1PParams, host: Host) -> None:
        super().__init__(node_id, host)
        self.params = params

    def on_data(self, msg: DataMessage) -> None:
        h = self.host
        if msg.data_id in self.store:
            handle = self.pending.pop(msg.data_id, None)
            if handle is not None and h.cancel(handle):
                h.decision(self.id, msg.data_id, "cancel", "echo-cancel")
            return
        self.store[msg.data_id] = msg
        h.received(self.id, msg.data_id)
        d = distance(h.position(self.id), msg.sender_pos)
        delay = slotted_1p_delay(d, self.params) + h.access_delay()
        self.pending[msg.data_id] = h.schedule(delay, self._fire, msg.data_id)
        h.decision(self.id, msg.data_id, "schedule", "rebroadcast")
