"""The TrAD protocol: per-vehicle beaconing, directional clustering,
traffic-adaptive rebroadcast ordering and store-carry-forward agents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

from .geo import RoadMap, Vec2, angle_between, distance, nearest_intersection_distance
from .radio import Frame
from .simcore import EventHandle


@dataclass(frozen=True)
class ProtocolParams:
    st: float = 0.008
    alpha: float = math.radians(10.0)
    max_neighbor: int = 20
    max_radio_range: float = 366.0
    beacon_period: float = 1.0
    beacon_lifetime: float = 1.5
    beacon_jitter: float = 0.010
    msg_list_cap: int = 40
    coordinator_radius: float = 20.0
    echo_policy: str = "same-cluster"
    skip_informed: bool = True
    skip_empty: bool = True

    def __post_init__(self):
        for name in ("st", "max_neighbor", "max_radio_range", "beacon_period",
                     "beacon_lifetime", "msg_list_cap", "coordinator_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.alpha < math.pi:
            raise ValueError("alpha must lie in (0, pi)")
        if self.echo_policy not in ("same-cluster", "any-duplicate"):
            raise ValueError(f"unknown echo_policy {self.echo_policy!r}")


@dataclass(frozen=True)
class Beacon:
    beacon_id: int
    sender_id: int
    position: Vec2
    direction: Vec2
    neighbor_count: int
    cbr: float
    message_list: tuple[int, ...]


@dataclass(frozen=True)
class DataMessage:
    data_id: int
    originator_id: int
    sender_id: int
    originator_pos: Vec2
    sender_pos: Vec2
    priority_list: tuple[int, ...]


@dataclass
class NeighborEntry:
    id: int
    position: Vec2
    direction: Vec2
    neighbor_count: int
    cbr: float
    message_list: tuple[int, ...]
    last_heard: float


@dataclass
class DirectionalCluster:
    reference_vector: Vec2
    members: list[NeighborEntry] = field(default_factory=list)


# --- pure decision functions -------------------------------------------------------

def classify_clusters(self_pos: Sequence[float], neighbors: Sequence[NeighborEntry],
                      alpha: float) -> list[DirectionalCluster]:
    """Greedy vector-angle clustering in neighbor-list order.

    The first unclassified neighbor seeds a cluster and fixes its reference
    vector; later neighbors join while their angle to it is below ``alpha``.
    A neighbor at the sender's own position gets a singleton cluster.
    """
    clusters: list[DirectionalCluster] = []
    todo = list(neighbors)
    while todo:
        seed = todo[0]
        ref = Vec2(seed.position[0] - self_pos[0], seed.position[1] - self_pos[1])
        cluster = DirectionalCluster(ref, [seed])
        rest = []
        if ref.x == 0.0 and ref.y == 0.0:
            rest = todo[1:]
        else:
            for n in todo[1:]:
                v = (n.position[0] - self_pos[0], n.position[1] - self_pos[1])
                if (v[0] != 0.0 or v[1] != 0.0) and angle_between(ref, v) < alpha:
                    cluster.members.append(n)
                else:
                    rest.append(n)
        clusters.append(cluster)
        todo = rest
    return clusters


def metric_neighbors(count: int, max_neighbor: int) -> float:
    return min(count / max_neighbor, 1.0)


def metric_distance(dist: float, max_range: float) -> float:
    return min(dist / max_range, 1.0)


def _check_unit(**kw: float) -> None:
    for name, v in kw.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")


def utility_tx(n: float, d: float, cbr: float) -> float:
    """Transmission utility in ``[1, 8]``: more neighbors, farther, idler channel rank higher."""
    _check_unit(N=n, D=d, CBR=cbr)
    return (1.0 + n) * (1.0 + d) * (2.0 - cbr)


def utility_scf(d: float, cbr: float) -> float:
    """SCF-agent utility in ``[1, 4]``: closer to the uninformed vehicle, idler channel."""
    _check_unit(D=d, CBR=cbr)
    return (2.0 - d) * (2.0 - cbr)


def rebroadcast_delay(rank: int, st: float) -> float:
    if rank < 0:
        raise ValueError("rank must be >= 0")
    return st * rank


def scf_delay(burst_index: int, u_scf: float, st: float) -> float:
    if burst_index < 0:
        raise ValueError("burst_index must be >= 0")
    return st * (burst_index + (1.0 - u_scf / 4.0))


def build_priority_list(clusters: Sequence[DirectionalCluster], self_pos: Sequence[float],
                        params: ProtocolParams) -> list[int]:
    """Sort each cluster by utility (ties by id) and interleave the clusters round-robin."""
    ranked = []
    for c in clusters:
        scored = []
        for m in c.members:
            u = utility_tx(metric_neighbors(m.neighbor_count, params.max_neighbor),
                           metric_distance(distance(self_pos, m.position), params.max_radio_range),
                           min(max(m.cbr, 0.0), 1.0))
            scored.append((-u, m.id))
        scored.sort()
        ranked.append([vid for _, vid in scored])
    out = []
    depth = max((len(r) for r in ranked), default=0)
    for k in range(depth):
        for r in ranked:
            if k < len(r):
                out.append(r[k])
    return out


def missing_ids(mine, theirs, cap: int) -> list[int]:
    """Ids in ``mine`` that a neighbor advertising ``theirs`` appears to lack, ascending.

    A full list has evicted its oldest entries, so only ids above its smallest
    advertised id count as evidence of absence.
    """
    have = set(theirs)
    floor = min(have) if len(have) >= cap else -1
    return sorted(d for d in mine if d not in have and d > floor)


def is_coordinator(reported_pos: Sequence[float], road_map: RoadMap, radius: float) -> bool:
    return nearest_intersection_distance(road_map, reported_pos) < radius


def is_breaker(self_pos: Vec2, self_dir: Vec2, neighbors: Sequence[NeighborEntry],
               sender_pos: Vec2) -> bool:
    """Farthest vehicle from the sender that is still heading along the forwarding direction."""
    f = Vec2(self_pos[0] - sender_pos[0], self_pos[1] - sender_pos[1])
    if f.x == 0.0 and f.y == 0.0:
        return False
    if self_dir[0] == 0.0 and self_dir[1] == 0.0:
        return False
    if angle_between(self_dir, f) >= math.pi / 2:
        return False
    own = distance(sender_pos, self_pos)
    for n in neighbors:
        if n.direction[0] == 0.0 and n.direction[1] == 0.0:
            continue
        if distance(sender_pos, n.position) > own and angle_between(n.direction, f) < math.pi / 2:
            return False
    return True


# --- per-vehicle state machine -------------------------------------------------------

class Host(Protocol):
    """What a protocol instance needs from the simulation around it."""

    road_map: RoadMap

    def now(self) -> float: ...
    def active(self, node: int) -> bool: ...
    def position(self, node: int) -> Vec2: ...
    def direction(self, node: int) -> Vec2: ...
    def cbr(self, node: int) -> float: ...
    def access_delay(self) -> float: ...
    def backoff(self, node: int) -> float | None: ...
    def uniform(self, lo: float, hi: float) -> float: ...
    def schedule(self, delay: float, callback, *args) -> EventHandle: ...
    def cancel(self, handle: EventHandle) -> bool: ...
    def send(self, node: int, frame: Frame, cause: str) -> None: ...
    def received(self, node: int, data_id: int) -> None: ...
    def decision(self, node: int, data_id: int, action: str, cause: str) -> None: ...
    def malformed(self, node: int) -> None: ...


@dataclass
class Pending:
    handle: EventHandle
    anchor: Vec2  # sender position the schedule was derived from


class TradNode:
    """TrAD state for one vehicle; all positions are GPS-reported ones."""

    def __init__(self, node_id: int, params: ProtocolParams, host: Host) -> None:
        self.id = node_id
        self.params = params
        self.host = host
        self.neighbors: dict[int, NeighborEntry] = {}
        self.store: dict[int, DataMessage] = {}
        self.pending: dict[int, Pending] = {}
        self.scf_pending: dict[int, EventHandle] = {}
        self.coordinator = False
        self.breaker = False
        self.beacon_seq = 0

    # -- state accessors
    @property
    def scf_role(self) -> str:
        if self.coordinator:
            return "coordinator"
        if self.breaker:
            return "breaker"
        return "none"

    def live_neighbors(self) -> list[NeighborEntry]:
        now = self.host.now()
        life = self.params.beacon_lifetime
        stale = [k for k, e in self.neighbors.items() if now - e.last_heard > life]
        for k in stale:
            del self.neighbors[k]
        return list(self.neighbors.values())

    def advertised(self) -> tuple[int, ...]:
        """The most recently received ``msg_list_cap`` ids (store keeps receipt order)."""
        ids = list(self.store)
        return tuple(ids[-self.params.msg_list_cap:])

    def _refresh_coordinator(self) -> None:
        self.coordinator = is_coordinator(self.host.position(self.id), self.host.road_map,
                                          self.params.coordinator_radius)

    # -- beaconing
    def emit_beacon(self) -> Beacon:
        h = self.host
        b = Beacon(self.beacon_seq, self.id, h.position(self.id), h.direction(self.id),
                   len(self.live_neighbors()), h.cbr(self.id), self.advertised())
        self.beacon_seq += 1
        return b

    def on_beacon(self, b: Beacon) -> None:
        h = self.host
        if not _beacon_ok(b, self.params):
            h.malformed(self.id)
            return
        now = h.now()
        self.neighbors[b.sender_id] = NeighborEntry(
            b.sender_id, Vec2(*b.position), Vec2(*b.direction), b.neighbor_count, b.cbr,
            b.message_list, now)
        self._refresh_coordinator()
        if self.scf_role == "none":
            return
        missing = missing_ids(self.advertised(), b.message_list, self.params.msg_list_cap)
        if not missing:
            return
        me = h.position(self.id)
        d = metric_distance(distance(me, b.position), self.params.max_radio_range)
        u = utility_scf(d, min(max(h.cbr(self.id), 0.0), 1.0))
        k = 0
        for data_id in missing:
            if data_id in self.scf_pending or data_id in self.pending:
                continue
            delay = scf_delay(k, u, self.params.st) + h.access_delay()
            self.scf_pending[data_id] = h.schedule(delay, self._fire_scf, data_id)
            h.decision(self.id, data_id, "schedule", "scf-request")
            k += 1

    # -- data
    def originate(self, data_id: int) -> DataMessage:
        h = self.host
        me = h.position(self.id)
        msg = DataMessage(data_id, self.id, self.id, me, me, ())
        self.store[data_id] = msg
        h.received(self.id, data_id)
        self._send(msg, "origin")
        return msg

    def on_data(self, msg: DataMessage) -> None:
        h = self.host
        if msg.data_id in self.store:
            self.on_echo(msg)
        else:
            self.store[msg.data_id] = msg
            h.received(self.id, msg.data_id)
            if self.id in msg.priority_list:
                rank = msg.priority_list.index(self.id)
                delay = rebroadcast_delay(rank, self.params.st) + h.access_delay()
                handle = h.schedule(delay, self._fire_rebroadcast, msg.data_id)
                self.pending[msg.data_id] = Pending(handle, Vec2(*msg.sender_pos))
                h.decision(self.id, msg.data_id, "schedule", "priority-slot")
        self._refresh_coordinator()
        if self.coordinator:
            self.breaker = False
        else:
            self.breaker = is_breaker(h.position(self.id), h.direction(self.id),
                                      self.live_neighbors(), Vec2(*msg.sender_pos))

    def on_echo(self, msg: DataMessage) -> None:
        h = self.host
        handle = self.scf_pending.pop(msg.data_id, None)
        if handle is not None and h.cancel(handle):
            h.decision(self.id, msg.data_id, "cancel", "echo-cancel")
        pend = self.pending.get(msg.data_id)
        if pend is None:
            return
        if self.params.echo_policy == "any-duplicate" or \
                self._same_cluster(pend.anchor, Vec2(*msg.sender_pos)):
            del self.pending[msg.data_id]
            if h.cancel(pend.handle):
                h.decision(self.id, msg.data_id, "cancel", "echo-cancel")

    def _same_cluster(self, anchor: Vec2, echo_pos: Vec2) -> bool:
        me = self.host.position(self.id)
        v_self = (me[0] - anchor[0], me[1] - anchor[1])
        v_echo = (echo_pos[0] - anchor[0], echo_pos[1] - anchor[1])
        if v_self == (0.0, 0.0) or v_echo == (0.0, 0.0):
            return False
        return angle_between(v_self, v_echo) < self.params.alpha

    def _header(self, stored: DataMessage) -> DataMessage | None:
        """Rebuild the header with self as sender; None when nobody is left to serve."""
        me = self.host.position(self.id)
        everyone = self.live_neighbors()
        neigh = everyone
        if self.params.skip_informed:
            neigh = [n for n in everyone if stored.data_id not in n.message_list]
            if self.params.skip_empty and everyone and not neigh:
                return None
        plist = build_priority_list(classify_clusters(me, neigh, self.params.alpha), me,
                                    self.params) if neigh else []
        return replace(stored, sender_id=self.id, sender_pos=me, priority_list=tuple(plist))

    def _send(self, stored: DataMessage, cause: str) -> None:
        msg = self._header(stored)
        if msg is None:
            self.host.decision(self.id, stored.data_id, "suppress", "all-informed")
            return
        if cause != "origin":
            self.host.decision(self.id, stored.data_id, "transmit", cause)
        self.host.send(self.id, Frame("data", self.id, msg), cause)

    def _fire_rebroadcast(self, data_id: int) -> None:
        h = self.host
        wait = h.backoff(self.id)
        if wait is not None and data_id in self.pending:
            self.pending[data_id].handle = h.schedule(wait, self._fire_rebroadcast, data_id)
            return
        self.pending.pop(data_id, None)
        if not h.active(self.id):
            return
        self._send(self.store[data_id], "priority-slot")

    def _fire_scf(self, data_id: int) -> None:
        h = self.host
        wait = h.backoff(self.id)
        if wait is not None and data_id in self.scf_pending:
            self.scf_pending[data_id] = h.schedule(wait, self._fire_scf, data_id)
            return
        self.scf_pending.pop(data_id, None)
        if not h.active(self.id):
            return
        self._send(self.store[data_id], "scf-request")

    def on_frame(self, frame: Frame) -> None:
        if frame.kind == "beacon":
            self.on_beacon(frame.payload)
        else:
            self.on_data(frame.payload)


def _finite(v) -> bool:
    try:
        return len(v) == 2 and all(math.isfinite(c) for c in v)
    except TypeError:
        return False


def _beacon_ok(b: Beacon, params: ProtocolParams) -> bool:
    return (isinstance(b, Beacon) and _finite(b.position) and _finite(b.direction)
            and isinstance(b.neighbor_count, int) and b.neighbor_count >= 0
            and isinstance(b.cbr, (int, float)) and 0.0 <= b.cbr <= 1.0
            and len(b.message_list) <= params.msg_list_cap)
