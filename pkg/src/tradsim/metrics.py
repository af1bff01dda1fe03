"""Event log and the evaluation quantities computed from it.

Every metric is a pure function of the :class:`EventLog`, so recomputing
from a persisted trace reproduces the live report exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .radio import TxRecord
from .simcore import to_s

TRACE_COLUMNS = ("time_us", "record", "node", "kind", "data_id", "delivered", "collided", "cause")


@dataclass(frozen=True)
class ReceptionRecord:
    data_id: int
    receiver: int
    first_reception_time: float
    origination_time: float


@dataclass
class EventLog:
    scenario_kind: str = "urban"          # "urban" | "highway"
    tx: list[TxRecord] = field(default_factory=list)
    origins: dict[int, int] = field(default_factory=dict)
    receptions: dict[tuple[int, int], int] = field(default_factory=dict)
    activity: dict[int, list] = field(default_factory=dict)   # node -> [start_us, end_us | None]
    fixed: dict[int, str] = field(default_factory=dict)        # node -> "source" | "receiver"
    decisions: list[tuple[int, int, int, str, str]] = field(default_factory=list)
    malformed: int = 0
    end: int = 0
    rows: list[tuple] = field(default_factory=list)

    # -- appenders (the live simulation calls these in event order)
    def _row(self, *r) -> None:
        self.rows.append(r)

    def add_fixed(self, t: int, node: int, role: str) -> None:
        self.fixed[node] = role
        self.activity[node] = [t, None]
        self._row(t, "fixed", node, role, -1, 0, 0, "")

    def activate(self, t: int, node: int) -> None:
        self.activity[node] = [t, None]
        self._row(t, "activate", node, "", -1, 0, 0, "")

    def deactivate(self, t: int, node: int) -> None:
        self.activity[node][1] = t
        self._row(t, "deactivate", node, "", -1, 0, 0, "")

    def originate(self, t: int, node: int, data_id: int) -> None:
        self.origins[data_id] = t
        self._row(t, "origin", node, "", data_id, 0, 0, "")

    def receive(self, t: int, node: int, data_id: int) -> None:
        key = (data_id, node)
        if key not in self.receptions:
            self.receptions[key] = t
            self._row(t, "rx", node, "", data_id, 0, 0, "")

    def transmit(self, rec: TxRecord) -> None:
        self.tx.append(rec)
        self._row(rec.time, "tx", rec.sender, rec.kind, rec.data_id, rec.delivered, rec.collided, rec.cause)

    def decision(self, t: int, node: int, data_id: int, action: str, cause: str) -> None:
        self.decisions.append((t, node, data_id, action, cause))
        self._row(t, "decision", node, action, data_id, 0, 0, cause)

    def drop_malformed(self, t: int, node: int) -> None:
        self.malformed += 1
        self._row(t, "malformed", node, "", -1, 0, 0, "")

    def finish(self, t: int) -> None:
        self.end = t
        self._row(t, "end", -1, self.scenario_kind, -1, 0, 0, "")

    # -- queries
    def mobile_nodes(self) -> list[int]:
        return [n for n in self.activity if n not in self.fixed]

    def receiver_node(self) -> int | None:
        for n, role in self.fixed.items():
            if role == "receiver":
                return n
        return None

    def reception_records(self) -> list[ReceptionRecord]:
        return [ReceptionRecord(d, r, to_s(t), to_s(self.origins[d]))
                for (d, r), t in self.receptions.items() if d in self.origins]

    # -- persistence
    def write_trace(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            w.writerows(self.rows)

    @classmethod
    def read_trace(cls, path: str | Path) -> "EventLog":
        return cls.parse_trace(Path(path).read_text())

    @classmethod
    def parse_trace(cls, text: str) -> "EventLog":
        log = cls()
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError("not a tradsim trace file")
        for t, rec, node, kind, data_id, delivered, collided, cause in reader:
            t, node, data_id = int(t), int(node), int(data_id)
            if rec == "fixed":
                log.add_fixed(t, node, kind)
            elif rec == "activate":
                log.activate(t, node)
            elif rec == "deactivate":
                log.deactivate(t, node)
            elif rec == "origin":
                log.originate(t, node, data_id)
            elif rec == "rx":
                log.receive(t, node, data_id)
            elif rec == "tx":
                log.transmit(TxRecord(t, node, kind, data_id, int(delivered), int(collided), cause))
            elif rec == "decision":
                log.decision(t, node, data_id, kind, cause)
            elif rec == "malformed":
                log.drop_malformed(t, node)
            elif rec == "end":
                log.scenario_kind = kind
                log.finish(t)
            else:
                raise ValueError(f"unknown trace record {rec!r}")
        return log


# --- metrics --------------------------------------------------------------------

def _eligible(log: EventLog, t0: int) -> list[int]:
    out = []
    for n in log.mobile_nodes():
        start, stop = log.activity[n]
        if start <= log.end and (stop is None or stop >= t0):
            out.append(n)
    return out


def compute_pdr(log: EventLog, scenario_kind: str | None = None) -> float | None:
    """Urban: mean per-message informed share of eligible vehicles.
    Highway: share of messages that reached the fixed receiver."""
    kind = scenario_kind or log.scenario_kind
    if not log.origins:
        return None
    if kind == "highway":
        rx = log.receiver_node()
        if rx is None:
            return None
        got = sum(1 for d in log.origins if (d, rx) in log.receptions)
        return got / len(log.origins)
    ratios = []
    for d, t0 in log.origins.items():
        elig = _eligible(log, t0)
        if not elig:
            continue
        informed = sum(1 for n in elig if (d, n) in log.receptions)
        ratios.append(informed / len(elig))
    if not ratios:
        return None
    return float(np.mean(ratios))


def delay_samples(log: EventLog, scenario_kind: str | None = None) -> np.ndarray:
    kind = scenario_kind or log.scenario_kind
    if kind == "highway":
        targets = {log.receiver_node()}
    else:
        targets = set(log.mobile_nodes())
    out = [t - log.origins[d] for (d, n), t in log.receptions.items()
           if n in targets and d in log.origins]
    return np.asarray(out, dtype=np.int64)


def compute_delay(log: EventLog, scenario_kind: str | None = None) -> tuple[float, float] | None:
    """Mean and 95th percentile (seconds) of first-reception delay over received pairs."""
    s = delay_samples(log, scenario_kind)
    if s.size == 0:
        return None
    sec = s / 1e6
    return float(sec.mean()), float(np.percentile(sec, 95))


def coverage_curve(log: EventLog, data_id: int, sample_period: float = 0.5) -> list[tuple[float, float]]:
    """Informed share of the currently active mobile vehicles, sampled from origination.

    Non-decreasing while the population is fixed; dips when uninformed vehicles
    enter. No active vehicles at a sample gives 0.
    """
    t0 = log.origins[data_id]
    step = int(round(sample_period * 1e6))
    never = np.iinfo(np.int64).max
    nodes = log.mobile_nodes()
    start = np.array([log.activity[n][0] for n in nodes], dtype=np.int64)
    stop = np.array([never if log.activity[n][1] is None else log.activity[n][1] for n in nodes],
                    dtype=np.int64)
    got = np.array([log.receptions.get((data_id, n), never) for n in nodes], dtype=np.int64)
    out = []
    t = t0
    while t <= log.end:
        act = (start <= t) & (t < stop)
        n_act = int(act.sum())
        frac = float((act & (got <= t)).sum() / n_act) if n_act else 0.0
        out.append((to_s(t), frac))
        t += step
    return out


def time_to_coverage(curve: list[tuple[float, float]], level: float) -> float | None:
    """Seconds from the first sample until the curve first reaches ``level``."""
    if not curve:
        return None
    t0 = curve[0][0]
    for t, f in curve:
        if f >= level:
            return t - t0
    return None


def count_transmissions(log: EventLog) -> int:
    return sum(1 for r in log.tx if r.kind == "data")


def count_beacons(log: EventLog) -> int:
    return sum(1 for r in log.tx if r.kind == "beacon")


def transmissions_per_message(log: EventLog) -> dict[int, int]:
    out = {d: 0 for d in log.origins}
    for r in log.tx:
        if r.kind == "data":
            out[r.data_id] = out.get(r.data_id, 0) + 1
    return out


# --- report ---------------------------------------------------------------------

REPORT_COLUMNS = ("scenario", "protocol", "pattern", "density", "flow", "drift", "seed",
                  "pdr", "tx_count", "beacon_count", "mean_delay", "delay_p95",
                  "n_messages", "n_vehicles", "malformed")


@dataclass
class Report:
    pdr: float | None
    tx_count: int
    beacon_count: int
    mean_delay: float | None
    delay_p95: float | None
    n_messages: int
    n_vehicles: int
    malformed: int
    coverage: dict[int, list[tuple[float, float]]] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int = 0

    def row(self) -> dict:
        c = self.config
        return {
            "scenario": c.get("scenario", ""), "protocol": c.get("protocol", ""),
            "pattern": c.get("pattern", ""), "density": c.get("density", ""),
            "flow": c.get("flow", ""), "drift": c.get("drift", ""), "seed": self.seed,
            "pdr": self.pdr, "tx_count": self.tx_count, "beacon_count": self.beacon_count,
            "mean_delay": self.mean_delay, "delay_p95": self.delay_p95,
            "n_messages": self.n_messages, "n_vehicles": self.n_vehicles,
            "malformed": self.malformed,
        }


def build_report(log: EventLog, config: dict | None = None, seed: int = 0,
                 sample_period: float = 0.5, coverage_ids=None) -> Report:
    delay = compute_delay(log)
    ids = sorted(log.origins) if coverage_ids is None else coverage_ids
    return Report(
        pdr=compute_pdr(log),
        tx_count=count_transmissions(log),
        beacon_count=count_beacons(log),
        mean_delay=None if delay is None else delay[0],
        delay_p95=None if delay is None else delay[1],
        n_messages=len(log.origins),
        n_vehicles=len(log.mobile_nodes()),
        malformed=log.malformed,
        coverage={d: coverage_curve(log, d, sample_period) for d in ids},
        config=dict(config or {}),
        seed=seed,
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_reports(reports, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            row = r.row()
            w.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])


def write_coverage(curve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("time", "fraction"))
        for t, f in curve:
            w.writerow((repr(t), repr(f)))
