"""Scenario assembly: wires map, mobility, radio, protocol and metrics into
one deterministic run, plus sweeps and plot-data aggregation."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .baselines import FloodingNode, Slotted1PNode
from .config import ConfigError, ScenarioConfig, SweepSpec
from .geo import RoadMap, Vec2, build_grid_map, build_highway_map, distance, load_map
from .metrics import EventLog, Report, build_report, write_coverage, write_reports
from .mobility import (DepartureProcess, Fleet, Route, assign_route, departure_schedule)
from .radio import Channel, Frame, csma_access_delay
from .simcore import Simulator, derive_rng, to_us
from .trad import TradNode

log = logging.getLogger(__name__)

SIZING_SAMPLES = 200


def make_map(cfg: ScenarioConfig) -> RoadMap:
    spec = cfg.map
    if spec.kind == "grid":
        return build_grid_map(spec.grid, derive_rng(cfg.seed, "map"))
    if spec.kind == "highway":
        return build_highway_map(spec.highway)
    return load_map(spec.path)


def source_position(road_map: RoadMap) -> Vec2:
    """Urban: the intersection nearest the map centre. Highway: the west end."""
    if road_map.kind == "highway":
        return Vec2(road_map.bounds[0], road_map.segments[0].a.y)
    if not road_map.intersections:
        raise ConfigError("map", "urban scenario needs at least one intersection")
    c = road_map.center
    return min(road_map.intersections, key=lambda p: (distance(p, c), p))


class World:
    """One simulation run. Also the protocols' :class:`~tradsim.trad.Host`."""

    def __init__(self, cfg: ScenarioConfig, road_map: RoadMap | None = None) -> None:
        cfgmod.validate(cfg)
        self.cfg = cfg
        self.road_map = road_map if road_map is not None else make_map(cfg)
        self.sim = Simulator()
        self.fleet = Fleet()
        self.log = EventLog(scenario_kind=cfg.scenario_kind)
        self.channel = Channel(self.sim, cfg.radio, self.road_map, self.fleet,
                               self._deliver, self.log.transmit)
        seed = cfg.seed
        self.rng = {name: derive_rng(seed, name) for name in
                    ("departures", "routes", "speeds", "drift", "jitter", "beacons", "sizing", "initial")}
        self.nodes: dict = {}
        self.source: int | None = None
        self.receiver: int | None = None
        self._next_data_id = 0
        self.beacons_from = to_us(max(cfg.warmup - cfg.beacon_lead, 0.0))

    # --- Host interface --------------------------------------------------------
    def now(self) -> float:
        return self.sim.now / 1e6

    def active(self, node: int) -> bool:
        return bool(self.fleet.active[node])

    def position(self, node: int) -> Vec2:
        return self.fleet.reported(node)

    def direction(self, node: int) -> Vec2:
        return self.fleet.direction(node)

    def cbr(self, node: int) -> float:
        return self.channel.cbr(node)

    def access_delay(self) -> float:
        return csma_access_delay(self.cfg.radio, self.rng["jitter"])

    def backoff(self, node: int) -> float | None:
        """Carrier sense: seconds to wait if ``node`` hears an ongoing frame, else None."""
        if not self.cfg.carrier_sense:
            return None
        end = self.channel.busy_until(node)
        if end is None:
            return None
        return (end - self.sim.now) / 1e6 + self.access_delay()

    def uniform(self, lo: float, hi: float) -> float:
        return float(self.rng["jitter"].uniform(lo, hi))

    def schedule(self, delay: float, callback, *args):
        return self.sim.call_later(to_us(delay), callback, *args)

    def cancel(self, handle) -> bool:
        return self.sim.cancel(handle)

    def send(self, node: int, frame: Frame, cause: str = "") -> None:
        if self.fleet.active[node]:
            self.channel.transmit(frame, cause)

    def received(self, node: int, data_id: int) -> None:
        self.log.receive(self.sim.now, node, data_id)

    def decision(self, node: int, data_id: int, action: str, cause: str) -> None:
        self.log.decision(self.sim.now, node, data_id, action, cause)

    def malformed(self, node: int) -> None:
        self.log.drop_malformed(self.sim.now, node)

    # --- wiring -------------------------------------------------------------------
    def _deliver(self, node: int, frame: Frame) -> None:
        self.nodes[node].on_frame(frame)

    def make_protocol(self, vid: int):
        cfg = self.cfg
        if cfg.protocol == "trad":
            return TradNode(vid, cfg.trad, self)
        if cfg.protocol == "flooding":
            return FloodingNode(vid, cfg.flooding, self)
        return Slotted1PNode(vid, cfg.slotted1p, self)

    def add_fixed(self, p: Vec2, role: str, heading: Vec2 = Vec2(0.0, 0.0)) -> int:
        vid = self.fleet.add_fixed(p)
        self.fleet.heading[vid] = heading
        self.log.add_fixed(self.sim.now, vid, role)
        self.nodes[vid] = self.make_protocol(vid)
        self._start_beacons(vid)
        return vid

    def add_vehicle(self, route: Route, speed: float, odometer: float = 0.0) -> int:
        vid = self.fleet.add(route, speed, odometer)
        self.log.activate(self.sim.now, vid)
        self.nodes[vid] = self.make_protocol(vid)
        self._start_beacons(vid)
        return vid

    def _start_beacons(self, vid: int) -> None:
        if self.cfg.protocol != "trad":
            return
        first = max(self.sim.now, self.beacons_from)
        phase = to_us(float(self.rng["beacons"].uniform(0.0, self.cfg.trad.beacon_period)))
        self.sim.call_at(first + phase, self._beacon_tick, vid, kind="beacon-tick", target=vid)

    def _beacon_tick(self, vid: int) -> None:
        if not self.fleet.active[vid]:
            return
        p = self.cfg.trad
        self.sim.call_later(to_us(self.access_delay()), self._beacon_send, vid, target=vid)
        nxt = p.beacon_period + float(self.rng["beacons"].uniform(-p.beacon_jitter, p.beacon_jitter))
        self.sim.call_later(to_us(nxt), self._beacon_tick, vid, kind="beacon-tick", target=vid)

    def _beacon_send(self, vid: int) -> None:
        if not self.fleet.active[vid]:
            return
        wait = self.backoff(vid)
        if wait is not None:
            self.sim.call_later(to_us(wait), self._beacon_send, vid, target=vid)
            return
        b = self.nodes[vid].emit_beacon()
        self.channel.transmit(Frame("beacon", vid, b), "beacon")

    # --- traffic -----------------------------------------------------------------
    def _patterns(self) -> list[str]:
        if self.cfg.scenario_kind == "highway":
            return ["highway-west-to-east", "highway-east-to-west"]
        if self.cfg.traffic == "confined":
            return ["upper-confined", "lower-confined"]
        return ["uniform-crossing"]

    def _speed_range(self) -> tuple[float, float]:
        return self.cfg.highway_speed if self.cfg.scenario_kind == "highway" else self.cfg.urban_speed

    def draw_trip(self, rng_routes, rng_speeds) -> tuple[Route, float]:
        pats = self._patterns()
        pat = pats[int(rng_routes.integers(0, len(pats)))] if len(pats) > 1 else pats[0]
        route = assign_route(self.road_map, pat, rng_routes)
        lo, hi = self._speed_range()
        return route, float(rng_speeds.uniform(lo, hi))

    def departure_process(self) -> tuple[DepartureProcess, float, float]:
        """Departure rate plus mean and max trip durations from sampled trips."""
        cfg = self.cfg
        rs = derive_rng(cfg.seed, "sizing")
        trips = [self.draw_trip(rs, rs) for _ in range(SIZING_SAMPLES)]
        durations = np.array([r.length / v for r, v in trips])
        mean_t = float(durations.mean())
        if cfg.scenario_kind == "highway":
            proc = DepartureProcess.from_flow(cfg.flow)
        else:
            proc = DepartureProcess.from_density(cfg.density, self.road_map.area_km2, mean_t)
        return proc, mean_t, float(durations.max())

    def populate(self) -> None:
        cfg = self.cfg
        proc, mean_t, max_t = self.departure_process()
        if proc.rate <= 0:
            return
        # stationary start: Poisson count, trips length-biased by duration, uniform progress
        init = self.rng["initial"]
        n0 = int(init.poisson(proc.rate * mean_t))
        placed = 0
        while placed < n0:
            route, speed = self.draw_trip(init, init)
            if init.random() * max_t * 1.5 > route.length / speed:
                continue
            self.add_vehicle(route, speed, float(init.uniform(0.0, route.length)))
            placed += 1
        for t in departure_schedule(proc, cfg.sim_duration - cfg.drain, self.rng["departures"]):
            self.sim.call_at(to_us(t), self._depart, kind="vehicle-departure")

    def _depart(self) -> None:
        route, speed = self.draw_trip(self.rng["routes"], self.rng["speeds"])
        self.add_vehicle(route, speed)

    def _mobility_tick(self, step_us: int) -> None:
        for vid in self.fleet.step(step_us / 1e6):
            self.log.deactivate(self.sim.now, int(vid))
        self.sim.call_later(step_us, self._mobility_tick, step_us, kind="mobility")

    def _drift_tick(self, period_us: int) -> None:
        self.fleet.resample_drift(self.cfg.drift.deviation, self.rng["drift"])
        self.sim.call_later(period_us, self._drift_tick, period_us, kind="drift")

    # --- data ------------------------------------------------------------------------
    def originate(self, node: int | None = None) -> int:
        node = self.source if node is None else node
        data_id = self._next_data_id
        self._next_data_id += 1
        self.log.originate(self.sim.now, node, data_id)
        self.sim.call_later(to_us(self.access_delay()), self._originate_send, node, data_id)
        return data_id

    def _originate_send(self, node: int, data_id: int) -> None:
        wait = self.backoff(node)
        if wait is not None:
            self.sim.call_later(to_us(wait), self._originate_send, node, data_id)
            return
        self.nodes[node].originate(data_id)

    def _data_tick(self, period_us: int, stop_us: int) -> None:
        cap = self.cfg.max_messages
        if self.sim.now >= stop_us or (cap and self._next_data_id >= cap):
            return
        self.originate()
        self.sim.call_later(period_us, self._data_tick, period_us, stop_us, kind="timer")

    def setup(self) -> None:
        cfg = self.cfg
        src = source_position(self.road_map)
        self.source = self.add_fixed(src, "source")
        if cfg.scenario_kind == "highway":
            seg = self.road_map.segments[0]
            self.receiver = self.add_fixed(Vec2(self.road_map.bounds[2], seg.a.y), "receiver")
        self.populate()
        step = to_us(cfg.mobility_step)
        self.sim.call_at(step, self._mobility_tick, step, kind="mobility")
        if cfg.drift.deviation > 0:
            self.sim.call_at(0, self._drift_tick, to_us(cfg.drift.resample_period), kind="drift")
        stop = to_us(cfg.sim_duration - cfg.drain)
        self.sim.call_at(to_us(cfg.warmup), self._data_tick, to_us(cfg.data_period), stop)

    def run(self) -> EventLog:
        self.sim.run(to_us(self.cfg.sim_duration))
        self.log.finish(self.sim.now)
        return self.log


def simulate(cfg: ScenarioConfig) -> EventLog:
    world = World(cfg)
    world.setup()
    return world.run()


def run_scenario(cfg: ScenarioConfig, trace_path: str | Path | None = None) -> Report:
    event_log = simulate(cfg)
    if trace_path is not None:
        event_log.write_trace(trace_path)
    return build_report(event_log, cfg.echo(), cfg.seed, cfg.coverage_period)


# --- sweeps ------------------------------------------------------------------------

def sweep_configs(spec: SweepSpec) -> list[tuple[float, ScenarioConfig]]:
    out = []
    for value in spec.axis_values():
        for proto in spec.protocol_list():
            for k in range(spec.seeds):
                cfg = cfgmod.apply_axis(spec.base, spec.axis, value)
                cfg = dataclasses.replace(cfg, protocol=proto, seed=spec.base.seed + k)
                out.append((value, cfg))
    return out


def _run_one(cfg: ScenarioConfig) -> Report | None:
    try:
        return run_scenario(cfg)
    except (ConfigError, ValueError) as exc:
        log.warning("run %s seed %s failed: %s", cfg.protocol, cfg.seed, exc)
        return None


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[Report]:
    """One report per (axis value, protocol, seed); failed runs are logged and skipped."""
    cfgmod.validate_sweep(spec)
    todo = sweep_configs(spec)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, [c for _, c in todo]))
    else:
        results = [_run_one(c) for _, c in todo]
    reports = []
    for (value, _), rep in zip(todo, results):
        if rep is None:
            continue
        rep.config["axis"] = spec.axis
        rep.config["axis_value"] = value
        reports.append(rep)
    return reports


PLOT_COLUMNS = ("protocol", "axis", "value", "seeds",
                "pdr_mean", "pdr_std", "tx_mean", "tx_std", "delay_mean", "delay_std")


def _mean_std(xs) -> tuple[float | None, float | None]:
    vals = [x for x in xs if x is not None]
    if not vals:
        return None, None
    a = np.asarray(vals, dtype=float)
    return float(a.mean()), float(a.std())


def aggregate(reports: list[Report]) -> list[dict]:
    groups: dict[tuple, list[Report]] = {}
    for r in reports:
        key = (r.config.get("protocol", ""), r.config.get("axis", ""), r.config.get("axis_value", ""))
        groups.setdefault(key, []).append(r)
    rows = []
    for (proto, axis, value), reps in groups.items():
        pm, ps = _mean_std(r.pdr for r in reps)
        tm, ts = _mean_std(r.tx_count for r in reps)
        dm, ds = _mean_std(r.mean_delay for r in reps)
        rows.append({"protocol": proto, "axis": axis, "value": value, "seeds": len(reps),
                     "pdr_mean": pm, "pdr_std": ps, "tx_mean": tm, "tx_std": ts,
                     "delay_mean": dm, "delay_std": ds})
    return rows


def emit_plot_data(reports: list[Report], path: str | Path) -> list[Path]:
    """Write ``report.csv`` (all runs), ``plot_<axis>.csv`` (mean/std per point) and,
    for drift sweeps, seed-averaged ``coverage_drift<value>.csv`` curves."""
    if not reports:
        raise ValueError("no reports to emit")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.csv"]
    write_reports(reports, written[0])
    rows = aggregate(reports)
    axis = rows[0]["axis"] or "run"
    plot = out / f"plot_{axis}.csv"
    with open(plot, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for r in rows:
            w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                        for c in PLOT_COLUMNS])
    written.append(plot)
    if axis == "drift":
        by_value: dict = {}
        for r in reports:
            if r.coverage:
                first = min(r.coverage)
                by_value.setdefault((r.config["protocol"], r.config["axis_value"]), []).append(r.coverage[first])
        for (proto, value), curves in by_value.items():
            n = min(len(c) for c in curves)
            times = [curves[0][i][0] - curves[0][0][0] for i in range(n)]
            mean = np.mean([[c[i][1] for i in range(n)] for c in curves], axis=0)
            f = out / f"coverage_{proto}_drift{value:g}.csv"
            write_coverage(list(zip(times, mean.tolist())), f)
            written.append(f)
    return written
