"""Command line front end: ``tradsim run | sweep | validate``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .config import AXES, PROTOCOLS, ConfigError, ScenarioConfig, SweepSpec
from .metrics import write_coverage, write_reports
from .scenario import emit_plot_data, run_scenario, run_sweep

log = logging.getLogger("tradsim")


def _load(path: str | None) -> ScenarioConfig:
    if path is None:
        return cfgmod.validate(ScenarioConfig())
    return cfgmod.validate(cfgmod.load(path))


def _protocols(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    names = tuple(p.strip() for p in text.split(",") if p.strip())
    for p in names:
        if p not in PROTOCOLS:
            raise ConfigError("protocol", f"unknown protocol {p!r}; expected one of {PROTOCOLS}")
    return names


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    protos = _protocols(args.protocol) or (cfg.protocol,)
    nseeds = args.seeds or 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for proto in protos:
        for k in range(nseeds):
            run_cfg = dataclasses.replace(cfg, protocol=proto, seed=cfg.seed + k)
            tag = "" if len(protos) == 1 and nseeds == 1 else f"_{proto}_s{run_cfg.seed}"
            trace = out / f"trace{tag}.csv" if args.trace else None
            rep = run_scenario(run_cfg, trace_path=trace)
            reports.append(rep)
            for data_id, curve in rep.coverage.items():
                write_coverage(curve, out / f"coverage{tag}_{data_id}.csv")
            log.info("%s seed %d: pdr=%s tx=%d", proto, run_cfg.seed, rep.pdr, rep.tx_count)
    write_reports(reports, out / "report.csv")
    return 0


def cmd_sweep(args) -> int:
    base = _load(args.config)
    if args.seed is not None:
        base = dataclasses.replace(base, seed=args.seed)
    values = tuple(float(v) for v in args.values.split(",")) if args.values else ()
    spec = SweepSpec(base=base, axis=args.axis, values=values,
                     seeds=args.seeds or base.repetitions, protocols=_protocols(args.protocol))
    reports = run_sweep(spec, jobs=args.jobs)
    if not reports:
        print("error: every run in the sweep failed", file=sys.stderr)
        return 1
    for f in emit_plot_data(reports, args.out):
        log.info("wrote %s", f)
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    print(f"ok: {cfg.name} ({cfg.scenario_kind}, protocol {cfg.protocol})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tradsim", description="Vehicular data dissemination simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, seeds_help):
        p.add_argument("--config", help="YAML scenario file (defaults if omitted)")
        p.add_argument("--seed", type=int, help="root seed override")
        p.add_argument("--seeds", type=int, help=seeds_help)
        p.add_argument("--protocol", help=f"comma list from {', '.join(PROTOCOLS)}")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("run", help="run one scenario")
    common(p, "consecutive seeds to run (default 1)")
    p.add_argument("--trace", action="store_true", help="also write trace.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep density, flow or drift")
    common(p, "seeds per point (default: config repetitions)")
    p.add_argument("--axis", choices=tuple(AXES), default="density")
    p.add_argument("--values", help="comma list overriding the axis levels")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
