"""``fogalloc`` command line: optimize one snapshot, run sweeps, exercise RLNC.

Data goes to stdout (or ``--out``), logs to stderr. Exit codes: 0 success,
2 invalid input, 3 infeasible constraints, 4 output not writable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import rlnc
from .allocator import AllocConstraints, InfeasibleConstraintsError, alloc_equal, alloc_opt, alloc_rate
from .model import DomainError, Strategy, download_time
from .scenario import (
    DEFAULT_SEED,
    LOAD_PRESETS,
    ConfigError,
    Injection,
    InjectionKind,
    ScenarioConfig,
    SweepParameter,
    SweepSpec,
    run_sweep,
    sample_snapshot,
    single_best_node,
)

log = logging.getLogger("fogalloc")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_UNWRITABLE = 4

ALLOCATION_COLUMNS = ("node_index", "tier", "rate_mbps", "link_ms", "load", "d_request_ms", "alpha", "t_download_s")
SWEEP_COLUMNS = ("sweep_value", "strategy", "n", "min", "q1", "median", "q3", "max", "mean", "variance")

STRATEGY_FLAGS = {"eq": Strategy.EQ, "rb": Strategy.RB, "opt": Strategy.OPT, "single": Strategy.SINGLE}

SWEEP_PARAMS = {
    "fogs": (SweepParameter.FOG_COUNT, None),
    "clouds": (SweepParameter.CLOUD_COUNT, None),
    "fog-load": (SweepParameter.FOG_LOAD_INTERVAL, None),
    "cloud-load": (SweepParameter.CLOUD_LOAD_INTERVAL, None),
    "gensize": (SweepParameter.GENERATION_SIZE, None),
    "latency-nodes": (SweepParameter.INJECTION_COUNT, InjectionKind.HIGH_LATENCY),
    "load-nodes": (SweepParameter.INJECTION_COUNT, InjectionKind.HIGH_LOAD),
    "outage-nodes": (SweepParameter.INJECTION_COUNT, InjectionKind.OUTAGE),
}

DEFAULT_VALUES = {
    "fogs": "0..10",
    "clouds": "0..10",
    "fog-load": "presets",
    "cloud-load": "presets",
    "gensize": "50,100,150,200,250,300",
    "latency-nodes": "1..5",
    "load-nodes": "1..5",
    "outage-nodes": "1..5",
}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Six significant digits, shared by CSV and JSON output."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


def num(x):
    """JSON twin of :func:`fmt`."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(f"{float(x):.6g}")


# --------------------------------------------------------------------------- parsing

def _number(token: str) -> float | int:
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        raise UsageError(f"not a number: {token!r}") from None


def parse_values(param: str, text: str) -> tuple:
    """``0..10``, ``1,2,5``, ``0.1-0.3,0.5-0.7`` or ``presets`` (load intervals)."""
    text = text.strip()
    if not text:
        raise UsageError("--values is empty")
    interval = param in ("fog-load", "cloud-load")
    if interval and text == "presets":
        return LOAD_PRESETS
    out = []
    for item in text.split(","):
        item = item.strip()
        if interval:
            parts = item.split("-")
            if len(parts) != 2:
                raise UsageError(f"load interval must look like 0.1-0.3, got {item!r}")
            lo, hi = (float(_number(p)) for p in parts)
            if not 0.0 <= lo <= hi < 1.0:
                raise UsageError(f"load interval {item!r} must satisfy 0 <= lo <= hi < 1")
            out.append((lo, hi))
        elif ".." in item:
            lo, hi = (_number(p) for p in item.split("..", 1))
            if not (isinstance(lo, int) and isinstance(hi, int)) or lo > hi:
                raise UsageError(f"bad integer range {item!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_number(item))
    if param in ("fogs", "clouds") or param.endswith("-nodes"):
        if any(not isinstance(v, int) or v < 0 for v in out):
            raise UsageError(f"--values for {param} must be non-negative integers")
    if param == "gensize" and any(v <= 0 for v in out):
        raise UsageError("generation sizes must be positive")
    if len(set(out)) != len(out):
        raise UsageError("--values contains duplicates")
    return tuple(out)


def parse_injection(text: str) -> Injection:
    """``KIND:COUNT[:TIER]`` with KIND in high_latency, high_load, outage."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected KIND:COUNT[:TIER], got {text!r}")
    try:
        return Injection(InjectionKind(parts[0]), int(parts[1]), parts[2] if len(parts) == 3 else None)
    except (ValueError, DomainError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def load_config(path: str | None, seed: int | None) -> ScenarioConfig:
    config = ScenarioConfig() if path is None else ScenarioConfig.from_json(path)
    if seed is not None:
        config = config.replace(seed=seed)
    return config


# --------------------------------------------------------------------------- optimize

def _allocations(snapshot, strategies, msr: bool):
    out = []
    for s in strategies:
        if s is Strategy.EQ:
            out.append((alloc_equal(snapshot), None))
        elif s is Strategy.RB:
            out.append((alloc_rate(snapshot), None))
        elif s is Strategy.SINGLE:
            out.append((single_best_node(snapshot), None))
        else:
            sol = alloc_opt(snapshot, AllocConstraints(msr_lower_bound=msr))
            out.append((sol.allocation, sol.t_star))
    return out


def _node_rows(snapshot, allocation) -> list[dict]:
    rows = []
    for i, (node, alpha) in enumerate(zip(snapshot.nodes, allocation.alphas)):
        spec = node.spec
        rows.append({
            "node_index": i,
            "tier": spec.tier.value,
            "rate_mbps": spec.rate_bps / 1e6,
            "link_ms": spec.link_delay_s * 1e3,
            "load": spec.load,
            "d_request_ms": node.request_delay_s * 1e3,
            "alpha": float(alpha),
            "t_download_s": download_time(node, float(alpha), snapshot.data_bits),
        })
    return rows


def cmd_optimize(args) -> int:
    config = load_config(args.config, args.seed)
    snapshot = sample_snapshot(config, args.inject, args.run)
    strategies = list(STRATEGY_FLAGS.values()) if args.strategy == "all" else [STRATEGY_FLAGS[args.strategy]]
    results = _allocations(snapshot, strategies, args.msr)

    if args.format == "json":
        doc = {
            "seed": config.seed,
            "run": args.run,
            "data_mb": num(config.data_mb),
            "allocations": [
                {
                    "strategy": alloc.strategy.value,
                    "t_total_s": num(alloc.total_time_s),
                    **({"t_star_s": num(t_star)} if t_star is not None else {}),
                    "nodes": [{k: (v if isinstance(v, str) else num(v)) for k, v in row.items()}
                              for row in _node_rows(snapshot, alloc)],
                }
                for alloc, t_star in results
            ],
        }
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for k, (alloc, _) in enumerate(results):
            if k:
                buf.write("\n")
            buf.write(f"# strategy={alloc.strategy.value} t_total_s={fmt(alloc.total_time_s)}\n")
            writer.writerow(ALLOCATION_COLUMNS)
            for row in _node_rows(snapshot, alloc):
                writer.writerow([row[c] if isinstance(row[c], str) else fmt(row[c]) for c in ALLOCATION_COLUMNS])
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------- sweep

def _value_text(value) -> str:
    if isinstance(value, tuple):
        return "-".join(fmt(v) for v in value)
    return fmt(value)


def sweep_records(result) -> list[dict]:
    records = []
    for row in result.rows:
        s = row.summary
        records.append({
            "sweep_value": row.value,
            "strategy": row.strategy,
            "n": s.n,
            "min": s.min, "q1": s.q1, "median": s.median, "q3": s.q3, "max": s.max,
            "mean": s.mean, "variance": s.variance,
            "error": row.error,
        })
    return records


def render_sweep(result, fmt_name: str) -> str:
    records = sweep_records(result)
    if fmt_name == "json":
        rows = []
        for rec in records:
            out = {"sweep_value": _value_text(rec["sweep_value"]) if isinstance(rec["sweep_value"], tuple)
                   else num(rec["sweep_value"]), "strategy": rec["strategy"]}
            out.update({c: num(rec[c]) for c in SWEEP_COLUMNS[2:]})
            if rec["error"]:
                out["error"] = rec["error"]
            rows.append(out)
        return json.dumps({"provenance": result.provenance, "rows": rows}, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for rec in records:
        writer.writerow([_value_text(rec["sweep_value"]), rec["strategy"]] + [fmt(rec[c]) for c in SWEEP_COLUMNS[2:]])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    if args.runs < 1:
        raise UsageError(f"--runs must be at least 1, got {args.runs}")
    if args.workers < 1:
        raise UsageError(f"--workers must be at least 1, got {args.workers}")
    config = load_config(args.config, args.seed)
    values = parse_values(args.param, args.values or DEFAULT_VALUES[args.param])
    parameter, kind = SWEEP_PARAMS[args.param]
    strategies = [STRATEGY_FLAGS[s.strip()] for s in args.strategies.split(",") if s.strip()]
    spec = SweepSpec(parameter, values, args.runs, config, kind, tuple(args.inject))

    sink = None
    if args.out:
        try:
            sink = open(args.out, "w", encoding="utf-8", newline="")
        except OSError as exc:
            log.error("cannot write %s: %s", args.out, exc.strerror or exc)
            return EXIT_UNWRITABLE
    start = time.perf_counter()
    try:
        result = run_sweep(spec, strategies, workers=args.workers)
        text = render_sweep(result, args.format)
    except BaseException:
        if sink is not None:
            sink.close()
            Path(args.out).unlink(missing_ok=True)
        raise
    if sink is None:
        sys.stdout.write(text)
    else:
        with sink:
            sink.write(text)
    elapsed = time.perf_counter() - start
    log.info("wrote %s (%d rows) in %.2f s", args.out or "<stdout>", len(result.rows), elapsed)
    return EXIT_OK


# --------------------------------------------------------------------------- rlnc

def cmd_rlnc(args) -> int:
    if args.packets < 1 or args.size < 1:
        raise UsageError("--packets and --size must be at least 1")
    if args.extra < 0 or args.trials < 0 or args.trial_bytes < 1:
        raise UsageError("--extra and --trials must be non-negative, --trial-bytes positive")
    if args.packets > 0xFFFF:
        raise UsageError("--packets must fit the 16-bit header")
    field = rlnc.field_for_size(args.field)
    demo_rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(0,)))
    generation = rlnc.Generation.random(args.packets, args.size, demo_rng, field)
    coded = rlnc.encode(generation, args.packets + args.extra, demo_rng)
    result = rlnc.decode(coded, args.packets, field)
    report = {
        "packets": args.packets,
        "packet_bytes": args.size,
        "field_size": field.order,
        "polynomial": f"{field.poly:#x}",
        "coded_packets": len(coded),
        "rank": result.rank,
        "success": result.success,
        "recovered_identical": bool(result.success and result.generation == generation),
    }
    if args.emit_dir:
        out = Path(args.emit_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            for i, pkt in enumerate(coded):
                (out / f"packet_{i:05d}.bin").write_bytes(pkt.to_bytes())
        except OSError as exc:
            log.error("cannot write packets to %s: %s", out, exc.strerror or exc)
            return EXIT_UNWRITABLE
        report["emitted_to"] = str(out)
    if args.trials:
        trial_rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(1,)))
        stats = rlnc.run_trials(args.packets, field, args.trials, trial_rng, args.extra, args.trial_bytes)
        analytic = rlnc.full_rank_probability(args.packets, field.q, args.extra)
        report.update({
            "trials": stats.trials,
            "full_rank": stats.full_rank,
            "verified": stats.verified,
            "empirical_rate": num(stats.rate),
            "analytic_rate": num(analytic),
            "difference_pp": num(100.0 * (stats.rate - analytic)),
        })
    sys.stdout.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fogalloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("config", nargs="?", help="scenario JSON (default: reference scenario)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--inject", type=parse_injection, action="append", default=[],
                       metavar="KIND:COUNT[:TIER]", help="degrade nodes, e.g. outage:3:fog (repeatable)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("optimize", help="allocate one snapshot")
    scenario_args(p)
    p.add_argument("--strategy", choices=(*STRATEGY_FLAGS, "all"), default="all")
    p.add_argument("--msr", action="store_true", help="require the MSR per-node lower bound")
    p.add_argument("--run", type=int, default=0, help="run index selecting the snapshot")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over one parameter")
    scenario_args(p)
    p.add_argument("--param", choices=tuple(SWEEP_PARAMS), required=True)
    p.add_argument("--values", default=None, help="e.g. 0..10, 1,2,5 or 0.1-0.3,0.3-0.5 or presets")
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--strategies", default="eq,rb,opt")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rlnc", help="encode/decode one generation and estimate decodability")
    p.add_argument("--packets", type=int, default=16, help="generation size M")
    p.add_argument("--size", type=int, default=1024, help="packet size in bytes")
    p.add_argument("--field", type=int, choices=(2, 16, 256), default=256)
    p.add_argument("--extra", type=int, default=0, help="coded packets beyond M")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo trials of the full-rank rate")
    p.add_argument("--trial-bytes", type=int, default=8, help="payload bytes per packet in trials")
    p.add_argument("--emit-dir", default=None, help="write each coded packet to DIR/packet_NNNNN.bin")
    p.set_defaults(func=cmd_rlnc)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is not None and args.seed < 0:
        log.error("--seed must be non-negative")
        return EXIT_INVALID
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_INVALID
    except InfeasibleConstraintsError as exc:
        log.error("%s", exc)
        return EXIT_INFEASIBLE
    except (UsageError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
