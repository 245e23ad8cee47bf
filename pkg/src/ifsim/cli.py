"""Command-line entry point: experiment commands and figure-data generation.

Configuration is JSON; results are CSV plus a JSON run manifest.  Exit
codes: 0 success, 1 configuration error (the diagnostic names the
offending key or path), 2 runtime failure (the diagnostic names the
failing trial).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from ifsim import __version__, sim
from ifsim.coeff_opt import SearchConfig
from ifsim.oracle import OracleBound
from ifsim.sim import SimConfig, SimResult, TrialFailure


class ConfigError(Exception):
    pass


_SEARCH_KEYS = {"w", "r_max", "factor_bound", "sdp_tol", "delta", "max_iters"}
_ORACLE_KEYS = {"factor_bound", "a_bound", "c_bound"}
_TOP_KEYS = {
    "K", "Nt", "Nr", "rho2", "snr_grid_db", "trials", "seed", "schemes",
    "target_rate", "rt_grid", "nr_variants", "search", "oracle",
}


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return raw


def apply_overrides(raw: dict, overrides) -> dict:
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, _, value = item.partition("=")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        target = raw
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"override key '{key}' indexes into a non-object")
        target[parts[-1]] = parsed
    return raw


def build_sim_config(raw: dict) -> SimConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    search_raw = raw.get("search", {})
    bad = set(search_raw) - _SEARCH_KEYS
    if bad:
        raise ConfigError(f"unknown search key(s): {sorted(bad)}")
    oracle_raw = raw.get("oracle", {})
    bad = set(oracle_raw) - _ORACLE_KEYS
    if bad:
        raise ConfigError(f"unknown oracle key(s): {sorted(bad)}")
    try:
        search = SearchConfig(**search_raw)
        bound = OracleBound(**oracle_raw)
        cfg = SimConfig(
            K=int(raw.get("K", 3)),
            Nt=raw.get("Nt", 1),
            Nr=raw.get("Nr", 1),
            rho2=raw.get("rho2", 1.0),
            snr_grid_db=tuple(float(s) for s in raw.get("snr_grid_db", (0, 5, 10, 15, 20, 25, 30))),
            trials=int(raw.get("trials", 1000)),
            seed=int(raw.get("seed", 1)),
            schemes=tuple(raw.get("schemes", ("ifmr", "mmse", "zf"))),
            search=search,
            oracle_bound=bound,
            target_rate=float(raw.get("target_rate", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration value: {exc}") from exc
    return cfg


def _write_outputs(out: str, csv_text: str, manifest: dict):
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(csv_text)
    stem = out[:-4] if out.endswith(".csv") else out
    Path(stem + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _variants(raw: dict):
    """Expand nr_variants into (label, config-dict) pairs."""
    variants = raw.get("nr_variants")
    base = {k: v for k, v in raw.items() if k != "nr_variants"}
    if not variants:
        return [("", base)]
    out = []
    for nr in variants:
        item = dict(base)
        item["Nr"] = nr
        out.append((f"_nr{nr}", item))
    return out


def _run_sweep(raw: dict, args, manifest_extra=None) -> int:
    started = time.time()
    outputs = []
    manifests = {}
    for label, cfg_raw in _variants(raw):
        cfg = build_sim_config(cfg_raw)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        result = sim.run(cfg, workers=args.threads,
                         log=lambda msg: print(msg, file=sys.stderr))
        out = args.out
        if label:
            stem = out[:-4] if out.endswith(".csv") else out
            out = f"{stem}{label}.csv"
        manifest = result.manifest()
        manifest["overrides"] = list(args.set or [])
        if manifest_extra:
            manifest.update(manifest_extra(result))
        _write_outputs(out, result.to_csv(), manifest)
        outputs.append(out)
        manifests[out] = manifest
    print(f"wrote {', '.join(outputs)} ({time.time() - started:.1f} s)")
    return 0


def cmd_rate_sweep(raw, args):
    return _run_sweep(raw, args)


def cmd_convergence(raw, args):
    if "ifmr" not in raw.get("schemes", ("ifmr",)):
        raise ConfigError("convergence requires the 'ifmr' scheme (key: schemes)")
    raw.setdefault("schemes", ["ifmr"])
    return _run_sweep(raw, args)


def cmd_outage(raw, args):
    if "target_rate" not in raw:
        raise ConfigError("outage requires key: target_rate")
    return _run_sweep(raw, args)


def cmd_throughput(raw, args):
    if "rt_grid" not in raw:
        raise ConfigError("throughput requires key: rt_grid")
    rt_grid = [float(x) for x in raw.pop("rt_grid")]
    cfg = build_sim_config(raw)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = sim.run(cfg, workers=args.threads,
                     log=lambda msg: print(msg, file=sys.stderr))
    lines = ["snr_db,scheme,target_rate,outage,throughput"]
    for scheme in cfg.schemes:
        for row in sim.with_target_rate(result, scheme, rt_grid):
            lines.append(
                f"{row['snr_db']:.6g},{scheme},{row['target_rate']:.6g},"
                f"{row['outage']:.10g},{row['throughput']:.10g}")
    manifest = result.manifest()
    manifest["overrides"] = list(args.set or [])
    manifest["rt_grid"] = rt_grid
    _write_outputs(args.out, "\n".join(lines) + "\n", manifest)
    print(f"wrote {args.out}")
    return 0


def crossing_snr(snr_db, means, level: float):
    """First SNR where the mean-rate curve crosses a level, by interpolation."""
    snr_db = np.asarray(snr_db, dtype=float)
    means = np.asarray(means, dtype=float)
    for i in range(len(means)):
        if means[i] >= level:
            if i == 0:
                return float(snr_db[0])
            left, right = means[i - 1], means[i]
            frac = (level - left) / (right - left) if right > left else 1.0
            return float(snr_db[i - 1] + frac * (snr_db[i] - snr_db[i - 1]))
    return None


def cmd_gap(raw, args):
    schemes = set(raw.get("schemes", []))
    if not {"ifmr", "oracle"} <= schemes:
        raw["schemes"] = sorted(schemes | {"ifmr", "oracle"})

    def extra(result: SimResult):
        level = result.config.target_rate
        grid = list(result.config.snr_grid_db)
        crossings = {}
        for scheme in ("ifmr", "oracle"):
            means = [row["mean_rate"] for row in result.rows if row["scheme"] == scheme]
            crossings[scheme] = crossing_snr(grid, means, level)
        if crossings["ifmr"] is not None and crossings["oracle"] is not None:
            crossings["gap_db"] = crossings["ifmr"] - crossings["oracle"]
        print(f"crossing SNRs at {level} bit/channel use: {crossings}")
        return {"crossings": crossings}

    return _run_sweep(raw, args, manifest_extra=extra)


def cmd_selftest(args) -> int:
    from ifsim import selftest

    failures = selftest.run_all(seed=args.seed if args.seed is not None else 7,
                                report=print)
    return 0 if failures == 0 else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ifsim",
        description="Integer-forcing receiver simulator for interference channels")
    parser.add_argument("--version", action="version", version=f"ifsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("rate-sweep", "outage", "throughput", "convergence", "gap"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON configuration path")
        cmd.add_argument("--out", required=True, help="output CSV path")
        cmd.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override a config key (repeatable, dotted keys allowed)")
        cmd.add_argument("--threads", type=int, default=1)
        cmd.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    st = sub.add_parser("selftest")
    st.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    handlers = {
        "rate-sweep": cmd_rate_sweep,
        "outage": cmd_outage,
        "throughput": cmd_throughput,
        "convergence": cmd_convergence,
        "gap": cmd_gap,
    }
    try:
        if args.command == "selftest":
            return cmd_selftest(args)
        raw = apply_overrides(load_config(args.config), args.set)
        return handlers[args.command](raw, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TrialFailure as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
