"""Command-line front door: run, sweep, attack, oracle.

    adtn-sim run    --scenario s.toml [--seed N] [--out DIR]
                    [--set key=value ...] [--trace-frames]
    adtn-sim sweep  --scenario s.toml --param tx_period=1,2,4 [...]
    adtn-sim attack --trace DIR [--attack all] [--keys A,B|all]
    adtn-sim oracle --scenario s.toml [--seed N] [--set ...]

ADTN_SIM_THREADS caps sweep parallelism. Exit codes: 0 success, 1
result-level failure (oracle mismatch), 2 configuration error, 3 trace
error.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import adversary as adv
from .config import apply_overrides, config_from_dict, load_config
from .keyring import ConfigurationError
from .netsim import run_scenario
from .oracle import contact_oracle, delivery_diff, oracle_valid
from .report import (
    TraceError,
    load_run_dir,
    write_attack_outputs,
    write_run_outputs,
)
from .rng import derive_seed

# sweep parameter name -> dotted config path; None marks structural params
SWEEP_PARAMS = {
    "tx_period": "policies.tx_period",
    "freshness_age": "policies.freshness_age",
    "frame_size": "frame_size",
    "node_count": "nodes.count",
    "mobility_speed": None,
    "group_size": None,
}


def chain_groups(n_nodes: int, size: int) -> list[dict]:
    """Partition nodes into a connected chain of overlapping groups.

    Consecutive groups share one bridge node, so the network stays
    connected for any group size >= 2.
    """
    if size < 2:
        raise ConfigurationError("group_size must be >= 2")
    groups = []
    start = 0
    idx = 0
    while True:
        end = min(start + size, n_nodes)
        members = list(range(start, end))
        if len(members) == 1:
            groups[-1]["members"].append(members[0])
            break
        groups.append({"id": f"G{idx}", "members": members})
        idx += 1
        if end >= n_nodes:
            break
        start = end - 1  # bridge node shared with the next group
    return groups


def _load_raw(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib

    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"scenario file {path} does not exist")
    if p.suffix == ".json":
        return json.loads(p.read_text())
    with open(p, "rb") as fh:
        return tomllib.load(fh)


def _common_overrides(args) -> list[str]:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "trace_frames", False):
        overrides.append("output.trace_frames=true")
    return overrides


def cmd_run(args) -> int:
    cfg = load_config(args.scenario, _common_overrides(args))
    report = run_scenario(cfg)
    perf = adv.performance_metrics(report)
    out = write_run_outputs(report, perf, args.out)
    if cfg.output.figures:
        from . import plots

        plots.run_figures(report, perf, out)
    print(f"run {report.run_id}: {len(report.events)} emissions, "
          f"{len(report.submissions)} messages -> {out}")
    return 0


def _sweep_point(payload: tuple) -> dict:
    raw, point, seed = payload
    raw = copy.deepcopy(raw)
    raw["seed"] = seed
    for name, value in point.items():
        path = SWEEP_PARAMS[name]
        if path is not None:
            apply_overrides(raw, [f"{path}={json.dumps(value)}"])
    if "mobility_speed" in point:
        raw.setdefault("mobility", {})
        raw["mobility"]["speed_min"] = point["mobility_speed"]
        raw["mobility"]["speed_max"] = point["mobility_speed"]
    if "group_size" in point:
        n = raw.get("nodes", {}).get("count", point.get("node_count", 10))
        raw["groups"] = chain_groups(n, point["group_size"])
    cfg = config_from_dict(raw)
    report = run_scenario(cfg)
    perf = adv.performance_metrics(report)
    latencies = [m.mean_latency for m in perf.messages if m.mean_latency is not None]
    row = {"seed": seed, **point}
    row.update(
        {
            "delivery_ratio_mean": perf.delivery_ratio_mean,
            "mean_latency": sum(latencies) / len(latencies) if latencies else None,
            "cover_fraction": perf.cover_fraction,
            "emissions_total": perf.emissions_total,
            "decrypt_attempts_total": sum(perf.decrypt_attempts.values()),
        }
    )
    return row


def cmd_sweep(args) -> int:
    raw = _load_raw(args.scenario)
    raw = apply_overrides(raw, _common_overrides(args))
    base_seed = raw.get("seed", 1)

    grid_axes: dict[str, list] = {}
    for spec in args.param or []:
        if "=" not in spec:
            raise ConfigurationError(f"--param {spec!r}: expected name=v1,v2,...")
        name, _, values = spec.partition("=")
        if name not in SWEEP_PARAMS:
            raise ConfigurationError(
                f"--param {name!r}: unknown sweep parameter; choose from "
                f"{sorted(SWEEP_PARAMS)}"
            )
        parsed = []
        for v in values.split(","):
            try:
                parsed.append(json.loads(v))
            except json.JSONDecodeError:
                raise ConfigurationError(f"--param {name}: bad value {v!r}") from None
        if not parsed:
            raise ConfigurationError(f"--param {name}: empty value list")
        grid_axes[name] = parsed
    if not grid_axes:
        raise ConfigurationError("sweep needs at least one --param")

    names = sorted(grid_axes)
    points = [
        dict(zip(names, combo))
        for combo in itertools.product(*(grid_axes[n] for n in names))
    ]
    payloads = [
        (raw, point, derive_seed(base_seed, i)) for i, point in enumerate(points)
    ]
    # validate every point up front so errors surface before any run
    for payload in payloads:
        test = copy.deepcopy(payload[0])
        for name, value in payload[1].items():
            path = SWEEP_PARAMS[name]
            if path is not None:
                apply_overrides(test, [f"{path}={json.dumps(value)}"])

    workers = int(os.environ.get("ADTN_SIM_THREADS", "0")) or None
    if workers == 1 or len(payloads) == 1:
        rows = [_sweep_point(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, payloads))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    import csv as _csv

    columns = ["seed", *names, "delivery_ratio_mean", "mean_latency",
               "cover_fraction", "emissions_total", "decrypt_attempts_total"]
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row.get(c) is None else row.get(c) for c in columns])

    if len(names) == 1 and not args.no_figures:
        from . import plots

        plots.sweep_figures(rows, names[0], out)
    print(f"sweep: {len(rows)} grid points -> {out / 'sweep.csv'}")
    return 0


def cmd_attack(args) -> int:
    report = load_run_dir(args.trace)
    cfg = report.config
    out = Path(args.out) if args.out else Path(args.trace)

    if args.observation is not None:
        from .report import load_observation_log

        log = load_observation_log(
            Path(args.trace) / f"observations_{args.observation}.jsonl",
            report.run_id,
        )
    else:
        if report.events and not report.events[0].frame:
            raise TraceError(
                "events.jsonl has no frame bytes; re-run with --trace-frames "
                "(or output.trace_frames=true) or point --observation at an "
                "observation log"
            )
        log = adv.observe(report, scope="global")

    kinds = (
        ["external", "internal", "linker", "distinguishability"]
        if args.attack == "all"
        else [args.attack]
    )
    for kind in kinds:
        if kind == "external":
            view = adv.AdversaryView(compromised_keys=[], log=log)
            write_attack_outputs(adv.attack_report(view, report), out, "external")
        elif kind == "internal":
            if args.keys in (None, "all"):
                gids = [g.id for g in cfg.groups]
            else:
                gids = [g for g in args.keys.split(",") if g]
            keys = [cfg.group_key(gid) for gid in gids]
            view = adv.AdversaryView(compromised_keys=keys, log=log)
            write_attack_outputs(adv.attack_report(view, report), out, "internal")
        elif kind == "linker":
            result = adv.equality_linker(log, adv.frame_truth(report.events))
            (out / "linker.json").write_text(
                json.dumps(
                    {
                        "linked_pairs": len(result.linked_pairs),
                        "precision": result.precision,
                    },
                    sort_keys=True,
                    indent=2,
                )
                + "\n"
            )
        elif kind == "distinguishability":
            truth = {
                e.frame: e.kind for e in report.events if e.kind != "garbage"
            }
            frames = [en.frame for en in log.entries if en.frame in truth]
            labels = [truth[f] == "cover" for f in frames]
            result = adv.distinguishability_test(frames, labels)
            (out / "distinguishability.json").write_text(
                json.dumps(
                    {
                        "chi2_p_value": result.chi2_p_value,
                        "per_position_p_min": result.per_position_p_min,
                        "classifier_accuracy": result.classifier_accuracy,
                        "n_frames": result.n_frames,
                        "n_cover": result.n_cover,
                        "n_real": result.n_real,
                        "underpowered": result.underpowered,
                        "single_class": result.single_class,
                    },
                    sort_keys=True,
                    indent=2,
                )
                + "\n"
            )
    print(f"attack ({', '.join(kinds)}) on run {report.run_id} -> {out}")
    return 0


def cmd_oracle(args) -> int:
    cfg = load_config(args.scenario, _common_overrides(args))
    report = run_scenario(cfg)
    result = contact_oracle(cfg)
    valid, reasons = oracle_valid(report, result)
    diffs = delivery_diff(report, result)
    if not valid:
        print("oracle-invalid:")
        for reason in reasons:
            print(f"  {reason}")
        return 0
    if diffs:
        print(f"MISMATCH ({len(diffs)} deliveries differ):")
        for d in diffs:
            print(f"  {d}")
        return 1
    print(f"empty diff: protocol matches oracle on "
          f"{sum(len(a) for a in result.arrivals)} deliveries")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adtn-sim",
        description="Undetectable group-mix DTN: simulator, attacks, reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="TOML or JSON scenario")
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="override a config field (repeatable)")
            p.add_argument("--trace-frames", action="store_true",
                           help="include frame hex in the ground-truth trace")

    p_run = sub.add_parser("run", help="run one scenario and write reports")
    add_common(p_run)
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid")
    add_common(p_sweep)
    p_sweep.add_argument("--param", action="append", metavar="NAME=V1,V2,...",
                         help=f"sweep axis; names: {sorted(SWEEP_PARAMS)}")
    p_sweep.add_argument("--out", default="out_sweep")
    p_sweep.add_argument("--no-figures", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_attack = sub.add_parser("attack", help="replay attacks over a run's traces")
    p_attack.add_argument("--trace", required=True, help="run output directory")
    p_attack.add_argument("--attack", default="all",
                          choices=["external", "internal", "linker",
                                   "distinguishability", "all"])
    p_attack.add_argument("--keys", default=None,
                          help="compromised group ids, comma separated, or 'all'")
    p_attack.add_argument("--observation", type=int, default=None,
                          help="use observations_N.jsonl instead of global truth")
    p_attack.add_argument("--out", default=None)
    p_attack.set_defaults(func=cmd_attack)

    p_oracle = sub.add_parser("oracle", help="diff protocol deliveries vs oracle")
    add_common(p_oracle)
    p_oracle.set_defaults(func=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TraceError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
