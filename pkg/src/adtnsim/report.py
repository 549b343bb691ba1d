"""Report files for runs, sweeps, and attacks.

A run directory contains:

  summary.json        fully resolved config + all ground-truth results
  metrics.csv         one row per scripted message
  metrics.md          documentation for every CSV column
  events.jsonl        ground-truth emission log (frame hex only when
                      trace_frames is on)
  observations_N.jsonl  per configured passive adversary: what it heard
  *.png               figures, when enabled

All JSON is written with sorted keys and no timestamps, so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .adversary import AnonymityReport, PerformanceMetrics, ObsEntry, ObservationLog
from .config import ScenarioConfig, config_from_dict
from .netsim import EmissionEvent, RunReport
from .wire import frame_from_hex, frame_to_hex


class TraceError(RuntimeError):
    """Trace directory is missing, incomplete, or from another run."""


METRIC_COLUMNS = [
    ("msg_id", "Message id (hex digest of the payload)."),
    ("origin", "Node id that submitted the message."),
    ("submit_tick", "Tick at which the message entered the originator's pool."),
    ("delivered_count", "Nodes that delivered the message, originator included."),
    ("delivery_ratio", "delivered_count divided by the network size."),
    ("mean_latency", "Mean delivery tick minus submit tick over non-origin nodes; empty if no other node delivered."),
    ("max_latency", "Largest delivery latency in ticks; empty if undelivered."),
    ("diffusion_50", "First tick when at least 50% of nodes had delivered."),
    ("diffusion_90", "First tick when at least 90% of nodes had delivered."),
    ("diffusion_100", "First tick when every node had delivered."),
]


def write_run_outputs(
    report: RunReport, perf: PerformanceMetrics, out_dir: str | Path
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = report.config

    summary = {
        "run_id": report.run_id,
        "config": cfg.resolved(),
        "node_stats": {str(k): v for k, v in sorted(report.node_stats.items())},
        "rx_outcomes": report.rx_outcomes,
        "oracle_validity": report.oracle_validity,
        "submissions": [
            {"msg_id": mid.hex(), "node": node, "tick": tick}
            for mid, node, tick in report.submissions
        ],
        "deliveries": {
            mid.hex(): {str(n): t for n, t in sorted(table.items())}
            for mid, table in sorted(report.deliveries.items())
        },
        "performance": {
            "emissions_total": perf.emissions_total,
            "cover_fraction": perf.cover_fraction,
            "delivery_ratio_mean": perf.delivery_ratio_mean,
            "decrypt_attempts": {
                str(n): v for n, v in sorted(perf.decrypt_attempts.items())
            },
        },
        "anonymity_external": {
            "sender": 1 - 1 / cfg.nodes.count,
            "recipient": 1 - 1 / cfg.nodes.count,
        },
    }
    (out / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n"
    )

    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([name for name, _ in METRIC_COLUMNS])
        for m in perf.messages:
            writer.writerow(
                [
                    m.msg_id.hex(),
                    m.origin,
                    m.submit_tick,
                    m.delivered_count,
                    f"{m.delivery_ratio:.6f}",
                    "" if m.mean_latency is None else f"{m.mean_latency:.3f}",
                    "" if m.max_latency is None else m.max_latency,
                    "" if m.diffusion_50 is None else m.diffusion_50,
                    "" if m.diffusion_90 is None else m.diffusion_90,
                    "" if m.diffusion_100 is None else m.diffusion_100,
                ]
            )

    lines = ["# metrics.csv columns", ""]
    for name, doc in METRIC_COLUMNS:
        lines.append(f"- `{name}`: {doc}")
    lines.append("")
    lines.append(
        f"One tick corresponds to {cfg.tick_seconds} s (labeling constant only)."
    )
    (out / "metrics.md").write_text("\n".join(lines) + "\n")

    _write_events(report, out / "events.jsonl")
    _write_observations(report, out)
    return out


def _write_events(report: RunReport, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"run_id": report.run_id}, sort_keys=True) + "\n")
        for e in report.events:
            rec = {
                "tick": e.tick,
                "emitter": e.emitter,
                "x": round(e.position[0], 6),
                "y": round(e.position[1], 6),
                "receivers": list(e.receivers),
                "kind": e.kind,
            }
            if e.msg_id is not None:
                rec["msg_id"] = e.msg_id.hex()
                rec["group_id"] = e.group_id
            if report.config.output.trace_frames:
                rec["frame_hex"] = frame_to_hex(e.frame)
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _write_observations(report: RunReport, out: Path) -> None:
    from .adversary import observe  # local import to avoid cycle at module load

    for i, adv in enumerate(report.config.adversaries):
        if adv.type != "passive":
            continue
        log = observe(
            report,
            scope=adv.scope,
            center=(adv.center[0], adv.center[1]),
            radius=adv.radius,
            trajectory=[(p["tick"], (p["x"], p["y"])) for p in adv.trajectory],
        )
        with open(out / f"observations_{i}.jsonl", "w") as fh:
            fh.write(
                json.dumps(
                    {"run_id": report.run_id, "scope": adv.scope}, sort_keys=True
                )
                + "\n"
            )
            for entry in log.entries:
                fh.write(
                    json.dumps(
                        {
                            "tick": entry.tick,
                            "emitter": entry.emitter,
                            "x": round(entry.position[0], 6),
                            "y": round(entry.position[1], 6),
                            "frame_hex": frame_to_hex(entry.frame),
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )


# -- loading a run directory back -------------------------------------------


def load_run_dir(path: str | Path) -> RunReport:
    """Rebuild a RunReport from a run directory's trace files.

    Frames are only present if the run was traced with trace_frames;
    attacks that need frame bytes raise TraceError otherwise.
    """
    path = Path(path)
    summary_path = path / "summary.json"
    events_path = path / "events.jsonl"
    if not summary_path.exists() or not events_path.exists():
        raise TraceError(f"{path} is not a run directory (missing summary/events)")
    summary = json.loads(summary_path.read_text())
    cfg = config_from_dict(summary["config"])

    events: list[EmissionEvent] = []
    with open(events_path) as fh:
        header = json.loads(fh.readline())
        if header.get("run_id") != summary["run_id"]:
            raise TraceError(
                f"events.jsonl run id {header.get('run_id')} does not match "
                f"summary run id {summary['run_id']}"
            )
        for line in fh:
            rec = json.loads(line)
            events.append(
                EmissionEvent(
                    tick=rec["tick"],
                    emitter=rec["emitter"],
                    position=(rec["x"], rec["y"]),
                    frame=frame_from_hex(rec["frame_hex"])
                    if "frame_hex" in rec
                    else b"",
                    receivers=tuple(rec["receivers"]),
                    kind=rec["kind"],
                    msg_id=bytes.fromhex(rec["msg_id"]) if "msg_id" in rec else None,
                    group_id=rec.get("group_id"),
                )
            )

    return RunReport(
        config=cfg,
        run_id=summary["run_id"],
        events=events,
        submissions=[
            (bytes.fromhex(s["msg_id"]), s["node"], s["tick"])
            for s in summary["submissions"]
        ],
        deliveries={
            bytes.fromhex(mid): {int(n): t for n, t in table.items()}
            for mid, table in summary["deliveries"].items()
        },
        node_stats={int(n): v for n, v in summary["node_stats"].items()},
        rx_outcomes=summary["rx_outcomes"],
        oracle_validity=summary["oracle_validity"],
    )


def load_observation_log(path: str | Path, expected_run_id: str) -> ObservationLog:
    path = Path(path)
    entries = []
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("run_id") != expected_run_id:
            raise TraceError(
                f"{path.name} run id {header.get('run_id')} does not match "
                f"{expected_run_id}"
            )
        for line in fh:
            rec = json.loads(line)
            entries.append(
                ObsEntry(
                    tick=rec["tick"],
                    emitter=rec["emitter"],
                    position=(rec["x"], rec["y"]),
                    frame=frame_from_hex(rec["frame_hex"]),
                )
            )
    return ObservationLog(entries=entries, scope=header.get("scope", "global"))


def write_attack_outputs(
    anon: AnonymityReport, out_dir: str | Path, label: str
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "attack": label,
        "messages": [
            {
                "msg_id": e.msg_id.hex(),
                "true_origin": e.true_origin,
                "candidate_set": sorted(e.candidate_set),
                "sender_anonymity": e.sender_anonymity,
                "recipient_anonymity": e.recipient_anonymity,
            }
            for e in anon.entries
        ],
        "social_graph": {
            "edges": sorted(list(e) for e in anon.social_edges),
            "precision": anon.social_precision,
            "recall": anon.social_recall,
        },
    }
    (out / f"anonymity_{label}.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n"
    )
    with open(out / f"anonymity_{label}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["msg_id", "true_origin", "candidate_set_size", "sender_anonymity",
             "recipient_anonymity", "originator_identified"]
        )
        for e in anon.entries:
            writer.writerow(
                [
                    e.msg_id.hex(),
                    e.true_origin,
                    len(e.candidate_set),
                    f"{e.sender_anonymity:.6f}",
                    f"{e.recipient_anonymity:.6f}",
                    int(e.candidate_set == {e.true_origin}),
                ]
            )
    return out
