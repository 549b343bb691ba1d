"""Brute-force delivery oracle over the time-expanded contact graph.

Ignores cryptography and pool data structures entirely. A message
crosses a contact only at the carrier's emission slots, and only to
neighbors sharing the group whose turn it is in the carrier's
round-robin over its group list. Earliest arrival per node is computed
by forward propagation in tick order.

Valid only when the protocol run never hits pool capacity, never drops
or rejects anything as stale before delivery, and no node carries two
distinct messages at once (otherwise slot interleaving between messages
makes per-entry schedules depend on pool contents). `validity_flags` of
a RunReport reports exactly these conditions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ScenarioConfig
from .netsim import compute_mobility_trace, compute_phases, distance, JamRegion

UNREACHABLE = None


@dataclass
class OracleResult:
    # msg index (order of traffic script) -> node -> earliest delivery tick
    arrivals: list[dict[int, int]]


def _jammers(cfg: ScenarioConfig) -> list[JamRegion]:
    return [
        JamRegion(
            center=(a.center[0], a.center[1]),
            radius=a.radius,
            tick_start=a.active[0],
            tick_end=a.active[1],
        )
        for a in cfg.adversaries
        if a.type == "jammer"
    ]


def contact_oracle(cfg: ScenarioConfig) -> OracleResult:
    """Earliest possible delivery tick per node, per scripted message."""
    trace = compute_mobility_trace(cfg)
    phases = compute_phases(cfg)
    jammers = _jammers(cfg)
    periods = {n: cfg.policies_for(n).tx_period for n in cfg.node_ids()}
    node_groups: dict[int, list[frozenset[int]]] = {n: [] for n in cfg.node_ids()}
    for g in cfg.groups:
        for member in g.members:
            node_groups[member].append(frozenset(g.members))

    results = []
    for item in cfg.traffic:
        results.append(
            _propagate(
                cfg, trace, phases, periods, node_groups, jammers,
                origin=item.node, submit_tick=item.tick,
            )
        )
    return OracleResult(arrivals=results)


def oracle_valid(report, result: OracleResult) -> tuple[bool, list[str]]:
    """Did the run stay inside the oracle's assumptions for long enough?

    Staleness or pool overflow only invalidates the comparison if it
    happened at or before the last oracle-predicted arrival; afterwards
    the propagation under test is already over.
    """
    reasons = []
    horizon = max(
        (t for arrivals in result.arrivals for t in arrivals.values()), default=-1
    )
    flags = report.oracle_validity
    if flags["pool_overlap"]:
        reasons.append("a pool held entries of two messages at once")
    stale = flags["first_stale_tick"]
    if stale is not None and stale <= horizon:
        reasons.append(f"staleness event at tick {stale} before horizon {horizon}")
    overflow = flags["first_overflow_tick"]
    if overflow is not None and overflow <= horizon:
        reasons.append(f"pool overflow at tick {overflow} before horizon {horizon}")
    return not reasons, reasons


def delivery_diff(report, result: OracleResult) -> list[str]:
    """Human-readable mismatches between protocol deliveries and oracle."""
    diffs = []
    for i, (mid, _origin, _tick) in enumerate(report.submissions):
        actual = report.deliveries.get(mid, {})
        expected = result.arrivals[i]
        for n in sorted(set(actual) | set(expected)):
            a, e = actual.get(n), expected.get(n)
            if a != e:
                diffs.append(
                    f"message {i} node {n}: protocol={a} oracle={e}"
                )
    return diffs


def _propagate(cfg, trace, phases, periods, node_groups, jammers,
               origin: int, submit_tick: int) -> dict[int, int]:
    acq: dict[int, int] = {origin: submit_tick}
    for t in range(submit_tick, cfg.total_ticks):
        positions = trace[t]
        new: dict[int, int] = {}
        for carrier, a in acq.items():
            # the originator may use its slot on the submit tick itself;
            # a receiver's first usable slot is strictly after acquisition
            start = a if carrier == origin and a == submit_tick else a + 1
            if t < start:
                continue
            period = periods[carrier]
            if t % period != phases[carrier]:
                continue
            groups = node_groups[carrier]
            if not groups:
                continue
            # j-th usable slot emits group (j-1) mod k, in declaration order
            first_slot = start + (phases[carrier] - start) % period
            slot_index = (t - first_slot) // period
            members = groups[slot_index % len(groups)]
            cpos = positions[carrier]
            for n in members:
                if n == carrier or n in acq or n in new:
                    continue
                npos = positions[n]
                if distance(cpos, npos, cfg) > cfg.arena.radio_range:
                    continue
                if any(j.suppresses(npos, t, cfg) for j in jammers):
                    continue
                new[n] = t
        acq.update(new)
        if len(acq) == cfg.nodes.count:
            break
    return acq
