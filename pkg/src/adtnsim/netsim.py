"""Deterministic discrete-event world.

One tick = one scheduling quantum. Per tick the loop is:

  1. mobility update (positions for this tick)
  2. traffic-script injections
  3. emissions: every node whose phase matches emits exactly one frame
     (real or cover); garbage emitters inject their frames
  4. receptions, processed in (tick, emitter id, receiver id) order;
     receivers inside an active jam region are suppressed
  5. periodic seen-log cleanup

The radio is an ideal broadcast MAC: simultaneous in-range emissions all
succeed, no collisions or capture. All randomness flows from named
streams derived from the scenario seed, so identical seeds give
identical emission logs.

The mobility trace and slot phases are pure functions of the config,
shared with the contact oracle as common scenario input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import ScenarioConfig
from .keyring import build_keyrings
from .node import Node, RxOutcome
from .rng import derive_stream
from .wire import make_cover_frame

Position = tuple[float, float]


def distance(a: Position, b: Position, cfg: ScenarioConfig) -> float:
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    if cfg.arena.torus:
        dx = min(dx, cfg.arena.width - dx)
        dy = min(dy, cfg.arena.height - dy)
    return math.hypot(dx, dy)


def initial_positions(cfg: ScenarioConfig) -> dict[int, Position]:
    rng = derive_stream(cfg.seed, "placement")
    if cfg.nodes.placement == "explicit":
        return {i: (p[0], p[1]) for i, p in enumerate(cfg.nodes.positions)}
    if cfg.nodes.placement == "grid":
        cols = math.ceil(math.sqrt(cfg.nodes.count))
        rows = math.ceil(cfg.nodes.count / cols)
        out = {}
        for i in range(cfg.nodes.count):
            r, c = divmod(i, cols)
            out[i] = (
                (c + 0.5) * cfg.arena.width / cols,
                (r + 0.5) * cfg.arena.height / rows,
            )
        return out
    return {
        i: (
            rng.uniform(0, cfg.arena.width),
            rng.uniform(0, cfg.arena.height),
        )
        for i in range(cfg.nodes.count)
    }


def compute_mobility_trace(cfg: ScenarioConfig) -> list[dict[int, Position]]:
    """positions[tick][node] for the whole run; shared by sim and oracle."""
    start = initial_positions(cfg)
    ticks = cfg.total_ticks
    if cfg.mobility.model == "static":
        return [start] * ticks

    if cfg.mobility.model == "scripted":
        moves: dict[int, list[tuple[int, Position]]] = {}
        for item in cfg.mobility.script:
            moves.setdefault(item["node"], []).append(
                (item["tick"], (item["x"], item["y"]))
            )
        for timeline in moves.values():
            timeline.sort()
        trace = []
        current = dict(start)
        pending = {n: 0 for n in moves}
        for t in range(ticks):
            for n, timeline in moves.items():
                while pending[n] < len(timeline) and timeline[pending[n]][0] <= t:
                    current[n] = timeline[pending[n]][1]
                    pending[n] += 1
            trace.append(dict(current))
        return trace

    # random waypoint, speeds in meters per tick
    trace = []
    pos = dict(start)
    rngs = {n: derive_stream(cfg.seed, f"mobility/{n}") for n in start}
    target: dict[int, Position] = {}
    speed: dict[int, float] = {}
    pause_until: dict[int, int] = {n: 0 for n in start}
    for t in range(ticks):
        for n in start:
            if t < pause_until[n]:
                continue
            if n not in target:
                rng = rngs[n]
                target[n] = (
                    rng.uniform(0, cfg.arena.width),
                    rng.uniform(0, cfg.arena.height),
                )
                speed[n] = rng.uniform(cfg.mobility.speed_min, cfg.mobility.speed_max)
            tx, ty = target[n]
            x, y = pos[n]
            dx, dy = tx - x, ty - y
            dist = math.hypot(dx, dy)
            if dist <= speed[n]:
                pos[n] = (tx, ty)
                del target[n]
                pause_until[n] = t + 1 + cfg.mobility.pause
            else:
                pos[n] = (x + dx / dist * speed[n], y + dy / dist * speed[n])
        trace.append(dict(pos))
    return trace


def compute_phases(cfg: ScenarioConfig) -> dict[int, int]:
    """Per-node slot phase, drawn once from the scenario seed."""
    rng = derive_stream(cfg.seed, "phases")
    return {
        n: rng.randrange(cfg.policies_for(n).tx_period) for n in cfg.node_ids()
    }


@dataclass
class JamRegion:
    center: Position
    radius: float
    tick_start: int
    tick_end: int

    def suppresses(self, pos: Position, tick: int, cfg: ScenarioConfig) -> bool:
        return (
            self.tick_start <= tick < self.tick_end
            and distance(pos, self.center, cfg) <= self.radius
        )


@dataclass
class GarbageEmitter:
    """Active attacker injecting undecryptable frames at a fixed rate."""

    emitter_id: int  # negative, disjoint from node ids
    position: Position
    rate: float  # frames per tick
    tick_start: int
    tick_end: int
    trajectory: list[tuple[int, Position]] = field(default_factory=list)

    def position_at(self, tick: int) -> Position:
        pos = self.position
        for t, p in self.trajectory:
            if t <= tick:
                pos = p
        return pos

    def frames_due(self, tick: int) -> int:
        if not self.tick_start <= tick < self.tick_end:
            return 0
        return math.floor((tick - self.tick_start + 1) * self.rate) - math.floor(
            (tick - self.tick_start) * self.rate
        )


@dataclass
class EmissionEvent:
    """Ground-truth record of one on-air emission."""

    tick: int
    emitter: int
    position: Position
    frame: bytes
    receivers: tuple[int, ...]
    kind: str  # real | cover | garbage
    msg_id: bytes | None = None
    group_id: str | None = None


@dataclass
class RunReport:
    """Everything a run produced: ground truth plus per-node counters."""

    config: ScenarioConfig
    run_id: str
    events: list[EmissionEvent]
    submissions: list[tuple[bytes, int, int]]  # (msg_id, node, tick)
    deliveries: dict[bytes, dict[int, int]]  # msg_id -> node -> tick
    node_stats: dict[int, dict]
    rx_outcomes: dict[str, int]
    # first_stale_tick / first_overflow_tick / pool_overlap; see oracle module
    oracle_validity: dict

    def n_nodes(self) -> int:
        return self.config.nodes.count


class World:
    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.tick = 0
        self.trace = compute_mobility_trace(cfg)
        self.phases = compute_phases(cfg)
        groups = cfg.trust_groups()
        keyrings = build_keyrings(
            groups, cfg.node_ids(), mru_reorder=cfg.policies.mru_reorder
        )
        self.nodes: dict[int, Node] = {}
        for n in cfg.node_ids():
            pol = cfg.policies_for(n)
            self.nodes[n] = Node(
                node_id=n,
                keyring=keyrings[n],
                policies=pol,
                phase=self.phases[n],
                frame_size=cfg.frame_size,
                rng=derive_stream(cfg.seed, f"crypto/{n}"),
            )
        self.jammers: list[JamRegion] = []
        self.garbage: list[GarbageEmitter] = []
        next_attacker = -1
        for adv in cfg.adversaries:
            if adv.type == "jammer":
                self.jammers.append(
                    JamRegion(
                        center=(adv.center[0], adv.center[1]),
                        radius=adv.radius,
                        tick_start=adv.active[0],
                        tick_end=adv.active[1],
                    )
                )
            elif adv.type == "garbage":
                self.garbage.append(
                    GarbageEmitter(
                        emitter_id=next_attacker,
                        position=(adv.position[0], adv.position[1]),
                        rate=adv.rate,
                        tick_start=adv.active[0],
                        tick_end=adv.active[1],
                        trajectory=[
                            (p["tick"], (p["x"], p["y"])) for p in adv.trajectory
                        ],
                    )
                )
                next_attacker -= 1
        self.garbage_rng = derive_stream(cfg.seed, "garbage")
        self.traffic_by_tick: dict[int, list] = {}
        traffic_rng = derive_stream(cfg.seed, "traffic")
        for item in cfg.traffic:
            if item.payload is not None:
                payload = item.payload.encode()
            else:
                payload = traffic_rng.randbytes(item.payload_size)
            self.traffic_by_tick.setdefault(item.tick, []).append((item.node, payload))
        self.submissions: list[tuple[bytes, int, int]] = []
        self.rx_outcomes: dict[str, int] = {o.value: 0 for o in RxOutcome}
        self.pool_overlap = False

    def _jam_suppressed(self, pos: Position, tick: int) -> bool:
        return any(j.suppresses(pos, tick, self.cfg) for j in self.jammers)

    def _receivers(self, emitter_pos: Position, emitter: int, tick: int) -> tuple[int, ...]:
        positions = self.trace[tick]
        out = []
        for n in sorted(self.nodes):
            if n == emitter:
                continue
            pos = positions[n]
            if distance(emitter_pos, pos, self.cfg) > self.cfg.arena.radio_range:
                continue
            if self._jam_suppressed(pos, tick):
                continue
            out.append(n)
        return tuple(out)

    def step(self) -> list[EmissionEvent]:
        """Advance one tick; returns this tick's emission events."""
        t = self.tick
        positions = self.trace[t]

        for node_id, payload in self.traffic_by_tick.get(t, []):
            mid = self.nodes[node_id].submit_message(payload, t)
            self.submissions.append((mid, node_id, t))

        events: list[EmissionEvent] = []
        for ge in self.garbage:
            pos = ge.position_at(t)
            for _ in range(ge.frames_due(t)):
                frame = make_cover_frame(self.garbage_rng, self.cfg.frame_size)
                events.append(
                    EmissionEvent(
                        tick=t,
                        emitter=ge.emitter_id,
                        position=pos,
                        frame=frame,
                        receivers=self._receivers(pos, ge.emitter_id, t),
                        kind="garbage",
                    )
                )
        for n in sorted(self.nodes):
            node = self.nodes[n]
            if t % node.policies.tx_period != node.phase:
                continue
            emission = node.on_transmit_slot(t)
            events.append(
                EmissionEvent(
                    tick=t,
                    emitter=n,
                    position=positions[n],
                    frame=emission.frame,
                    receivers=self._receivers(positions[n], n, t),
                    kind="cover" if emission.is_cover else "real",
                    msg_id=emission.msg_id,
                    group_id=emission.group_id,
                )
            )

        events.sort(key=lambda e: e.emitter)
        for event in events:
            for receiver in event.receivers:
                outcome, _ = self.nodes[receiver].on_frame_received(
                    event.frame, event.emitter, t
                )
                self.rx_outcomes[outcome.value] += 1

        if t % self.cfg.forget_interval == 0:
            for node in self.nodes.values():
                node.forget_old_seen(t)

        for node in self.nodes.values():
            if len({e.id for e in node.pool}) > 1:
                self.pool_overlap = True

        self.tick += 1
        return events


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Execute the full scenario; fully determined by config + seed."""
    world = World(cfg)
    events: list[EmissionEvent] = []
    for _ in range(cfg.total_ticks):
        events.extend(world.step())

    deliveries: dict[bytes, dict[int, int]] = {}
    for mid, node_id, tick in world.submissions:
        deliveries.setdefault(mid, {})[node_id] = tick
    for n, node in world.nodes.items():
        for mid, tick in node.deliveries:
            table = deliveries.setdefault(mid, {})
            if n not in table:
                table[n] = tick

    node_stats = {
        n: {
            "emissions": node.emissions_total,
            "cover_emissions": node.cover_emissions,
            "decrypt_attempts": node.decrypt_attempts_total,
            "stale_drops": node.stale_drops,
            "pool_overflows": node.pool_overflows,
            "delivered": len(node.deliveries),
            "delivered_unique": len({m for m, _ in node.deliveries}),
            "phase": node.phase,
            "tx_period": node.policies.tx_period,
        }
        for n, node in world.nodes.items()
    }

    stale_ticks = [
        node.first_stale_tick
        for node in world.nodes.values()
        if node.first_stale_tick is not None
    ]
    overflow_ticks = [
        node.first_overflow_tick
        for node in world.nodes.values()
        if node.first_overflow_tick is not None
    ]
    validity = {
        "first_stale_tick": min(stale_ticks) if stale_ticks else None,
        "first_overflow_tick": min(overflow_ticks) if overflow_ticks else None,
        "pool_overlap": world.pool_overlap,
    }

    return RunReport(
        config=cfg,
        run_id=cfg.run_id(),
        events=events,
        submissions=world.submissions,
        deliveries=deliveries,
        node_stats=node_stats,
        rx_outcomes=dict(world.rx_outcomes),
        oracle_validity=validity,
    )
