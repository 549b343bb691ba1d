"""Scenario configuration: parsing, validation, overrides, echo.

Scenarios are TOML (or JSON) files. Every field has a centralized
default, and the fully resolved configuration is echoed into
summary.json so a run can be reproduced from its own report.

Group keys are derived deterministically from (seed, group id): key
distribution is an out-of-band oracle, not a simulated protocol.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .keyring import ConfigurationError, TrustGroup
from .node import NodePolicies, Scheduler
from .wire import GroupKey, MIN_FRAME_SIZE, max_payload


@dataclass
class ArenaConfig:
    width: float = 500.0
    height: float = 500.0
    torus: bool = False
    radio_range: float = 100.0


@dataclass
class NodesConfig:
    count: int = 10
    placement: str = "uniform"  # uniform | grid | explicit
    positions: list[list[float]] = field(default_factory=list)


@dataclass
class MobilityConfig:
    model: str = "static"  # static | waypoint | scripted
    speed_min: float = 0.5  # meters per tick
    speed_max: float = 2.0
    pause: int = 10
    script: list[dict] = field(default_factory=list)  # {node, tick, x, y}


@dataclass
class GroupConfig:
    id: str
    members: list[int]


@dataclass
class TrafficItem:
    tick: int
    node: int
    payload: str | None = None
    payload_size: int | None = None


@dataclass
class AdversaryConfig:
    type: str = "passive"  # passive | garbage | jammer
    scope: str = "global"  # global | disk
    center: list[float] = field(default_factory=lambda: [0.0, 0.0])
    radius: float = 0.0
    trajectory: list[dict] = field(default_factory=list)  # {tick, x, y}
    keys: list[str] = field(default_factory=list)  # compromised group ids
    rate: float = 1.0  # garbage frames per tick
    position: list[float] = field(default_factory=lambda: [0.0, 0.0])
    active: list[int] = field(default_factory=lambda: [0, 1 << 30])


@dataclass
class OutputConfig:
    trace_frames: bool = False
    figures: bool = True


@dataclass
class PolicyConfig(NodePolicies):
    mru_reorder: bool = False


@dataclass
class NodeOverride:
    node: int
    policies: dict = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    seed: int = 1
    total_ticks: int = 1000
    frame_size: int = 1024
    tick_seconds: float = 0.1  # report labeling only
    forget_interval: int = 100
    arena: ArenaConfig = field(default_factory=ArenaConfig)
    nodes: NodesConfig = field(default_factory=NodesConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    policies: PolicyConfig = field(default_factory=PolicyConfig)
    groups: list[GroupConfig] = field(default_factory=list)
    traffic: list[TrafficItem] = field(default_factory=list)
    adversaries: list[AdversaryConfig] = field(default_factory=list)
    node_overrides: list[NodeOverride] = field(default_factory=list)
    output: OutputConfig = field(default_factory=OutputConfig)

    # -- derived -----------------------------------------------------------

    def node_ids(self) -> list[int]:
        return list(range(self.nodes.count))

    def group_key(self, group_id: str) -> GroupKey:
        raw = hashlib.sha256(f"groupkey/{self.seed}/{group_id}".encode()).digest()
        return GroupKey(group_id=group_id, key=raw)

    def trust_groups(self) -> list[TrustGroup]:
        return [
            TrustGroup(
                group_id=g.id, members=frozenset(g.members), key=self.group_key(g.id)
            )
            for g in self.groups
        ]

    def policies_for(self, node_id: int) -> PolicyConfig:
        merged = PolicyConfig(**asdict(self.policies))
        for override in self.node_overrides:
            if override.node == node_id:
                for key, value in override.policies.items():
                    setattr(merged, key, _coerce_policy(key, value))
        return merged

    def run_id(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def resolved(self) -> dict:
        """Fully resolved config as a plain dict; loadable as a JSON scenario."""
        out = asdict(self)
        out["policies"]["scheduler"] = self.policies.scheduler.value
        for override in out["node_overrides"]:
            override.update(override.pop("policies"))
        return out

    # -- validation --------------------------------------------------------

    def validate(self) -> None:
        if self.total_ticks <= 0:
            raise ConfigurationError("total_ticks must be positive")
        if self.frame_size < MIN_FRAME_SIZE:
            raise ConfigurationError(
                f"frame_size must be >= {MIN_FRAME_SIZE}, got {self.frame_size}"
            )
        if self.nodes.count < 1:
            raise ConfigurationError("nodes.count must be >= 1")
        if self.nodes.placement not in ("uniform", "grid", "explicit"):
            raise ConfigurationError(
                f"nodes.placement {self.nodes.placement!r} is not one of "
                "uniform/grid/explicit"
            )
        if self.nodes.placement == "explicit" and len(self.nodes.positions) != self.nodes.count:
            raise ConfigurationError(
                "nodes.positions must list exactly nodes.count positions"
            )
        if self.mobility.model not in ("static", "waypoint", "scripted"):
            raise ConfigurationError(
                f"mobility.model {self.mobility.model!r} is not one of "
                "static/waypoint/scripted"
            )
        try:
            self.policies.validate()
        except ValueError as exc:
            raise ConfigurationError(f"policies: {exc}") from exc
        known = set(self.node_ids())
        group_ids = set()
        for group in self.groups:
            if group.id in group_ids:
                raise ConfigurationError(f"groups: duplicate group id {group.id!r}")
            group_ids.add(group.id)
            for member in group.members:
                if member not in known:
                    raise ConfigurationError(
                        f"groups[{group.id!r}].members: unknown node {member}"
                    )
            if len(group.members) < 2:
                raise ConfigurationError(
                    f"groups[{group.id!r}].members: need at least 2 members"
                )
        for i, item in enumerate(self.traffic):
            if item.node not in known:
                raise ConfigurationError(f"traffic[{i}].node: unknown node {item.node}")
            if not 0 <= item.tick < self.total_ticks:
                raise ConfigurationError(
                    f"traffic[{i}].tick: {item.tick} outside [0, total_ticks)"
                )
            if (item.payload is None) == (item.payload_size is None):
                raise ConfigurationError(
                    f"traffic[{i}]: give exactly one of payload / payload_size"
                )
            if item.payload is not None:
                size = len(item.payload.encode())
            else:
                size = item.payload_size
            if size > max_payload(self.frame_size):
                raise ConfigurationError(
                    f"traffic[{i}]: payload of {size} octets exceeds max_payload "
                    f"{max_payload(self.frame_size)}"
                )
        for i, adv in enumerate(self.adversaries):
            if adv.type not in ("passive", "garbage", "jammer"):
                raise ConfigurationError(
                    f"adversaries[{i}].type {adv.type!r} is not one of "
                    "passive/garbage/jammer"
                )
            if adv.scope not in ("global", "disk"):
                raise ConfigurationError(
                    f"adversaries[{i}].scope {adv.scope!r} is not global/disk"
                )
            for gid in adv.keys:
                if gid not in group_ids:
                    raise ConfigurationError(
                        f"adversaries[{i}].keys: unknown group {gid!r}"
                    )
            if adv.type == "jammer" and adv.radius <= 0:
                raise ConfigurationError(f"adversaries[{i}].radius must be positive")
        for i, override in enumerate(self.node_overrides):
            if override.node not in known:
                raise ConfigurationError(
                    f"node_overrides[{i}].node: unknown node {override.node}"
                )
            for key in override.policies:
                if key not in _POLICY_FIELDS:
                    raise ConfigurationError(
                        f"node_overrides[{i}].{key}: unknown policy field"
                    )


_POLICY_FIELDS = {f for f in PolicyConfig.__dataclass_fields__}


def _coerce_policy(key: str, value):
    if key == "scheduler":
        return Scheduler(value)
    return value


# -- raw dict -> dataclasses ------------------------------------------------


def _take(raw: dict, section: str, cls, known: set[str]):
    sub = raw.get(section, {})
    unknown = set(sub) - known
    if unknown:
        raise ConfigurationError(
            f"{section}: unknown field(s) {sorted(unknown)}"
        )
    return cls(**sub)


def config_from_dict(raw: dict) -> ScenarioConfig:
    raw = dict(raw)
    top_known = set(ScenarioConfig.__dataclass_fields__)
    unknown = set(raw) - top_known
    if unknown:
        raise ConfigurationError(f"unknown top-level field(s) {sorted(unknown)}")

    cfg = ScenarioConfig(
        seed=raw.get("seed", 1),
        total_ticks=raw.get("total_ticks", 1000),
        frame_size=raw.get("frame_size", 1024),
        tick_seconds=raw.get("tick_seconds", 0.1),
        forget_interval=raw.get("forget_interval", 100),
        arena=_take(raw, "arena", ArenaConfig, set(ArenaConfig.__dataclass_fields__)),
        nodes=_take(raw, "nodes", NodesConfig, set(NodesConfig.__dataclass_fields__)),
        mobility=_take(
            raw, "mobility", MobilityConfig, set(MobilityConfig.__dataclass_fields__)
        ),
        output=_take(
            raw, "output", OutputConfig, set(OutputConfig.__dataclass_fields__)
        ),
    )

    pol_raw = dict(raw.get("policies", {}))
    unknown = set(pol_raw) - _POLICY_FIELDS
    if unknown:
        raise ConfigurationError(f"policies: unknown field(s) {sorted(unknown)}")
    if "scheduler" in pol_raw:
        try:
            pol_raw["scheduler"] = Scheduler(pol_raw["scheduler"])
        except ValueError:
            raise ConfigurationError(
                f"policies.scheduler {pol_raw['scheduler']!r} is not fifo/least-popular"
            ) from None
    cfg.policies = PolicyConfig(**pol_raw)

    for g in raw.get("groups", []):
        cfg.groups.append(GroupConfig(id=str(g["id"]), members=list(g["members"])))
    for t in raw.get("traffic", []):
        cfg.traffic.append(
            TrafficItem(
                tick=t["tick"],
                node=t["node"],
                payload=t.get("payload"),
                payload_size=t.get("payload_size"),
            )
        )
    for a in raw.get("adversaries", []):
        known = set(AdversaryConfig.__dataclass_fields__)
        unknown = set(a) - known
        if unknown:
            raise ConfigurationError(f"adversaries: unknown field(s) {sorted(unknown)}")
        cfg.adversaries.append(AdversaryConfig(**a))
    for o in raw.get("node_overrides", []):
        o = dict(o)
        node = o.pop("node")
        cfg.node_overrides.append(NodeOverride(node=node, policies=o))

    cfg.validate()
    return cfg


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply repeated --set key=value flags (dotted paths) to a raw config."""
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"--set {item!r}: expected key=value")
        path, _, text = item.partition("=")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        target = raw
        parts = path.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value
    return raw


def load_config(path: str | Path, overrides: list[str] | None = None) -> ScenarioConfig:
    path = Path(path)
    if path.suffix == ".json":
        raw = json.loads(path.read_text())
    else:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return config_from_dict(raw)
