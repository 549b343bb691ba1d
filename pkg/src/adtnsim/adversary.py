"""Adversary observers, attacks, and the anonymity/performance metrics.

Adversaries never read node-internal state: they consume an
ObservationLog (what was audible in their scope) plus whatever group
keys they hold. Ground truth from the run is used exclusively to score
the attacks, never to power them, with one deliberate exception: the
candidate-set construction is given the group membership map so it can
widen candidate sets through non-compromised bridging groups, which
upper-bounds what a well-informed adversary could infer.

Anonymity is quantified as 1 - 1/|candidate set|. An external observer
sees only equal-sized noise at constant rate, so every message's sender
and recipient anonymity is 1 - 1/N. Recipient anonymity stays 1 - 1/N
for every adversary: no frame carries addressing, so no attack here
outputs a recipient candidate set smaller than the whole network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .config import ScenarioConfig
from .keyring import co_membership_edges
from .netsim import EmissionEvent, RunReport, distance
from .wire import GroupKey, message_id, try_decrypt


# -- observation ------------------------------------------------------------


@dataclass
class ObsEntry:
    tick: int
    emitter: int
    position: tuple[float, float]
    frame: bytes


@dataclass
class ObservationLog:
    """Adversary-visible record: emissions audible in scope, nothing else."""

    entries: list[ObsEntry]
    scope: str  # "global" or "disk"


@dataclass
class AdversaryView:
    compromised_keys: list[GroupKey]
    log: ObservationLog

    def is_internal(self) -> bool:
        return bool(self.compromised_keys)


def observe(
    report: RunReport,
    scope: str = "global",
    center: tuple[float, float] | None = None,
    radius: float = 0.0,
    trajectory: list[tuple[int, tuple[float, float]]] | None = None,
) -> ObservationLog:
    """Filter ground-truth emissions down to what an observer could hear.

    A disk observer hears emissions whose emitter is inside its disk at
    emission time; a trajectory makes the disk mobile (piecewise
    constant center).
    """
    cfg = report.config
    entries = []
    for event in report.events:
        if scope == "disk":
            c = center or (0.0, 0.0)
            if trajectory:
                for t, p in trajectory:
                    if t <= event.tick:
                        c = p
            if distance(event.position, c, cfg) > radius:
                continue
        entries.append(
            ObsEntry(
                tick=event.tick,
                emitter=event.emitter,
                position=event.position,
                frame=event.frame,
            )
        )
    return ObservationLog(entries=entries, scope=scope)


# -- linkability ------------------------------------------------------------


@dataclass
class LinkerResult:
    linked_pairs: list[tuple[int, int]]  # indices into log.entries
    precision: float  # vacuously 1.0 when no links found


def equality_linker(
    log: ObservationLog, truth: dict[bytes, bytes] | None = None
) -> LinkerResult:
    """Link observations with byte-identical frames.

    On a protocol-compliant run every emission is fresh ciphertext or
    fresh randomness, so this finds nothing. `truth` maps frame bytes to
    message id (ground truth, scoring only).
    """
    by_frame: dict[bytes, list[int]] = {}
    for i, entry in enumerate(log.entries):
        by_frame.setdefault(entry.frame, []).append(i)
    pairs = []
    for indices in by_frame.values():
        for i, a in enumerate(indices):
            for b in indices[i + 1 :]:
                pairs.append((a, b))
    if not pairs:
        return LinkerResult(linked_pairs=[], precision=1.0)
    if truth is None:
        return LinkerResult(linked_pairs=pairs, precision=float("nan"))
    true_links = sum(
        1
        for a, b in pairs
        if truth.get(log.entries[a].frame) is not None
        and truth.get(log.entries[a].frame) == truth.get(log.entries[b].frame)
    )
    return LinkerResult(linked_pairs=pairs, precision=true_links / len(pairs))


# -- distinguishability -----------------------------------------------------


@dataclass
class DistinguishabilityResult:
    chi2_p_value: float | None
    per_position_p_min: float | None
    classifier_accuracy: float | None
    n_frames: int
    n_cover: int
    n_real: int
    underpowered: bool = False
    single_class: bool = False


def _frame_features(frames: np.ndarray) -> np.ndarray:
    """Byte-statistics features per frame: mean, std, own-histogram chi2."""
    mean = frames.mean(axis=1)
    std = frames.std(axis=1)
    chi = np.empty(len(frames))
    expected = frames.shape[1] / 256.0
    for i, row in enumerate(frames):
        counts = np.bincount(row, minlength=256)
        chi[i] = ((counts - expected) ** 2 / expected).sum()
    return np.column_stack([mean, std, chi])


def distinguishability_test(
    frames: list[bytes],
    labels: list[bool],  # True = cover; ground truth, scoring only
    min_frames: int = 10_000,
    min_per_class: int = 100,
) -> DistinguishabilityResult:
    """Can byte statistics tell cover from real traffic?

    Reports a pooled per-position chi-square uniformity p-value (the
    per-position statistics are summed, which is the additive combination
    of the independent per-position tests) and the held-out accuracy of a
    nearest-centroid classifier over simple byte statistics.
    """
    n_cover = sum(labels)
    n_real = len(labels) - n_cover
    result = DistinguishabilityResult(
        chi2_p_value=None,
        per_position_p_min=None,
        classifier_accuracy=None,
        n_frames=len(frames),
        n_cover=n_cover,
        n_real=n_real,
    )
    if n_cover == 0 or n_real == 0:
        result.single_class = True
    if len(frames) < min_frames or (
        not result.single_class and min(n_cover, n_real) < min_per_class
    ):
        result.underpowered = True
        return result

    arr = np.frombuffer(b"".join(frames), dtype=np.uint8).reshape(len(frames), -1)
    n, width = arr.shape
    expected = n / 256.0
    total_stat = 0.0
    p_min = 1.0
    for pos in range(width):
        counts = np.bincount(arr[:, pos], minlength=256)
        stat = ((counts - expected) ** 2 / expected).sum()
        total_stat += stat
        p_min = min(p_min, stats.chi2.sf(stat, 255))
    result.chi2_p_value = float(stats.chi2.sf(total_stat, 255 * width))
    result.per_position_p_min = float(p_min)

    if result.single_class:
        return result

    features = _frame_features(arr)
    y = np.array(labels)
    # deterministic stratified split: every other frame of each class
    train = np.zeros(n, dtype=bool)
    for cls in (True, False):
        idx = np.where(y == cls)[0]
        train[idx[::2]] = True
    test = ~train
    mu = features[train].mean(axis=0)
    sigma = features[train].std(axis=0)
    sigma[sigma == 0] = 1.0
    z = (features - mu) / sigma
    centroid_cover = z[train & y].mean(axis=0)
    centroid_real = z[train & ~y].mean(axis=0)
    d_cover = ((z - centroid_cover) ** 2).sum(axis=1)
    d_real = ((z - centroid_real) ** 2).sum(axis=1)
    predicted = d_cover < d_real
    result.classifier_accuracy = float((predicted[test] == y[test]).mean())
    return result


# -- anonymity --------------------------------------------------------------


@dataclass
class AnonymityEntry:
    msg_id: bytes
    true_origin: int
    candidate_set: set[int]
    sender_anonymity: float
    recipient_anonymity: float


@dataclass
class AnonymityReport:
    entries: list[AnonymityEntry]
    social_edges: set[tuple[int, int]] = field(default_factory=set)
    social_precision: float = 1.0
    social_recall: float = 0.0


def _decryptable_emissions(
    view: AdversaryView, frame_size: int
) -> list[tuple[int, int, tuple[float, float], bytes, str]]:
    """(tick, emitter, position, msg_id, group_id) for readable log entries."""
    out = []
    cache: dict[bytes, tuple[bytes, str] | None] = {}
    for entry in view.log.entries:
        if entry.frame not in cache:
            found = None
            for key in view.compromised_keys:
                payload = try_decrypt(entry.frame, key, frame_size)
                if payload is not None:
                    found = (message_id(payload), key.group_id)
                    break
            cache[entry.frame] = found
        found = cache[entry.frame]
        if found is not None:
            out.append((entry.tick, entry.emitter, entry.position, *found))
    return out


def sender_anonymity(
    view: AdversaryView,
    cfg: ScenarioConfig,
    target: bytes,
    true_origin: int,
) -> AnonymityEntry:
    """Candidate-originator set and anonymity for one message.

    External view: every node is a candidate. Internal view: per
    compromised group, the node first heard emitting a readable copy is
    a seed candidate; seeds whose acquisition is explained by an earlier
    audible readable emission in range are dropped, and the remainder is
    widened with every non-compromised group bridging to it. With all
    groups compromised and global scope this collapses to the true
    originator.
    """
    n = cfg.nodes.count
    all_nodes = set(cfg.node_ids())
    external = AnonymityEntry(
        msg_id=target,
        true_origin=true_origin,
        candidate_set=set(all_nodes),
        sender_anonymity=1 - 1 / n,
        recipient_anonymity=1 - 1 / n,
    )
    if not view.is_internal():
        return external

    readable = [
        e for e in _decryptable_emissions(view, cfg.frame_size) if e[3] == target
    ]
    if not readable:
        return external

    members = {g.id: set(g.members) for g in cfg.groups}
    compromised = {k.group_id for k in view.compromised_keys}

    # first audible emitter per compromised group
    first_by_group: dict[str, tuple[int, int]] = {}
    for tick, emitter, _pos, _mid, gid in sorted(readable, key=lambda e: (e[0], e[1])):
        if gid not in first_by_group:
            first_by_group[gid] = (tick, emitter)

    # last known position of each emitter up to a given tick
    positions: dict[int, list[tuple[int, tuple[float, float]]]] = {}
    for entry in view.log.entries:
        positions.setdefault(entry.emitter, []).append((entry.tick, entry.position))

    def position_near(emitter: int, tick: int):
        best = None
        for t, p in positions.get(emitter, []):
            if best is None or abs(t - tick) < abs(best[0] - tick):
                best = (t, p)
        return best[1] if best else None

    candidates: set[int] = set()
    for gid, (first_tick, seed) in first_by_group.items():
        explained = False
        for tick, emitter, pos, _mid, ogid in readable:
            if tick >= first_tick or emitter == seed:
                continue
            if seed not in members.get(ogid, set()):
                continue
            seed_pos = position_near(seed, tick)
            if seed_pos is None:
                continue
            if distance(pos, seed_pos, cfg) <= cfg.arena.radio_range:
                explained = True
                break
        if not explained:
            candidates.add(seed)

    # widen through non-compromised groups bridging to the candidates
    changed = True
    while changed:
        changed = False
        for gid, group_members in members.items():
            if gid in compromised:
                continue
            if group_members & candidates and not group_members <= candidates:
                candidates |= group_members
                changed = True

    if not candidates:
        candidates = set(all_nodes)
    return AnonymityEntry(
        msg_id=target,
        true_origin=true_origin,
        candidate_set=candidates,
        sender_anonymity=1 - 1 / len(candidates),
        recipient_anonymity=1 - 1 / n,
    )


def social_graph_recovery(
    view: AdversaryView, cfg: ScenarioConfig
) -> tuple[set[tuple[int, int]], float, float]:
    """Recover trust edges from who rebroadcasts the same readable message.

    Returns (edges, precision, recall) against the ground-truth
    co-membership graph restricted to compromised groups. External views
    recover nothing by definition.
    """
    compromised = {k.group_id for k in view.compromised_keys}
    truth = co_membership_edges(
        [g for g in cfg.trust_groups() if g.group_id in compromised]
    )
    if not view.is_internal():
        return set(), 1.0, 0.0
    emitters_by_key: dict[tuple[bytes, str], set[int]] = {}
    for _tick, emitter, _pos, mid, gid in _decryptable_emissions(
        view, cfg.frame_size
    ):
        if emitter >= 0:
            emitters_by_key.setdefault((mid, gid), set()).add(emitter)
    edges: set[tuple[int, int]] = set()
    for group in emitters_by_key.values():
        ordered = sorted(group)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                edges.add((a, b))
    precision = (len(edges & truth) / len(edges)) if edges else 1.0
    recall = (len(edges & truth) / len(truth)) if truth else 0.0
    return edges, precision, recall


def attack_report(view: AdversaryView, report: RunReport) -> AnonymityReport:
    """Full anonymity report: one entry per scripted message plus the
    recovered social graph."""
    cfg = report.config
    entries = [
        sender_anonymity(view, cfg, mid, origin)
        for mid, origin, _tick in report.submissions
    ]
    edges, precision, recall = social_graph_recovery(view, cfg)
    return AnonymityReport(
        entries=entries,
        social_edges=edges,
        social_precision=precision,
        social_recall=recall,
    )


# -- performance ------------------------------------------------------------


@dataclass
class MessageMetrics:
    msg_id: bytes
    origin: int
    submit_tick: int
    delivered_count: int
    delivery_ratio: float
    mean_latency: float | None
    max_latency: int | None
    diffusion_50: int | None
    diffusion_90: int | None
    diffusion_100: int | None


@dataclass
class PerformanceMetrics:
    messages: list[MessageMetrics]
    emissions_total: int
    cover_fraction: float
    decrypt_attempts: dict[int, int]
    delivery_ratio_mean: float | None


def _diffusion_tick(ticks: list[int], submit: int, need: int) -> int | None:
    if len(ticks) < need:
        return None
    return sorted(ticks)[need - 1]


def performance_metrics(report: RunReport) -> PerformanceMetrics:
    cfg = report.config
    n = cfg.nodes.count
    messages = []
    for mid, origin, submit_tick in report.submissions:
        table = report.deliveries.get(mid, {origin: submit_tick})
        ticks = list(table.values())
        latencies = [t - submit_tick for node, t in table.items() if node != origin]
        messages.append(
            MessageMetrics(
                msg_id=mid,
                origin=origin,
                submit_tick=submit_tick,
                delivered_count=len(table),
                delivery_ratio=len(table) / n,
                mean_latency=(sum(latencies) / len(latencies)) if latencies else None,
                max_latency=max(latencies) if latencies else None,
                diffusion_50=_diffusion_tick(ticks, submit_tick, math.ceil(0.5 * n)),
                diffusion_90=_diffusion_tick(ticks, submit_tick, math.ceil(0.9 * n)),
                diffusion_100=_diffusion_tick(ticks, submit_tick, n),
            )
        )
    protocol_events = [e for e in report.events if e.kind != "garbage"]
    cover = sum(1 for e in protocol_events if e.kind == "cover")
    ratios = [m.delivery_ratio for m in messages]
    return PerformanceMetrics(
        messages=messages,
        emissions_total=len(protocol_events),
        cover_fraction=(cover / len(protocol_events)) if protocol_events else 1.0,
        decrypt_attempts={
            node: s["decrypt_attempts"] for node, s in report.node_stats.items()
        },
        delivery_ratio_mean=(sum(ratios) / len(ratios)) if ratios else None,
    )


def frame_truth(events: list[EmissionEvent]) -> dict[bytes, bytes]:
    """frame bytes -> message id, for scoring linkers."""
    return {e.frame: e.msg_id for e in events if e.msg_id is not None}
