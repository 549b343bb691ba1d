"""Trust groups and per-node key collections.

A trust group is a set of nodes sharing one symmetric key; a node in
several groups holds several keys and acts as a bridge between them.
Key distribution is an out-of-band oracle: the scenario declares the
groups, no exchange protocol is simulated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .wire import GroupKey


class ConfigurationError(ValueError):
    """Scenario-level misconfiguration; the message names the field."""


@dataclass(frozen=True)
class TrustGroup:
    group_id: str
    members: frozenset[int]
    key: GroupKey

    def __post_init__(self):
        if len(self.members) < 2:
            raise ConfigurationError(
                f"group {self.group_id!r} has {len(self.members)} member(s); "
                "a usable group needs at least 2"
            )


@dataclass
class Keyring:
    """One node's keys. `keys` is the canonical declaration order.

    Trial decryption walks `trial_order()`; with mru_reorder a successful
    key moves to the front of that order. The canonical order is left
    untouched so enqueue/bridge behavior has no dependence on traffic.
    """

    owner: int
    keys: list[GroupKey] = field(default_factory=list)
    mru_reorder: bool = False
    _trial: list[GroupKey] | None = field(default=None, repr=False)

    def group_ids(self) -> list[str]:
        return [k.group_id for k in self.keys]

    def trial_order(self) -> list[GroupKey]:
        if self._trial is None:
            self._trial = list(self.keys)
        return self._trial

    def note_success(self, key: GroupKey) -> None:
        trial = self.trial_order()
        if self.mru_reorder and trial and trial[0] is not key:
            trial.remove(key)
            trial.insert(0, key)


def build_keyrings(
    groups: list[TrustGroup],
    node_ids: list[int],
    mru_reorder: bool = False,
) -> dict[int, Keyring]:
    """Map every node to the keys of exactly the groups it belongs to.

    A node belonging to no group could never communicate, so that is
    rejected as a configuration error.
    """
    known = set(node_ids)
    rings = {n: Keyring(owner=n, mru_reorder=mru_reorder) for n in node_ids}
    seen_ids: set[str] = set()
    for group in groups:
        if group.group_id in seen_ids:
            raise ConfigurationError(f"duplicate group id {group.group_id!r}")
        seen_ids.add(group.group_id)
        for member in group.members:
            if member not in known:
                raise ConfigurationError(
                    f"group {group.group_id!r} lists unknown node {member}"
                )
            rings[member].keys.append(group.key)
    for node, ring in rings.items():
        if not ring.keys:
            raise ConfigurationError(
                f"node {node} belongs to no group and could never communicate"
            )
    return rings


def co_membership_edges(groups: list[TrustGroup]) -> set[tuple[int, int]]:
    """Ground-truth social graph: all pairs sharing at least one group."""
    edges: set[tuple[int, int]] = set()
    for group in groups:
        members = sorted(group.members)
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                edges.add((a, b))
    return edges
