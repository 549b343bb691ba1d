"""Per-node protocol state machine.

Covers the whole receive/forward pipeline: submission, trial decryption,
the seen-log and freshness filtering, pool scheduling, constant-rate
emission with cover traffic, and the source whitelist/blacklist cache.

Design notes that matter for behavior:

* The pool stores plaintext entries; every emission re-encrypts with a
  fresh nonce. Store-carry-forward re-emits the same message over time,
  and byte-identical re-emissions would make frames linkable across hops.
* Forwarded and freshly submitted messages go through the identical
  emission path, so origination is not distinguishable on the wire.
* Staleness is one disjunction: too old, overheard too often, or
  retransmitted too often. The overheard cap doubles as the spam filter.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from .keyring import Keyring
from .wire import GroupKey, encode_frame, make_cover_frame, max_payload, message_id, try_decrypt

DEFAULT_TX_PERIOD = 4
DEFAULT_FRESHNESS_AGE = 2000
DEFAULT_OVERHEARD_CAP = 20
DEFAULT_RETRANSMIT_CAP = 10
DEFAULT_POOL_CAP = 256


class Scheduler(str, enum.Enum):
    FIFO = "fifo"
    LEAST_POPULAR = "least-popular"


class RxOutcome(str, enum.Enum):
    UNREADABLE = "discarded-unreadable"
    STALE = "discarded-stale"
    DUPLICATE = "duplicate"
    DELIVERED = "delivered"
    SKIPPED = "skipped-blacklisted"


@dataclass
class NodePolicies:
    tx_period: int = DEFAULT_TX_PERIOD
    freshness_age: int = DEFAULT_FRESHNESS_AGE
    overheard_cap: int = DEFAULT_OVERHEARD_CAP
    retransmit_cap: int = DEFAULT_RETRANSMIT_CAP
    scheduler: Scheduler = Scheduler.FIFO
    source_cache: bool = False
    source_fail_threshold: int = 3
    source_cache_expiry: int = 500
    seen_forget: int = 4000
    pool_cap: int = DEFAULT_POOL_CAP

    def validate(self) -> None:
        for name in (
            "tx_period",
            "freshness_age",
            "overheard_cap",
            "retransmit_cap",
            "source_fail_threshold",
            "source_cache_expiry",
            "seen_forget",
            "pool_cap",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"policy {name} must be positive")
        if self.seen_forget < self.freshness_age:
            raise ValueError("seen_forget must be >= freshness_age")


@dataclass
class SeenRecord:
    id: bytes
    first_seen: int
    overheard_count: int = 0
    retransmit_count: int = 0
    delivered_up: bool = False


@dataclass
class PoolEntry:
    id: bytes
    payload: bytes
    group_id: str
    emit_count: int = 0


@dataclass
class SourceCacheEntry:
    whitelisted: bool = False
    consecutive_failures: int = 0
    last_heard: int = 0


def is_stale(record: SeenRecord, now: int, policies: NodePolicies) -> bool:
    return (
        now - record.first_seen > policies.freshness_age
        or record.overheard_count >= policies.overheard_cap
        or record.retransmit_count >= policies.retransmit_cap
    )


@dataclass
class Emission:
    """What a node put on the air in one slot, plus ground truth for logs."""

    frame: bytes
    is_cover: bool
    msg_id: bytes | None = None
    group_id: str | None = None


class Node:
    """One protocol participant.

    Single-threaded per node; the simulator presents each frame delivery
    to exactly one node at a time.
    """

    def __init__(
        self,
        node_id: int,
        keyring: Keyring,
        policies: NodePolicies,
        phase: int,
        frame_size: int,
        rng: random.Random,
    ):
        if not 0 <= phase < policies.tx_period:
            raise ValueError("phase must lie in [0, tx_period)")
        self.node_id = node_id
        self.keyring = keyring
        self.policies = policies
        self.phase = phase
        self.frame_size = frame_size
        self.rng = rng
        self.seen: dict[bytes, SeenRecord] = {}
        self.pool: list[PoolEntry] = []
        self.source_cache: dict[int, SourceCacheEntry] = {}
        # counters for the performance / battery metrics
        self.decrypt_attempts_total = 0
        self.emissions_total = 0
        self.cover_emissions = 0
        self.deliveries: list[tuple[bytes, int]] = []
        self.stale_drops = 0
        self.pool_overflows = 0
        # first tick a staleness / overflow event happened, for judging
        # whether the contact oracle's assumptions held long enough
        self.first_stale_tick: int | None = None
        self.first_overflow_tick: int | None = None

    # -- keys ---------------------------------------------------------------

    def _key_for(self, group_id: str) -> GroupKey:
        for key in self.keyring.keys:
            if key.group_id == group_id:
                return key
        raise KeyError(f"node {self.node_id} holds no key for group {group_id!r}")

    # -- sending ------------------------------------------------------------

    def submit_message(self, payload: bytes, now: int) -> bytes:
        """Accept an application-layer payload for anonymous dissemination.

        Returns the message id. The originator is marked delivered so it
        never re-delivers its own message to itself.
        """
        if len(payload) > max_payload(self.frame_size):
            raise ValueError(
                f"payload of {len(payload)} octets exceeds max_payload "
                f"{max_payload(self.frame_size)}"
            )
        mid = message_id(payload)
        record = self.seen.get(mid)
        if record is None:
            record = SeenRecord(id=mid, first_seen=now, delivered_up=True)
            self.seen[mid] = record
        record.delivered_up = True
        self._enqueue_all_groups(mid, payload, now)
        return mid

    def _enqueue_all_groups(self, mid: bytes, payload: bytes, now: int) -> None:
        present = {(e.id, e.group_id) for e in self.pool}
        for group_id in self.keyring.group_ids():
            if (mid, group_id) in present:
                continue
            while len(self.pool) >= self.policies.pool_cap:
                self._drop_most_popular(now)
            self.pool.append(PoolEntry(id=mid, payload=payload, group_id=group_id))

    def _popularity(self, entry: PoolEntry) -> tuple:
        # Least-popular order: fewest overheard+retransmit, then oldest,
        # then message id; emit_count/group break the remaining tie so the
        # entries of one message alternate groups deterministically.
        record = self.seen[entry.id]
        return (
            record.overheard_count + record.retransmit_count,
            record.first_seen,
            entry.id,
            entry.emit_count,
            entry.group_id,
        )

    def _drop_most_popular(self, now: int) -> None:
        victim = max(self.pool, key=self._popularity)
        self.pool.remove(victim)
        self.pool_overflows += 1
        if self.first_overflow_tick is None:
            self.first_overflow_tick = now

    # -- receiving ----------------------------------------------------------

    def on_frame_received(
        self, frame: bytes, source_link_id: int, now: int
    ) -> tuple[RxOutcome, int]:
        """Process one overheard frame; returns (outcome, decrypt attempts)."""
        if not self._source_cache_should_try(source_link_id, now):
            self._touch_source(source_link_id, now)
            return RxOutcome.SKIPPED, 0

        payload = None
        attempts = 0
        matched_key = None
        for key in list(self.keyring.trial_order()):
            attempts += 1
            payload = try_decrypt(frame, key, self.frame_size)
            if payload is not None:
                matched_key = key
                break
        self.decrypt_attempts_total += attempts

        if payload is None:
            self._source_cache_update(source_link_id, now, success=False)
            return RxOutcome.UNREADABLE, attempts
        self.keyring.note_success(matched_key)
        self._source_cache_update(source_link_id, now, success=True)

        mid = message_id(payload)
        record = self.seen.get(mid)
        if record is None:
            record = SeenRecord(id=mid, first_seen=now)
            self.seen[mid] = record
        record.overheard_count += 1

        if record.delivered_up:
            return RxOutcome.DUPLICATE, attempts
        if is_stale(record, now, self.policies):
            if self.first_stale_tick is None:
                self.first_stale_tick = now
            return RxOutcome.STALE, attempts
        record.delivered_up = True
        self.deliveries.append((mid, now))
        self._enqueue_all_groups(mid, payload, now)
        return RxOutcome.DELIVERED, attempts

    # -- source whitelist / blacklist ---------------------------------------

    def _touch_source(self, source: int, now: int) -> None:
        entry = self.source_cache.get(source)
        if entry is not None:
            entry.last_heard = now

    def _source_cache_should_try(self, source: int, now: int) -> bool:
        if not self.policies.source_cache:
            return True
        entry = self.source_cache.get(source)
        if entry is None:
            return True
        if now - entry.last_heard > self.policies.source_cache_expiry:
            del self.source_cache[source]
            return True
        if entry.whitelisted:
            return True
        return entry.consecutive_failures < self.policies.source_fail_threshold

    def _source_cache_update(self, source: int, now: int, success: bool) -> None:
        if not self.policies.source_cache:
            return
        entry = self.source_cache.setdefault(source, SourceCacheEntry())
        entry.last_heard = now
        if success:
            entry.whitelisted = True
            entry.consecutive_failures = 0
        else:
            entry.consecutive_failures += 1

    # -- transmit slot ------------------------------------------------------

    def _pick_entry(self, now: int) -> PoolEntry | None:
        """Next schedulable pool entry; stale entries are dropped on the way."""
        while self.pool:
            if self.policies.scheduler is Scheduler.LEAST_POPULAR:
                entry = min(self.pool, key=self._popularity)
            else:
                entry = self.pool[0]
            if is_stale(self.seen[entry.id], now, self.policies):
                self.pool.remove(entry)
                self.stale_drops += 1
                if self.first_stale_tick is None:
                    self.first_stale_tick = now
                continue
            return entry
        return None

    def on_transmit_slot(self, now: int) -> Emission:
        """Emit exactly one frame: the scheduled entry, or cover when idle.

        Real entries are re-encrypted with a fresh nonce each emission,
        so the same code path serves origination and forwarding and no
        two emissions are byte-identical.
        """
        self.emissions_total += 1
        entry = self._pick_entry(now)
        if entry is None:
            self.cover_emissions += 1
            return Emission(
                frame=make_cover_frame(self.rng, self.frame_size), is_cover=True
            )
        frame = encode_frame(
            entry.payload, self._key_for(entry.group_id), self.rng, self.frame_size
        )
        self.seen[entry.id].retransmit_count += 1
        entry.emit_count += 1
        if self.policies.scheduler is Scheduler.FIFO:
            self.pool.remove(entry)
            self.pool.append(entry)
        return Emission(
            frame=frame, is_cover=False, msg_id=entry.id, group_id=entry.group_id
        )

    # -- housekeeping -------------------------------------------------------

    def forget_old_seen(self, now: int) -> None:
        """Bound seen-log memory; drops pool entries of forgotten records.

        A record at exactly seen_forget ticks of age is retained (strict
        inequality). Entries of forgotten records are necessarily stale
        already because seen_forget >= freshness_age.
        """
        cutoff = self.policies.seen_forget
        forgotten = {
            mid for mid, rec in self.seen.items() if now - rec.first_seen > cutoff
        }
        if not forgotten:
            return
        self.seen = {m: r for m, r in self.seen.items() if m not in forgotten}
        self.pool = [e for e in self.pool if e.id not in forgotten]
