"""Distribute frontier URLs to fetch workers.

Every domain is owned by exactly one live worker.  A round hands each
domain's best URL to the owner's bounded inbox; a full inbox makes the
allocator skip that domain rather than dequeue and drop.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import InvalidParams, NoSurvivors, UnknownDomain
from .frontier import GlobalFrontier, PoolEntry

logger = logging.getLogger(__name__)

DEFAULT_INBOX_CAPACITY = 16

DELIVERED = "delivered"
DEFERRED = "deferred"


class WorkerInbox:
    def __init__(self, owner: int, capacity: int = DEFAULT_INBOX_CAPACITY, domains: Iterable[str] = ()):
        if capacity < 1:
            raise InvalidParams("inbox capacity must be >= 1")
        self.owner = owner
        self.capacity = capacity
        self.domains = set(domains)
        self.slots: deque[PoolEntry] = deque()

    def __len__(self):
        return len(self.slots)

    @property
    def full(self) -> bool:
        return len(self.slots) >= self.capacity

    def put(self, entry: PoolEntry) -> None:
        if self.full:
            raise OverflowError(f"inbox of worker {self.owner} is full")
        self.slots.append(entry)

    def get(self) -> Optional[PoolEntry]:
        return self.slots.popleft() if self.slots else None

    def drain(self) -> list[PoolEntry]:
        out = list(self.slots)
        self.slots.clear()
        return out


@dataclass
class Assignment:
    owner: dict[str, int]
    alive: list[bool]

    @classmethod
    def round_robin(cls, domains: Iterable[str], workers: int) -> "Assignment":
        """Domain i goes to worker i mod W (one worker per domain when W == D)."""
        if workers < 1:
            raise InvalidParams("need at least one worker")
        owner = {d: i % workers for i, d in enumerate(domains)}
        return cls(owner, [True] * workers)

    def live_workers(self) -> list[int]:
        return [w for w, ok in enumerate(self.alive) if ok]

    def domains_of(self, worker: int) -> set[str]:
        return {d for d, w in self.owner.items() if w == worker}

    def loads(self) -> dict[int, int]:
        counts = {w: 0 for w in self.live_workers()}
        for w in self.owner.values():
            counts[w] = counts.get(w, 0) + 1
        return counts

    def spread(self) -> int:
        loads = self.loads()
        return max(loads.values()) - min(loads.values())

    def copy(self) -> "Assignment":
        return Assignment(dict(self.owner), list(self.alive))


def make_inboxes(assignment: Assignment, capacity: int = DEFAULT_INBOX_CAPACITY) -> dict[int, WorkerInbox]:
    return {
        w: WorkerInbox(w, capacity, assignment.domains_of(w))
        for w in range(len(assignment.alive))
    }


@dataclass
class AllocatorStats:
    delivered: int = 0
    skipped_full: int = 0
    skipped_empty: int = 0
    routed: int = 0
    deferred: int = 0
    # Any dequeue from a domain whose owner inbox was full; must stay 0.
    dequeued_while_full: int = 0


@dataclass
class Allocator:
    frontier: GlobalFrontier
    assignment: Assignment
    inboxes: dict[int, WorkerInbox]
    stats: AllocatorStats = field(default_factory=AllocatorStats)

    def allocate_round(self) -> dict[int, list[PoolEntry]]:
        return allocate_round(self.frontier, self.assignment, self.inboxes, self.stats)

    def route(self, entry: PoolEntry, target_domain: str) -> str:
        return route(entry, target_domain, self.assignment, self.inboxes, self.frontier, self.stats)

    def rebalance_on_failure(self, failed: int) -> Assignment:
        self.assignment = rebalance_on_failure(
            failed, self.assignment, self.inboxes, self.frontier, self.stats
        )
        return self.assignment


def allocate_round(frontier: GlobalFrontier, assignment: Assignment,
                   inboxes: dict[int, WorkerInbox],
                   stats: Optional[AllocatorStats] = None) -> dict[int, list[PoolEntry]]:
    """Move at most one URL per domain into its owner's inbox."""
    stats = stats if stats is not None else AllocatorStats()
    delivered: dict[int, list[PoolEntry]] = {}
    for domain in sorted(assignment.owner):
        inbox = inboxes[assignment.owner[domain]]
        if inbox.full:
            stats.skipped_full += 1
            continue
        entry = frontier.dequeue(domain)
        if entry is None:
            stats.skipped_empty += 1
            continue
        if inbox.full:
            stats.dequeued_while_full += 1
        frontier.record_request(entry.url)
        inbox.put(entry)
        delivered.setdefault(inbox.owner, []).append(entry)
        stats.delivered += 1
    return delivered


def route(entry: PoolEntry, target_domain: str, assignment: Assignment,
          inboxes: dict[int, WorkerInbox], frontier: GlobalFrontier,
          stats: Optional[AllocatorStats] = None) -> str:
    """Deliver ``entry`` to the worker owning ``target_domain`` or defer it."""
    if target_domain not in assignment.owner:
        raise UnknownDomain(f"unknown domain {target_domain!r}")
    entry.domain = target_domain
    inbox = inboxes[assignment.owner[target_domain]]
    if inbox.full:
        frontier.requeue(entry)
        if stats is not None:
            stats.deferred += 1
        return DEFERRED
    inbox.put(entry)
    if stats is not None:
        stats.routed += 1
    return DELIVERED


def rebalance_on_failure(failed: int, assignment: Assignment,
                         inboxes: Optional[dict[int, WorkerInbox]] = None,
                         frontier: Optional[GlobalFrontier] = None,
                         stats: Optional[AllocatorStats] = None) -> Assignment:
    """Hand a dead worker's domains to the least-loaded survivors.

    Domains move one at a time, each to the live worker with the fewest
    domains (lowest id on ties).  Entries stranded in the dead worker's
    inbox are re-routed to the new owners.
    """
    if not 0 <= failed < len(assignment.alive):
        raise InvalidParams(f"no worker {failed}")
    if not assignment.alive[failed]:
        return assignment
    survivors = [w for w in assignment.live_workers() if w != failed]
    if not survivors:
        raise NoSurvivors(f"worker {failed} is the only live worker")

    new = assignment.copy()
    new.alive[failed] = False
    for domain in sorted(d for d, w in assignment.owner.items() if w == failed):
        loads = new.loads()
        target = min(survivors, key=lambda w: (loads.get(w, 0), w))
        new.owner[domain] = target
        logger.info("domain %s moved from worker %d to %d", domain, failed, target)

    if inboxes is not None:
        for w, inbox in inboxes.items():
            inbox.domains = new.domains_of(w) if new.alive[w] else set()
        stranded = inboxes[failed].drain()
        if stranded and frontier is None:
            raise ValueError("re-routing stranded entries needs the frontier")
        for entry in stranded:
            route(entry, entry.domain, new, inboxes, frontier, stats)
    return new
