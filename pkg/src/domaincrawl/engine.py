"""Round-based crawl orchestration and run metrics.

One round is: allocate (one URL per domain into owner inboxes), let every
live worker fetch up to ``fetches_per_round`` pages concurrently, then feed
the analyzer output to the dispatcher in worker-id order and flush the
pending batch.  Progress is counted in rounds so speedups do not depend on
the host machine.

Within a round the workers touch disjoint URLs (admission is exactly-once),
so the report is independent of thread interleaving.  The one exception is
which of two same-body URLs fetched in the same round gets stored first,
and the report only carries counts.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import simweb
from .allocator import Allocator, Assignment, make_inboxes
from .analyzer import PageAnalyzer
from .config import Config
from .dispatcher import FAILED, FETCHED, Dispatcher, UrlDatabase
from .errors import ConfigError, InvariantViolation
from .fetcher import FetchBackend, HttpBackend, PolitenessGate, Repository, worker_cycle
from .frontier import UNCLASSIFIED, DomainProfile, build_frontier, with_unclassified

logger = logging.getLogger(__name__)

EXHAUSTED = "exhausted"
MAX_PAGES = "max_pages"
MAX_ROUNDS = "max_rounds"


@dataclass
class CrawlReport:
    stop_reason: str
    rounds: int
    fetched_total: int
    pages_ok: int
    fetch_errors: int
    per_domain_fetched: dict[str, int]
    per_worker_fetched: dict[str, int]
    url_overlap: int
    content_duplicates: int
    stored_bodies: int
    frontier_residue: dict[str, int]
    flush_events: int
    total_discoveries: int
    malformed_links: int
    allocations: dict[str, int]
    assignment: dict[str, int]
    dead_workers: list[int]
    post_rebalance_spread: Optional[int]
    per_round_fetched: list[int]
    misclassified: Optional[int] = None
    coverage: Optional[float] = None
    alias_fetched: Optional[int] = None
    wall_time_s: float = 0.0

    def to_json(self, include_wall_time: bool = True) -> dict:
        out = asdict(self)
        if not include_wall_time:
            out.pop("wall_time_s")
        return out


class CrawlEngine:
    def __init__(self, config: Config, backend: Optional[FetchBackend] = None,
                 web: Optional[simweb.SyntheticWeb] = None):
        self.config = config
        self.web = web
        if backend is None:
            backend, self.web = self._make_backend(config, web)
        self.backend = backend

        profiles = self._resolve_seeds(config.domains)
        self.profiles = with_unclassified(profiles)
        out_dir = config.output_dir or (Path("crawl-out") if config.backend.kind == "live" else None)
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
        self.frontier = build_frontier(self.profiles, config.score_weights)
        self.url_db = UrlDatabase(out_dir / "urldb.jsonl" if out_dir else None)
        for prof in self.profiles:
            for seed in prof.seeds:
                self.url_db.add_seed(seed, prof.name)

        assignment = Assignment.round_robin([p.name for p in self.profiles], config.workers)
        self.allocator = Allocator(self.frontier, assignment, make_inboxes(assignment, config.inbox_capacity))
        self.repo = Repository(out_dir)
        self.analyzer = PageAnalyzer(self.profiles, self.url_db)
        self.dispatcher = Dispatcher(self.frontier, self.url_db, self.profiles, config.batch_size)
        self.politeness = PolitenessGate(config.politeness_ms / 1000.0)

        self.rounds = 0
        self.processed = 0
        self.ok_urls: list[str] = []
        self.failed_urls: list[str] = []
        self.per_worker: dict[int, int] = {w: 0 for w in range(config.workers)}
        self.per_round: list[int] = []
        self.post_rebalance_spread: Optional[int] = None
        self.stop_reason: Optional[str] = None

    @staticmethod
    def _make_backend(config: Config, web):
        spec = config.backend
        if spec.kind == "live":
            return HttpBackend(timeout=spec.timeout_s), None
        if web is None:
            if spec.graph_file is not None:
                try:
                    web = simweb.load_graph(spec.graph_file)
                except FileNotFoundError:
                    raise ConfigError(f"graph file not found: {spec.graph_file}") from None
            else:
                web = simweb.generate(spec.graph_params or simweb.GraphParams())
        return simweb.SimBackend(web), web

    def _resolve_seeds(self, domains: list[DomainProfile]) -> list[DomainProfile]:
        out = []
        for prof in domains:
            if not prof.seeds and self.web is not None:
                seed = self.web.truth.seeds.get(prof.name)
                if seed is None:
                    raise InvariantViolation(f"domain {prof.name!r} has no seeds and none in the graph")
                prof = DomainProfile(prof.name, prof.keywords, (seed,))
            out.append(prof)
        return out

    # -- the round loop --------------------------------------------------

    def exhausted(self) -> bool:
        if self.frontier.pending():
            return False
        return all(len(ib) == 0 for ib in self.allocator.inboxes.values())

    def _stop_reason(self) -> Optional[str]:
        cfg = self.config
        if cfg.max_pages is not None and self.processed >= cfg.max_pages:
            return MAX_PAGES
        if cfg.max_rounds is not None and self.rounds >= cfg.max_rounds:
            return MAX_ROUNDS
        if self.exhausted():
            return EXHAUSTED
        return None

    def step(self, pool: Optional[ThreadPoolExecutor] = None) -> int:
        """Run one round; returns the number of URLs processed in it."""
        self.rounds += 1
        kill = self.config.kill_worker
        if kill is not None and kill[1] == self.rounds:
            assignment = self.allocator.rebalance_on_failure(kill[0])
            self.post_rebalance_spread = assignment.spread()
            logger.info("worker %d killed before round %d", kill[0], self.rounds)

        self.allocator.allocate_round()
        live = self.allocator.assignment.live_workers()

        def run(w):
            return worker_cycle(
                w, self.allocator.inboxes[w], self.backend, self.repo,
                sink=self.analyzer.sink_for(w), politeness=self.politeness,
                round_no=self.rounds, budget=self.config.fetches_per_round,
            )

        if pool is not None and len(live) > 1:
            reports = list(pool.map(run, live))
        else:
            reports = [run(w) for w in live]

        done = 0
        for rep in reports:
            for entry in rep.fetched:
                self.url_db.set_state(entry.key, FETCHED)
                self.ok_urls.append(entry.key)
            for entry in rep.failed:
                self.url_db.set_state(entry.key, FAILED)
                self.failed_urls.append(entry.key)
            n = len(rep.fetched) + len(rep.failed)
            self.per_worker[rep.worker] += n
            done += n
            for links, domain in self.analyzer.take(rep.worker):
                self.dispatcher.process_links(links, domain)
        self.dispatcher.end_cycle()
        self.processed += done
        self.per_round.append(done)
        return done

    def run(self) -> CrawlReport:
        started = time.monotonic()
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            while True:
                reason = self._stop_reason()
                if reason is not None:
                    self.stop_reason = reason
                    break
                self.step(pool)
        report = compute_metrics(self)
        report.wall_time_s = round(time.monotonic() - started, 6)
        return report


def compute_metrics(engine: CrawlEngine, truth: Optional[simweb.Truth] = None) -> CrawlReport:
    repo = engine.repo
    names = sorted(p.name for p in engine.profiles)
    per_domain = {n: 0 for n in names}
    for url in engine.ok_urls:
        per_domain[repo.domain_of(url) or UNCLASSIFIED] += 1

    stats = engine.allocator.stats
    assignment = engine.allocator.assignment
    report = CrawlReport(
        stop_reason=engine.stop_reason or "incomplete",
        rounds=engine.rounds,
        fetched_total=engine.processed,
        pages_ok=len(engine.ok_urls),
        fetch_errors=len(engine.failed_urls),
        per_domain_fetched=per_domain,
        per_worker_fetched={str(w): n for w, n in sorted(engine.per_worker.items())},
        url_overlap=engine.backend.url_overlap(),
        content_duplicates=len(repo.duplicate_log),
        stored_bodies=len(repo.records),
        frontier_residue={n: engine.frontier.pending(n) for n in names},
        flush_events=engine.dispatcher.stats.flush_events,
        total_discoveries=engine.dispatcher.stats.discovered,
        malformed_links=engine.dispatcher.stats.malformed,
        allocations={
            "delivered": stats.delivered,
            "routed": stats.routed,
            "deferred": stats.deferred,
            "skipped_full": stats.skipped_full,
        },
        assignment=dict(sorted(assignment.owner.items())),
        dead_workers=[w for w, ok in enumerate(assignment.alive) if not ok],
        post_rebalance_spread=engine.post_rebalance_spread,
        per_round_fetched=list(engine.per_round),
    )

    web = engine.web
    truth = truth or (web.truth if web is not None else None)
    if truth is not None:
        ok = set(engine.ok_urls)
        report.misclassified = sum(
            1 for url in ok
            if truth.domain_of(url) is not None and repo.domain_of(url) != truth.domain_of(url)
        )
        fetched_primary = ok & truth.reachable
        report.coverage = len(fetched_primary) / len(truth.reachable) if truth.reachable else 1.0
        report.alias_fetched = len(ok & set(truth.aliases))
    return report


def run_crawl(config: Config, backend: Optional[FetchBackend] = None,
              web: Optional[simweb.SyntheticWeb] = None) -> CrawlReport:
    return CrawlEngine(config, backend, web).run()
