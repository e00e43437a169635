"""Domain-partitioned parallel web crawler with a synthetic-web harness."""
from .allocator import Allocator, Assignment, WorkerInbox, allocate_round, rebalance_on_failure, route
from .analyzer import ClassificationResult, LinkSet, classify, extract_links, extract_text, tag_url
from .config import Config, load_config
from .dispatcher import Dispatcher, UrlDatabase, filter_new, flush_batch, predict_domain, process_links
from .engine import CrawlEngine, CrawlReport, compute_metrics, run_crawl
from .errors import (ConfigError, CrawlError, DuplicateDomain, InvalidParams, InvariantViolation,
                     MalformedUrl, NoSurvivors, ParseError, UnknownDomain, UnknownUrl)
from .fetcher import FetchResult, HttpBackend, PageRecord, Repository, fetch, store_page, worker_cycle
from .frontier import DomainProfile, GlobalFrontier, PoolEntry, relevance_score
from .simweb import GraphParams, SimBackend, SyntheticWeb, generate, ground_truth, sim_fetch
from .urls import CanonicalUrl, canonicalize, host_of, resolve

__version__ = "0.1.0"
