"""Crawl configuration: a JSON file with documented defaults.

Example::

    {
      "domains": [
        {"name": "sports", "keywords": ["football", "league"], "seeds": ["http://sports.test/p0"]}
      ],
      "workers": 1,
      "backend": {"type": "sim", "graph_params": {"pages_per_domain": 50, "cross_links": 0}}
    }

Defaults: ``workers`` = number of domains, ``inbox_capacity`` 16,
``batch_size`` 64, ``score_weights`` alpha 1.0 / beta 0.5,
``fetches_per_round`` 1, ``politeness_ms`` 0 for sim and 500 for live.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError, InvalidParams, InvariantViolation, MalformedUrl, ParseError
from .frontier import UNCLASSIFIED, DomainProfile
from .simweb import GraphParams

TOP_LEVEL_FIELDS = {
    "domains", "workers", "inbox_capacity", "batch_size", "score_weights", "politeness_ms",
    "max_pages", "max_rounds", "fetches_per_round", "backend", "kill_worker", "output_dir",
}
BACKEND_FIELDS = {"type", "graph_params", "graph_file", "timeout_s"}


@dataclass
class BackendSpec:
    kind: str = "sim"
    graph_params: Optional[GraphParams] = None
    graph_file: Optional[Path] = None
    timeout_s: float = 10.0


@dataclass
class Config:
    domains: list[DomainProfile]
    workers: int
    inbox_capacity: int = 16
    batch_size: int = 64
    score_weights: tuple[float, float] = (1.0, 0.5)
    politeness_ms: int = 0
    max_pages: Optional[int] = None
    max_rounds: Optional[int] = None
    fetches_per_round: int = 1
    backend: BackendSpec = field(default_factory=BackendSpec)
    kill_worker: Optional[tuple[int, int]] = None
    output_dir: Optional[Path] = None

    def check(self) -> "Config":
        if not self.domains:
            raise InvariantViolation("at least one domain is required")
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise InvariantViolation("domain names must be unique")
        if UNCLASSIFIED in names:
            raise InvariantViolation("'unclassified' is reserved and added automatically")
        if self.workers < 1:
            raise InvariantViolation("workers must be >= 1")
        if self.inbox_capacity < 1:
            raise InvariantViolation("inbox_capacity must be >= 1")
        if self.batch_size < 1:
            raise InvariantViolation("batch_size must be >= 1")
        if self.fetches_per_round < 1:
            raise InvariantViolation("fetches_per_round must be >= 1")
        if min(self.score_weights) < 0:
            raise InvariantViolation("score weights must be non-negative")
        if self.politeness_ms < 0:
            raise InvariantViolation("politeness_ms must be non-negative")
        for name in ("max_pages", "max_rounds"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise InvariantViolation(f"{name} must be >= 1 when set")
        if self.backend.kind == "live" and self.max_pages is None and self.max_rounds is None:
            raise InvariantViolation("a live crawl needs max_pages or max_rounds")
        if self.kill_worker is not None:
            w, r = self.kill_worker
            if not 0 <= w < self.workers or r < 1:
                raise InvariantViolation(f"kill_worker {w}@{r} is out of range")
        return self


def parse_kill_worker(text: str) -> tuple[int, int]:
    """``"2@5"`` -> worker 2 dies before round 5."""
    try:
        w, r = text.split("@")
        return int(w), int(r)
    except ValueError:
        raise ParseError(f"expected <worker>@<round>, got {text!r}", field="kill_worker") from None


def _expect(value, types, name):
    if isinstance(value, bool) or not isinstance(value, types):
        tname = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        raise ParseError(f"expected {tname}, got {type(value).__name__}", field=name)
    return value


def _optional_int(data, name):
    v = data.get(name)
    return None if v is None else _expect(v, int, name)


def _parse_domains(raw) -> list[DomainProfile]:
    _expect(raw, list, "domains")
    out = []
    for i, item in enumerate(raw):
        where = f"domains[{i}]"
        _expect(item, dict, where)
        extra = set(item) - {"name", "keywords", "seeds"}
        if extra:
            raise ParseError("unknown field", field=f"{where}.{sorted(extra)[0]}")
        if "name" not in item:
            raise ParseError("missing field", field=f"{where}.name")
        name = _expect(item["name"], str, f"{where}.name")
        keywords = _expect(item.get("keywords", []), list, f"{where}.keywords")
        seeds = _expect(item.get("seeds", []), list, f"{where}.seeds")
        try:
            out.append(DomainProfile(name, frozenset(map(str, keywords)), tuple(map(str, seeds))))
        except MalformedUrl as exc:
            raise ParseError(str(exc), field=f"{where}.seeds") from None
        except InvalidParams as exc:
            raise InvariantViolation(str(exc)) from None
    return out


def _parse_backend(raw, base_dir: Path) -> BackendSpec:
    _expect(raw, dict, "backend")
    extra = set(raw) - BACKEND_FIELDS
    if extra:
        raise ParseError("unknown field", field=f"backend.{sorted(extra)[0]}")
    kind = raw.get("type", "sim")
    if kind not in ("sim", "live"):
        raise ParseError(f"backend type must be 'sim' or 'live', got {kind!r}", field="backend.type")
    spec = BackendSpec(kind, timeout_s=float(_expect(raw.get("timeout_s", 10.0), (int, float), "backend.timeout_s")))
    if kind == "sim":
        if "graph_file" in raw and "graph_params" in raw:
            raise ParseError("give graph_params or graph_file, not both", field="backend")
        if "graph_file" in raw:
            path = Path(_expect(raw["graph_file"], str, "backend.graph_file"))
            spec.graph_file = path if path.is_absolute() else base_dir / path
        else:
            spec.graph_params = raw.get("graph_params", {})
    return spec


def parse_config(data: Any, base_dir: Path = Path(".")) -> Config:
    _expect(data, dict, "<root>")
    unknown = set(data) - TOP_LEVEL_FIELDS
    if unknown:
        raise ParseError("unknown field", field=sorted(unknown)[0])
    if "domains" not in data:
        raise ParseError("missing field", field="domains")
    domains = _parse_domains(data["domains"])
    backend = _parse_backend(data.get("backend", {"type": "sim"}), base_dir)

    if backend.kind == "sim" and backend.graph_file is None:
        gp = _expect(backend.graph_params or {}, dict, "backend.graph_params")
        gp = dict(gp)
        gp.setdefault("domains", [{"name": d.name, "keywords": sorted(d.keywords)} for d in domains])
        try:
            backend.graph_params = GraphParams.from_json(gp)
            backend.graph_params.validate()
        except (InvalidParams, TypeError) as exc:
            raise ParseError(str(exc), field="backend.graph_params") from None

    weights = data.get("score_weights", {"alpha": 1.0, "beta": 0.5})
    if isinstance(weights, list):
        if len(weights) != 2:
            raise ParseError("expected [alpha, beta]", field="score_weights")
        weights = {"alpha": weights[0], "beta": weights[1]}
    _expect(weights, dict, "score_weights")
    alpha = _expect(weights.get("alpha", 1.0), (int, float), "score_weights.alpha")
    beta = _expect(weights.get("beta", 0.5), (int, float), "score_weights.beta")

    kill = data.get("kill_worker")
    if isinstance(kill, str):
        kill = parse_kill_worker(kill)
    elif isinstance(kill, dict):
        kill = (_expect(kill.get("worker"), int, "kill_worker.worker"),
                _expect(kill.get("round"), int, "kill_worker.round"))
    elif kill is not None:
        raise ParseError("expected '<worker>@<round>' or {worker, round}", field="kill_worker")

    politeness = data.get("politeness_ms")
    if politeness is None:
        politeness = 500 if backend.kind == "live" else 0
    out_dir = data.get("output_dir")

    cfg = Config(
        domains=domains,
        workers=_expect(data.get("workers", len(domains)), int, "workers"),
        inbox_capacity=_expect(data.get("inbox_capacity", 16), int, "inbox_capacity"),
        batch_size=_expect(data.get("batch_size", 64), int, "batch_size"),
        score_weights=(float(alpha), float(beta)),
        politeness_ms=_expect(politeness, int, "politeness_ms"),
        max_pages=_optional_int(data, "max_pages"),
        max_rounds=_optional_int(data, "max_rounds"),
        fetches_per_round=_expect(data.get("fetches_per_round", 1), int, "fetches_per_round"),
        backend=backend,
        kill_worker=kill,
        output_dir=Path(_expect(out_dir, str, "output_dir")) if out_dir is not None else None,
    )
    return cfg.check()


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc.msg}", line=exc.lineno) from None
    return parse_config(data, base_dir=path.parent)


def config_for_web(web, **overrides) -> Config:
    """Crawl settings for a synthetic web when no config file is given."""
    profiles = web.profiles
    cfg = Config(domains=profiles, workers=len(profiles),
                 backend=BackendSpec("sim", graph_params=web.params))
    return replace(cfg, **overrides).check()
