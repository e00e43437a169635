"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import simweb
from .config import config_for_web, load_config, parse_kill_worker
from .engine import CrawlEngine
from .errors import ConfigError, CrawlError, InvalidParams
from .frontier import build_frontier

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _emit_report(report, figures_dir) -> None:
    data = report.to_json()
    print(json.dumps(data, sort_keys=True, indent=2))
    if figures_dir:
        from .plotting import render_report_figures
        render_report_figures(data, figures_dir)


def _with_kill(cfg, text):
    if not text:
        return cfg
    return replace(cfg, kill_worker=parse_kill_worker(text)).check()


def cmd_crawl(args) -> int:
    cfg = _with_kill(load_config(args.config), args.kill_worker)
    _emit_report(CrawlEngine(cfg).run(), args.figures)
    return 0


def _graph_params(text: str) -> simweb.GraphParams:
    path = Path(text)
    if not text.lstrip().startswith("{"):
        try:
            text = path.read_text(encoding="utf-8")
        except OSError:
            raise ConfigError(f"graph params file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"graph params are not valid JSON: {exc.msg} (line {exc.lineno})") from None
    try:
        return simweb.GraphParams.from_json(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(args) -> int:
    try:
        if args.graph_file:
            try:
                web = simweb.load_graph(args.graph_file)
            except FileNotFoundError:
                raise ConfigError(f"graph file not found: {args.graph_file}") from None
        else:
            web = simweb.generate(_graph_params(args.graph_params or "{}"))
    except InvalidParams as exc:
        raise ConfigError(str(exc)) from None
    if args.save_graph:
        simweb.save_graph(web, args.save_graph)

    if args.config:
        cfg = load_config(args.config)
        cfg = replace(cfg, backend=replace(cfg.backend, kind="sim"))
    else:
        cfg = config_for_web(web)
    overrides = {k: getattr(args, k) for k in ("workers", "max_pages", "max_rounds", "batch_size") if getattr(args, k) is not None}
    cfg = _with_kill(replace(cfg, **overrides).check(), args.kill_worker)
    _emit_report(CrawlEngine(cfg, web=web).run(), args.figures)
    return 0


def cmd_frontier_dump(args) -> int:
    cfg = load_config(args.config)
    profiles = cfg.domains
    if cfg.backend.kind == "sim" and any(not p.seeds for p in profiles):
        # Seeds come from the synthetic web; build it only to read them.
        engine = CrawlEngine(cfg)
        frontier = engine.frontier
    else:
        frontier = build_frontier(profiles, cfg.score_weights)
    if args.domain is not None and args.domain not in frontier.pools:
        raise ConfigError(f"unknown domain {args.domain!r}")
    for line in frontier.dump_lines(args.domain):
        print(line)
    return 0


def cmd_metrics(args) -> int:
    try:
        data = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"report file not found: {args.report}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.report}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    for line in metrics_lines(data):
        print(line)
    if args.figures:
        from .plotting import render_report_figures
        for path in render_report_figures(data, args.figures):
            print(f"figure\t{path}", file=sys.stderr)
    return 0


def metrics_lines(data: dict) -> list[str]:
    """Flatten a report into ``metric<TAB>value`` lines."""
    lines = ["metric\tvalue"]
    for key in sorted(data):
        value = data[key]
        if key == "per_round_fetched":
            lines.append(f"{key}\t{','.join(map(str, value))}")
        elif isinstance(value, dict):
            for sub in sorted(value):
                lines.append(f"{key}[{sub}]\t{value[sub]}")
        elif isinstance(value, list):
            lines.append(f"{key}\t{','.join(map(str, value))}")
        else:
            lines.append(f"{key}\t{'' if value is None else value}")
    return lines


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="domaincrawl", description="Domain-partitioned parallel crawler")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crawl", help="run a crawl from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--kill-worker", metavar="ID@ROUND")
    p.add_argument("--figures", metavar="DIR", help="also write report figures here")
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("simulate", help="generate or load a synthetic web and crawl it")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph-params", metavar="JSON|FILE")
    src.add_argument("--graph-file", metavar="FILE")
    p.add_argument("--config", help="crawl settings (its backend section is ignored)")
    p.add_argument("--workers", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--max-pages", type=int)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--kill-worker", metavar="ID@ROUND")
    p.add_argument("--save-graph", metavar="FILE")
    p.add_argument("--figures", metavar="DIR")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("frontier-dump", help="print the initial frontier as TSV")
    p.add_argument("--config", required=True)
    p.add_argument("--domain")
    p.set_defaults(func=cmd_frontier_dump)

    p = sub.add_parser("metrics", help="print a saved report as TSV")
    p.add_argument("--report", required=True)
    p.add_argument("--figures", metavar="DIR")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"domaincrawl: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CrawlError, OSError) as exc:
        print(f"domaincrawl: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
