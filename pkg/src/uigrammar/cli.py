"""Command line pipeline: ingest -> split -> grammar -> generate -> evaluate -> render.

Every subcommand accepts ``--config FILE`` (TOML). Values are resolved as
command line flag, then the subcommand's config section, then the default.
Exit codes: 0 ok, 1 usage, 2 data error, 3 transport error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .gateway import (
    GenerationConfig,
    LiveTransport,
    MockTransport,
    RateLimiter,
    load_results,
    run_batch,
)
from .grammar import GrammarSet, build_grammar
from .ingest import CorpusError, SplitResult, load_corpus, quality_filter, read_manifest, split_by_app, write_manifest
from .layout import Canvas, Vocabulary
from .metrics import evaluate_batch
from .promptgen import LeakageError, Templates, plan_batch
from .render import render_pair

log = logging.getLogger("uigrammar")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRANSPORT = 0, 1, 2, 3


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise DataError(f"config not found: {path}")
    with open(config_path, "rb") as fh:
        return tomllib.load(fh)


def _opt(args: argparse.Namespace, config: dict[str, Any], section: str, key: str, default: Any = None) -> Any:
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get(section, {}).get(key, default)


def _vocabulary(args: argparse.Namespace, config: dict[str, Any]) -> Vocabulary:
    path = args.vocabulary or config.get("vocabulary")
    return Vocabulary.load(path) if path else Vocabulary.default()


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise DataError(f"{what} not found: {path}")
    return p


def _dump(obj: Any) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# Subcommands


def cmd_ingest(args: argparse.Namespace, config: dict[str, Any]) -> int:
    vocab = _vocabulary(args, config)
    canvas_cfg = config.get("canvas", {})
    canvas = Canvas(int(canvas_cfg.get("width", 1440)), int(canvas_cfg.get("height", 2560)))
    loaded = load_corpus(args.hierarchies, args.summaries, args.metadata, canvas=canvas, vocab=vocab)
    records = loaded.records
    if not _opt(args, config, "ingest", "no_filter", False):
        records = quality_filter(
            records,
            float(_opt(args, config, "ingest", "min_rating", 4.3)),
            int(_opt(args, config, "ingest", "min_downloads", 10_000)),
            int(_opt(args, config, "ingest", "top_k", 10_000)),
        )
    if not records:
        raise DataError("no screen passed the quality filter")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_manifest(records, args.out)
    _dump(
        {
            "manifest": str(args.out),
            "loaded": len(loaded.records),
            "records": len(records),
            "issues": loaded.issue_counts(),
        }
    )
    return EXIT_OK


def cmd_split(args: argparse.Namespace, config: dict[str, Any]) -> int:
    records = read_manifest(args.manifest)
    fraction = float(_opt(args, config, "split", "fraction", 0.2))
    seed = int(_opt(args, config, "split", "seed", 0))
    result = split_by_app(records, fraction, seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    result.save(args.out)
    grammar_screens = len(result.records_on(records, "grammar"))
    _dump(
        {
            "split": str(args.out),
            "seed": seed,
            "grammar_packages": len(result.grammar_set_ids),
            "generation_packages": len(result.generation_set_ids),
            "grammar_screens": grammar_screens,
            "generation_screens": len(records) - grammar_screens,
            "disjoint": not (result.grammar_set_ids & result.generation_set_ids),
        }
    )
    return EXIT_OK


def cmd_grammar(args: argparse.Namespace, config: dict[str, Any]) -> int:
    records = read_manifest(args.manifest)
    side = _opt(args, config, "grammar", "side", "grammar")
    if args.split:
        records = SplitResult.load(_require_file(args.split, "split")).records_on(records, side)
    if not records:
        raise DataError(f"no screens on the {side!r} side of the split")
    grammar = build_grammar([r.layout for r in records], [r.screen_id for r in records])
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    grammar.save(args.out)
    _dump(
        {
            "grammar": str(args.out),
            "side": side,
            "screens": len(records),
            "rules": len(grammar),
            "rule_occurrences": grammar.total_count(),
        }
    )
    return EXIT_OK


def cmd_generate(args: argparse.Namespace, config: dict[str, Any]) -> int:
    vocab = _vocabulary(args, config)
    records = read_manifest(args.manifest, vocab)
    variant = _opt(args, config, "generate", "variant", "plain")
    seed = int(_opt(args, config, "generate", "seed", 0))
    limit = _opt(args, config, "generate", "limit")
    with_probabilities = bool(_opt(args, config, "generate", "with_probabilities", False))
    templates_dir = _opt(args, config, "generate", "templates")
    templates = Templates.from_dir(templates_dir) if templates_dir else Templates.default()

    split_path = _opt(args, config, "generate", "split")
    split = SplitResult.load(_require_file(split_path, "split")) if split_path else None
    provided = None
    if variant == "grammar":
        grammar_path = _opt(args, config, "generate", "grammar")
        if not grammar_path:
            raise DataError("--grammar is required for the grammar variant")
        provided = GrammarSet.load(_require_file(grammar_path, "grammar"))
    example, bundles = plan_batch(
        records,
        variant,
        vocab,
        seed,
        split,
        provided,
        None if limit is None else int(limit),
        templates,
        with_probabilities,
    )
    if not bundles:
        raise DataError("no generation targets")

    llm_config = GenerationConfig.from_dict(config.get("llm", {}))
    if args.workers is not None:
        llm_config = GenerationConfig.from_dict({**config.get("llm", {}), "max_workers": args.workers})
    transport_kind = _opt(args, config, "generate", "transport", "mock")
    if transport_kind == "mock":
        fixtures = _opt(args, config, "generate", "fixtures")
        if not fixtures:
            raise DataError("--fixtures is required for the mock transport")
        transport: Any = MockTransport(_require_file(fixtures, "fixtures directory"))
        limiter = None
    else:
        transport = LiveTransport()
        limiter = RateLimiter(llm_config.rate_limit)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_info = {
        "toolkit_version": __version__,
        "variant": variant,
        "seed": seed,
        "split_seed": split.seed if split else None,
        "example_screen_id": example.screen_id,
        "targets": [b.target_screen_id for b in bundles],
        "transport": transport_kind,
        "with_probabilities": with_probabilities,
        "llm": {k: v for k, v in vars(llm_config).items() if k != "api_key_env"},
    }
    (out / "run.json").write_text(json.dumps(run_info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    canvases = {r.screen_id: r.layout.canvas for r in records}
    results = run_batch(bundles, llm_config, transport, out, vocab, canvases, rate_limiter=limiter)
    counts: dict[str, int] = {}
    for result in results:
        counts[result.status] = counts.get(result.status, 0) + 1
    _dump({"out": str(out), "variant": variant, "example": example.screen_id, "status_counts": counts})
    return EXIT_TRANSPORT if counts.get("transport_failed") else EXIT_OK


def cmd_evaluate(args: argparse.Namespace, config: dict[str, Any]) -> int:
    vocab = _vocabulary(args, config)
    records = read_manifest(args.manifest, vocab)
    results = load_results(_require_file(args.results, "results directory"))
    if not results:
        raise DataError(f"no results in {args.results}")
    grammar = None
    grammar_path = _opt(args, config, "evaluate", "grammar")
    if grammar_path and any(r.variant == "grammar" for r in results):
        grammar = GrammarSet.load(_require_file(grammar_path, "grammar"))
    dedupe = bool(_opt(args, config, "evaluate", "dedupe_rules", False))
    references = {r.screen_id: r.layout for r in records}
    report = evaluate_batch(results, references, vocab, grammar=grammar, dedupe_rules=dedupe)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    json_path, csv_path = report.save(args.out)
    variant = results[0].variant
    print(report.summary_table(f"{variant} prompt"), end="")
    print(f"report: {json_path} {csv_path}")
    return EXIT_OK


def cmd_render(args: argparse.Namespace, config: dict[str, Any]) -> int:
    vocab = _vocabulary(args, config)
    records = {r.screen_id: r for r in read_manifest(args.manifest, vocab)}
    results = load_results(_require_file(args.results, "results directory"))
    hide = bool(_opt(args, config, "render", "hide_invisible", False))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for result in results:
        if result.parsed_layout is None or result.screen_id not in records:
            continue
        svg = render_pair(records[result.screen_id].layout, result.parsed_layout, vocab, hide_invisible=hide)
        (out / f"{result.screen_id}.svg").write_text(svg, encoding="utf-8")
        written += 1
    _dump({"out": str(out), "rendered": written, "skipped": len(results) - written})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uigrammar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--vocabulary", help="vocabulary JSON file (default: bundled CLAY labels)")
        return p

    p = add("ingest", "join layouts, summaries and metadata into a manifest")
    p.add_argument("--hierarchies", required=True, help="directory of <screen_id>.json layouts")
    p.add_argument("--summaries", required=True, help="JSON Lines {screen_id, summary}")
    p.add_argument("--metadata", help="JSON Lines {screen_id, app_package, rating, downloads}")
    p.add_argument("--out", required=True, help="manifest path (JSON Lines)")
    p.add_argument("--min-rating", dest="min_rating", type=float)
    p.add_argument("--min-downloads", dest="min_downloads", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--no-filter", dest="no_filter", action="store_true", default=None)
    p.set_defaults(func=cmd_ingest)

    p = add("split", "split app packages into grammar and generation sets")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fraction", type=float, help="grammar-side share of packages (default 0.2)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = add("grammar", "extract a UI grammar file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split")
    p.add_argument("--side", choices=["grammar", "generation"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grammar)

    p = add("generate", "render prompts and collect model layouts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split")
    p.add_argument("--variant", choices=["plain", "grammar"])
    p.add_argument("--grammar")
    p.add_argument("--transport", choices=["live", "mock"])
    p.add_argument("--fixtures", help="mock transport fixture directory")
    p.add_argument("--templates", help="directory holding plain.txt and grammar.txt")
    p.add_argument("--seed", type=int, help="seed for the one-shot example choice")
    p.add_argument("--limit", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--with-probabilities", dest="with_probabilities", action="store_true", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = add("evaluate", "score generated layouts")
    p.add_argument("--results", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--grammar")
    p.add_argument("--dedupe-rules", dest="dedupe_rules", action="store_true", default=None)
    p.add_argument("--out", required=True, help="report path (JSON; a CSV is written alongside)")
    p.set_defaults(func=cmd_evaluate)

    p = add("render", "draw original/generated SVG pairs")
    p.add_argument("--results", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--hide-invisible", dest="hide_invisible", action="store_true", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except (DataError, CorpusError, LeakageError, ValueError, KeyError, OSError) as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
