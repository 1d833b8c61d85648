"""Corpus loading, quality filtering and the app-level grammar/generation split."""

from __future__ import annotations

import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .layout import DEFAULT_CANVAS, Canvas, LayoutFormatError, UILayout, Vocabulary, layout_from_dict, layout_to_dict

log = logging.getLogger(__name__)

__all__ = [
    "CorpusError",
    "LoadIssue",
    "LoadResult",
    "ScreenRecord",
    "SplitResult",
    "load_corpus",
    "quality_filter",
    "read_jsonl",
    "read_manifest",
    "split_by_app",
    "write_manifest",
]


class CorpusError(Exception):
    """Unrecoverable problem with the corpus as a whole."""


@dataclass(frozen=True)
class ScreenRecord:
    screen_id: str
    app_package: str
    layout: UILayout
    summary: str
    app_rating: float = 0.0
    app_downloads: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "screen_id": self.screen_id,
            "app_package": self.app_package,
            "summary": self.summary,
            "app_rating": self.app_rating,
            "app_downloads": self.app_downloads,
            "canvas": [self.layout.canvas.width, self.layout.canvas.height],
            "layout": layout_to_dict(self.layout),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], vocab: Vocabulary | None = None) -> ScreenRecord:
        canvas = Canvas(*data["canvas"]) if "canvas" in data else DEFAULT_CANVAS
        return cls(
            screen_id=str(data["screen_id"]),
            app_package=str(data.get("app_package") or data["screen_id"]),
            layout=layout_from_dict(data["layout"], canvas, vocab),
            summary=data.get("summary", ""),
            app_rating=float(data.get("app_rating", 0.0)),
            app_downloads=int(data.get("app_downloads", 0)),
        )


@dataclass(frozen=True)
class LoadIssue:
    screen_id: str
    kind: str  # missing_summary | missing_layout | missing_metadata | malformed
    detail: str = ""

    def to_dict(self) -> dict[str, str]:
        return {"screen_id": self.screen_id, "kind": self.kind, "detail": self.detail}


@dataclass
class LoadResult:
    records: list[ScreenRecord]
    issues: list[LoadIssue] = field(default_factory=list)

    def issue_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for issue in self.issues:
            counts[issue.kind] = counts.get(issue.kind, 0) + 1
        return dict(sorted(counts.items()))


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    return rows


def _index_by_screen(rows: Iterable[dict[str, Any]], source: str) -> dict[str, dict[str, Any]]:
    index: dict[str, dict[str, Any]] = {}
    for row in rows:
        if "screen_id" not in row:
            raise CorpusError(f"{source}: row without screen_id: {row!r}")
        screen_id = str(row["screen_id"])
        if screen_id in index:
            raise CorpusError(f"duplicate id {screen_id!r} in {source}")
        index[screen_id] = row
    return index


def _read_layout(path: Path, canvas: Canvas, vocab: Vocabulary | None) -> UILayout | str:
    try:
        return layout_from_dict(json.loads(path.read_text(encoding="utf-8")), canvas, vocab)
    except (json.JSONDecodeError, LayoutFormatError, UnicodeDecodeError) as exc:
        return f"{type(exc).__name__}: {exc}"


def load_corpus(
    hierarchy_source: str | Path,
    summary_source: str | Path,
    metadata_source: str | Path | None = None,
    canvas: Canvas = DEFAULT_CANVAS,
    vocab: Vocabulary | None = None,
    workers: int = 4,
) -> LoadResult:
    """Join layout files with their summaries and app metadata.

    ``hierarchy_source`` is a directory of ``<screen_id>.json`` layout trees.
    Screens missing a layout or a summary are reported in ``issues`` rather
    than dropped silently. Screens without metadata fall back to a package
    equal to their own id, so they can never straddle the split.
    """
    hierarchy_dir = Path(hierarchy_source)
    if not hierarchy_dir.is_dir():
        raise CorpusError(f"hierarchies not found: {hierarchy_dir}")
    if not Path(summary_source).is_file():
        raise CorpusError(f"summaries not found: {summary_source}")
    if metadata_source is not None and not Path(metadata_source).is_file():
        raise CorpusError(f"metadata not found: {metadata_source}")

    summaries = _index_by_screen(read_jsonl(summary_source), str(summary_source))
    metadata = _index_by_screen(read_jsonl(metadata_source), str(metadata_source)) if metadata_source else {}

    files = sorted(hierarchy_dir.glob("*.json"))
    ids = [p.stem for p in files]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        layouts = dict(zip(ids, pool.map(lambda p: _read_layout(p, canvas, vocab), files)))

    records: list[ScreenRecord] = []
    issues: list[LoadIssue] = []
    for screen_id in sorted(set(ids) | set(summaries)):
        layout = layouts.get(screen_id)
        if layout is None:
            issues.append(LoadIssue(screen_id, "missing_layout"))
            continue
        if isinstance(layout, str):
            issues.append(LoadIssue(screen_id, "malformed", layout))
            continue
        summary = str(summaries.get(screen_id, {}).get("summary", "")).strip()
        if not summary:
            issues.append(LoadIssue(screen_id, "missing_summary"))
            continue
        meta = metadata.get(screen_id)
        if meta is None and metadata_source is not None:
            issues.append(LoadIssue(screen_id, "missing_metadata"))
        meta = meta or {}
        records.append(
            ScreenRecord(
                screen_id=screen_id,
                app_package=str(meta.get("app_package") or screen_id),
                layout=layout,
                summary=summary,
                app_rating=float(meta.get("rating", 0.0)),
                app_downloads=int(meta.get("downloads", 0)),
            )
        )
    if not records:
        raise CorpusError("empty corpus: no screen has both a layout and a summary")
    for issue in issues:
        log.info("skipped %s (%s) %s", issue.screen_id, issue.kind, issue.detail)
    return LoadResult(records, issues)


def quality_filter(
    records: Sequence[ScreenRecord],
    min_rating: float = 4.3,
    min_downloads: int = 10_000,
    top_k: int = 10_000,
) -> list[ScreenRecord]:
    """Keep screens whose app is rated above ``min_rating`` with more than
    ``min_downloads`` installs, then cap the set at ``top_k`` screens ranked
    by downloads, rating and id. Returned in screen id order."""
    if min_rating < 0:
        raise ValueError("min_rating must be >= 0")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    survivors = [r for r in records if r.app_rating > min_rating and r.app_downloads > min_downloads]
    survivors.sort(key=lambda r: (-r.app_downloads, -r.app_rating, r.screen_id))
    return sorted(survivors[:top_k], key=lambda r: r.screen_id)


@dataclass(frozen=True)
class SplitResult:
    grammar_set_ids: frozenset[str]
    generation_set_ids: frozenset[str]
    seed: int
    grammar_fraction: float = 0.2

    def side_of(self, app_package: str) -> str:
        if app_package in self.grammar_set_ids:
            return "grammar"
        if app_package in self.generation_set_ids:
            return "generation"
        raise KeyError(app_package)

    def records_on(self, records: Iterable[ScreenRecord], side: str) -> list[ScreenRecord]:
        if side not in ("grammar", "generation"):
            raise ValueError(f"unknown split side {side!r}")
        packages = self.grammar_set_ids if side == "grammar" else self.generation_set_ids
        return [r for r in records if r.app_package in packages]

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "grammar_fraction": self.grammar_fraction,
            "grammar_set_ids": sorted(self.grammar_set_ids),
            "generation_set_ids": sorted(self.generation_set_ids),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SplitResult:
        return cls(
            frozenset(data["grammar_set_ids"]),
            frozenset(data["generation_set_ids"]),
            int(data["seed"]),
            float(data.get("grammar_fraction", 0.2)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> SplitResult:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def split_by_app(records: Iterable[ScreenRecord], grammar_fraction: float = 0.2, seed: int = 0) -> SplitResult:
    """Partition app packages (not screens) into grammar and generation sets.

    Packages are sorted, shuffled with ``random.Random(seed)`` and the first
    ``ceil(grammar_fraction * n_packages)`` go to the grammar side.
    """
    if not 0 < grammar_fraction < 1:
        raise ValueError("grammar_fraction must be strictly between 0 and 1")
    packages = sorted({r.app_package for r in records})
    if len(packages) < 2:
        raise CorpusError(f"cannot split: corpus has {len(packages)} app package(s)")
    random.Random(seed).shuffle(packages)
    # round() guards against 0.1 * 30 == 3.0000000000000004
    n_grammar = math.ceil(round(grammar_fraction * len(packages), 9))
    n_grammar = min(max(n_grammar, 1), len(packages) - 1)
    return SplitResult(
        frozenset(packages[:n_grammar]),
        frozenset(packages[n_grammar:]),
        seed,
        grammar_fraction,
    )


def write_manifest(records: Iterable[ScreenRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in sorted(records, key=lambda r: r.screen_id):
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":")) + "\n")


def read_manifest(path: str | Path, vocab: Vocabulary | None = None) -> list[ScreenRecord]:
    if not Path(path).is_file():
        raise CorpusError(f"manifest not found: {path}")
    records = [ScreenRecord.from_dict(row, vocab) for row in read_jsonl(path)]
    seen: set[str] = set()
    for record in records:
        if record.screen_id in seen:
            raise CorpusError(f"duplicate id {record.screen_id!r} in manifest")
        seen.add(record.screen_id)
    return records
