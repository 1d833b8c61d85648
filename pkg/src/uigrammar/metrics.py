"""Layout quality metrics: MaxIoU, Overlap and Alignment.

All metrics work on ``(label, Bounds)`` lists that have already had
invisible elements removed, and normalize coordinates by the canvas so
values do not depend on screen resolution.

* MaxIoU: elements are matched one-to-one within each label so the summed
  IoU is maximal; the sum is divided by the larger of the two element counts.
* Overlap: ``100 * sum_{i<j} area(b_i & b_j) / sum_i area(b_i)``.
* Alignment: for each element the smallest gap between one of its
  left/center/right (or top/middle/bottom) coordinates and the same
  coordinate of any other element; ``100 * mean(-log(1 - gap))``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .grammar import GrammarSet, conformance
from .layout import Bounds, Canvas, UILayout, Vocabulary, filter_invisible

__all__ = [
    "ALIGN_TOLERANCE",
    "EvalReport",
    "ScreenScore",
    "alignment",
    "evaluate_batch",
    "iou",
    "linear_sum_assignment_max",
    "max_iou",
    "overlap",
]

Box = tuple[float, float, float, float]
Element = tuple[str, Bounds]

# Gaps below this (normalized units) count as exact alignment.
ALIGN_TOLERANCE = 1e-9


def _norm(elements: Sequence[Element], canvas: Canvas) -> list[tuple[str, Box]]:
    return [(label, bounds.normalized(canvas)) for label, bounds in elements]


def _area(box: Box) -> float:
    return max(0.0, box[2] - box[0]) * max(0.0, box[3] - box[1])


def _intersection(a: Box, b: Box) -> float:
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: Box, b: Box) -> float:
    inter = _intersection(a, b)
    union = _area(a) + _area(b) - inter
    if union <= 0:
        return 0.0
    return inter / union


def linear_sum_assignment_max(weights: Sequence[Sequence[float]]) -> tuple[list[tuple[int, int]], float]:
    """Maximum-weight one-to-one assignment on a rectangular matrix.

    Shortest augmenting path Hungarian method with row/column potentials,
    O(n^2 m). Returns the matched ``(row, col)`` pairs and their total weight.
    """
    n_rows = len(weights)
    n_cols = len(weights[0]) if n_rows else 0
    if n_rows == 0 or n_cols == 0:
        return [], 0.0
    transposed = n_rows > n_cols
    if transposed:
        weights = [list(col) for col in zip(*weights)]
        n_rows, n_cols = n_cols, n_rows
    # minimize negated weight; 1-based indices, column 0 is a sentinel
    INF = float("inf")
    u = [0.0] * (n_rows + 1)
    v = [0.0] * (n_cols + 1)
    owner = [0] * (n_cols + 1)
    way = [0] * (n_cols + 1)
    for i in range(1, n_rows + 1):
        owner[0] = i
        j0 = 0
        minv = [INF] * (n_cols + 1)
        used = [False] * (n_cols + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            delta = INF
            j1 = 0
            row = weights[i0 - 1]
            for j in range(1, n_cols + 1):
                if used[j]:
                    continue
                cur = -row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n_cols + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    pairs = []
    for j in range(1, n_cols + 1):
        if owner[j]:
            i = owner[j] - 1
            pairs.append((j - 1, i) if transposed else (i, j - 1))
    pairs.sort()
    total = 0.0
    for r, c in pairs:
        total += weights[c][r] if transposed else weights[r][c]
    return pairs, total


def max_iou(generated: Sequence[Element], reference: Sequence[Element], canvas: Canvas) -> float:
    """Best same-label matching IoU, averaged over ``max(len(gen), len(ref))``.

    Two empty layouts score 1.0; exactly one empty layout scores 0.0.
    """
    if not generated and not reference:
        return 1.0
    if not generated or not reference:
        return 0.0
    by_label_gen: dict[str, list[Box]] = defaultdict(list)
    by_label_ref: dict[str, list[Box]] = defaultdict(list)
    for label, box in _norm(generated, canvas):
        by_label_gen[label].append(box)
    for label, box in _norm(reference, canvas):
        by_label_ref[label].append(box)
    total = 0.0
    for label in sorted(by_label_gen.keys() & by_label_ref.keys()):
        gen, ref = by_label_gen[label], by_label_ref[label]
        matrix = [[iou(g, r) for r in ref] for g in gen]
        total += linear_sum_assignment_max(matrix)[1]
    return total / max(len(generated), len(reference))


def overlap(elements: Sequence[Element], canvas: Canvas) -> float:
    boxes = [box for _, box in _norm(elements, canvas)]
    total_area = sum(_area(b) for b in boxes)
    if total_area <= 0:
        return 0.0
    inter = 0.0
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            inter += _intersection(boxes[i], boxes[j])
    return 100.0 * inter / total_area


def _axis_coords(box: Box) -> tuple[float, ...]:
    x0, y0, x1, y1 = box
    return (x0, (x0 + x1) / 2, x1, y0, (y0 + y1) / 2, y1)


def alignment_gaps(elements: Sequence[Element], canvas: Canvas) -> list[float]:
    coords = [_axis_coords(box) for _, box in _norm(elements, canvas)]
    gaps = []
    for i, ci in enumerate(coords):
        best = math.inf
        for j, cj in enumerate(coords):
            if i == j:
                continue
            for a, b in zip(ci, cj):
                best = min(best, abs(a - b))
        gaps.append(0.0 if best <= ALIGN_TOLERANCE else best)
    return gaps


def alignment(elements: Sequence[Element], canvas: Canvas) -> float:
    if len(elements) < 2:
        return 0.0
    gaps = alignment_gaps(elements, canvas)
    # gap is at most 1 in normalized space; clamp keeps log finite for degenerate inputs
    penalty = sum(-math.log(max(1.0 - g, 1e-12)) for g in gaps)
    return 100.0 * penalty / len(gaps)


# Batch evaluation


@dataclass
class ScreenScore:
    screen_id: str
    status: str
    max_iou: float | None = None
    overlap: float | None = None
    alignment: float | None = None
    conformance: float | None = None
    rules_in_grammar: int | None = None
    rules_reported: int | None = None
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class EvalReport:
    per_screen: list[ScreenScore]
    aggregates: dict[str, Any]
    include_conformance: bool = False

    CSV_COLUMNS = ("screen_id", "status", "max_iou", "overlap", "alignment")

    def to_dict(self) -> dict[str, Any]:
        rows = []
        for score in self.per_screen:
            row = asdict(score)
            if not self.include_conformance:
                for key in ("conformance", "rules_in_grammar", "rules_reported"):
                    row.pop(key)
            rows.append(row)
        return {"aggregates": self.aggregates, "per_screen": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        columns = list(self.CSV_COLUMNS) + (["conformance"] if self.include_conformance else [])
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for score in self.per_screen:
            writer.writerow(["" if getattr(score, c) is None else repr_float(getattr(score, c)) for c in columns])
        agg = self.aggregates
        footer = {
            "screen_id": "MEAN",
            "status": f"ok={agg['ok_count']} failed={agg['failure_count']}",
            "max_iou": agg["mean_max_iou"],
            "overlap": agg["mean_overlap"],
            "alignment": agg["mean_alignment"],
            "conformance": agg.get("pooled_conformance"),
        }
        writer.writerow(["" if footer[c] is None else repr_float(footer[c]) for c in columns])
        return buf.getvalue()

    def summary_table(self, name: str = "generated") -> str:
        """Human-readable summary with values rounded to two decimals."""
        agg = self.aggregates
        headers = ["", "MaxIoU ↑", "Overlap ↓", "Alignment ↓"]
        values = [name, _fmt(agg["mean_max_iou"]), _fmt(agg["mean_overlap"]), _fmt(agg["mean_alignment"])]
        if self.include_conformance:
            headers.append("Conformance ↑")
            values.append(_fmt(agg.get("pooled_conformance")))
        widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
        line = " | ".join(h.ljust(w) for h, w in zip(headers, widths))
        rule = "-+-".join("-" * w for w in widths)
        body = " | ".join(v.ljust(w) for v, w in zip(values, widths))
        tail = f"screens: {agg['ok_count']} ok, {agg['failure_count']} failed"
        return "\n".join([line, rule, body, tail]) + "\n"

    def save(self, path: str | Path) -> tuple[Path, Path]:
        json_path = Path(path)
        csv_path = json_path.with_suffix(".csv")
        json_path.write_text(self.to_json(), encoding="utf-8")
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        return json_path, csv_path


def repr_float(value: Any) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _fmt(value: float | None) -> str:
    return "----" if value is None else f"{value:.2f}"


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def evaluate_batch(
    results: Sequence[Any],
    references: Mapping[str, UILayout],
    vocab: Vocabulary,
    canvas: Canvas | None = None,
    grammar: GrammarSet | None = None,
    dedupe_rules: bool = False,
) -> EvalReport:
    """Score generation results against their reference screens.

    ``results`` are :class:`~uigrammar.gateway.GenerationResult`-like objects
    exposing ``screen_id``, ``status``, ``parsed_layout`` and ``rules_used``.
    Aggregates cover only screens with status ``ok``. ``pooled_conformance``
    divides the total in-grammar rule count by the total reported count over
    the batch; ``mean_conformance`` averages per-screen fractions.
    """
    scores: list[ScreenScore] = []
    include_conformance = grammar is not None
    for result in sorted(results, key=lambda r: r.screen_id):
        score = ScreenScore(result.screen_id, result.status)
        if result.status != "ok" or result.parsed_layout is None:
            score.status = result.status if result.status != "ok" else "parse_failed"
            score.diagnostics.extend(getattr(result, "diagnostics", []) or [])
            scores.append(score)
            continue
        reference = references.get(result.screen_id)
        if reference is None:
            score.status = "missing_reference"
            score.diagnostics.append("no reference layout for screen")
            scores.append(score)
            continue
        gen_canvas = canvas or result.parsed_layout.canvas
        ref_canvas = canvas or reference.canvas
        gen = filter_invisible(result.parsed_layout, vocab)
        ref = filter_invisible(reference, vocab)
        if gen_canvas != ref_canvas:
            score.diagnostics.append("generated and reference canvases differ; using reference canvas")
        if not gen and not ref:
            score.diagnostics.append("max_iou: both layouts empty after filtering")
        score.max_iou = max_iou(gen, ref, ref_canvas)
        score.overlap = overlap(gen, gen_canvas)
        if sum(max(0, b.width) * max(0, b.height) for _, b in gen) == 0:
            score.diagnostics.append("overlap: zero total area")
        score.alignment = alignment(gen, gen_canvas)
        if len(gen) < 2:
            score.diagnostics.append("alignment: fewer than 2 visible elements")
        rules = getattr(result, "rules_used", None)
        if grammar is not None and rules is not None:
            report = conformance(rules, grammar, dedupe=dedupe_rules)
            score.conformance = report.fraction
            score.rules_in_grammar = report.in_grammar_count
            score.rules_reported = report.total_count
            if not report.defined:
                score.diagnostics.append("conformance: no rules reported")
        scores.append(score)

    ok = [s for s in scores if s.status == "ok"]
    reported = sum(s.rules_reported or 0 for s in ok)
    in_grammar = sum(s.rules_in_grammar or 0 for s in ok)
    aggregates: dict[str, Any] = {
        "mean_max_iou": _mean([s.max_iou for s in ok if s.max_iou is not None]),
        "mean_overlap": _mean([s.overlap for s in ok if s.overlap is not None]),
        "mean_alignment": _mean([s.alignment for s in ok if s.alignment is not None]),
        "ok_count": len(ok),
        "failure_count": len(scores) - len(ok),
    }
    if include_conformance:
        aggregates["mean_conformance"] = _mean([s.conformance for s in ok if s.conformance is not None])
        aggregates["pooled_conformance"] = in_grammar / reported if reported else None
        aggregates["rules_in_grammar"] = in_grammar
        aggregates["rules_reported"] = reported
    return EvalReport(scores, aggregates, include_conformance)
