from __future__ import annotations

import random
from importlib import resources
from pathlib import Path

import pytest

from uigrammar.layout import Bounds, Canvas, UIElement, UILayout, Vocabulary

# Filled by test_acceptance; printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []

GOLDEN_DIR = Path(__file__).parent / "golden"
MINICORPUS = Path(str(resources.files("uigrammar").joinpath("data/minicorpus")))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def E(label: str, l: int, t: int, r: int, b: int, *children: UIElement) -> UIElement:
    return UIElement(label, Bounds(l, t, r, b), children)


def example_tree() -> UILayout:
    """Root(Container(Pictogram, Text), Button), the running example tree."""
    return UILayout(
        E(
            "Root",
            0,
            0,
            1440,
            2560,
            E("Container", 0, 200, 1440, 400, E("Pictogram", 40, 240, 160, 360), E("Text", 200, 240, 1000, 360)),
            E("Button", 400, 2200, 1040, 2360),
        )
    )


def random_layout(
    rng: random.Random,
    labels: list[str],
    canvas: Canvas = Canvas(1440, 2560),
    max_depth: int = 4,
    max_children: int = 4,
    root_label: str = "ROOT",
) -> UILayout:
    """Valid random tree: every child box is nested inside its parent's box."""

    def box_inside(b: Bounds) -> Bounds:
        x0, x1 = sorted(rng.randint(b.left, b.right) for _ in range(2))
        y0, y1 = sorted(rng.randint(b.top, b.bottom) for _ in range(2))
        return Bounds(x0, y0, x1, y1)

    def grow(label: str, bounds: Bounds, depth: int) -> UIElement:
        n = 0 if depth >= max_depth else rng.randint(0, max_children)
        children = tuple(grow(rng.choice(labels), box_inside(bounds), depth + 1) for _ in range(n))
        return UIElement(label, bounds, children)

    return UILayout(grow(root_label, Bounds(0, 0, canvas.width, canvas.height), 0), canvas)


@pytest.fixture(scope="session")
def vocab() -> Vocabulary:
    return Vocabulary.default()


@pytest.fixture()
def sample_tree() -> UILayout:
    return example_tree()


@pytest.fixture(scope="session")
def minicorpus() -> Path:
    return MINICORPUS


def aligned_layout(rng: random.Random, n: int, canvas: Canvas) -> list[tuple[str, Bounds]]:
    """``n`` elements where each one shares an edge or center with another.

    Every new element copies one coordinate (left, right, top, bottom, or a
    center via equal offset and extent) from a random earlier element, so the
    pair is mutually aligned. Nothing is clamped afterwards.
    """
    labels = ["TEXT", "BUTTON", "IMAGE", "PICTOGRAM"]
    W, H = canvas.width, canvas.height
    x0, x1 = sorted(rng.randint(0, W) for _ in range(2))
    y0, y1 = sorted(rng.randint(0, H) for _ in range(2))
    elements = [(rng.choice(labels), Bounds(x0, y0, x1, y1))]
    while len(elements) < n:
        _, a = rng.choice(elements)
        ys = sorted(rng.randint(0, H) for _ in range(2))
        xs = sorted(rng.randint(0, W) for _ in range(2))
        kind = rng.randrange(6)
        if kind == 0:
            xs = [a.left, rng.randint(a.left, W)]
        elif kind == 1:
            xs = [rng.randint(0, a.right), a.right]
        elif kind == 2:
            ys = [a.top, rng.randint(a.top, H)]
        elif kind == 3:
            ys = [rng.randint(0, a.bottom), a.bottom]
        elif kind == 4:
            xs = [a.left, a.right]
        else:
            ys = [a.top, a.bottom]
        elements.append((rng.choice(labels), Bounds(xs[0], ys[0], xs[1], ys[1])))
    return elements


def run_pipeline(out: Path) -> list[int]:
    """All six subcommands over the bundled mini-corpus; returns exit codes."""
    from uigrammar.cli import main

    mc = MINICORPUS
    steps = [
        ["ingest", "--hierarchies", str(mc / "hierarchies"), "--summaries", str(mc / "summaries.jsonl"),
         "--metadata", str(mc / "metadata.jsonl"), "--out", str(out / "manifest.jsonl")],
        ["split", "--manifest", str(out / "manifest.jsonl"), "--seed", "0", "--out", str(out / "split.json")],
        ["grammar", "--manifest", str(out / "manifest.jsonl"), "--split", str(out / "split.json"),
         "--out", str(out / "grammar.jsonl")],
    ]
    for variant in ("plain", "grammar"):
        gen = out / f"gen_{variant}"
        steps += [
            ["generate", "--manifest", str(out / "manifest.jsonl"), "--split", str(out / "split.json"),
             "--variant", variant, "--grammar", str(out / "grammar.jsonl"), "--fixtures", str(mc / "mock"),
             "--out", str(gen)],
            ["evaluate", "--results", str(gen), "--manifest", str(out / "manifest.jsonl"),
             "--grammar", str(out / "grammar.jsonl"), "--out", str(out / f"report_{variant}.json")],
            ["render", "--results", str(gen), "--manifest", str(out / "manifest.jsonl"),
             "--out", str(out / f"svg_{variant}")],
        ]
    return [main(argv) for argv in steps]
