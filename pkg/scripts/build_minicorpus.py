#!/usr/bin/env python3
"""Regenerate the bundled 10-screen mini-corpus and its mock LLM fixtures.

Writes under src/uigrammar/data/minicorpus/:
  hierarchies/<screen_id>.json, summaries.jsonl, metadata.jsonl
  mock/<prompt sha256>.json   canned replies for both prompt variants

The fixtures are keyed by prompt text, so rerun this after editing the
templates or the default pipeline settings (split seed 0, fraction 0.2,
example seed 0).
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from uigrammar.grammar import ProductionRule, build_grammar, extract_rules
from uigrammar.ingest import ScreenRecord, split_by_app
from uigrammar.layout import DEFAULT_CANVAS, Bounds, UIElement, UILayout, Vocabulary, layout_to_json
from uigrammar.gateway import write_fixture
from uigrammar.promptgen import plan_batch

OUT = Path(__file__).resolve().parents[1] / "src" / "uigrammar" / "data" / "minicorpus"
W, H = DEFAULT_CANVAS.width, DEFAULT_CANVAS.height


def E(label: str, l: int, t: int, r: int, b: int, *children: UIElement) -> UIElement:
    return UIElement(label, Bounds(l, t, r, b), children)


def toolbar(title_right: int = 1100) -> UIElement:
    return E("TOOLBAR", 0, 84, W, 280, E("PICTOGRAM", 40, 132, 140, 232), E("TEXT", 180, 132, title_right, 232))


def navbar() -> UIElement:
    return E(
        "NAVIGATION_BAR",
        0,
        2392,
        W,
        2560,
        E("PICTOGRAM", 200, 2426, 300, 2526),
        E("PICTOGRAM", 670, 2426, 770, 2526),
        E("PICTOGRAM", 1140, 2426, 1240, 2526),
    )


def list_item(top: int) -> UIElement:
    return E(
        "LIST_ITEM",
        0,
        top,
        W,
        top + 240,
        E("IMAGE", 40, top + 20, 240, top + 220),
        E("CONTAINER", 280, top + 20, 1400, top + 220, E("TEXT", 280, top + 20, 1400, top + 100), E("TEXT", 280, top + 120, 1400, top + 220)),
    )


def root(*children: UIElement) -> UILayout:
    return UILayout(E("ROOT", 0, 0, W, H, *children))


SCREENS: list[tuple[str, str, float, int, str, UILayout]] = [
    (
        "10001",
        "com.example.comics",
        4.6,
        500_000,
        "a welcome page for a comics reading app",
        root(
            E("BACKGROUND", 0, 0, W, H),
            E("IMAGE", 320, 400, 1120, 1200),
            E("TEXT", 120, 1300, 1320, 1420),
            E("TEXT", 120, 1460, 1320, 1560),
            E("CONTAINER", 120, 1900, 1320, 2300, E("BUTTON", 120, 1900, 1320, 2060), E("BUTTON", 120, 2140, 1320, 2300)),
        ),
    ),
    (
        "10002",
        "com.example.comics",
        4.6,
        500_000,
        "a list of popular comics with cover images",
        root(toolbar(), list_item(300), list_item(560), list_item(820), list_item(1080), navbar()),
    ),
    (
        "10003",
        "com.example.weather",
        4.5,
        1_000_000,
        "a weather forecast screen showing today's temperature",
        root(
            toolbar(),
            E("CARD_VIEW", 40, 320, 1400, 1120, E("PICTOGRAM", 120, 400, 520, 800), E("TEXT", 600, 400, 1320, 600), E("TEXT", 600, 640, 1320, 800)),
            E("CONTAINER", 40, 1160, 1400, 1560, E("TEXT", 40, 1160, 1400, 1260), E("IMAGE", 40, 1300, 1400, 1560)),
            navbar(),
        ),
    ),
    (
        "10004",
        "com.example.weather",
        4.5,
        1_000_000,
        "a settings page for weather units and notifications",
        root(
            toolbar(),
            E("CONTAINER", 0, 300, W, 460, E("TEXT", 40, 340, 1100, 420), E("SWITCH", 1200, 340, 1400, 420)),
            E("CONTAINER", 0, 480, W, 640, E("TEXT", 40, 520, 1100, 600), E("SWITCH", 1200, 520, 1400, 600)),
            E("CONTAINER", 0, 660, W, 820, E("TEXT", 40, 700, 1100, 780), E("CHECK_BOX", 1200, 700, 1400, 780)),
        ),
    ),
    (
        "10005",
        "com.example.notes",
        4.4,
        250_000,
        "a list of notes with a button to add a new note",
        root(toolbar(), list_item(300), list_item(560), list_item(820), E("BUTTON", 1160, 2120, 1400, 2360)),
    ),
    (
        "10006",
        "com.example.notes",
        4.4,
        250_000,
        "a note editing screen with a title and body field",
        root(
            toolbar(),
            E("TEXT_INPUT", 40, 320, 1400, 480),
            E("TEXT_INPUT", 40, 520, 1400, 2200),
            E("CONTAINER", 40, 2240, 1400, 2360, E("BUTTON", 40, 2240, 680, 2360), E("BUTTON", 760, 2240, 1400, 2360)),
        ),
    ),
    (
        "10007",
        "com.example.shop",
        4.7,
        5_000_000,
        "a product detail page with price and add to cart button",
        root(
            toolbar(),
            E("IMAGE", 0, 280, W, 1240),
            E("PAGER_INDICATOR", 560, 1180, 880, 1220),
            E("CONTAINER", 40, 1280, 1400, 1680, E("TEXT", 40, 1280, 1400, 1400), E("TEXT", 40, 1440, 700, 1540), E("TEXT", 40, 1580, 1400, 1680)),
            E("BUTTON", 40, 2200, 1400, 2360),
        ),
    ),
    (
        "10008",
        "com.example.shop",
        4.7,
        5_000_000,
        "a login page asking for email and password",
        root(
            E("IMAGE", 520, 300, 920, 700),
            E("TEXT_INPUT", 120, 900, 1320, 1060),
            E("TEXT_INPUT", 120, 1100, 1320, 1260),
            E("BUTTON", 120, 1400, 1320, 1560),
            E("TEXT", 120, 1600, 1320, 1680),
        ),
    ),
    (
        "10009",
        "com.example.fitness",
        4.8,
        2_000_000,
        "a workout timer screen with start and pause controls",
        root(
            toolbar(),
            E("TEXT", 320, 600, 1120, 900),
            E("PROGRESS_BAR", 120, 1000, 1320, 1060),
            E("CONTAINER", 120, 1400, 1320, 1640, E("BUTTON", 120, 1400, 680, 1640), E("BUTTON", 760, 1400, 1320, 1640)),
            navbar(),
        ),
    ),
    (
        "10010",
        "com.example.fitness",
        4.8,
        2_000_000,
        "a user profile page with statistics and a photo",
        root(
            toolbar(),
            E("IMAGE", 520, 340, 920, 740),
            E("TEXT", 320, 780, 1120, 880),
            E("CARD_VIEW", 40, 960, 1400, 1360, E("TEXT", 120, 1000, 680, 1160), E("TEXT", 760, 1000, 1320, 1160), E("TEXT", 120, 1200, 1320, 1320)),
            navbar(),
        ),
    ),
]


def squash(node: UIElement, factor: float) -> UIElement:
    """Scale vertical coordinates; stands in for an imperfect model reply."""
    b = node.bounds
    return UIElement(
        node.label,
        Bounds(b.left, round(b.top * factor), b.right, round(b.bottom * factor)),
        tuple(squash(c, factor) for c in node.children),
    )


def reply(layout: UILayout, factor: float, rules: list[ProductionRule] | None) -> str:
    generated = UILayout(squash(layout.root, factor), layout.canvas)
    payload = '{"layout": ' + layout_to_json(generated) + "}"
    if rules is not None:
        rule_list = json.dumps([str(r) for r in rules])
        payload = '{"rules_used": ' + rule_list + ', "layout": ' + layout_to_json(generated) + "}"
    return "```json\n" + payload + "\n```"


def main() -> None:
    for sub in ("hierarchies", "mock"):
        shutil.rmtree(OUT / sub, ignore_errors=True)
        (OUT / sub).mkdir(parents=True)
    records = []
    with open(OUT / "summaries.jsonl", "w", encoding="utf-8") as sums, open(
        OUT / "metadata.jsonl", "w", encoding="utf-8"
    ) as meta:
        for screen_id, package, rating, downloads, summary, layout in SCREENS:
            (OUT / "hierarchies" / f"{screen_id}.json").write_text(layout_to_json(layout, indent=2) + "\n", encoding="utf-8")
            sums.write(json.dumps({"screen_id": screen_id, "summary": summary}) + "\n")
            meta.write(
                json.dumps({"screen_id": screen_id, "app_package": package, "rating": rating, "downloads": downloads})
                + "\n"
            )
            records.append(ScreenRecord(screen_id, package, layout, summary, rating, downloads))

    vocab = Vocabulary.default()
    split = split_by_app(records, 0.2, seed=0)
    grammar_side = split.records_on(records, "grammar")
    provided = build_grammar([r.layout for r in grammar_side], [r.screen_id for r in grammar_side])
    by_id = {r.screen_id: r for r in records}

    _, plain = plan_batch(records, "plain", vocab, 0, split)
    for bundle in plain:
        write_fixture(OUT / "mock", bundle.text, reply(by_id[bundle.target_screen_id].layout, 0.95, None))

    _, guided = plan_batch(records, "grammar", vocab, 0, split, provided)
    for i, bundle in enumerate(guided):
        layout = by_id[bundle.target_screen_id].layout
        rules = extract_rules(UILayout(squash(layout.root, 0.97)))
        if i % 2 == 0:
            # one rule the provided grammar does not contain
            rules.append(ProductionRule("CONTAINER", ("TEXT", "SWITCH")))
        write_fixture(OUT / "mock", bundle.text, reply(layout, 0.97, rules))
    print(f"wrote {len(records)} screens and {len(plain) + len(guided)} fixtures to {OUT}")


if __name__ == "__main__":
    main()
