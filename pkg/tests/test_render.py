from __future__ import annotations

import xml.etree.ElementTree as ET

from conftest import E
from uigrammar.layout import UILayout
from uigrammar.render import label_color, render_layout, render_pair

NS = "{http://www.w3.org/2000/svg}"


def rects(svg: str, cls: str) -> list[ET.Element]:
    root = ET.fromstring(svg.encode())
    return [e for e in root.iter(f"{NS}rect") if e.get("class") == cls]


def test_example_tree_draws_every_element(sample_tree, vocab):
    svg = render_layout(sample_tree, vocab)
    assert [e.get("data-label") for e in rects(svg, "element")] == ["Root", "Container", "Pictogram", "Text", "Button"]
    assert len(rects(svg, "frame")) == 1


def test_example_tree_hide_invisible(sample_tree, vocab):
    svg = render_layout(sample_tree, vocab, hide_invisible=True)
    assert [e.get("data-label") for e in rects(svg, "element")] == ["Pictogram", "Text", "Button"]


def test_all_invisible_leaves_only_frame(vocab):
    layout = UILayout(E("ROOT", 0, 0, 1440, 2560, E("CONTAINER", 0, 0, 10, 10)))
    svg = render_layout(layout, vocab, hide_invisible=True)
    assert rects(svg, "element") == []
    assert len(rects(svg, "frame")) == 1


def test_render_is_deterministic(sample_tree, vocab):
    assert render_pair(sample_tree, sample_tree, vocab) == render_pair(sample_tree, sample_tree, vocab)


def test_pair_legend_covers_union(vocab):
    a = UILayout(E("ROOT", 0, 0, 1440, 2560, E("TEXT", 0, 0, 100, 100)))
    b = UILayout(E("ROOT", 0, 0, 1440, 2560, E("SWITCH", 0, 0, 100, 100), E("WIDGET", 0, 0, 5, 5)))
    svg = render_pair(a, b, vocab, hide_invisible=True)
    assert len(rects(svg, "legend")) == 3
    root = ET.fromstring(svg.encode())
    texts = [t.text for t in root.iter(f"{NS}text")]
    assert {"TEXT", "SWITCH", "WIDGET"} <= set(texts)
    assert len(rects(svg, "frame")) == 2


def test_colors_distinct_per_label(vocab):
    colors = {label_color(label, vocab) for label in vocab.labels}
    assert len(colors) == len(vocab)
    assert label_color("WIDGET", vocab) == "#808080"
    assert label_color("text", vocab) == label_color("TEXT", vocab)
