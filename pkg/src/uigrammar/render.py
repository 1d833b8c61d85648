"""Static SVG drawings of layouts for side-by-side inspection."""

from __future__ import annotations

import colorsys
from typing import Iterable, Sequence
from xml.sax.saxutils import escape, quoteattr

from .layout import Bounds, UILayout, Vocabulary, filter_invisible, flatten

__all__ = ["label_color", "render_layout", "render_pair"]

PANEL_WIDTH = 360
CAPTION_HEIGHT = 28
LEGEND_ROW = 18
UNKNOWN_COLOR = "#808080"


def label_color(label: str, vocab: Vocabulary) -> str:
    """Evenly spaced hues over the vocabulary order; unknown labels are gray."""
    try:
        index = vocab.index(label)
    except KeyError:
        return UNKNOWN_COLOR
    r, g, b = colorsys.hsv_to_rgb(index / len(vocab), 0.75, 0.85)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _elements(layout: UILayout, vocab: Vocabulary, hide_invisible: bool) -> list[tuple[str, Bounds]]:
    return filter_invisible(layout, vocab) if hide_invisible else flatten(layout)


def _panel(
    layout: UILayout, vocab: Vocabulary, hide_invisible: bool, x: float, y: float, width: float
) -> list[str]:
    canvas = layout.canvas
    height = width * canvas.height / canvas.width
    font = max(canvas.width / 40, 1)
    stroke = max(canvas.width / 360, 1)
    out = [
        f'<svg x="{x:g}" y="{y:g}" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {canvas.width} {canvas.height}" preserveAspectRatio="xMidYMid meet">',
        f'<rect class="frame" x="0" y="0" width="{canvas.width}" height="{canvas.height}" '
        f'fill="#ffffff" stroke="#000000" stroke-width="{stroke:g}"/>',
    ]
    for label, b in _elements(layout, vocab, hide_invisible):
        color = label_color(label, vocab)
        out.append(
            f'<rect class="element" data-label={quoteattr(label)} x="{b.left}" y="{b.top}" '
            f'width="{max(b.width, 0)}" height="{max(b.height, 0)}" fill="{color}" fill-opacity="0.15" '
            f'stroke="{color}" stroke-width="{stroke:g}"/>'
        )
        out.append(
            f'<text x="{b.left + stroke:g}" y="{b.top + font:g}" font-family="sans-serif" '
            f'font-size="{font:g}" fill="{color}">{escape(label)}</text>'
        )
    out.append("</svg>")
    return out


def _document(width: float, height: float, body: Iterable[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def render_layout(
    layout: UILayout,
    vocab: Vocabulary,
    hide_invisible: bool = False,
    width: float = PANEL_WIDTH,
    caption: str | None = None,
) -> str:
    """One rectangle per element, colored by label, drawn parents first."""
    top = CAPTION_HEIGHT if caption else 0
    height = width * layout.canvas.height / layout.canvas.width
    body = []
    if caption:
        body.append(_caption(caption, width / 2, CAPTION_HEIGHT * 0.7))
    body.extend(_panel(layout, vocab, hide_invisible, 0, top, width))
    return _document(width, top + height, body)


def _caption(text: str, cx: float, y: float) -> str:
    return f'<text x="{cx:g}" y="{y:g}" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(text)}</text>'


def _legend(labels: Sequence[str], vocab: Vocabulary, x: float, y: float) -> list[str]:
    out = []
    for i, label in enumerate(labels):
        row_y = y + i * LEGEND_ROW
        color = label_color(label, vocab)
        out.append(
            f'<rect class="legend" x="{x:g}" y="{row_y:g}" width="12" height="12" fill="{color}" stroke="{color}"/>'
        )
        out.append(
            f'<text x="{x + 18:g}" y="{row_y + 11:g}" font-family="sans-serif" font-size="12">{escape(label)}</text>'
        )
    return out


def _ordered_labels(labels: Iterable[str], vocab: Vocabulary) -> list[str]:
    def key(label: str) -> tuple[int, str]:
        try:
            return (vocab.index(label), label)
        except KeyError:
            return (len(vocab), label)

    return sorted(set(labels), key=key)


def render_pair(
    original: UILayout,
    generated: UILayout,
    vocab: Vocabulary,
    hide_invisible: bool = False,
    captions: tuple[str, str] = ("original", "generated"),
    panel_width: float = PANEL_WIDTH,
) -> str:
    """Original and generated layouts side by side with a shared legend."""
    gap = 20
    heights = [panel_width * l.canvas.height / l.canvas.width for l in (original, generated)]
    labels = _ordered_labels(
        [label for layout in (original, generated) for label, _ in _elements(layout, vocab, hide_invisible)], vocab
    )
    legend_width = 200
    width = 2 * panel_width + 3 * gap + legend_width
    height = CAPTION_HEIGHT + max(max(heights), len(labels) * LEGEND_ROW) + gap
    body: list[str] = []
    for i, (layout, caption) in enumerate(zip((original, generated), captions)):
        x = gap + i * (panel_width + gap)
        body.append(_caption(caption, x + panel_width / 2, CAPTION_HEIGHT * 0.7))
        body.extend(_panel(layout, vocab, hide_invisible, x, CAPTION_HEIGHT, panel_width))
    body.extend(_legend(labels, vocab, 2 * panel_width + 3 * gap, CAPTION_HEIGHT))
    return _document(width, height, body)
