from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import E, example_tree, random_layout
from uigrammar.layout import (
    Bounds,
    Canvas,
    LayoutFormatError,
    UILayout,
    Vocabulary,
    filter_invisible,
    flatten,
    layout_from_dict,
    layout_from_json,
    layout_to_json,
    validate,
)


def test_default_vocabulary_has_25_labels_and_5_invisible(vocab):
    assert len(vocab) == 25
    assert vocab.root_symbol == "ROOT"
    assert vocab.invisible == {"ROOT", "BACKGROUND", "LIST_ITEM", "CARD_VIEW", "CONTAINER"}


def test_vocabulary_membership_is_case_insensitive(vocab):
    assert "Pictogram" in vocab
    assert vocab.canonical("list_item") == "LIST_ITEM"
    assert "WIDGET" not in vocab


def test_vocabulary_rejects_unknown_root():
    with pytest.raises(ValueError):
        Vocabulary(("A", "B"), root_symbol="ROOT")


def test_canvas_must_be_positive():
    with pytest.raises(ValueError):
        Canvas(0, 100)


def test_flatten_example_tree_is_preorder(sample_tree):
    assert [label for label, _ in flatten(sample_tree)] == ["Root", "Container", "Pictogram", "Text", "Button"]
    assert flatten(sample_tree)[2][1] == Bounds(40, 240, 160, 360)


def test_flatten_single_node():
    layout = UILayout(E("ROOT", 0, 0, 10, 10))
    assert len(flatten(layout)) == 1


def test_flatten_balanced_binary_tree():
    leaf = lambda n: E(n, 0, 0, 1, 1)  # noqa: E731
    tree = E("ROOT", 0, 0, 4, 4, E("A", 0, 0, 2, 2, leaf("a1"), leaf("a2")), E("B", 2, 2, 4, 4, leaf("b1"), leaf("b2")))
    assert [label for label, _ in flatten(UILayout(tree))] == ["ROOT", "A", "a1", "a2", "B", "b1", "b2"]


def test_filter_invisible_example_tree(sample_tree, vocab):
    assert [label for label, _ in filter_invisible(sample_tree, vocab)] == ["Pictogram", "Text", "Button"]


def test_filter_invisible_only_invisible_labels(vocab):
    layout = UILayout(E("ROOT", 0, 0, 100, 100, E("CONTAINER", 0, 0, 50, 50, E("BACKGROUND", 0, 0, 10, 10))))
    assert filter_invisible(layout, vocab) == []


def test_filter_keeps_descendants_of_removed_nodes(vocab):
    card = E("CARD_VIEW", 0, 0, 100, 50, E("BUTTON", 0, 0, 50, 50), E("BUTTON", 50, 0, 100, 50))
    layout = UILayout(E("ROOT", 0, 0, 100, 100, card))
    assert filter_invisible(layout, vocab) == [("BUTTON", Bounds(0, 0, 50, 50)), ("BUTTON", Bounds(50, 0, 100, 50))]


def test_validate_example_tree_succeeds(sample_tree, vocab):
    assert validate(sample_tree, vocab).ok


def test_validate_unknown_label(vocab):
    layout = UILayout(E("ROOT", 0, 0, 100, 100, E("WIDGET", 0, 0, 10, 10)))
    result = validate(layout, vocab)
    assert result.codes() == ["unknown_label"]
    assert "WIDGET" in result.violations[0].message


def test_validate_inverted_bounds(vocab):
    layout = UILayout(E("ROOT", 0, 0, 1440, 2560, E("TEXT", 100, 50, 90, 60)))
    result = validate(layout, vocab)
    assert not result.ok
    assert any(v.message.startswith("left > right") for v in result.violations)


def test_validate_out_of_canvas_and_missing_root(vocab):
    layout = UILayout(E("TEXT", -5, 0, 2000, 10))
    assert set(validate(layout, vocab).codes()) == {"missing_root", "out_of_canvas"}


def test_zero_area_elements_are_valid(vocab):
    assert validate(UILayout(E("ROOT", 0, 0, 1440, 2560, E("TEXT", 5, 5, 5, 90))), vocab).ok


def test_from_dict_rejects_schema_violations():
    with pytest.raises(LayoutFormatError):
        layout_from_dict({"label": "ROOT", "bounds": [0, 0, 1]})
    with pytest.raises(LayoutFormatError):
        layout_from_dict({"bounds": [0, 0, 1, 1]})
    with pytest.raises(LayoutFormatError):
        layout_from_json("{not json")


def test_from_dict_canonicalizes_labels_with_vocab(vocab):
    layout = layout_from_dict({"label": "root", "bounds": [0, 0, 1, 1], "children": []}, vocab=vocab)
    assert layout.root.label == "ROOT"


def test_serialized_schema_has_only_label_bounds_children(sample_tree):
    data = json.loads(layout_to_json(sample_tree))
    assert set(data) == {"label", "bounds", "children"}
    assert data["bounds"] == [0, 0, 1440, 2560]


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_round_trip_and_count_properties(seed, vocab):
    layout = random_layout(random.Random(seed), list(vocab.labels))
    assert layout_from_json(layout_to_json(layout), layout.canvas) == layout
    flat = flatten(layout)
    assert len(flat) == len(layout)
    visible = filter_invisible(layout, vocab)
    assert not any(vocab.is_invisible(label) for label, _ in visible)
    remaining = list(flat)
    for item in visible:
        remaining.remove(item)  # multiset inclusion
    result = validate(layout, vocab)
    assert result.ok
    for node in layout.elements():
        b = node.bounds
        assert 0 <= b.left <= b.right <= layout.canvas.width
        assert 0 <= b.top <= b.bottom <= layout.canvas.height


def test_example_tree_fixture_helper_is_stable():
    assert example_tree() == example_tree()
