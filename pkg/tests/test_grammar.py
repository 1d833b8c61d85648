from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import E, example_tree, random_layout
from uigrammar.grammar import (
    GrammarSet,
    LabelTree,
    ProductionRule,
    RuleFormatError,
    SampleTooLarge,
    build_grammar,
    conformance,
    extract_rules,
    parse_rule,
    sample_structure,
)
from uigrammar.layout import UILayout

R = ProductionRule


def test_extract_example_tree(sample_tree):
    rules = extract_rules(sample_tree)
    assert rules == [R("Root", ("Container", "Button")), R("Container", ("Pictogram", "Text"))]
    assert [str(r) for r in rules] == ["Root -> Container Button", "Container -> Pictogram Text"]
    assert rules[0].format("→") == "Root → Container Button"


def test_single_node_has_no_rules():
    assert extract_rules(UILayout(E("ROOT", 0, 0, 1, 1))) == []


def test_extract_is_a_multiset():
    # hand-enumerated internal nodes: Root, Container#1, Container#2
    tree = E("Root", 0, 0, 10, 10, E("Container", 0, 0, 5, 5, E("Text", 0, 0, 1, 1)), E("Container", 5, 5, 10, 10, E("Text", 5, 5, 6, 6)))
    rules = extract_rules(UILayout(tree))
    assert rules.count(R("Root", ("Container", "Container"))) == 1
    assert rules.count(R("Container", ("Text",))) == 2
    assert len(rules) == 3


def test_rhs_order_matters():
    assert R("Root", ("Container", "Button")) != R("Root", ("Button", "Container"))


def test_rule_requires_children():
    with pytest.raises(ValueError):
        R("Root", ())


@pytest.mark.parametrize(
    "text, expected",
    [
        ("Root -> Container Button", R("Root", ("Container", "Button"))),
        ("Root → Container Button", R("Root", ("Container", "Button"))),
        ("  CONTAINER->TEXT  ", R("CONTAINER", ("TEXT",))),
    ],
)
def test_parse_rule(text, expected):
    assert parse_rule(text) == expected


@pytest.mark.parametrize("text", ["Root Container", "Root ->", "-> A", "A B -> C", "A -> B -> C"])
def test_parse_rule_rejects(text):
    with pytest.raises(RuleFormatError):
        parse_rule(text)


def test_build_grammar_two_copies_of_example_tree():
    grammar = build_grammar([example_tree(), example_tree()])
    assert grammar.rules == [
        (R("Container", ("Pictogram", "Text")), 2, 1.0),
        (R("Root", ("Container", "Button")), 2, 1.0),
    ]


def test_probability_ratio():
    grammar = GrammarSet({R("Container", ("Text",)): 3, R("Container", ("Text", "Text")): 1})
    assert grammar.probability(R("Container", ("Text",))) == 0.75
    assert grammar.probability(R("Container", ("Text", "Text"))) == 0.25


def test_build_grammar_requires_layouts():
    with pytest.raises(ValueError):
        build_grammar([])


def test_grammar_jsonl_round_trip(tmp_path):
    grammar = build_grammar([example_tree()], ["s1"])
    path = tmp_path / "g.jsonl"
    grammar.save(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3  # header + 2 rules
    assert GrammarSet.load(path) == grammar


def test_merge_is_commutative_and_associative():
    rng = random.Random(3)
    labels = ["ROOT", "TEXT", "BUTTON", "CONTAINER"]
    parts = [build_grammar([random_layout(rng, labels)], [f"s{i}"]) for i in range(3)]
    a, b, c = parts
    assert (a | b) | c == a | (b | c) == c | (b | a)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_grammar_properties(seed):
    labels = ["ROOT", "CONTAINER", "TEXT", "BUTTON", "IMAGE", "LIST_ITEM"]
    rng = random.Random(seed)
    layouts = [random_layout(rng, labels, max_depth=3) for _ in range(3)]
    grammar = build_grammar(layouts)
    for lhs in grammar.lhs_symbols():
        assert abs(sum(p for _, p in grammar.expansions(lhs)) - 1.0) <= 1e-9
    internal = sum(1 for layout in layouts for n in layout.elements() if n.children)
    assert grammar.total_count() == internal
    single = build_grammar([layouts[0]])
    rules = extract_rules(layouts[0])
    for rule in set(rules):
        assert single.count(rule) == rules.count(rule)
    if rules:
        assert conformance(rules, single).fraction == 1.0


def test_sample_example_tree_grammar_is_deterministic_tree():
    grammar = build_grammar([example_tree()])
    expected = LabelTree("Root", (LabelTree("Container", (LabelTree("Pictogram"), LabelTree("Text"))), LabelTree("Button")))
    for seed in range(20):
        assert sample_structure(grammar, seed, root_symbol="Root") == expected


def test_sample_max_depth_zero_is_root_leaf():
    grammar = build_grammar([example_tree()])
    assert sample_structure(grammar, 1, max_depth=0, root_symbol="Root") == LabelTree("Root")


def test_sample_requires_root_rule():
    grammar = GrammarSet({R("A", ("B",)): 1})
    with pytest.raises(ValueError):
        sample_structure(grammar, 0)


def test_sample_aborts_when_too_large():
    recursive = GrammarSet({R("ROOT", ("ROOT", "ROOT")): 1})
    with pytest.raises(SampleTooLarge, match="sample too large"):
        sample_structure(recursive, 0, max_depth=50, max_nodes=200)


def test_sample_depth_cutoff_on_recursive_grammar():
    recursive = GrammarSet({R("ROOT", ("ROOT", "ROOT")): 1})
    tree = sample_structure(recursive, 0, max_depth=3, max_nodes=200)
    assert len(tree) == 15


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=0, max_value=1000))
def test_samples_use_only_grammar_rules_and_are_reproducible(tree_seed, sample_seed):
    labels = ["ROOT", "CONTAINER", "TEXT", "BUTTON"]
    rng = random.Random(tree_seed)
    layouts = [random_layout(rng, labels, max_depth=3) for _ in range(2)]
    grammar = build_grammar(layouts)
    if not grammar.expansions("ROOT"):
        return
    try:
        tree = sample_structure(grammar, sample_seed, max_depth=6, max_nodes=2000)
    except SampleTooLarge:
        return
    assert tree == sample_structure(grammar, sample_seed, max_depth=6, max_nodes=2000)
    rules = tree.rules()
    if rules:
        assert conformance(rules, grammar).fraction == 1.0


def test_conformance_counting():
    grammar = build_grammar([example_tree()])
    inside = R("Root", ("Container", "Button"))
    outside = R("Root", ("Button",))
    report = conformance([inside, inside, outside], grammar)
    assert (report.in_grammar_count, report.total_count) == (2, 3)
    assert report.fraction == pytest.approx(2 / 3, abs=1e-12)
    deduped = conformance([inside, inside, outside], grammar, dedupe=True)
    assert deduped.fraction == 0.5


def test_conformance_empty_is_undefined():
    report = conformance([], build_grammar([example_tree()]))
    assert report.total_count == 0
    assert not report.defined
    assert report.fraction is None


def test_conformance_subset_is_one():
    grammar = build_grammar([example_tree()])
    assert conformance(list(grammar), grammar).fraction == 1.0
