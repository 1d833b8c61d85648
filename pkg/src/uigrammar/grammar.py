"""UI grammar: production rules read off layout trees.

A rule ``A -> B C`` records that an element labeled ``A`` had exactly the
ordered children ``B C``. A :class:`GrammarSet` merges rules from many
screens, keeps occurrence counts and turns them into per-parent expansion
probabilities, which is enough to sample new label structures top-down.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from . import __version__
from .layout import UIElement, UILayout

__all__ = [
    "ConformanceReport",
    "GrammarSet",
    "LabelTree",
    "ProductionRule",
    "RuleFormatError",
    "SampleTooLarge",
    "build_grammar",
    "conformance",
    "extract_rules",
    "parse_rule",
    "sample_structure",
]

ARROW = "->"


class RuleFormatError(ValueError):
    pass


class SampleTooLarge(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class ProductionRule:
    lhs: str
    rhs: tuple[str, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.rhs, tuple):
            object.__setattr__(self, "rhs", tuple(self.rhs))
        if not self.rhs:
            raise ValueError("a production rule needs at least one child symbol")

    def __str__(self) -> str:
        return f"{self.lhs} {ARROW} {' '.join(self.rhs)}"

    def format(self, arrow: str = ARROW) -> str:
        return f"{self.lhs} {arrow} {' '.join(self.rhs)}"


def parse_rule(text: str) -> ProductionRule:
    """Parse ``"LHS -> RHS1 RHS2"``; the unicode arrow is accepted too."""
    normalized = text.replace("→", ARROW)
    if normalized.count(ARROW) != 1:
        raise RuleFormatError(f"expected exactly one '{ARROW}' in rule {text!r}")
    lhs, rhs = (part.strip() for part in normalized.split(ARROW))
    children = tuple(rhs.split())
    if not lhs or len(lhs.split()) != 1 or not children:
        raise RuleFormatError(f"malformed rule {text!r}")
    return ProductionRule(lhs, children)


def extract_rules(layout: UILayout | UIElement) -> list[ProductionRule]:
    """One rule per internal node, in pre-order. Leaves contribute nothing."""
    root = layout.root if isinstance(layout, UILayout) else layout
    return [
        ProductionRule(node.label, tuple(child.label for child in node.children))
        for node in root.iter_preorder()
        if node.children
    ]


@dataclass(frozen=True)
class GrammarSet:
    counts: dict[ProductionRule, int]
    source_screen_ids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", dict(sorted(self.counts.items())))
        object.__setattr__(self, "source_screen_ids", frozenset(self.source_screen_ids))
        bad = [str(r) for r, c in self.counts.items() if c < 1]
        if bad:
            raise ValueError(f"rule counts must be >= 1: {bad}")
        totals: Counter[str] = Counter()
        for rule, count in self.counts.items():
            totals[rule.lhs] += count
        object.__setattr__(self, "_lhs_totals", dict(totals))

    @classmethod
    def from_rules(cls, rules: Iterable[ProductionRule], source_screen_ids: Iterable[str] = ()) -> GrammarSet:
        return cls(dict(Counter(rules)), frozenset(source_screen_ids))

    def __len__(self) -> int:
        return len(self.counts)

    def __contains__(self, rule: object) -> bool:
        return rule in self.counts

    def __iter__(self) -> Iterator[ProductionRule]:
        return iter(self.counts)

    @property
    def rules(self) -> list[tuple[ProductionRule, int, float]]:
        return [(rule, count, self.probability(rule)) for rule, count in self.counts.items()]

    def count(self, rule: ProductionRule) -> int:
        return self.counts.get(rule, 0)

    def probability(self, rule: ProductionRule) -> float:
        count = self.counts.get(rule, 0)
        if not count:
            return 0.0
        return count / self._lhs_totals[rule.lhs]  # type: ignore[attr-defined]

    def lhs_symbols(self) -> list[str]:
        return sorted(self._lhs_totals)  # type: ignore[attr-defined]

    def expansions(self, lhs: str) -> list[tuple[ProductionRule, float]]:
        return [(rule, self.probability(rule)) for rule in self.counts if rule.lhs == lhs]

    def total_count(self) -> int:
        return sum(self.counts.values())

    def merge(self, other: GrammarSet) -> GrammarSet:
        merged = Counter(self.counts)
        merged.update(other.counts)
        return GrammarSet(dict(merged), self.source_screen_ids | other.source_screen_ids)

    def __or__(self, other: GrammarSet) -> GrammarSet:
        return self.merge(other)

    # JSON Lines file: one header object, then one rule per line.

    def to_jsonl(self) -> str:
        header = {
            "type": "uigrammar",
            "version": __version__,
            "source_screen_ids": sorted(self.source_screen_ids),
            "rule_count": len(self.counts),
        }
        lines = [json.dumps(header, ensure_ascii=False)]
        for rule, count, p in self.rules:
            lines.append(
                json.dumps({"lhs": rule.lhs, "rhs": list(rule.rhs), "count": count, "p": p}, ensure_ascii=False)
            )
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text: str) -> GrammarSet:
        counts: dict[ProductionRule, int] = {}
        sources: list[str] = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "lhs" not in obj:
                sources.extend(obj.get("source_screen_ids", []))
                continue
            rule = ProductionRule(obj["lhs"], tuple(obj["rhs"]))
            if rule in counts:
                raise ValueError(f"line {lineno}: duplicate rule {rule}")
            counts[rule] = int(obj["count"])
        return cls(counts, frozenset(sources))

    @classmethod
    def load(cls, path: str | Path) -> GrammarSet:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


def build_grammar(
    layouts: Sequence[UILayout], source_screen_ids: Iterable[str] = ()
) -> GrammarSet:
    """Merge the rules of every layout, summing duplicate counts."""
    if not layouts:
        raise ValueError("build_grammar needs at least one layout")
    counts: Counter[ProductionRule] = Counter()
    for layout in layouts:
        counts.update(extract_rules(layout))
    return GrammarSet(dict(counts), frozenset(source_screen_ids))


@dataclass(frozen=True)
class LabelTree:
    label: str
    children: tuple[LabelTree, ...] = ()

    def iter_preorder(self) -> Iterator[LabelTree]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def rules(self) -> list[ProductionRule]:
        return [
            ProductionRule(n.label, tuple(c.label for c in n.children)) for n in self.iter_preorder() if n.children
        ]

    def __len__(self) -> int:
        return sum(1 for _ in self.iter_preorder())

    def to_sexpr(self) -> str:
        if not self.children:
            return self.label
        return f"({self.label} {' '.join(c.to_sexpr() for c in self.children)})"


def sample_structure(
    grammar: GrammarSet,
    seed: int,
    max_depth: int = 10,
    max_nodes: int = 200,
    root_symbol: str = "ROOT",
) -> LabelTree:
    """Expand ``root_symbol`` top-down, choosing rules by their probability.

    Nodes at ``max_depth`` are left as leaves; exceeding ``max_nodes`` raises
    :class:`SampleTooLarge` instead of truncating.
    """
    table = {lhs: grammar.expansions(lhs) for lhs in grammar.lhs_symbols()}
    if root_symbol not in table:
        raise ValueError(f"grammar has no rule expanding the root symbol {root_symbol!r}")
    rng = random.Random(seed)
    n_nodes = 0

    def expand(label: str, depth: int) -> LabelTree:
        nonlocal n_nodes
        n_nodes += 1
        if n_nodes > max_nodes:
            raise SampleTooLarge(f"sample too large: more than {max_nodes} nodes")
        options = table.get(label)
        if not options or depth >= max_depth:
            return LabelTree(label)
        rules = [rule for rule, _ in options]
        weights = [p for _, p in options]
        rule = rng.choices(rules, weights=weights, k=1)[0]
        return LabelTree(label, tuple(expand(child, depth + 1) for child in rule.rhs))

    return expand(root_symbol, 0)


@dataclass(frozen=True)
class ConformanceReport:
    used_rules: tuple[ProductionRule, ...]
    in_grammar_count: int
    total_count: int

    @property
    def defined(self) -> bool:
        return self.total_count > 0

    @property
    def fraction(self) -> float | None:
        """``None`` when no rules were reported."""
        if not self.total_count:
            return None
        return self.in_grammar_count / self.total_count


def conformance(
    reported_rules: Iterable[ProductionRule], grammar: GrammarSet | Iterable[ProductionRule], dedupe: bool = False
) -> ConformanceReport:
    """Share of reported rules found in ``grammar``.

    Rules are counted with multiplicity unless ``dedupe`` is set.
    """
    used = list(reported_rules)
    if dedupe:
        used = list(dict.fromkeys(used))
    known = grammar if isinstance(grammar, GrammarSet) else set(grammar)
    hits = sum(1 for rule in used if rule in known)
    return ConformanceReport(tuple(used), hits, len(used))
