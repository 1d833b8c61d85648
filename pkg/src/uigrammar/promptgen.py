"""One-shot prompt rendering, with and without a UI grammar block.

Templates are plain text files with ``{name}`` placeholders. Only the known
placeholder names are substituted, so literal braces in a template (such as
a JSON response schema) pass through untouched.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Collection, Iterable, Sequence

from .grammar import GrammarSet, ProductionRule, extract_rules
from .ingest import ScreenRecord
from .layout import Vocabulary, layout_to_json

__all__ = [
    "LeakageError",
    "PLACEHOLDERS",
    "PromptBundle",
    "Templates",
    "build_grammar_prompt",
    "build_plain_prompt",
    "plan_batch",
    "format_grammar_block",
    "format_label_list",
    "prompt_hash",
    "select_example",
]

PLACEHOLDERS = (
    "example_summary",
    "example_layout_json",
    "example_grammar",
    "provided_grammar",
    "label_list",
    "target_summary",
    "canvas_width",
    "canvas_height",
    "root_symbol",
)
_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDERS) + r")\}")


class LeakageError(ValueError):
    """The prompt would expose the target screen (or its app) to the model."""


def prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Templates:
    plain: str
    grammar: str

    @classmethod
    def default(cls) -> Templates:
        root = resources.files("uigrammar").joinpath("templates")
        return cls(
            plain=root.joinpath("plain.txt").read_text(encoding="utf-8"),
            grammar=root.joinpath("grammar.txt").read_text(encoding="utf-8"),
        )

    @classmethod
    def from_dir(cls, directory: str | Path) -> Templates:
        directory = Path(directory)
        return cls(
            plain=(directory / "plain.txt").read_text(encoding="utf-8"),
            grammar=(directory / "grammar.txt").read_text(encoding="utf-8"),
        )


@dataclass(frozen=True)
class PromptBundle:
    variant: str
    text: str
    example_screen_id: str
    target_summary: str
    vocabulary_hash: str
    grammar_source_ids: frozenset[str] = field(default_factory=frozenset)
    target_screen_id: str | None = None

    @property
    def prompt_hash(self) -> str:
        return prompt_hash(self.text)

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": self.variant,
            "target_screen_id": self.target_screen_id,
            "target_summary": self.target_summary,
            "example_screen_id": self.example_screen_id,
            "grammar_source_ids": sorted(self.grammar_source_ids),
            "vocabulary_hash": self.vocabulary_hash,
            "prompt_hash": self.prompt_hash,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PromptBundle:
        return cls(
            variant=data["variant"],
            text=data["text"],
            example_screen_id=data["example_screen_id"],
            target_summary=data["target_summary"],
            vocabulary_hash=data["vocabulary_hash"],
            grammar_source_ids=frozenset(data.get("grammar_source_ids", ())),
            target_screen_id=data.get("target_screen_id"),
        )


def format_label_list(vocab: Vocabulary) -> str:
    return ", ".join(vocab.labels)


def format_grammar_block(
    rules: GrammarSet | Iterable[ProductionRule], with_probabilities: bool = False
) -> str:
    """One ``LHS -> RHS`` line per distinct rule."""
    if isinstance(rules, GrammarSet):
        if with_probabilities:
            return "\n".join(f"{rule} ({p:.3f})" for rule, _, p in rules.rules)
        return "\n".join(str(rule) for rule in rules)
    return "\n".join(str(rule) for rule in dict.fromkeys(rules))


def _render(template: str, values: dict[str, str]) -> str:
    return _PLACEHOLDER_RE.sub(lambda m: values.get(m.group(1), m.group(0)), template)


def _common_values(example: ScreenRecord, target_summary: str, vocab: Vocabulary) -> dict[str, str]:
    if not example.summary.strip():
        raise ValueError(f"example screen {example.screen_id!r} has no summary")
    return {
        "example_summary": example.summary.strip(),
        "example_layout_json": layout_to_json(example.layout),
        "label_list": format_label_list(vocab),
        "target_summary": target_summary.strip(),
        "canvas_width": str(example.layout.canvas.width),
        "canvas_height": str(example.layout.canvas.height),
        "root_symbol": vocab.root_symbol,
    }


def build_plain_prompt(
    example: ScreenRecord,
    target_summary: str,
    vocab: Vocabulary,
    target_screen_id: str | None = None,
    templates: Templates | None = None,
) -> PromptBundle:
    if target_screen_id is not None and target_screen_id == example.screen_id:
        raise LeakageError(f"leakage: example screen {example.screen_id!r} is also the target")
    templates = templates or Templates.default()
    text = _render(templates.plain, _common_values(example, target_summary, vocab))
    return PromptBundle(
        variant="plain",
        text=text,
        example_screen_id=example.screen_id,
        target_summary=target_summary.strip(),
        vocabulary_hash=vocab.digest(),
        target_screen_id=target_screen_id,
    )


def build_grammar_prompt(
    example: ScreenRecord,
    example_grammar: GrammarSet | Sequence[ProductionRule] | None,
    provided_grammar: GrammarSet,
    target_summary: str,
    vocab: Vocabulary,
    target_screen_id: str | None = None,
    generation_screen_ids: Collection[str] = (),
    templates: Templates | None = None,
    with_probabilities: bool = False,
) -> PromptBundle:
    """Two-step demonstration prompt: example rules, then example layout.

    ``example_grammar`` defaults to the example's own rules in pre-order.
    Raises :class:`LeakageError` if the provided grammar was read off the
    target screen or any screen in ``generation_screen_ids``.
    """
    if target_screen_id is not None and target_screen_id == example.screen_id:
        raise LeakageError(f"leakage: example screen {example.screen_id!r} is also the target")
    if not provided_grammar.source_screen_ids:
        raise ValueError("provided grammar has no recorded source screens")
    leaked = provided_grammar.source_screen_ids & (set(generation_screen_ids) | {target_screen_id})
    if leaked:
        raise LeakageError(f"leakage: provided grammar was built from generation screens {sorted(leaked)}")
    if example_grammar is None:
        example_grammar = extract_rules(example.layout)
    templates = templates or Templates.default()
    values = _common_values(example, target_summary, vocab)
    values["example_grammar"] = format_grammar_block(example_grammar)
    values["provided_grammar"] = format_grammar_block(provided_grammar, with_probabilities)
    return PromptBundle(
        variant="grammar",
        text=_render(templates.grammar, values),
        example_screen_id=example.screen_id,
        target_summary=target_summary.strip(),
        vocabulary_hash=vocab.digest(),
        grammar_source_ids=provided_grammar.source_screen_ids,
        target_screen_id=target_screen_id,
    )


def select_example(records: Sequence[ScreenRecord], seed: int) -> ScreenRecord:
    """Uniformly pick the one-shot example; ordering of ``records`` does not matter."""
    candidates = sorted((r for r in records if r.summary.strip()), key=lambda r: r.screen_id)
    if not candidates:
        raise ValueError("no candidate example screen with a summary")
    return random.Random(seed).choice(candidates)


def plan_batch(
    records: Sequence[ScreenRecord],
    variant: str,
    vocab: Vocabulary,
    seed: int = 0,
    split: Any = None,
    provided_grammar: GrammarSet | None = None,
    limit: int | None = None,
    templates: Templates | None = None,
    with_probabilities: bool = False,
) -> tuple[ScreenRecord, list[PromptBundle]]:
    """Choose the one-shot example and render one prompt per target screen.

    With a split, the example comes from the grammar side and the targets
    are the generation side; otherwise both come from ``records``. The
    example is never a target. Targets are taken in screen id order.
    """
    if variant not in ("plain", "grammar"):
        raise ValueError(f"unknown prompt variant {variant!r}")
    if split is not None:
        pool = split.records_on(records, "grammar")
        generation = split.records_on(records, "generation")
    else:
        pool = generation = list(records)
    example = select_example(pool, seed)
    targets = sorted((r for r in generation if r.screen_id != example.screen_id), key=lambda r: r.screen_id)
    if limit is not None:
        targets = targets[:limit]
    if variant == "grammar" and provided_grammar is None:
        raise ValueError("the grammar variant needs a provided grammar")
    generation_ids = {r.screen_id for r in generation} if split is not None else set()
    bundles = []
    for target in targets:
        if variant == "plain":
            bundles.append(build_plain_prompt(example, target.summary, vocab, target.screen_id, templates))
        else:
            assert provided_grammar is not None
            bundles.append(
                build_grammar_prompt(
                    example,
                    None,
                    provided_grammar,
                    target.summary,
                    vocab,
                    target_screen_id=target.screen_id,
                    generation_screen_ids=generation_ids,
                    templates=templates,
                    with_probabilities=with_probabilities,
                )
            )
    return example, bundles


def bundle_to_json(bundle: PromptBundle) -> str:
    return json.dumps(bundle.to_dict(), indent=2, ensure_ascii=False) + "\n"
