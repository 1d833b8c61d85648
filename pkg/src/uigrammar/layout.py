"""Layout data model: labeled bounding-box trees, vocabulary and canvas."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterator

__all__ = [
    "Bounds",
    "Canvas",
    "DEFAULT_CANVAS",
    "LayoutFormatError",
    "UIElement",
    "UILayout",
    "ValidationResult",
    "Violation",
    "Vocabulary",
    "filter_invisible",
    "flatten",
    "layout_from_dict",
    "layout_from_json",
    "layout_to_dict",
    "layout_to_json",
    "validate",
]


class LayoutFormatError(ValueError):
    """Raised when a JSON document does not follow the layout tree schema."""


@dataclass(frozen=True)
class Bounds:
    left: int
    top: int
    right: int
    bottom: int

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top

    def as_list(self) -> list[int]:
        return [self.left, self.top, self.right, self.bottom]

    def normalized(self, canvas: Canvas) -> tuple[float, float, float, float]:
        return (
            self.left / canvas.width,
            self.top / canvas.height,
            self.right / canvas.width,
            self.bottom / canvas.height,
        )

    def translated(self, dx: int, dy: int) -> Bounds:
        return Bounds(self.left + dx, self.top + dy, self.right + dx, self.bottom + dy)


@dataclass(frozen=True)
class Canvas:
    width: int = 1440
    height: int = 2560

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"canvas dimensions must be positive, got {self.width}x{self.height}")


# RICO capture resolution.
DEFAULT_CANVAS = Canvas(1440, 2560)


@dataclass(frozen=True)
class UIElement:
    label: str
    bounds: Bounds
    children: tuple[UIElement, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))

    def iter_preorder(self) -> Iterator[UIElement]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class UILayout:
    root: UIElement
    canvas: Canvas = DEFAULT_CANVAS

    def __len__(self) -> int:
        return sum(1 for _ in self.root.iter_preorder())

    def elements(self) -> Iterator[UIElement]:
        return self.root.iter_preorder()


@dataclass(frozen=True)
class Vocabulary:
    """Ordered label set with a designated root symbol and invisible subset.

    Membership tests are case-insensitive so that ``Root`` and ``ROOT`` name
    the same symbol; :meth:`canonical` returns the vocabulary's own spelling.
    """

    labels: tuple[str, ...]
    root_symbol: str = "ROOT"
    invisible: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "invisible", frozenset(self.invisible))
        folded = [label.upper() for label in self.labels]
        if len(set(folded)) != len(folded):
            raise ValueError("vocabulary labels must be unique (case-insensitive)")
        if self.root_symbol.upper() not in folded:
            raise ValueError(f"root symbol {self.root_symbol!r} is not in the vocabulary")
        unknown = {label for label in self.invisible if label.upper() not in folded}
        if unknown:
            raise ValueError(f"invisible labels not in vocabulary: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Vocabulary:
        return cls(
            labels=tuple(data["labels"]),
            root_symbol=data.get("root_symbol", "ROOT"),
            invisible=frozenset(data.get("invisible", ())),
        )

    @classmethod
    def load(cls, path: str | Path) -> Vocabulary:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> Vocabulary:
        """The 25 CLAY labels shipped with the package."""
        text = resources.files("uigrammar").joinpath("data/vocabulary.json").read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict[str, Any]:
        return {
            "root_symbol": self.root_symbol,
            "labels": list(self.labels),
            "invisible": [label for label in self.labels if label in self.invisible],
        }

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return isinstance(label, str) and self.canonical(label) is not None

    def canonical(self, label: str) -> str | None:
        folded = label.upper()
        for known in self.labels:
            if known.upper() == folded:
                return known
        return None

    def is_root(self, label: str) -> bool:
        return label.upper() == self.root_symbol.upper()

    def is_invisible(self, label: str) -> bool:
        folded = label.upper()
        return any(folded == hidden.upper() for hidden in self.invisible)

    def index(self, label: str) -> int:
        canonical = self.canonical(label)
        if canonical is None:
            raise KeyError(label)
        return self.labels.index(canonical)

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def flatten(layout: UILayout) -> list[tuple[str, Bounds]]:
    """Depth-first pre-order listing of ``(label, bounds)`` pairs."""
    return [(node.label, node.bounds) for node in layout.elements()]


def filter_invisible(layout: UILayout, vocab: Vocabulary) -> list[tuple[str, Bounds]]:
    # Drops the invisible node itself; its descendants stay in the listing.
    return [(label, bounds) for label, bounds in flatten(layout) if not vocab.is_invisible(label)]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    path: str = ""

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        return f"{self.code}: {self.message}{where}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def _walk_with_paths(node: UIElement, path: str = "0") -> Iterator[tuple[str, UIElement]]:
    yield path, node
    for i, child in enumerate(node.children):
        yield from _walk_with_paths(child, f"{path}/{i}")


def validate(layout: UILayout, vocab: Vocabulary, canvas: Canvas | None = None) -> ValidationResult:
    """Check labels, bounds ordering and canvas containment.

    Never raises for a malformed tree; every problem is reported as a
    :class:`Violation`. Zero-area bounds are accepted.
    """
    canvas = canvas or layout.canvas
    found: list[Violation] = []
    if layout.root is None:
        return ValidationResult((Violation("missing_root", "layout has no root element"),))
    if not vocab.is_root(layout.root.label):
        found.append(
            Violation(
                "missing_root",
                f"root element is labeled {layout.root.label!r}, expected {vocab.root_symbol!r}",
                "0",
            )
        )
    for path, node in _walk_with_paths(layout.root):
        if node.label not in vocab:
            found.append(Violation("unknown_label", f"unknown label {node.label!r}", path))
        b = node.bounds
        if b.left > b.right:
            found.append(Violation("inverted_bounds", f"left > right ({b.left} > {b.right})", path))
        if b.top > b.bottom:
            found.append(Violation("inverted_bounds", f"top > bottom ({b.top} > {b.bottom})", path))
        if b.left < 0 or b.top < 0 or b.right > canvas.width or b.bottom > canvas.height:
            found.append(
                Violation(
                    "out_of_canvas",
                    f"bounds {b.as_list()} exceed canvas {canvas.width}x{canvas.height}",
                    path,
                )
            )
    return ValidationResult(tuple(found))


# Serialization


def _element_to_dict(node: UIElement) -> dict[str, Any]:
    return {
        "label": node.label,
        "bounds": node.bounds.as_list(),
        "children": [_element_to_dict(child) for child in node.children],
    }


def layout_to_dict(layout: UILayout) -> dict[str, Any]:
    return _element_to_dict(layout.root)


def layout_to_json(layout: UILayout, indent: int | None = None) -> str:
    return json.dumps(layout_to_dict(layout), indent=indent, ensure_ascii=False)


def _coerce_int(value: Any, where: str) -> int:
    if isinstance(value, bool):
        raise LayoutFormatError(f"{where}: bounds must be numbers, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, float):
        return round(value)
    raise LayoutFormatError(f"{where}: bounds must be numbers, got {value!r}")


def _element_from_dict(data: Any, vocab: Vocabulary | None, path: str) -> UIElement:
    if not isinstance(data, dict):
        raise LayoutFormatError(f"{path}: element must be an object, got {type(data).__name__}")
    label = data.get("label")
    if not isinstance(label, str) or not label:
        raise LayoutFormatError(f"{path}: missing or non-string 'label'")
    if vocab is not None:
        label = vocab.canonical(label) or label
    raw_bounds = data.get("bounds")
    if not isinstance(raw_bounds, (list, tuple)) or len(raw_bounds) != 4:
        raise LayoutFormatError(f"{path}: 'bounds' must be a list of 4 numbers")
    bounds = Bounds(*(_coerce_int(v, path) for v in raw_bounds))
    children = data.get("children", [])
    if not isinstance(children, list):
        raise LayoutFormatError(f"{path}: 'children' must be a list")
    return UIElement(
        label,
        bounds,
        tuple(_element_from_dict(child, vocab, f"{path}/{i}") for i, child in enumerate(children)),
    )


def layout_from_dict(
    data: Any, canvas: Canvas = DEFAULT_CANVAS, vocab: Vocabulary | None = None
) -> UILayout:
    """Build a layout from the ``{"label", "bounds", "children"}`` tree schema.

    When ``vocab`` is given, labels are rewritten to the vocabulary's spelling
    (unknown labels are kept verbatim so that :func:`validate` can flag them).
    Float coordinates are rounded to the nearest pixel.
    """
    return UILayout(_element_from_dict(data, vocab, "0"), canvas)


def layout_from_json(
    text: str, canvas: Canvas = DEFAULT_CANVAS, vocab: Vocabulary | None = None
) -> UILayout:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LayoutFormatError(f"invalid JSON: {exc}") from exc
    return layout_from_dict(data, canvas, vocab)
