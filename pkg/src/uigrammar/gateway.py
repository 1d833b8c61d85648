"""Chat-completion dispatch, response parsing and resumable batch generation."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol, Sequence

import httpx

from .grammar import ProductionRule, RuleFormatError, parse_rule
from .layout import (
    DEFAULT_CANVAS,
    Canvas,
    LayoutFormatError,
    UILayout,
    Vocabulary,
    layout_from_dict,
    layout_to_dict,
    validate,
)
from .promptgen import PromptBundle, bundle_to_json, prompt_hash

log = logging.getLogger(__name__)

__all__ = [
    "GenerationConfig",
    "GenerationResult",
    "LiveTransport",
    "MockTransport",
    "RateLimiter",
    "ResponseParseError",
    "Transcript",
    "Transport",
    "TransportError",
    "generate",
    "load_results",
    "parse_response",
    "run_batch",
    "write_fixture",
]

STATUSES = ("ok", "parse_failed", "validation_failed", "transport_failed")


@dataclass(frozen=True)
class GenerationConfig:
    model_name: str = "gpt-4-0314"
    max_tokens: int = 2000
    temperature: float = 0.7
    request_timeout: float = 120.0
    max_retries: int = 3
    rate_limit: int = 20  # requests started per 60 s window
    backoff_base: float = 2.0
    max_workers: int = 1
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "OPENAI_API_KEY"
    system_prompt: str | None = None

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must be within [0, 2]")
        if self.max_retries < 0 or self.rate_limit <= 0 or self.max_workers <= 0:
            raise ValueError("max_retries must be >= 0; rate_limit and max_workers must be positive")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GenerationConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generation config keys: {sorted(unknown)}")
        return cls(**dict(data))

    def messages(self, prompt: str) -> list[dict[str, str]]:
        messages = []
        if self.system_prompt:
            messages.append({"role": "system", "content": self.system_prompt})
        messages.append({"role": "user", "content": prompt})
        return messages


class TransportError(Exception):
    def __init__(self, message: str, transient: bool = True):
        super().__init__(message)
        self.transient = transient


class Transport(Protocol):
    def complete(self, prompt: str, config: GenerationConfig) -> str: ...


def _content_from_body(body: Any) -> str:
    if isinstance(body, dict) and isinstance(body.get("content"), str):
        return body["content"]
    try:
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"unexpected response body shape: {exc!r}", transient=False) from exc


class LiveTransport:
    """JSON-over-HTTP chat-completion client.

    The API key is read from the environment variable named by
    ``config.api_key_env`` at call time.
    """

    def __init__(self, client: httpx.Client | None = None, api_key: str | None = None):
        self._client = client
        self._api_key = api_key

    def complete(self, prompt: str, config: GenerationConfig) -> str:
        api_key = self._api_key or os.environ.get(config.api_key_env)
        if not api_key:
            raise TransportError(f"environment variable {config.api_key_env} is not set", transient=False)
        payload = {
            "model": config.model_name,
            "messages": config.messages(prompt),
            "max_tokens": config.max_tokens,
            "temperature": config.temperature,
        }
        headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}
        client = self._client or httpx.Client()
        try:
            response = client.post(config.endpoint, json=payload, headers=headers, timeout=config.request_timeout)
        except httpx.TimeoutException as exc:
            raise TransportError(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransportError(f"connection error: {exc}") from exc
        finally:
            if self._client is None:
                client.close()
        if response.status_code == 429 or response.status_code >= 500:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        if response.status_code >= 400:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}", transient=False)
        try:
            body = response.json()
        except json.JSONDecodeError as exc:
            raise TransportError(f"response is not JSON: {exc}", transient=False) from exc
        return _content_from_body(body)


class MockTransport:
    """Replays canned responses from ``<fixtures_dir>/<sha256(prompt)>.json``.

    A fixture is either ``{"content": "..."}`` or a chat-completion body.
    """

    def __init__(self, fixtures_dir: str | Path):
        self.fixtures_dir = Path(fixtures_dir)
        self.calls: list[str] = []

    def complete(self, prompt: str, config: GenerationConfig) -> str:
        key = prompt_hash(prompt)
        self.calls.append(key)
        path = self.fixtures_dir / f"{key}.json"
        if not path.is_file():
            raise TransportError(f"fixture missing: {key}", transient=False)
        return _content_from_body(json.loads(path.read_text(encoding="utf-8")))


def write_fixture(fixtures_dir: str | Path, prompt: str, content: str) -> Path:
    fixtures_dir = Path(fixtures_dir)
    fixtures_dir.mkdir(parents=True, exist_ok=True)
    path = fixtures_dir / f"{prompt_hash(prompt)}.json"
    path.write_text(json.dumps({"content": content}, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


class RateLimiter:
    """Allow at most ``rate`` acquisitions in any sliding ``window`` seconds."""

    def __init__(
        self,
        rate: int,
        window: float = 60.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.rate = rate
        self.window = window
        self._clock = clock
        self._sleep = sleep
        self._starts: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                while self._starts and now - self._starts[0] >= self.window:
                    self._starts.popleft()
                if len(self._starts) < self.rate:
                    self._starts.append(now)
                    return
                wait = self.window - (now - self._starts[0])
            self._sleep(max(wait, 0.0))


class Transcript:
    """Append-only JSON Lines log of raw exchanges."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def write(self, entry: Mapping[str, Any]) -> None:
        line = json.dumps(dict(entry), ensure_ascii=False, sort_keys=True)
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


# Response parsing


class ResponseParseError(ValueError):
    def __init__(self, code: str, message: str, status: str = "parse_failed"):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.status = status


_FENCE_RE = re.compile(r"```[a-zA-Z]*\s*\n?")


def _strip_fences(text: str) -> str:
    return _FENCE_RE.sub("", text)


def _first_json_object(text: str) -> str:
    start = text.find("{")
    if start < 0:
        raise ResponseParseError("no_json_object", "no JSON object found in response")
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise ResponseParseError("unbalanced_braces", "unbalanced braces: JSON object is not closed")


def _canonical_rule(rule: ProductionRule, vocab: Vocabulary) -> ProductionRule:
    return ProductionRule(
        vocab.canonical(rule.lhs) or rule.lhs,
        tuple(vocab.canonical(sym) or sym for sym in rule.rhs),
    )


def parse_response(
    raw_text: str, vocab: Vocabulary, canvas: Canvas = DEFAULT_CANVAS
) -> tuple[UILayout, list[ProductionRule] | None]:
    """Pull the layout (and optional ``rules_used``) out of a model reply.

    Code fences and surrounding prose are ignored. Labels and rule symbols
    are mapped to the vocabulary's spelling. Raises
    :class:`ResponseParseError` whose ``code`` tells the failure apart and
    whose ``status`` is ``parse_failed`` or ``validation_failed``.
    """
    blob = _first_json_object(_strip_fences(raw_text))
    try:
        obj = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise ResponseParseError("invalid_json", f"invalid JSON: {exc.msg} at char {exc.pos}") from exc
    if "layout" in obj:
        tree = obj["layout"]
    elif "label" in obj and "bounds" in obj:
        tree = obj
    else:
        raise ResponseParseError("schema_mismatch", "response object has no 'layout' key")
    try:
        layout = layout_from_dict(tree, canvas, vocab)
    except LayoutFormatError as exc:
        raise ResponseParseError("schema_mismatch", str(exc)) from exc

    rules: list[ProductionRule] | None = None
    if "rules_used" in obj:
        raw_rules = obj["rules_used"]
        if not isinstance(raw_rules, list) or not all(isinstance(r, str) for r in raw_rules):
            raise ResponseParseError("schema_mismatch", "'rules_used' must be a list of strings")
        try:
            rules = [_canonical_rule(parse_rule(r), vocab) for r in raw_rules]
        except RuleFormatError as exc:
            raise ResponseParseError("bad_rule", str(exc)) from exc

    result = validate(layout, vocab, canvas)
    if not result.ok:
        detail = "; ".join(str(v) for v in result.violations)
        raise ResponseParseError("validation_failed", detail, status="validation_failed")
    return layout, rules


@dataclass
class GenerationResult:
    screen_id: str
    raw_text: str
    status: str
    parsed_layout: UILayout | None = None
    rules_used: list[ProductionRule] | None = None
    diagnostics: list[str] = field(default_factory=list)
    variant: str = "plain"
    prompt_hash: str = ""

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == "ok") != (self.parsed_layout is not None):
            raise ValueError("status 'ok' requires a parsed layout and vice versa")

    def to_dict(self) -> dict[str, Any]:
        return {
            "screen_id": self.screen_id,
            "variant": self.variant,
            "status": self.status,
            "prompt_hash": self.prompt_hash,
            "diagnostics": list(self.diagnostics),
            "rules_used": None if self.rules_used is None else [str(r) for r in self.rules_used],
            "canvas": None
            if self.parsed_layout is None
            else [self.parsed_layout.canvas.width, self.parsed_layout.canvas.height],
            "layout": None if self.parsed_layout is None else layout_to_dict(self.parsed_layout),
            "raw_text": self.raw_text,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GenerationResult:
        layout = None
        if data.get("layout") is not None:
            canvas = Canvas(*data["canvas"]) if data.get("canvas") else DEFAULT_CANVAS
            layout = layout_from_dict(data["layout"], canvas)
        rules = data.get("rules_used")
        return cls(
            screen_id=data["screen_id"],
            raw_text=data.get("raw_text", ""),
            status=data["status"],
            parsed_layout=layout,
            rules_used=None if rules is None else [parse_rule(r) for r in rules],
            diagnostics=list(data.get("diagnostics", [])),
            variant=data.get("variant", "plain"),
            prompt_hash=data.get("prompt_hash", ""),
        )


def generate(
    bundle: PromptBundle,
    config: GenerationConfig,
    transport: Transport,
    vocab: Vocabulary,
    canvas: Canvas = DEFAULT_CANVAS,
    transcript: Transcript | None = None,
    rate_limiter: RateLimiter | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> GenerationResult:
    """Send one prompt and turn the reply into a :class:`GenerationResult`.

    Transient transport errors are retried ``config.max_retries`` times with
    exponential backoff. The raw reply is logged to ``transcript`` before
    any parsing happens.
    """
    screen_id = bundle.target_screen_id or bundle.prompt_hash[:16]
    base = {"screen_id": screen_id, "variant": bundle.variant, "prompt_hash": bundle.prompt_hash}
    diagnostics: list[str] = []
    raw: str | None = None
    for attempt in range(config.max_retries + 1):
        if rate_limiter is not None:
            rate_limiter.acquire()
        try:
            raw = transport.complete(bundle.text, config)
            break
        except TransportError as exc:
            diagnostics.append(f"attempt {attempt + 1}: {exc}")
            if transcript is not None:
                transcript.write({**base, "attempt": attempt + 1, "error": str(exc)})
            if not exc.transient or attempt == config.max_retries:
                break
            sleep(config.backoff_base * 2**attempt)
    if raw is None:
        return GenerationResult(screen_id, "", "transport_failed", diagnostics=diagnostics, **_tags(bundle))

    if transcript is not None:
        transcript.write({**base, "attempt": len(diagnostics) + 1, "response": raw})
    try:
        layout, rules = parse_response(raw, vocab, canvas)
    except ResponseParseError as exc:
        diagnostics.append(str(exc))
        return GenerationResult(screen_id, raw, exc.status, diagnostics=diagnostics, **_tags(bundle))
    return GenerationResult(screen_id, raw, "ok", layout, rules, diagnostics, **_tags(bundle))


def _tags(bundle: PromptBundle) -> dict[str, str]:
    return {"variant": bundle.variant, "prompt_hash": bundle.prompt_hash}


def _safe_name(screen_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", screen_id)


def run_batch(
    bundles: Sequence[PromptBundle],
    config: GenerationConfig,
    transport: Transport,
    out_dir: str | Path,
    vocab: Vocabulary,
    canvases: Mapping[str, Canvas] | None = None,
    resume: bool = True,
    rate_limiter: RateLimiter | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> list[GenerationResult]:
    """Generate every bundle, persisting results under ``out_dir``.

    Layout: ``prompts/<screen_id>.json``, ``results/<screen_id>.json`` and
    ``transcript.jsonl``. With ``resume`` screens that already have a
    result file are loaded instead of re-requested. Returned results are
    sorted by screen id whatever the completion order. Pass a
    :class:`RateLimiter` built from ``config.rate_limit`` for live runs.
    """
    out_dir = Path(out_dir)
    (out_dir / "prompts").mkdir(parents=True, exist_ok=True)
    (out_dir / "results").mkdir(parents=True, exist_ok=True)
    transcript = Transcript(out_dir / "transcript.jsonl")
    canvases = canvases or {}

    def one(bundle: PromptBundle) -> GenerationResult:
        screen_id = bundle.target_screen_id or bundle.prompt_hash[:16]
        name = _safe_name(screen_id)
        result_path = out_dir / "results" / f"{name}.json"
        if resume and result_path.is_file():
            return GenerationResult.from_dict(json.loads(result_path.read_text(encoding="utf-8")))
        (out_dir / "prompts" / f"{name}.json").write_text(bundle_to_json(bundle), encoding="utf-8")
        result = generate(
            bundle, config, transport, vocab, canvases.get(screen_id, DEFAULT_CANVAS), transcript, rate_limiter, sleep
        )
        result_path.write_text(json.dumps(result.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        log.info("%s: %s", screen_id, result.status)
        return result

    with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
        results = list(pool.map(one, bundles))
    return sorted(results, key=lambda r: r.screen_id)


def load_results(results_dir: str | Path) -> list[GenerationResult]:
    """Read every ``results/*.json`` under a batch output directory."""
    results_dir = Path(results_dir)
    if (results_dir / "results").is_dir():
        results_dir = results_dir / "results"
    results = [
        GenerationResult.from_dict(json.loads(p.read_text(encoding="utf-8")))
        for p in sorted(results_dir.glob("*.json"))
    ]
    return sorted(results, key=lambda r: r.screen_id)
