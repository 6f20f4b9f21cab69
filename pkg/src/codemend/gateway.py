"""Provider-agnostic prompt submission, response handling, and cost ledger.

Every request is self-contained (providers keep no history).  Money is
exact rational arithmetic end to end; dollars are rendered only at display
time.  The shipped providers are deterministic mocks: a fixture-directory
provider keyed by prompt hash, and a scripted provider that applies literal
edit rules to the original file embedded in the prompt.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Protocol

from .errors import GatewayError, ProviderError, UnusableResponseError
from .prompting import Prompt, original_file_from_prompt
from .rational import fraction_str, parse_fraction

DEFAULT_REQUESTS_PER_MINUTE = 30


@dataclass(frozen=True, slots=True)
class TierRef:
    """One rung of the model schedule; cheaper tiers run first."""

    name: str
    provider_id: str
    input_price: Fraction  # currency per 1,000 input tokens
    output_price: Fraction  # currency per 1,000 output tokens
    order_index: int

    def __post_init__(self) -> None:
        if self.input_price < 0 or self.output_price < 0:
            raise ValueError(f"tier {self.name}: prices must be >= 0")


def validate_schedule(tiers: list[TierRef]) -> list[TierRef]:
    """Check uniqueness of order_index and return the schedule sorted by it."""
    indexes = [t.order_index for t in tiers]
    if len(set(indexes)) != len(indexes):
        raise ValueError("tier order_index values must be unique within a schedule")
    return sorted(tiers, key=lambda t: t.order_index)


@dataclass(frozen=True, slots=True)
class ProviderRequest:
    """The wire request: JSON object with these three fields."""

    system_text: str
    user_text: str
    model: str

    def to_dict(self) -> dict:
        return {"system_text": self.system_text, "user_text": self.user_text, "model": self.model}


@dataclass(frozen=True, slots=True)
class ProviderReply:
    """The wire reply: JSON object with these three fields."""

    text: str
    input_tokens: int
    output_tokens: int

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be >= 0")

    def to_dict(self) -> dict:
        return {"text": self.text, "input_tokens": self.input_tokens, "output_tokens": self.output_tokens}


class Provider(Protocol):
    """Adapter contract for a model backend."""

    def complete(self, request: ProviderRequest) -> ProviderReply: ...


def prompt_hash(prompt: Prompt) -> str:
    """Stable key for a prompt: sha256 over system and user text."""
    digest = hashlib.sha256()
    digest.update(prompt.system_text.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(prompt.user_text.encode("utf-8"))
    return digest.hexdigest()


class MockFixtureProvider:
    """Replies from a fixtures directory: ``<sha256-prefix>.json`` files
    holding {"text", "input_tokens", "output_tokens"}.

    A pure function of the prompt hash; a missing fixture is a permanent
    failure so the file ends up unresolved rather than retried.
    """

    KEY_LENGTH = 16

    def __init__(self, fixtures_dir: str | Path):
        self.fixtures_dir = Path(fixtures_dir)

    @classmethod
    def key_for(cls, prompt: Prompt) -> str:
        return prompt_hash(prompt)[: cls.KEY_LENGTH]

    def complete(self, request: ProviderRequest) -> ProviderReply:
        digest = hashlib.sha256()
        digest.update(request.system_text.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(request.user_text.encode("utf-8"))
        path = self.fixtures_dir / f"{digest.hexdigest()[: self.KEY_LENGTH]}.json"
        if not path.is_file():
            raise ProviderError(f"no fixture for prompt key {path.name}", transient=False)
        payload = json.loads(path.read_text("utf-8"))
        return ProviderReply(
            text=payload["text"],
            input_tokens=int(payload["input_tokens"]),
            output_tokens=int(payload["output_tokens"]),
        )


@dataclass(frozen=True, slots=True)
class EditRule:
    """A literal, line-oriented edit applied by the scripted provider."""

    match: str
    action: str = "delete-line"  # or "replace-line"
    replacement: str = ""

    def apply(self, lines: list[str]) -> list[str]:
        if self.action == "delete-line":
            return [line for line in lines if self.match not in line]
        if self.action == "replace-line":
            return [self.replacement if self.match in line else line for line in lines]
        raise ValueError(f"unknown edit action {self.action!r}")


class ScriptedEditProvider:
    """Deterministic stand-in for a code-fixing model.

    Extracts the original file from the prompt, applies its edit rules, and
    returns the result in a fenced block with size-derived token counts.
    """

    def __init__(self, rules: list[EditRule], fence: bool = True):
        self.rules = list(rules)
        self.fence = fence

    def complete(self, request: ProviderRequest) -> ProviderReply:
        try:
            original = original_file_from_prompt(request.user_text)
        except ValueError:
            raise ProviderError("prompt carries no original file section", transient=False) from None
        lines = original.split("\n")
        for rule in self.rules:
            lines = rule.apply(lines)
        revised = "\n".join(lines)
        text = f"```\n{revised}\n```" if self.fence else revised
        input_tokens = -(-(len(request.system_text) + len(request.user_text)) // 4)
        output_tokens = -(-len(text) // 4)
        return ProviderReply(text=text, input_tokens=input_tokens, output_tokens=output_tokens)


class FlakyProvider:
    """Wrapper that fails transiently N times before delegating; used to
    exercise retry policies."""

    def __init__(self, inner: Provider, failures: int):
        self.inner = inner
        self.failures_left = failures
        self.calls = 0

    def complete(self, request: ProviderRequest) -> ProviderReply:
        self.calls += 1
        if self.failures_left > 0:
            self.failures_left -= 1
            raise ProviderError("temporary outage", transient=True)
        return self.inner.complete(request)


def extract_code(raw_text: str) -> str:
    """Strip a single wrapping triple-backtick fence (optional language
    label) and surrounding blank lines; anything unfenced passes through.

    Multiple disjoint fences make the payload ambiguous.
    """
    lines = raw_text.split("\n")
    fence_indexes = [i for i, line in enumerate(lines) if line.lstrip().startswith("```")]
    if len(fence_indexes) >= 3:
        raise UnusableResponseError("ambiguous code payload: multiple fenced blocks")
    if len(fence_indexes) != 2:
        return raw_text
    open_idx, close_idx = fence_indexes
    outside = lines[:open_idx] + lines[close_idx + 1 :]
    if any(part.strip() for part in outside):
        return raw_text
    inner = lines[open_idx + 1 : close_idx]
    while inner and not inner[0].strip():
        inner.pop(0)
    while inner and not inner[-1].strip():
        inner.pop()
    return "\n".join(inner)


@dataclass(frozen=True, slots=True)
class RevisionResponse:
    raw_text: str
    extracted_code: str
    usage: tuple[int, int]  # (input_tokens, output_tokens)
    tier: TierRef


@dataclass(frozen=True, slots=True)
class CostRecord:
    """Exact cost of one revision request."""

    file_location: str
    tier_name: str
    input_tokens: int
    output_tokens: int
    cost: Fraction

    def to_dict(self) -> dict:
        return {
            "file_location": self.file_location,
            "tier": self.tier_name,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "cost": fraction_str(self.cost),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CostRecord":
        return cls(
            file_location=data["file_location"],
            tier_name=data["tier"],
            input_tokens=data["input_tokens"],
            output_tokens=data["output_tokens"],
            cost=parse_fraction(data["cost"]),
        )


def compute_cost(input_tokens: int, output_tokens: int, tier: TierRef) -> Fraction:
    return (
        Fraction(input_tokens, 1000) * tier.input_price
        + Fraction(output_tokens, 1000) * tier.output_price
    )


class CostLedger:
    """Append-only run ledger; appends are serialized, totals are exact."""

    def __init__(self) -> None:
        self._records: list[CostRecord] = []
        self._lock = threading.Lock()

    def append(self, record: CostRecord) -> None:
        with self._lock:
            self._records.append(record)

    def records(self) -> list[CostRecord]:
        with self._lock:
            return list(self._records)

    def total(self) -> Fraction:
        with self._lock:
            return sum((r.cost for r in self._records), Fraction(0))

    def total_for_tier(self, tier_name: str) -> Fraction:
        with self._lock:
            return sum((r.cost for r in self._records if r.tier_name == tier_name), Fraction(0))


def record_cost(
    usage: tuple[int, int], tier: TierRef, file_location: str, ledger: CostLedger | None = None
) -> CostRecord:
    """Build the exact CostRecord and append it to the ledger, if given."""
    input_tokens, output_tokens = usage
    record = CostRecord(
        file_location=file_location,
        tier_name=tier.name,
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        cost=compute_cost(input_tokens, output_tokens, tier),
    )
    if ledger is not None:
        ledger.append(record)
    return record


def average_cost_per_issue(total: Fraction, issue_count: int) -> Fraction | None:
    """Table-style per-issue average; None when nothing was revised."""
    if issue_count <= 0:
        return None
    return total / issue_count


@dataclass(frozen=True, slots=True)
class RetryPolicy:
    max_retries: int = 3
    base_delay: float = 0.5
    max_delay: float = 8.0
    sleep: Callable[[float], None] = time.sleep

    def delay_for(self, attempt: int) -> float:
        return min(self.base_delay * (2**attempt), self.max_delay)


class RateLimiter:
    """Token bucket per provider; rpm <= 0 disables limiting."""

    def __init__(self, requests_per_minute: int = DEFAULT_REQUESTS_PER_MINUTE):
        self.rpm = requests_per_minute
        self._lock = threading.Lock()
        self._tokens = float(requests_per_minute)
        self._stamp = time.monotonic()

    def acquire(self) -> None:
        if self.rpm <= 0:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.rpm, self._tokens + (now - self._stamp) * self.rpm / 60.0)
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) * 60.0 / self.rpm
            time.sleep(wait)


class Gateway:
    """Routes prompts to registered providers with retry, rate limiting,
    and ledgering.  Stateless across calls: every request stands alone."""

    def __init__(
        self,
        providers: dict[str, Provider],
        ledger: CostLedger | None = None,
        requests_per_minute: int = DEFAULT_REQUESTS_PER_MINUTE,
    ):
        self.providers = dict(providers)
        self.ledger = ledger if ledger is not None else CostLedger()
        self._limiters: dict[str, RateLimiter] = {}
        self._limiter_lock = threading.Lock()
        self.requests_per_minute = requests_per_minute

    def _limiter(self, provider_id: str) -> RateLimiter:
        with self._limiter_lock:
            if provider_id not in self._limiters:
                self._limiters[provider_id] = RateLimiter(self.requests_per_minute)
            return self._limiters[provider_id]

    def submit(self, prompt: Prompt, tier: TierRef, policy: RetryPolicy | None = None) -> RevisionResponse:
        """Submit one prompt to one tier.

        Transient provider failures are retried with exponential backoff;
        exhausted retries or an unusable reply surface as errors carrying
        tier and file so the caller can mark the file unresolved.
        """
        policy = policy or RetryPolicy()
        provider = self.providers.get(tier.provider_id)
        if provider is None:
            raise GatewayError(
                f"no provider registered for id {tier.provider_id!r}",
                tier=tier.name,
                file_location=prompt.metadata.file_location,
            )
        request = ProviderRequest(
            system_text=prompt.system_text, user_text=prompt.user_text, model=tier.provider_id
        )
        attempts = policy.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            self._limiter(tier.provider_id).acquire()
            try:
                reply = provider.complete(request)
                break
            except ProviderError as exc:
                last_error = exc
                if not exc.transient:
                    raise UnusableResponseError(
                        f"unusable response from {tier.name}: {exc}",
                        tier=tier.name,
                        file_location=prompt.metadata.file_location,
                    ) from exc
                if attempt + 1 < attempts:
                    policy.sleep(policy.delay_for(attempt))
        else:
            raise GatewayError(
                f"tier {tier.name} failed after {attempts} attempts: {last_error}",
                tier=tier.name,
                file_location=prompt.metadata.file_location,
            ) from last_error

        try:
            code = extract_code(reply.text)
        except UnusableResponseError as exc:
            raise UnusableResponseError(
                f"unusable response from {tier.name}: {exc}",
                tier=tier.name,
                file_location=prompt.metadata.file_location,
            ) from None
        return RevisionResponse(
            raw_text=reply.text,
            extracted_code=code,
            usage=(reply.input_tokens, reply.output_tokens),
            tier=tier,
        )
