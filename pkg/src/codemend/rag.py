"""Retrieval-augmented context for revision prompts.

Queries are built from issue descriptions only, never from source code.
Candidate solutions come from pluggable source clients ranked by source
credibility; the general web tier is consulted only when every dedicated
tier comes back empty, and then only its top three results are kept.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Protocol

from .errors import QueryError
from .issues import Issue, IssueCategory

logger = logging.getLogger(__name__)

MAX_QUERY_TERMS = 12
DEFAULT_SOLUTION_LIMIT = 3
WEB_RESULT_LIMIT = 3

_TOKEN_RE = re.compile(r"[a-z0-9_]+")


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load the stopword list; defaults to the versioned file shipped in
    package data."""
    if path is None:
        text = resources.files("codemend.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        word = line.strip().lower()
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)


_DEFAULT_STOPWORDS = load_stopwords()


@dataclass(frozen=True, slots=True)
class SearchQuery:
    """Key terms extracted from one issue description."""

    terms: tuple[str, ...]
    category: IssueCategory

    def __post_init__(self) -> None:
        if not 1 <= len(self.terms) <= MAX_QUERY_TERMS:
            raise QueryError(f"query must carry 1..{MAX_QUERY_TERMS} terms, got {len(self.terms)}")


def formulate_query(issue: Issue, stopwords: frozenset[str] | None = None) -> SearchQuery:
    """Turn an issue message into a query: lowercased tokens, stopwords
    dropped, order preserved, capped at MAX_QUERY_TERMS.

    Only the message is consulted, so no source code can leak into the
    query.
    """
    words = stopwords if stopwords is not None else _DEFAULT_STOPWORDS
    tokens = _TOKEN_RE.findall(issue.message.lower())
    terms = [t for t in tokens if t not in words]
    if not terms:
        raise QueryError(f"unqueryable issue: {issue.message!r}")
    return SearchQuery(terms=tuple(terms[:MAX_QUERY_TERMS]), category=issue.category)


class SourceTier(enum.IntEnum):
    """Source credibility; higher means more trusted."""

    CODE_HOST = 4
    ANALYZER_COMMUNITY = 3
    QA_FORUM = 2
    WEB_SEARCH = 1

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


@dataclass(frozen=True, slots=True)
class Candidate:
    """One retrieved solution before ranking."""

    source_tier: SourceTier
    url: str
    snippet: str
    retrieval_rank: int

    def __post_init__(self) -> None:
        if not self.snippet:
            raise ValueError("candidate snippet must be non-empty")
        if self.retrieval_rank < 0:
            raise ValueError("retrieval_rank must be >= 0")


class SourceClient(Protocol):
    """Adapter contract: request is the query terms plus category, response
    is an ordered list of (url, snippet) pairs."""

    name: str
    tier: SourceTier

    def search(self, query: SearchQuery) -> list[tuple[str, str]]: ...


@dataclass
class StaticSourceClient:
    """Fixture-backed client used in tests and hermetic runs.

    ``results`` is either one fixed result list or a mapping from the
    space-joined query terms to a result list (missing key -> no results).
    """

    name: str
    tier: SourceTier
    results: list[tuple[str, str]] | dict[str, list[tuple[str, str]]]
    fail: bool = False

    def search(self, query: SearchQuery) -> list[tuple[str, str]]:
        if self.fail:
            raise RuntimeError(f"source {self.name} unavailable")
        if isinstance(self.results, dict):
            found = self.results.get(" ".join(query.terms), [])
        else:
            found = self.results
        return [(url, snippet) for url, snippet in found]


def stub_sources(fixtures: dict | None = None) -> list[StaticSourceClient]:
    """The four shipped stub sources, optionally seeded from a fixture map
    ``{"code-host": [[url, snippet], ...], ...}`` (lists may instead be
    keyed by space-joined query terms)."""
    fixtures = fixtures or {}
    clients = []
    for tier in (SourceTier.CODE_HOST, SourceTier.ANALYZER_COMMUNITY, SourceTier.QA_FORUM, SourceTier.WEB_SEARCH):
        raw = fixtures.get(tier.label, [])
        if isinstance(raw, dict):
            results: dict | list = {key: [tuple(item) for item in value] for key, value in raw.items()}
        else:
            results = [tuple(item) for item in raw]
        clients.append(StaticSourceClient(name=tier.label, tier=tier, results=results))
    return clients


class RetrievalCache:
    """Query results keyed by a stable hash of (terms, category, source).

    Safe for concurrent readers and writers; optionally persisted as a
    single JSON document.
    """

    def __init__(self, path: str | Path | None = None):
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None
        self._entries: dict[str, list[tuple[str, str]]] = {}
        if self._path is not None and self._path.is_file():
            raw = json.loads(self._path.read_text("utf-8"))
            self._entries = {k: [tuple(item) for item in v] for k, v in raw.items()}

    @staticmethod
    def key(query: SearchQuery, source_name: str) -> str:
        payload = json.dumps([list(query.terms), query.category.value, source_name])
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def get(self, query: SearchQuery, source_name: str) -> list[tuple[str, str]] | None:
        with self._lock:
            hit = self._entries.get(self.key(query, source_name))
            return list(hit) if hit is not None else None

    def put(self, query: SearchQuery, source_name: str, results: list[tuple[str, str]]) -> None:
        with self._lock:
            self._entries[self.key(query, source_name)] = list(results)
            if self._path is not None:
                payload = {k: [list(item) for item in v] for k, v in sorted(self._entries.items())}
                self._path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _search_one(
    client: SourceClient,
    query: SearchQuery,
    cache: RetrievalCache | None,
    failures: list[tuple[str, str]] | None,
) -> list[tuple[str, str]]:
    if cache is not None:
        hit = cache.get(query, client.name)
        if hit is not None:
            return hit
    try:
        results = list(client.search(query))
    except Exception as exc:
        logger.warning("source %s failed for %s: %s", client.name, query.terms, exc)
        if failures is not None:
            failures.append((client.name, str(exc)))
        return []
    if cache is not None:
        cache.put(query, client.name, results)
    return results


def retrieve(
    query: SearchQuery,
    sources: list[SourceClient],
    cache: RetrievalCache | None = None,
    failures: list[tuple[str, str]] | None = None,
    web_limit: int = WEB_RESULT_LIMIT,
) -> list[Candidate]:
    """Query the dedicated tiers (fanned out concurrently), falling back to
    the web tier only when all of them return nothing.

    Source failures are logged and treated as zero results; they are never
    cached, so a recovered source is queried again next time.  Output order
    is deterministic: input source order, then retrieval rank.
    """
    dedicated = [c for c in sources if c.tier is not SourceTier.WEB_SEARCH]
    web = [c for c in sources if c.tier is SourceTier.WEB_SEARCH]

    per_source: dict[int, list[tuple[str, str]]] = {}
    if len(dedicated) > 1:
        with ThreadPoolExecutor(max_workers=len(dedicated)) as pool:
            futures = {
                idx: pool.submit(_search_one, client, query, cache, failures)
                for idx, client in enumerate(dedicated)
            }
            per_source = {idx: future.result() for idx, future in futures.items()}
    else:
        per_source = {
            idx: _search_one(client, query, cache, failures) for idx, client in enumerate(dedicated)
        }

    candidates: list[Candidate] = []
    for idx, client in enumerate(dedicated):
        for rank, (url, snippet) in enumerate(per_source.get(idx, [])):
            candidates.append(Candidate(client.tier, url, snippet, rank))

    if not candidates:
        for client in web:
            results = _search_one(client, query, cache, failures)[:web_limit]
            for rank, (url, snippet) in enumerate(results):
                candidates.append(Candidate(client.tier, url, snippet, rank))
    return candidates


@dataclass(frozen=True, slots=True)
class RankedSolution:
    """A deduplicated candidate scored by credibility and redundancy."""

    candidate: Candidate
    score: Fraction
    redundancy: int

    def __post_init__(self) -> None:
        if self.redundancy < 1:
            raise ValueError("redundancy must be >= 1")


@dataclass(frozen=True, slots=True)
class RetrievedContext:
    """Top-ranked solutions, descending score, at most k of them."""

    solutions: tuple[RankedSolution, ...]
    empty_marker: bool

    @classmethod
    def empty(cls) -> "RetrievedContext":
        return cls(solutions=(), empty_marker=True)


def _normalize_snippet(snippet: str) -> str:
    return " ".join(snippet.lower().split())


def _solution_sort_key(solution: RankedSolution):
    candidate = solution.candidate
    return (
        -solution.score,
        -candidate.source_tier.value,
        candidate.retrieval_rank,
        len(candidate.snippet),
        candidate.url,
    )


def rank(candidates: list[Candidate], k: int = DEFAULT_SOLUTION_LIMIT) -> RetrievedContext:
    """Merge near-duplicate snippets, score, sort, truncate to *k*.

    score = tier weight + 0.5 x (redundancy - 1), where redundancy counts
    the distinct source tiers carrying a near-duplicate of the snippet.
    Near-duplicate means equal after whitespace normalization and
    lowercasing; the merged solution is attributed to its most credible
    candidate.
    """
    groups: dict[str, list[Candidate]] = {}
    for candidate in candidates:
        groups.setdefault(_normalize_snippet(candidate.snippet), []).append(candidate)

    solutions = []
    for group in groups.values():
        representative = min(
            group,
            key=lambda c: (-c.source_tier.value, c.retrieval_rank, len(c.snippet), c.url),
        )
        redundancy = len({c.source_tier for c in group})
        score = Fraction(representative.source_tier.value) + Fraction(1, 2) * (redundancy - 1)
        solutions.append(RankedSolution(candidate=representative, score=score, redundancy=redundancy))

    solutions.sort(key=_solution_sort_key)
    kept = tuple(solutions[:k])
    return RetrievedContext(solutions=kept, empty_marker=not kept)


NO_SOLUTIONS_SENTINEL = (
    "No external solutions were found; resolve the issues from your own knowledge."
)


def assemble_context(ranked: RetrievedContext, budget: int) -> str:
    """Render solutions in rank order with source attribution, dropping
    whole solutions (never truncating mid-snippet) once the budget is hit.
    An empty context yields only the sentinel line."""
    if budget <= 0:
        raise ValueError(f"budget must be > 0, got {budget}")
    if ranked.empty_marker:
        return NO_SOLUTIONS_SENTINEL
    blocks: list[str] = []
    used = 0
    for solution in ranked.solutions:
        candidate = solution.candidate
        block = f"[{candidate.source_tier.label} | {candidate.url}]\n{candidate.snippet}"
        cost = len(block) if not blocks else len(block) + 2
        if used + cost > budget:
            break
        blocks.append(block)
        used += cost
    return "\n\n".join(blocks)


RetrieverFn = Callable[[SearchQuery], list[Candidate]]


def make_retriever(
    sources: list[SourceClient],
    cache: RetrievalCache | None = None,
    failures: list[tuple[str, str]] | None = None,
) -> RetrieverFn:
    """Bind sources and cache into the single-argument retriever the
    orchestrator consumes."""

    def _retrieve(query: SearchQuery) -> list[Candidate]:
        return retrieve(query, sources, cache=cache, failures=failures)

    return _retrieve
