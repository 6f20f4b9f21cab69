"""Run configuration: JSON file plus flag overrides, flags win.

Validation is all-at-once: every problem is collected and reported in a
single consolidated diagnostic so a bad config never starts a tier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .analyzers import Analyzer, ReportLoaderAnalyzer, ToyAnalyzer, ToyRule
from .errors import ConfigError
from .gateway import (
    EditRule,
    Gateway,
    MockFixtureProvider,
    Provider,
    RetryPolicy,
    ScriptedEditProvider,
    TierRef,
)
from .issues import IssueCategory
from .planning import DEFAULT_OUTPUT_ROOT_TEMPLATE, Strategy
from .rag import RetrievalCache, SourceClient, load_stopwords, stub_sources
from .rational import parse_fraction

DEFAULT_SERVE_ADDR = "127.0.0.1:8765"


@dataclass(slots=True)
class RunConfig:
    """Everything a revise run needs, already validated."""

    root: str = ""
    report: str = ""
    report_format: str = "delimited"
    strategy: str = Strategy.DIVIDED.value
    rag: bool = True
    k: int = 3
    window: int = 5
    workers: int = 4
    context_budget: int = 4000
    out: str | None = None
    output_root_template: str | None = None
    store: str | None = None
    review_all: bool = False
    rate_limit_rpm: int = 30
    retry: dict = field(default_factory=lambda: {"max_retries": 3, "base_delay": 0.5})
    tiers: list[dict] = field(default_factory=list)
    providers: dict[str, dict] = field(default_factory=dict)
    provider_profiles: dict[str, dict[str, str]] = field(default_factory=dict)
    profile: str | None = None
    analyzer: dict = field(default_factory=dict)
    sources: dict = field(default_factory=lambda: {"type": "none"})
    retrieval_cache: str | None = None
    example_bank: str | None = None
    stopwords: str | None = None
    credentials_env: dict[str, str] = field(default_factory=dict)
    serve_addr: str = DEFAULT_SERVE_ADDR

    # ------------------------------------------------------------------

    @property
    def out_dir(self) -> str:
        return self.out if self.out else str(Path(self.root).parent)

    @property
    def store_dir(self) -> str:
        return self.store if self.store else str(Path(self.out_dir) / "review")

    @property
    def template(self) -> str:
        if self.output_root_template:
            return self.output_root_template
        if self.out:
            return "{out}/{rootname}.rev.{label}.{tier}"
        return DEFAULT_OUTPUT_ROOT_TEMPLATE

    def strategy_enum(self) -> Strategy:
        return Strategy(self.strategy)

    def retry_policy(self) -> RetryPolicy:
        return RetryPolicy(
            max_retries=int(self.retry.get("max_retries", 3)),
            base_delay=float(self.retry.get("base_delay", 0.5)),
        )


_KNOWN_KEYS = set(RunConfig.__dataclass_fields__)


def load_config_file(path: str | Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return payload


def merge_config(file_values: dict, overrides: dict) -> dict:
    """Overlay non-None flag overrides onto config-file values."""
    merged = dict(file_values)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return merged


def validate_config(values: dict, require_run_inputs: bool = True) -> RunConfig:
    """Build a RunConfig, collecting every problem into one diagnostic."""
    problems: list[str] = []
    unknown = sorted(set(values) - _KNOWN_KEYS)
    if unknown:
        problems.append(f"unknown config keys: {', '.join(unknown)}")
    config = RunConfig(**{k: v for k, v in values.items() if k in _KNOWN_KEYS})

    if require_run_inputs:
        if not config.root:
            problems.append("root is required")
        elif not Path(config.root).is_dir():
            problems.append(f"root is not a directory: {config.root}")
        if not config.report:
            problems.append("report is required")
        elif not Path(config.report).is_file():
            problems.append(f"report file not found: {config.report}")

    if config.report_format not in ("delimited", "structured"):
        problems.append(f"unknown report_format {config.report_format!r}")
    try:
        Strategy(config.strategy)
    except ValueError:
        problems.append(f"unknown strategy {config.strategy!r} (divided|comprehensive)")
    if config.k < 1:
        problems.append(f"k must be >= 1, got {config.k}")
    if config.window < 0:
        problems.append(f"window must be >= 0, got {config.window}")
    if config.workers < 1:
        problems.append(f"workers must be >= 1, got {config.workers}")
    if config.context_budget < 1:
        problems.append(f"context_budget must be >= 1, got {config.context_budget}")

    if not config.tiers:
        problems.append("tiers must be a non-empty list")
    tier_names = set()
    for idx, tier in enumerate(config.tiers):
        if not isinstance(tier, dict):
            problems.append(f"tiers[{idx}] must be an object")
            continue
        name = tier.get("name")
        if not name:
            problems.append(f"tiers[{idx}] needs a name")
        elif name in tier_names:
            problems.append(f"duplicate tier name {name!r}")
        else:
            tier_names.add(name)
        if not tier.get("provider"):
            problems.append(f"tiers[{idx}] needs a provider id")
        for price_key in ("input_price", "output_price"):
            try:
                if parse_fraction(tier.get(price_key, "0")) < 0:
                    problems.append(f"tiers[{idx}].{price_key} must be >= 0")
            except (ValueError, ZeroDivisionError):
                problems.append(f"tiers[{idx}].{price_key} is not a number")

    profile_map: dict[str, str] = {}
    if config.profile:
        profile_map = config.provider_profiles.get(config.profile, {})
        if config.profile not in config.provider_profiles:
            problems.append(f"unknown provider profile {config.profile!r}")
    for idx, tier in enumerate(config.tiers):
        if not isinstance(tier, dict):
            continue
        provider_id = profile_map.get(tier.get("name", ""), tier.get("provider"))
        if provider_id and provider_id not in config.providers:
            problems.append(f"tiers[{idx}] references unknown provider {provider_id!r}")

    for provider_id, spec in config.providers.items():
        kind = spec.get("type")
        if kind == "scripted":
            for rule_idx, rule in enumerate(spec.get("rules", [])):
                if "match" not in rule:
                    problems.append(f"provider {provider_id!r} rule {rule_idx} needs match")
        elif kind == "fixtures":
            if not spec.get("dir"):
                problems.append(f"provider {provider_id!r} needs a fixtures dir")
        else:
            problems.append(f"provider {provider_id!r} has unknown type {kind!r}")

    analyzer_type = config.analyzer.get("type") if config.analyzer else None
    if require_run_inputs:
        if analyzer_type == "toy":
            for rule_idx, rule in enumerate(config.analyzer.get("rules", [])):
                if "contains" not in rule or "message" not in rule:
                    problems.append(f"analyzer rule {rule_idx} needs contains and message")
                try:
                    IssueCategory(rule.get("category", ""))
                except ValueError:
                    problems.append(
                        f"analyzer rule {rule_idx} has unknown category {rule.get('category')!r}"
                    )
        elif analyzer_type == "report":
            if not config.analyzer.get("path_template"):
                problems.append("report analyzer needs a path_template")
        else:
            problems.append("analyzer.type must be toy or report")

    if config.sources.get("type") not in ("none", "stubs"):
        problems.append(f"sources.type must be none or stubs, got {config.sources.get('type')!r}")
    if config.example_bank and not Path(config.example_bank).is_file():
        problems.append(f"example_bank file not found: {config.example_bank}")
    if config.stopwords and not Path(config.stopwords).is_file():
        problems.append(f"stopwords file not found: {config.stopwords}")

    if problems:
        raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(problems))
    return config


# ----------------------------------------------------------------------
# component builders


def build_tiers(config: RunConfig) -> list[TierRef]:
    profile_map = config.provider_profiles.get(config.profile, {}) if config.profile else {}
    tiers = []
    for idx, tier in enumerate(config.tiers):
        provider_id = profile_map.get(tier["name"], tier["provider"])
        tiers.append(
            TierRef(
                name=tier["name"],
                provider_id=provider_id,
                input_price=parse_fraction(tier.get("input_price", "0")),
                output_price=parse_fraction(tier.get("output_price", "0")),
                order_index=int(tier.get("order_index", idx)),
            )
        )
    return tiers


def build_providers(config: RunConfig) -> dict[str, Provider]:
    providers: dict[str, Provider] = {}
    for provider_id, spec in config.providers.items():
        if spec["type"] == "scripted":
            rules = [
                EditRule(
                    match=rule["match"],
                    action=rule.get("action", "delete-line"),
                    replacement=rule.get("replacement", ""),
                )
                for rule in spec.get("rules", [])
            ]
            providers[provider_id] = ScriptedEditProvider(rules, fence=spec.get("fence", True))
        elif spec["type"] == "fixtures":
            providers[provider_id] = MockFixtureProvider(spec["dir"])
    return providers


def build_analyzer(config: RunConfig) -> Analyzer:
    if config.analyzer.get("type") == "toy":
        rules = tuple(
            ToyRule(
                category=IssueCategory(rule["category"]),
                needle=rule["contains"],
                message=rule["message"],
            )
            for rule in config.analyzer.get("rules", [])
        )
        return ToyAnalyzer(rules=rules)
    return ReportLoaderAnalyzer(
        path_template=config.analyzer["path_template"],
        format=config.analyzer.get("format", "delimited"),
    )


def build_sources(config: RunConfig) -> list[SourceClient]:
    if config.sources.get("type") != "stubs":
        return []
    return list(stub_sources(config.sources.get("fixtures", {})))


def build_gateway(config: RunConfig) -> Gateway:
    return Gateway(build_providers(config), requests_per_minute=config.rate_limit_rpm)


def build_retrieval_cache(config: RunConfig) -> RetrievalCache | None:
    if not config.rag:
        return None
    return RetrievalCache(config.retrieval_cache)


def build_stopwords(config: RunConfig) -> frozenset[str] | None:
    if config.stopwords:
        return load_stopwords(config.stopwords)
    return None
