from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from codemend.analyzers import ToyRule
from codemend.issues import IssueCategory, parse_report

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"

BUG_MESSAGE = "Element with a click handler must also provide a keyboard handler."
VULN_MESSAGE = "Disable automatic service account token mounting for this workload."
SMELL_MESSAGE = "Remove this commented out code."

TOY_RULES = (
    ToyRule(IssueCategory.BUG, "FIXME", BUG_MESSAGE),
    ToyRule(IssueCategory.VULNERABILITY, "UNSAFE", VULN_MESSAGE),
    ToyRule(IssueCategory.CODE_SMELL, "TODO", SMELL_MESSAGE),
)

TOY_RULES_CONFIG = [
    {"category": "BUG", "contains": "FIXME", "message": BUG_MESSAGE},
    {"category": "VULNERABILITY", "contains": "UNSAFE", "message": VULN_MESSAGE},
    {"category": "CODE_SMELL", "contains": "TODO", "message": SMELL_MESSAGE},
]

JUNIOR_RULES = [
    {"match": "-EASY", "action": "delete-line"},
    {"match": "STRAY-EDIT", "action": "delete-line"},
]
SENIOR_RULES = [
    {"match": "-EASY", "action": "delete-line"},
    {"match": "-HARD", "action": "delete-line"},
]


@pytest.fixture
def project_root(tmp_path: Path) -> Path:
    root = tmp_path / "project"
    shutil.copytree(FIXTURES / "project", root)
    return root


@pytest.fixture
def fixture_report():
    return parse_report((FIXTURES / "report.csv").read_bytes(), source_label="report.csv")


def hermetic_config(tmp_path: Path, root: Path, **overrides) -> dict:
    """The standard hermetic run config: toy analyzer, scripted mock tiers."""
    config = {
        "root": str(root),
        "report": str(FIXTURES / "report.csv"),
        "strategy": "divided",
        "rag": False,
        "k": 3,
        "window": 5,
        "workers": 4,
        "out": str(tmp_path / "out"),
        "rate_limit_rpm": 0,
        "retry": {"max_retries": 2, "base_delay": 0.0},
        "tiers": [
            {
                "name": "junior-model",
                "provider": "scripted-junior",
                "input_price": "0.0005",
                "output_price": "0.0015",
            },
            {
                "name": "senior-model",
                "provider": "scripted-senior",
                "input_price": "0.005",
                "output_price": "0.015",
            },
        ],
        "providers": {
            "scripted-junior": {"type": "scripted", "rules": JUNIOR_RULES},
            "scripted-senior": {"type": "scripted", "rules": SENIOR_RULES},
        },
        "provider_profiles": {
            "mock": {
                "junior-model": "scripted-junior",
                "senior-model": "scripted-senior",
            }
        },
        "analyzer": {"type": "toy", "rules": TOY_RULES_CONFIG},
        "sources": {"type": "none"},
    }
    config.update(overrides)
    return config


def write_config(tmp_path: Path, root: Path, **overrides) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(hermetic_config(tmp_path, root, **overrides), indent=2))
    return path


def make_orchestrator(tmp_path: Path, root: Path, with_store: bool = False, **overrides):
    """Build a fully wired Orchestrator from the hermetic config."""
    from codemend.config import (
        build_analyzer,
        build_gateway,
        build_retrieval_cache,
        build_sources,
        build_stopwords,
        build_tiers,
        validate_config,
    )
    from codemend.orchestrator import Orchestrator
    from codemend.prompting import load_example_bank
    from codemend.rag import make_retriever
    from codemend.review import ReviewStore

    config = validate_config(hermetic_config(tmp_path, root, **overrides))
    sources = build_sources(config)
    retriever = (
        make_retriever(sources, cache=build_retrieval_cache(config))
        if config.rag and sources
        else None
    )
    store = ReviewStore(config.store_dir) if with_store else None
    orchestrator = Orchestrator(
        project_root=config.root,
        analyzer=build_analyzer(config),
        gateway=build_gateway(config),
        bank=load_example_bank(config.example_bank),
        retriever=retriever,
        rag_enabled=config.rag,
        k=config.k,
        window=config.window,
        workers=config.workers,
        context_budget=config.context_budget,
        output_root_template=config.template,
        out_dir=config.out_dir,
        retry_policy=config.retry_policy(),
        stopwords=build_stopwords(config),
        store=store,
        review_all=config.review_all,
    )
    return orchestrator, config, build_tiers(config)
