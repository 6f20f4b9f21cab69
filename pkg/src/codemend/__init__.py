"""codemend: revise analyzer-reported code issues with tiered model
providers, quantify every change, and gate suspect edits behind review."""

from .analyzers import ToyAnalyzer, ToyRule, toy_scan
from .comparison import (
    ComparisonReport,
    DiffHunk,
    HallucinationFlag,
    Metrics,
    build_comparison,
    diff_lines,
    flag_hallucinations,
    metrics,
)
from .errors import CodemendError
from .gateway import CostLedger, CostRecord, Gateway, RetryPolicy, TierRef, extract_code
from .issues import (
    FileIssueSet,
    Issue,
    IssueCategory,
    ScanReport,
    group_by_file,
    parse_report,
    serialize_report,
)
from .orchestrator import Orchestrator, RunReport, compute_success
from .planning import RevisionPlan, Strategy, anchor_lines, plan
from .prompting import ExampleBank, Prompt, build_prompt, estimate_size, select_examples
from .rag import (
    Candidate,
    RetrievedContext,
    SearchQuery,
    SourceTier,
    assemble_context,
    formulate_query,
    rank,
    retrieve,
)
from .review import ReviewDecision, ReviewStore, RunState, Verdict

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "CodemendError",
    "ComparisonReport",
    "CostLedger",
    "CostRecord",
    "DiffHunk",
    "ExampleBank",
    "FileIssueSet",
    "Gateway",
    "HallucinationFlag",
    "Issue",
    "IssueCategory",
    "Metrics",
    "Orchestrator",
    "Prompt",
    "RetrievedContext",
    "RetryPolicy",
    "ReviewDecision",
    "ReviewStore",
    "RevisionPlan",
    "RunReport",
    "RunState",
    "ScanReport",
    "SearchQuery",
    "SourceTier",
    "Strategy",
    "TierRef",
    "ToyAnalyzer",
    "ToyRule",
    "Verdict",
    "anchor_lines",
    "assemble_context",
    "build_comparison",
    "build_prompt",
    "compute_success",
    "diff_lines",
    "estimate_size",
    "extract_code",
    "flag_hallucinations",
    "formulate_query",
    "group_by_file",
    "metrics",
    "parse_report",
    "plan",
    "rank",
    "retrieve",
    "select_examples",
    "serialize_report",
    "toy_scan",
]
