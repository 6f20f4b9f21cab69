"""End-to-end revision runs: revise, mirror, re-scan, escalate, account.

Each sub-plan leg starts from the original tree.  Every tier revises the
files that still carry open issues into a fresh mirrored tree (untouched
files are copied verbatim), the tree is re-scanned, and the next tier
consumes the re-scan.  Per-file failures fail open: the original content
stays in the tree and the file is recorded as unresolved.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .analyzers import Analyzer
from .comparison import ComparisonReport, build_comparison
from .errors import CodemendError, GatewayError, OrchestrationError, QueryError, RegressionError, ScanError
from .gateway import CostRecord, Gateway, RetryPolicy, TierRef, record_cost
from .issues import FileIssueSet, ScanReport, group_by_file, serialize_report
from .planning import LineWarning, RevisionPlan, Strategy, SubPlan, anchor_lines, plan
from .prompting import ExampleBank, build_prompt
from .rag import RetrievedContext, RetrieverFn, formulate_query, rank
from .rational import fraction_str
from .review import ReviewStore

logger = logging.getLogger(__name__)

DEFAULT_WORKERS = 4


def compute_success(before: int, after: int) -> Fraction | None:
    """Resolution rate (before - after) / before; None when nothing was
    open; a grown count is a regression and is surfaced, never masked."""
    if after > before:
        raise RegressionError(
            f"issue count increased from {before} to {after}; revisions introduced issues"
        )
    if before == 0:
        return None
    return Fraction(before - after, before)


@dataclass(slots=True)
class TierOutcome:
    tier: TierRef
    files_attempted: int
    files_revised: int
    issues_before: int
    issues_after: int
    output_root: str
    cost_records: list[CostRecord] = field(default_factory=list)
    unresolved: list[str] = field(default_factory=list)
    warnings: list[LineWarning] = field(default_factory=list)

    @property
    def resolved(self) -> int:
        return self.issues_before - self.issues_after

    @property
    def cost_total(self) -> Fraction:
        return sum((r.cost for r in self.cost_records), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "tier": self.tier.name,
            "files_attempted": self.files_attempted,
            "files_revised": self.files_revised,
            "issues_before": self.issues_before,
            "issues_after": self.issues_after,
            "resolved": self.resolved,
            "output_root": self.output_root,
            "cost_total": fraction_str(self.cost_total),
            "cost_records": [r.to_dict() for r in self.cost_records],
            "unresolved": list(self.unresolved),
            "warnings": [w.to_dict() for w in self.warnings],
        }


@dataclass(frozen=True, slots=True)
class SuccessStats:
    """Per-tier and cumulative resolution rates for one leg."""

    per_tier: tuple[tuple[str, Fraction | None], ...]
    cumulative: Fraction | None


@dataclass(slots=True)
class LegReport:
    label: str
    category: str | None
    issues_initial: int
    issues_final: int
    tier_outcomes: list[TierOutcome]
    revised_files: list[str] = field(default_factory=list)
    final_output_root: str = ""
    metrics_avg: dict[str, Fraction] | None = None
    comparisons: list[ComparisonReport] = field(default_factory=list)  # runtime only

    def success_stats(self) -> SuccessStats:
        per_tier = tuple(
            (o.tier.name, compute_success(o.issues_before, o.issues_after)) for o in self.tier_outcomes
        )
        return SuccessStats(
            per_tier=per_tier, cumulative=compute_success(self.issues_initial, self.issues_final)
        )

    @property
    def cost_total(self) -> Fraction:
        return sum((o.cost_total for o in self.tier_outcomes), Fraction(0))

    def to_dict(self) -> dict:
        stats = self.success_stats()
        return {
            "label": self.label,
            "category": self.category,
            "issues_initial": self.issues_initial,
            "issues_final": self.issues_final,
            "tiers": [o.to_dict() for o in self.tier_outcomes],
            "success_rates": {
                "per_tier": {
                    name: fraction_str(rate) if rate is not None else None
                    for name, rate in stats.per_tier
                },
                "cumulative": fraction_str(stats.cumulative) if stats.cumulative is not None else None,
            },
            "revised_files": sorted(self.revised_files),
            "final_output_root": self.final_output_root,
            "metrics_avg": {k: fraction_str(v) for k, v in self.metrics_avg.items()}
            if self.metrics_avg
            else None,
            "cost_total": fraction_str(self.cost_total),
        }


@dataclass(slots=True)
class RunReport:
    run_id: str
    strategy: str
    project_root: str
    rag_enabled: bool
    window: int
    tier_names: list[str]
    legs: list[LegReport]
    plan_digest: str
    store_dir: str = ""

    @property
    def total_cost(self) -> Fraction:
        return sum((leg.cost_total for leg in self.legs), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "strategy": self.strategy,
            "project_root": self.project_root,
            "rag_enabled": self.rag_enabled,
            "window": self.window,
            "tier_names": list(self.tier_names),
            "legs": [leg.to_dict() for leg in self.legs],
            "plan_digest": self.plan_digest,
            "store_dir": self.store_dir,
            "total_cost": fraction_str(self.total_cost),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def resolve_output_root(
    template: str, root: str | Path, label: str, tier_index: int, out_dir: str | Path | None = None
) -> Path:
    root = Path(root)
    out = str(out_dir) if out_dir is not None else str(root.parent)
    rendered = (
        template.replace("{root}", str(root))
        .replace("{rootname}", root.name)
        .replace("{label}", label)
        .replace("{tier}", str(tier_index))
        .replace("{out}", out)
    )
    return Path(rendered)


@dataclass(slots=True)
class _FileResult:
    file_location: str
    revised: bool
    cost_record: CostRecord | None
    warnings: list[LineWarning]
    error: str | None


class Orchestrator:
    """Wires the analyzer, retriever, prompt bank, and gateway together."""

    def __init__(
        self,
        project_root: str | Path,
        analyzer: Analyzer,
        gateway: Gateway,
        bank: ExampleBank,
        retriever: RetrieverFn | None = None,
        rag_enabled: bool = True,
        k: int = 3,
        window: int = 5,
        workers: int = DEFAULT_WORKERS,
        context_budget: int = 4000,
        output_root_template: str = "{root}.rev.{label}.{tier}",
        out_dir: str | Path | None = None,
        retry_policy: RetryPolicy | None = None,
        stopwords: frozenset[str] | None = None,
        store: ReviewStore | None = None,
        review_all: bool = False,
    ):
        self.project_root = Path(project_root)
        self.analyzer = analyzer
        self.gateway = gateway
        self.bank = bank
        self.retriever = retriever
        self.rag_enabled = rag_enabled and retriever is not None
        self.k = k
        self.window = window
        self.workers = max(1, workers)
        self.context_budget = context_budget
        self.output_root_template = output_root_template
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.retry_policy = retry_policy or RetryPolicy()
        self.stopwords = stopwords
        self.store = store
        self.review_all = review_all

    # ------------------------------------------------------------------
    # per-file work

    def _context_for(self, issue_set: FileIssueSet) -> RetrievedContext:
        if not self.rag_enabled or self.retriever is None:
            return RetrievedContext.empty()
        candidates = []
        for issue in issue_set.issues:
            try:
                query = formulate_query(issue, self.stopwords)
            except QueryError as exc:
                logger.info("skipping retrieval for unqueryable issue: %s", exc)
                continue
            candidates.extend(self.retriever(query))
        return rank(candidates, k=self.k)

    def _revise_file(
        self, issue_set: FileIssueSet, tier: TierRef, input_root: Path, output_root: Path
    ) -> _FileResult:
        location = issue_set.file_location
        source_path = input_root / location
        try:
            content = source_path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            return _FileResult(location, False, None, [], f"unreadable source: {exc}")
        _, warnings = anchor_lines(issue_set, content)
        try:
            context = self._context_for(issue_set)
            prompt = build_prompt(
                content, issue_set, context, self.bank, context_budget=self.context_budget
            )
            response = self.gateway.submit(prompt, tier, self.retry_policy)
        except GatewayError as exc:
            logger.warning("file %s unresolved at tier %s: %s", location, tier.name, exc)
            return _FileResult(location, False, None, warnings, str(exc))
        target = output_root / location
        target.parent.mkdir(parents=True, exist_ok=True)
        # Fence stripping trims the trailing newline; restore it so revised
        # trees stay POSIX-friendly and byte-deterministic.
        code = response.extracted_code
        if code and not code.endswith("\n"):
            code += "\n"
        target.write_text(code, encoding="utf-8")
        record = record_cost(response.usage, tier, location, self.gateway.ledger)
        return _FileResult(location, True, record, warnings, None)

    # ------------------------------------------------------------------
    # tiers and legs

    def run_tier(
        self,
        sub_plan: SubPlan,
        tier: TierRef,
        input_root: str | Path,
        tier_index: int,
    ) -> tuple[TierOutcome, ScanReport]:
        """Revise one sub-plan with one tier into a mirrored tree, then
        re-scan it.  Returns the outcome plus the category-filtered
        re-scan the next tier consumes."""
        input_root = Path(input_root)
        output_root = resolve_output_root(
            self.output_root_template, self.project_root, sub_plan.label, tier_index, self.out_dir
        )
        if output_root.exists():
            shutil.rmtree(output_root)
        output_root.parent.mkdir(parents=True, exist_ok=True)
        shutil.copytree(input_root, output_root)

        ordered_sets = sorted(sub_plan.file_sets, key=lambda fs: fs.file_location)
        results: list[_FileResult] = []
        if ordered_sets:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                futures = [
                    pool.submit(self._revise_file, fs, tier, input_root, output_root)
                    for fs in ordered_sets
                ]
                results = [f.result() for f in futures]

        try:
            rescan = self.analyzer.scan(output_root)
        except ScanError as exc:
            raise OrchestrationError(
                f"analyzer failed on {output_root} (tier {tier.name}): {exc}"
            ) from exc
        if sub_plan.category is not None:
            rescan = rescan.filtered(sub_plan.category)

        outcome = TierOutcome(
            tier=tier,
            files_attempted=len(ordered_sets),
            files_revised=sum(1 for r in results if r.revised),
            issues_before=sub_plan.issue_count,
            issues_after=len(rescan.issues),
            output_root=str(output_root),
            cost_records=[r.cost_record for r in results if r.cost_record is not None],
            unresolved=sorted(r.file_location for r in results if r.error is not None),
            warnings=[w for r in results for w in r.warnings],
        )
        return outcome, rescan

    def _run_leg(self, sub_plan: SubPlan, tiers: tuple[TierRef, ...]) -> LegReport:
        leg = LegReport(
            label=sub_plan.label,
            category=sub_plan.category.value if sub_plan.category else None,
            issues_initial=sub_plan.issue_count,
            issues_final=sub_plan.issue_count,
            tier_outcomes=[],
            final_output_root=str(self.project_root),
        )
        if sub_plan.issue_count == 0:
            return leg

        revised: set[str] = set()
        current_input: Path = self.project_root
        current_plan = sub_plan
        for tier_index, tier in enumerate(tiers, start=1):
            outcome, rescan = self.run_tier(current_plan, tier, current_input, tier_index)
            leg.tier_outcomes.append(outcome)
            leg.issues_final = outcome.issues_after
            leg.final_output_root = outcome.output_root
            revised.update(
                r for r in (fs.file_location for fs in current_plan.file_sets)
                if r not in outcome.unresolved
            )
            compute_success(outcome.issues_before, outcome.issues_after)  # regression check
            if outcome.issues_after == 0:
                break
            current_input = Path(outcome.output_root)
            current_plan = SubPlan(
                label=sub_plan.label,
                file_sets=tuple(group_by_file(rescan)),
                category=sub_plan.category,
            )
        leg.revised_files = sorted(revised)
        self._build_comparisons(sub_plan, leg)
        return leg

    def _build_comparisons(self, sub_plan: SubPlan, leg: LegReport) -> None:
        sets_by_path = {fs.file_location: fs for fs in sub_plan.file_sets}
        final_root = Path(leg.final_output_root)
        precisions: list[Fraction] = []
        recalls: list[Fraction] = []
        f1s: list[Fraction] = []
        for location in leg.revised_files:
            original = (self.project_root / location).read_text(encoding="utf-8")
            revised = (final_root / location).read_text(encoding="utf-8")
            issue_set = sets_by_path.get(location) or FileIssueSet(file_location=location, issues=())
            report = build_comparison(original, revised, issue_set, self.window)
            leg.comparisons.append(report)
            precisions.append(report.metrics.precision)
            recalls.append(report.metrics.recall)
            f1s.append(report.metrics.f1)
        if leg.comparisons:
            count = len(leg.comparisons)
            leg.metrics_avg = {
                "precision": sum(precisions, Fraction(0)) / count,
                "recall": sum(recalls, Fraction(0)) / count,
                "f1": sum(f1s, Fraction(0)) / count,
            }

    # ------------------------------------------------------------------
    # whole pipeline

    def run_pipeline(
        self, report: ScanReport, strategy: Strategy, tiers: list[TierRef]
    ) -> RunReport:
        """Plan, run every leg tier by tier, and persist the run report.

        On a tier abort the partial report is written to disk before the
        error propagates.
        """
        revision_plan = plan(report, strategy, tiers, self.output_root_template)
        run_id = self._run_id(report, revision_plan)
        plan_digest = hashlib.sha256(revision_plan.to_json().encode("utf-8")).hexdigest()[:12]
        run_report = RunReport(
            run_id=run_id,
            strategy=strategy.value,
            project_root=str(self.project_root),
            rag_enabled=self.rag_enabled,
            window=self.window,
            tier_names=[t.name for t in revision_plan.tier_schedule],
            legs=[],
            plan_digest=plan_digest,
        )
        try:
            for sub_plan in revision_plan.sub_plans:
                run_report.legs.append(self._run_leg(sub_plan, revision_plan.tier_schedule))
        except CodemendError:
            self._persist(run_report, partial=True)
            raise
        if self.store is not None:
            for leg in run_report.legs:
                self.store.register_run(
                    run_id=f"{run_report.run_id}.{leg.label}",
                    project_root=self.project_root,
                    final_root=leg.final_output_root,
                    comparisons=leg.comparisons,
                    label=leg.label,
                    review_all=self.review_all,
                )
            run_report.store_dir = str(self.store.root)
        self._persist(run_report)
        return run_report

    def _run_id(self, report: ScanReport, revision_plan: RevisionPlan) -> str:
        digest = hashlib.sha256()
        digest.update(serialize_report(report).encode("utf-8"))
        digest.update(revision_plan.to_json().encode("utf-8"))
        digest.update(
            json.dumps(
                [self.rag_enabled, self.k, self.window, self.context_budget]
            ).encode("utf-8")
        )
        return f"run-{digest.hexdigest()[:12]}"

    def report_path(self, run_id: str, partial: bool = False) -> Path:
        base = self.out_dir if self.out_dir is not None else self.project_root.parent
        suffix = ".partial" if partial else ""
        return Path(base) / f"{run_id}{suffix}.report.json"

    def _persist(self, run_report: RunReport, partial: bool = False) -> Path:
        path = self.report_path(run_report.run_id, partial)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(run_report.to_json(), encoding="utf-8")
        return path
