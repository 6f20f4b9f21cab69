"""Turn a scan report into a revision plan under one of two strategies.

DIVIDED makes one sub-plan per issue category present (each revised into
its own mirrored output tree); COMPREHENSIVE packs every issue into a
single sub-plan.  Line anchors are validated against file contents, but a
stale anchor is only a warning: later tiers run against re-scans, where
drift is normal.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .errors import PlanError
from .gateway import TierRef, validate_schedule
from .issues import FileIssueSet, IssueCategory, ScanReport, group_by_file

DEFAULT_OUTPUT_ROOT_TEMPLATE = "{root}.rev.{label}.{tier}"


class Strategy(enum.Enum):
    DIVIDED = "divided"
    COMPREHENSIVE = "comprehensive"


def category_label(category: IssueCategory) -> str:
    return category.value.lower()


@dataclass(frozen=True, slots=True)
class SubPlan:
    """One leg of the run: a label and the files it will revise."""

    label: str
    file_sets: tuple[FileIssueSet, ...]
    category: IssueCategory | None = None  # None under COMPREHENSIVE

    @property
    def issue_count(self) -> int:
        return sum(len(fs.issues) for fs in self.file_sets)


@dataclass(frozen=True, slots=True)
class RevisionPlan:
    strategy: Strategy
    sub_plans: tuple[SubPlan, ...]
    tier_schedule: tuple[TierRef, ...]
    output_root_template: str = DEFAULT_OUTPUT_ROOT_TEMPLATE

    @property
    def issue_count(self) -> int:
        return sum(sp.issue_count for sp in self.sub_plans)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "output_root_template": self.output_root_template,
            "tier_schedule": [
                {
                    "name": t.name,
                    "provider_id": t.provider_id,
                    "input_price": str(t.input_price),
                    "output_price": str(t.output_price),
                    "order_index": t.order_index,
                }
                for t in self.tier_schedule
            ],
            "sub_plans": [
                {
                    "label": sp.label,
                    "category": sp.category.value if sp.category else None,
                    "issue_count": sp.issue_count,
                    "files": [
                        {
                            "file_location": fs.file_location,
                            "issues": [i.to_dict() for i in fs.issues],
                        }
                        for fs in sp.file_sets
                    ],
                }
                for sp in self.sub_plans
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def plan(
    report: ScanReport,
    strategy: Strategy,
    tiers: list[TierRef],
    output_root_template: str = DEFAULT_OUTPUT_ROOT_TEMPLATE,
) -> RevisionPlan:
    """Build the plan; DIVIDED sub-plans are disjoint and cover the report.

    Sub-plans come out in category declaration order, files grouped via
    group_by_file, so identical inputs serialize identically.
    """
    if not tiers:
        raise PlanError("tier schedule must be non-empty")
    schedule = tuple(validate_schedule(tiers))

    sub_plans: list[SubPlan] = []
    if strategy is Strategy.DIVIDED:
        for category in IssueCategory:
            slice_report = report.filtered(category)
            if not slice_report.issues:
                continue
            sub_plans.append(
                SubPlan(
                    label=category_label(category),
                    file_sets=tuple(group_by_file(slice_report)),
                    category=category,
                )
            )
    elif strategy is Strategy.COMPREHENSIVE:
        sub_plans.append(
            SubPlan(label="all", file_sets=tuple(group_by_file(report)), category=None)
        )
    else:
        raise PlanError(f"unknown strategy {strategy!r}")
    return RevisionPlan(
        strategy=strategy,
        sub_plans=tuple(sub_plans),
        tier_schedule=schedule,
        output_root_template=output_root_template,
    )


@dataclass(frozen=True, slots=True)
class LineWarning:
    """An issue whose line anchor exceeds the current file length."""

    file_location: str
    line: int
    file_line_count: int
    message: str = "line out of range"

    def to_dict(self) -> dict:
        return {
            "file_location": self.file_location,
            "line": self.line,
            "file_line_count": self.file_line_count,
            "message": self.message,
        }


def anchor_lines(issue_set: FileIssueSet, content: str) -> tuple[FileIssueSet, list[LineWarning]]:
    """Check issue lines against the file; out-of-range anchors are kept
    but reported as warnings."""
    line_count = len(content.splitlines())
    warnings = [
        LineWarning(file_location=issue_set.file_location, line=i.line, file_line_count=line_count)
        for i in issue_set.issues
        if i.line > line_count
    ]
    return issue_set, warnings
