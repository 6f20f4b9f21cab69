from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codemend.errors import PlanError
from codemend.issues import IssueCategory, ScanReport
from codemend.planning import Strategy, anchor_lines, plan
from codemend.rational import parse_fraction
from codemend.gateway import TierRef

from tests.test_issues import make_issue


def tiers():
    return [
        TierRef("tier-1", "junior", parse_fraction("0.0005"), parse_fraction("0.0015"), 0),
        TierRef("tier-2", "senior", parse_fraction("0.005"), parse_fraction("0.015"), 1),
    ]


def synthetic_report(bugs: int, vulns: int, smells: int) -> ScanReport:
    issues = []
    for count, category, stem in (
        (bugs, IssueCategory.BUG, "bug"),
        (vulns, IssueCategory.VULNERABILITY, "vuln"),
        (smells, IssueCategory.CODE_SMELL, "smell"),
    ):
        for i in range(count):
            issues.append(
                make_issue(path=f"src/{stem}{i % 97}.js", line=i + 1, category=category)
            )
    return ScanReport(issues=tuple(issues))


class TestPlan:
    def test_divided_sub_plan_sizes_match_report(self):
        report = synthetic_report(234, 61, 7304)
        revision_plan = plan(report, Strategy.DIVIDED, tiers())
        sizes = {sp.label: sp.issue_count for sp in revision_plan.sub_plans}
        assert sizes == {"bug": 234, "vulnerability": 61, "code_smell": 7304}

    def test_comprehensive_single_sub_plan(self):
        report = synthetic_report(234, 61, 7304)
        revision_plan = plan(report, Strategy.COMPREHENSIVE, tiers())
        assert len(revision_plan.sub_plans) == 1
        assert revision_plan.sub_plans[0].issue_count == 7599

    def test_empty_report(self):
        empty = ScanReport(issues=())
        divided = plan(empty, Strategy.DIVIDED, tiers())
        assert divided.sub_plans == ()
        comprehensive = plan(empty, Strategy.COMPREHENSIVE, tiers())
        assert len(comprehensive.sub_plans) == 1
        assert comprehensive.sub_plans[0].issue_count == 0

    def test_empty_tier_list_rejected(self):
        with pytest.raises(PlanError, match="non-empty"):
            plan(ScanReport(issues=()), Strategy.DIVIDED, [])

    def test_categories_absent_from_report_get_no_sub_plan(self):
        report = synthetic_report(3, 0, 2)
        labels = [sp.label for sp in plan(report, Strategy.DIVIDED, tiers()).sub_plans]
        assert labels == ["bug", "code_smell"]

    def test_deterministic_serialization(self):
        report = synthetic_report(5, 4, 3)
        one = plan(report, Strategy.DIVIDED, tiers()).to_json()
        two = plan(report, Strategy.DIVIDED, tiers()).to_json()
        assert one == two


_categories = st.sampled_from(list(IssueCategory))
_issues = st.builds(
    lambda i, category: make_issue(path=f"src/f{i % 23}.js", line=i + 1, category=category),
    st.integers(min_value=0, max_value=999),
    _categories,
)


@given(st.lists(_issues, max_size=1000))
@settings(max_examples=50, deadline=None)
def test_divided_partition_law(issues):
    report = ScanReport(issues=tuple(issues))
    revision_plan = plan(report, Strategy.DIVIDED, tiers())
    collected = [
        issue
        for sub_plan in revision_plan.sub_plans
        for file_set in sub_plan.file_sets
        for issue in file_set.issues
    ]
    key = lambda i: (i.file_location, i.line, i.category.value, i.message)
    assert sorted(collected, key=key) == sorted(issues, key=key)
    for sub_plan in revision_plan.sub_plans:
        for file_set in sub_plan.file_sets:
            assert all(i.category.value.lower() == sub_plan.label for i in file_set.issues)


class TestAnchorLines:
    def test_in_range_no_warnings(self):
        content = "\n".join(f"line{i}" for i in range(100))
        issue_set = plan_set([16])
        _, warnings = anchor_lines(issue_set, content)
        assert warnings == []

    def test_out_of_range_warned_but_retained(self):
        content = "\n".join(f"line{i}" for i in range(300))
        issue_set = plan_set([409])
        anchored, warnings = anchor_lines(issue_set, content)
        assert len(anchored.issues) == 1
        assert len(warnings) == 1
        assert warnings[0].line == 409
        assert warnings[0].message == "line out of range"

    def test_mixed(self):
        content = "one\ntwo\nthree\n"
        anchored, warnings = anchor_lines(plan_set([2, 50]), content)
        assert [i.line for i in anchored.issues] == [2, 50]
        assert [w.line for w in warnings] == [50]


def plan_set(lines):
    from codemend.issues import FileIssueSet

    return FileIssueSet(
        "src/a.js", tuple(make_issue(path="src/a.js", line=n) for n in lines)
    )
