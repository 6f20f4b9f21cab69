from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest

from codemend.errors import OrchestrationError, RegressionError
from codemend.issues import FileIssueSet, IssueCategory
from codemend.orchestrator import compute_success, resolve_output_root
from codemend.planning import Strategy, SubPlan
from codemend.rational import format_pct

from tests.conftest import make_orchestrator
from tests.test_issues import make_issue


class TestComputeSuccess:
    def test_half_resolved(self):
        assert compute_success(234, 117) == Fraction(1, 2)
        assert format_pct(compute_success(234, 117)) == "50.00%"

    def test_partial_comprehensive(self):
        rate = compute_success(7599, 4340)
        assert rate == Fraction(3259, 7599)
        assert 0.428 <= float(rate) <= 0.429

    def test_fully_resolved(self):
        assert compute_success(61, 0) == 1

    def test_nothing_open_is_not_applicable(self):
        assert compute_success(0, 0) is None
        assert format_pct(None) == "n/a"

    def test_growth_is_a_regression(self):
        with pytest.raises(RegressionError, match="increased"):
            compute_success(10, 11)


def tree_files(root: Path) -> list[str]:
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())


class TestDividedPipeline:
    @pytest.fixture()
    def run(self, tmp_path, project_root, fixture_report):
        orchestrator, config, tiers = make_orchestrator(tmp_path, project_root)
        report = orchestrator.run_pipeline(fixture_report, Strategy.DIVIDED, tiers)
        return orchestrator, config, report

    def test_leg_counts(self, run):
        _, _, report = run
        flow = {
            leg.label: (leg.issues_initial, [o.issues_after for o in leg.tier_outcomes])
            for leg in report.legs
        }
        assert flow == {
            "bug": (5, [2, 0]),
            "vulnerability": (3, [1, 0]),
            "code_smell": (8, [3, 1]),
        }

    def test_success_stats(self, run):
        _, _, report = run
        by_label = {leg.label: leg.success_stats() for leg in report.legs}
        assert by_label["bug"].cumulative == 1
        assert by_label["vulnerability"].cumulative == 1
        assert by_label["code_smell"].cumulative == Fraction(7, 8)
        assert by_label["bug"].per_tier[0][1] == Fraction(3, 5)

    def test_tree_integrity(self, run, project_root):
        _, _, report = run
        expected = tree_files(project_root)
        for leg in report.legs:
            for outcome in leg.tier_outcomes:
                assert tree_files(Path(outcome.output_root)) == expected

    def test_exactly_one_flag_on_far_edit(self, run):
        _, _, report = run
        flagged = {
            (leg.label, c.file_location): c.flags
            for leg in report.legs
            for c in leg.comparisons
            if c.flags
        }
        assert list(flagged) == [("bug", "client/bigfile.js")]
        (flag,) = flagged[("bug", "client/bigfile.js")]
        assert flag.distance >= 300
        assert flag.nearest_issue_line == 9

    def test_metrics_averages_recorded(self, run):
        _, _, report = run
        for leg in report.legs:
            assert leg.metrics_avg is not None
            assert 0 < leg.metrics_avg["f1"] <= 1

    def test_costs_ledgered_per_file(self, run):
        orchestrator, _, report = run
        records = [r for leg in report.legs for o in leg.tier_outcomes for r in o.cost_records]
        assert records
        assert report.total_cost == sum((r.cost for r in records), Fraction(0))
        assert report.total_cost == orchestrator.gateway.ledger.total()

    def test_report_persisted(self, run):
        orchestrator, _, report = run
        path = orchestrator.report_path(report.run_id)
        assert path.is_file()
        assert json.loads(path.read_text())["run_id"] == report.run_id

    def test_byte_identical_reruns(self, tmp_path, project_root, fixture_report):
        first_orch, _, tiers = make_orchestrator(tmp_path, project_root)
        first = first_orch.run_pipeline(fixture_report, Strategy.DIVIDED, tiers)
        second_orch, _, tiers2 = make_orchestrator(tmp_path, project_root)
        second = second_orch.run_pipeline(fixture_report, Strategy.DIVIDED, tiers2)
        assert first.to_json() == second.to_json()


class TestComprehensivePipeline:
    def test_single_leg_flow(self, tmp_path, project_root, fixture_report):
        orchestrator, _, tiers = make_orchestrator(tmp_path, project_root)
        report = orchestrator.run_pipeline(fixture_report, Strategy.COMPREHENSIVE, tiers)
        (leg,) = report.legs
        assert leg.label == "all"
        assert leg.issues_initial == 16
        assert [o.issues_after for o in leg.tier_outcomes] == [6, 1]


class TestPipelineEdges:
    def test_empty_report_runs_no_tier(self, tmp_path, project_root):
        from codemend.issues import ScanReport

        orchestrator, _, tiers = make_orchestrator(tmp_path, project_root)
        report = orchestrator.run_pipeline(ScanReport(issues=()), Strategy.COMPREHENSIVE, tiers)
        (leg,) = report.legs
        assert leg.tier_outcomes == []
        assert leg.issues_final == 0
        assert report.total_cost == 0

    def test_early_termination_skips_later_tiers(self, tmp_path, project_root, fixture_report):
        # The senior rules at tier 1 leave nothing for tier 2 in the
        # bug/vулnerability legs.
        from tests.conftest import SENIOR_RULES

        orchestrator, _, tiers = make_orchestrator(
            tmp_path,
            project_root,
            providers={
                "scripted-junior": {"type": "scripted", "rules": SENIOR_RULES},
                "scripted-senior": {"type": "scripted", "rules": SENIOR_RULES},
            },
        )
        report = orchestrator.run_pipeline(fixture_report, Strategy.DIVIDED, tiers)
        by_label = {leg.label: leg for leg in report.legs}
        assert len(by_label["bug"].tier_outcomes) == 1
        assert len(by_label["vulnerability"].tier_outcomes) == 1
        assert len(by_label["code_smell"].tier_outcomes) == 2

    def test_fail_open_copies_original(self, tmp_path, project_root, fixture_report):
        # Tier 1 uses an empty fixtures dir: every submission is unusable,
        # the tree is a verbatim copy, and issue counts do not move.
        fixtures_dir = tmp_path / "empty-fixtures"
        fixtures_dir.mkdir()
        orchestrator, _, tiers = make_orchestrator(
            tmp_path,
            project_root,
            providers={
                "scripted-junior": {"type": "fixtures", "dir": str(fixtures_dir)},
                "scripted-senior": {
                    "type": "scripted",
                    "rules": [{"match": "-EASY"}, {"match": "-HARD"}],
                },
            },
        )
        report = orchestrator.run_pipeline(fixture_report, Strategy.DIVIDED, tiers)
        bug_leg = next(leg for leg in report.legs if leg.label == "bug")
        tier_one = bug_leg.tier_outcomes[0]
        assert tier_one.files_revised == 0
        assert tier_one.issues_after == tier_one.issues_before == 5
        assert len(tier_one.unresolved) == tier_one.files_attempted == 4
        original = (project_root / "client/app.jsx").read_text()
        assert (Path(tier_one.output_root) / "client/app.jsx").read_text() == original
        assert bug_leg.issues_final == 0  # tier 2 still cleans up

    def test_regression_surfaces_and_preserves_partial_report(
        self, tmp_path, project_root, fixture_report
    ):
        grower = {
            "type": "scripted",
            "rules": [
                {
                    "match": "-EASY",
                    "action": "replace-line",
                    "replacement": "// TODO one\n// TODO two\n// TODO three",
                }
            ],
        }
        orchestrator, _, tiers = make_orchestrator(
            tmp_path,
            project_root,
            strategy="divided",
            providers={"scripted-junior": grower, "scripted-senior": grower},
        )
        smell_only = fixture_report.filtered(IssueCategory.CODE_SMELL)
        with pytest.raises(RegressionError):
            orchestrator.run_pipeline(smell_only, Strategy.DIVIDED, tiers)
        partials = list(Path(orchestrator.out_dir).glob("*.partial.report.json"))
        assert len(partials) == 1

    def test_analyzer_failure_aborts_with_diagnostic(
        self, tmp_path, project_root, fixture_report
    ):
        orchestrator, _, tiers = make_orchestrator(
            tmp_path,
            project_root,
            analyzer={"type": "report", "path_template": "{dir}/missing-report.csv"},
        )
        with pytest.raises(OrchestrationError, match="analyzer failed"):
            orchestrator.run_pipeline(fixture_report, Strategy.DIVIDED, tiers)
        assert list(Path(orchestrator.out_dir).glob("*.partial.report.json"))

    def test_rag_run_completes_with_stub_sources(self, tmp_path, project_root, fixture_report):
        orchestrator, _, tiers = make_orchestrator(
            tmp_path,
            project_root,
            rag=True,
            sources={
                "type": "stubs",
                "fixtures": {
                    "code-host": [["https://host.example/fix", "delete the flagged line"]],
                },
            },
        )
        report = orchestrator.run_pipeline(fixture_report, Strategy.DIVIDED, tiers)
        assert report.rag_enabled is True
        assert {leg.label: leg.issues_final for leg in report.legs} == {
            "bug": 0,
            "vulnerability": 0,
            "code_smell": 1,
        }

    def test_run_tier_with_empty_sub_plan(self, tmp_path, project_root):
        orchestrator, _, tiers = make_orchestrator(tmp_path, project_root)
        clean_root = tmp_path / "clean"
        clean_root.mkdir()
        (clean_root / "ok.js").write_text("nothing wrong here\n")
        orchestrator.project_root = clean_root
        outcome, rescan = orchestrator.run_tier(
            SubPlan(label="bug", file_sets=(), category=IssueCategory.BUG),
            tiers[0],
            clean_root,
            tier_index=1,
        )
        assert (outcome.files_attempted, outcome.files_revised) == (0, 0)
        assert (outcome.issues_before, outcome.issues_after) == (0, 0)
        assert tree_files(Path(outcome.output_root)) == ["ok.js"]

    def test_anchor_warnings_recorded(self, tmp_path, project_root):
        orchestrator, _, tiers = make_orchestrator(tmp_path, project_root)
        stale = FileIssueSet(
            "client/app.jsx",
            (make_issue(path="client/app.jsx", line=999, category=IssueCategory.BUG),),
        )
        outcome, _ = orchestrator.run_tier(
            SubPlan(label="bug", file_sets=(stale,), category=IssueCategory.BUG),
            tiers[0],
            project_root,
            tier_index=1,
        )
        assert [w.line for w in outcome.warnings] == [999]


def test_resolve_output_root_template():
    path = resolve_output_root("{root}.rev.{label}.{tier}", "/work/eis", "bug", 2)
    assert str(path) == "/work/eis.rev.bug.2"
    path = resolve_output_root(
        "{out}/{rootname}.rev.{label}.{tier}", "/work/eis", "bug", 1, out_dir="/tmp/out"
    )
    assert str(path) == "/tmp/out/eis.rev.bug.1"
