"""Analyzer adapters: scan(directory) -> ScanReport.

The toy analyzer keeps the revise/re-scan loop testable without any
external tool: each rule is a literal substring matched per line, which
makes every fixture trivially auditable.  The report-loader adapter plugs
externally produced exports into the same contract.
"""

from __future__ import annotations

import posixpath
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .errors import ScanError
from .issues import Issue, IssueCategory, ScanReport, parse_report


@dataclass(frozen=True, slots=True)
class ToyRule:
    """Flag every line containing *needle*, literally (no regex)."""

    category: IssueCategory
    needle: str
    message: str

    def render_message(self, path: str, line: int) -> str:
        text = self.message
        for token, value in (("{path}", path), ("{line}", str(line)), ("{needle}", self.needle)):
            text = text.replace(token, value)
        return text


class Analyzer(Protocol):
    """Anything that can produce a ScanReport for a directory tree."""

    def scan(self, root: str | Path) -> ScanReport: ...


def _iter_files(root: Path) -> list[Path]:
    return sorted(p for p in root.rglob("*") if p.is_file())


def toy_scan(root: str | Path, rules: list[ToyRule] | tuple[ToyRule, ...]) -> ScanReport:
    """Scan *root* with literal-substring rules.

    Emits one issue per (line, rule) match, 1-based lines, ordered by
    (path, line, rule index).  Unreadable files abort the scan.
    """
    base = Path(root)
    if not base.is_dir():
        raise ScanError(f"scan root is not a directory: {base}")
    issues: list[Issue] = []
    for path in _iter_files(base):
        rel = path.relative_to(base).as_posix()
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ScanError(f"unreadable file {path}: {exc}") from None
        for line_num, line in enumerate(text.splitlines(), start=1):
            for rule in rules:
                if rule.needle in line:
                    issues.append(
                        Issue(
                            file_location=rel,
                            file_name=posixpath.basename(rel),
                            line=line_num,
                            message=rule.render_message(rel, line_num),
                            category=rule.category,
                        )
                    )
    return ScanReport(issues=tuple(issues), source_label="toy", scanned_root=str(base))


@dataclass(frozen=True, slots=True)
class ToyAnalyzer:
    """Analyzer adapter backed by toy_scan."""

    rules: tuple[ToyRule, ...]

    def scan(self, root: str | Path) -> ScanReport:
        return toy_scan(root, self.rules)


@dataclass(frozen=True, slots=True)
class ReportLoaderAnalyzer:
    """Adapter for externally produced re-scans.

    ``path_template`` locates the export for a given tree, e.g.
    ``"{dir}/issues.csv"`` or an absolute path shared by every tree.
    """

    path_template: str
    format: str = "delimited"

    def scan(self, root: str | Path) -> ScanReport:
        report_path = Path(self.path_template.replace("{dir}", str(root)))
        if not report_path.is_file():
            raise ScanError(f"no report found at {report_path}")
        report = parse_report(
            report_path.read_bytes(),
            format=self.format,
            source_label="export",
            scanned_root=str(root),
        )
        return report
