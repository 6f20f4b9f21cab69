"""Issue report data model, parsing, and per-file grouping.

The canonical exchange format is a delimited (CSV) report with the header
``File_Location,File_Name,Line,Message,Type[,Suggested_Solution]``; a
structured JSON array with the same field names lowercased is accepted as
well.  Paths are normalized to forward slashes so that Windows-style
exports group correctly.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import posixpath
from dataclasses import dataclass, replace

from .errors import ReportParseError

REPORT_COLUMNS = ("File_Location", "File_Name", "Line", "Message", "Type", "Suggested_Solution")
_REQUIRED_COLUMNS = REPORT_COLUMNS[:5]


class IssueCategory(enum.Enum):
    """The three issue categories emitted by the analyzer."""

    BUG = "BUG"
    VULNERABILITY = "VULNERABILITY"
    CODE_SMELL = "CODE_SMELL"

    @classmethod
    def parse(cls, value: str) -> "IssueCategory":
        try:
            return cls(value.strip().upper())
        except ValueError:
            raise ReportParseError(f"unknown category {value!r}") from None


def normalize_location(raw: str) -> str:
    """Normalize a report path: forward slashes, no '.' segments, relative.

    Raises ReportParseError for absolute paths, drive prefixes, or paths
    escaping the project root; comparisons stay case-sensitive.
    """
    text = raw.strip().replace("\\", "/")
    if not text:
        raise ReportParseError("empty file location")
    if text.startswith("/") or (len(text) > 1 and text[1] == ":"):
        raise ReportParseError(f"file location must be relative: {raw!r}")
    norm = posixpath.normpath(text)
    if norm == ".." or norm.startswith("../") or norm == ".":
        raise ReportParseError(f"file location escapes the project root: {raw!r}")
    return norm


@dataclass(frozen=True, slots=True)
class Issue:
    """One detected problem at a specific line of a project file."""

    file_location: str
    file_name: str
    line: int
    message: str
    category: IssueCategory
    suggested_solution: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "file_location", normalize_location(self.file_location))
        if self.line < 1:
            raise ReportParseError(f"line must be >= 1, got {self.line}")
        if not self.message.strip():
            raise ReportParseError("message must be non-empty")
        leaf = posixpath.basename(self.file_location)
        if self.file_name != leaf:
            raise ReportParseError(
                f"file_name {self.file_name!r} does not match location leaf {leaf!r}"
            )

    def to_dict(self) -> dict:
        return {
            "file_location": self.file_location,
            "file_name": self.file_name,
            "line": self.line,
            "message": self.message,
            "type": self.category.value,
            "suggested_solution": self.suggested_solution,
        }


@dataclass(frozen=True, slots=True)
class ScanReport:
    """An ordered collection of issues from one analyzer run or export."""

    issues: tuple[Issue, ...]
    source_label: str = ""
    scanned_root: str = ""

    def __len__(self) -> int:
        return len(self.issues)

    def count_by_category(self) -> dict[IssueCategory, int]:
        counts = {category: 0 for category in IssueCategory}
        for issue in self.issues:
            counts[issue.category] += 1
        return counts

    def filtered(self, category: IssueCategory) -> "ScanReport":
        """A copy keeping only *category* issues, order preserved."""
        kept = tuple(i for i in self.issues if i.category is category)
        return replace(self, issues=kept)


@dataclass(frozen=True, slots=True)
class FileIssueSet:
    """All issues of one file, sorted ascending by line (stable on ties)."""

    file_location: str
    issues: tuple[Issue, ...]

    def __post_init__(self) -> None:
        for issue in self.issues:
            if issue.file_location != self.file_location:
                raise ReportParseError(
                    f"issue for {issue.file_location!r} placed in set for {self.file_location!r}"
                )
        ordered = tuple(sorted(self.issues, key=lambda i: i.line))
        object.__setattr__(self, "issues", ordered)

    def categories(self) -> tuple[IssueCategory, ...]:
        seen: list[IssueCategory] = []
        for category in IssueCategory:
            if any(i.category is category for i in self.issues):
                seen.append(category)
        return tuple(seen)


def _issue_from_fields(
    location: str, name: str, line_text: str, message: str, type_text: str, suggestion: str
) -> Issue:
    try:
        line = int(line_text.strip())
    except ValueError:
        raise ReportParseError(f"line is not an integer: {line_text!r}") from None
    location = normalize_location(location)
    leaf = posixpath.basename(location)
    # The location is authoritative; exports sometimes rename the File_Name
    # column (e.g. a "Revised." prefix) while the path stays canonical.
    return Issue(
        file_location=location,
        file_name=leaf,
        line=line,
        message=message,
        category=IssueCategory.parse(type_text),
        suggested_solution=suggestion,
    )


def _parse_delimited(text: str, source_label: str, scanned_root: str) -> ScanReport:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ReportParseError("report has no header row") from None
    lookup = {cell.strip().lower(): idx for idx, cell in enumerate(header)}
    missing = [c for c in _REQUIRED_COLUMNS if c.lower() not in lookup]
    if missing:
        raise ReportParseError(f"missing required columns: {', '.join(missing)}")
    width = len(header)
    indices = [lookup[c.lower()] for c in _REQUIRED_COLUMNS]
    suggestion_idx = lookup.get("suggested_solution")

    issues: list[Issue] = []
    for row_num, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != width:
            raise ReportParseError(
                f"row {row_num}: expected {width} columns, got {len(row)}"
            )
        try:
            issues.append(
                _issue_from_fields(
                    row[indices[0]],
                    row[indices[1]],
                    row[indices[2]],
                    row[indices[3]],
                    row[indices[4]],
                    row[suggestion_idx] if suggestion_idx is not None else "",
                )
            )
        except ReportParseError as exc:
            raise ReportParseError(f"row {row_num}: {exc}") from None
    return ScanReport(issues=tuple(issues), source_label=source_label, scanned_root=scanned_root)


def _parse_structured(text: str, source_label: str, scanned_root: str) -> ScanReport:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportParseError(f"invalid JSON report: {exc}") from None
    if not isinstance(payload, list):
        raise ReportParseError("structured report must be a JSON array of issue objects")
    issues: list[Issue] = []
    for row_num, entry in enumerate(payload, start=1):
        if not isinstance(entry, dict):
            raise ReportParseError(f"row {row_num}: expected an object")
        try:
            missing = [k for k in ("file_location", "file_name", "line", "message", "type") if k not in entry]
            if missing:
                raise ReportParseError(f"missing fields: {', '.join(missing)}")
            issues.append(
                _issue_from_fields(
                    str(entry["file_location"]),
                    str(entry["file_name"]),
                    str(entry["line"]),
                    str(entry["message"]),
                    str(entry["type"]),
                    str(entry.get("suggested_solution", "") or ""),
                )
            )
        except ReportParseError as exc:
            raise ReportParseError(f"row {row_num}: {exc}") from None
    return ScanReport(issues=tuple(issues), source_label=source_label, scanned_root=scanned_root)


def parse_report(
    data: bytes | str,
    format: str = "delimited",
    source_label: str = "",
    scanned_root: str = "",
) -> ScanReport:
    """Parse a report in ``delimited`` (CSV) or ``structured`` (JSON) format.

    Unknown extra columns are ignored; row order is preserved; malformed
    rows raise ReportParseError naming the 1-based data row.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ReportParseError(f"report is not valid UTF-8: {exc}") from None
    else:
        text = data
    if format == "delimited":
        return _parse_delimited(text, source_label, scanned_root)
    if format == "structured":
        return _parse_structured(text, source_label, scanned_root)
    raise ReportParseError(f"unknown report format {format!r}")


def serialize_report(report: ScanReport, format: str = "delimited") -> str:
    """Serialize back to the exchange format; inverse of parse_report."""
    if format == "structured":
        return json.dumps([i.to_dict() for i in report.issues], indent=2) + "\n"
    if format != "delimited":
        raise ReportParseError(f"unknown report format {format!r}")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for issue in report.issues:
        writer.writerow(
            [
                issue.file_location,
                issue.file_name,
                issue.line,
                issue.message,
                issue.category.value,
                issue.suggested_solution,
            ]
        )
    return out.getvalue()


def group_by_file(report: ScanReport) -> list[FileIssueSet]:
    """Partition a report into per-file sets, keyed by normalized location.

    Sets come out in first-appearance order; issues within a set are sorted
    by line with input order preserved on ties.
    """
    buckets: dict[str, list[Issue]] = {}
    for issue in report.issues:
        buckets.setdefault(issue.file_location, []).append(issue)
    return [FileIssueSet(file_location=loc, issues=tuple(items)) for loc, items in buckets.items()]
