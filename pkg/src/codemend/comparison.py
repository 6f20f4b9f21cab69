"""Line-level comparison between an original file and its revision.

Lines are compared after stripping trailing whitespace only; the diff is a
true longest-common-subsequence alignment (Myers' greedy algorithm), so the
``matched`` count is the exact LCS length the precision/recall/F1 figures
are built on.  Changes that land outside every issue's line window are
flagged as suspect edits for the human review loop.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .issues import FileIssueSet
from .rational import fraction_str, parse_fraction

DEFAULT_FLAG_WINDOW = 5


def split_normalized(text: str) -> list[str]:
    """Split into lines with trailing whitespace stripped from each."""
    return [line.rstrip() for line in text.splitlines()]


def _myers_matches(a: list[str], b: list[str]) -> list[tuple[int, int]]:
    """Matched index pairs of an LCS alignment of *a* and *b*, ascending."""
    # Trim the common prefix/suffix first; revisions usually touch little.
    n, m = len(a), len(b)
    prefix = 0
    while prefix < n and prefix < m and a[prefix] == b[prefix]:
        prefix += 1
    suffix = 0
    while suffix < n - prefix and suffix < m - prefix and a[n - 1 - suffix] == b[m - 1 - suffix]:
        suffix += 1
    core_a = a[prefix : n - suffix]
    core_b = b[prefix : m - suffix]

    pairs = [(i, i) for i in range(prefix)]
    pairs.extend((i + prefix, j + prefix) for i, j in _myers_core(core_a, core_b))
    pairs.extend((n - suffix + i, m - suffix + i) for i in range(suffix))
    return pairs


def _myers_core(a: list[str], b: list[str]) -> list[tuple[int, int]]:
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return []
    # Forward O(ND) search keeping one V snapshot per step for backtracking.
    v: dict[int, int] = {1: 0}
    trace: list[dict[int, int]] = []
    found = False
    for d in range(n + m + 1):
        trace.append(dict(v))
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v.get(k - 1, 0) < v.get(k + 1, 0)):
                x = v.get(k + 1, 0)
            else:
                x = v.get(k - 1, 0) + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k] = x
            if x >= n and y >= m:
                found = True
                break
        if found:
            break

    matches: list[tuple[int, int]] = []
    x, y = n, m
    for d in range(len(trace) - 1, -1, -1):
        snapshot = trace[d]
        k = x - y
        if k == -d or (k != d and snapshot.get(k - 1, 0) < snapshot.get(k + 1, 0)):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = snapshot.get(prev_k, 0)
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            matches.append((x - 1, y - 1))
            x -= 1
            y -= 1
        if d > 0:
            x, y = prev_x, prev_y
    matches.reverse()
    return matches


class HunkKind(enum.Enum):
    INSERT = "INSERT"
    DELETE = "DELETE"
    REPLACE = "REPLACE"


@dataclass(frozen=True, slots=True)
class DiffHunk:
    """One contiguous change; ranges are 1-based inclusive.

    An empty range is encoded as (pos, pos - 1): the content sits between
    lines pos - 1 and pos of that side.
    """

    original_range: tuple[int, int]
    revised_range: tuple[int, int]
    kind: HunkKind

    @property
    def original_span(self) -> tuple[int, int]:
        """The lines this hunk occupies in the original; an insertion
        collapses onto its insertion point."""
        start, end = self.original_range
        if start > end:
            return (start, start)
        return (start, end)

    def to_dict(self) -> dict:
        return {
            "original_range": list(self.original_range),
            "revised_range": list(self.revised_range),
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiffHunk":
        return cls(
            original_range=tuple(data["original_range"]),
            revised_range=tuple(data["revised_range"]),
            kind=HunkKind(data["kind"]),
        )


def diff_lines(original: str, revised: str) -> list[DiffHunk]:
    """Hunks of an LCS alignment; equal after the concatenation property:
    unchanged regions plus hunks reconstruct both inputs."""
    a = split_normalized(original)
    b = split_normalized(revised)
    matches = _myers_matches(a, b)
    hunks: list[DiffHunk] = []
    next_a = next_b = 0
    for i, j in matches + [(len(a), len(b))]:
        gap_a = i - next_a
        gap_b = j - next_b
        if gap_a or gap_b:
            if gap_a and gap_b:
                kind = HunkKind.REPLACE
            elif gap_a:
                kind = HunkKind.DELETE
            else:
                kind = HunkKind.INSERT
            hunks.append(
                DiffHunk(
                    original_range=(next_a + 1, i),
                    revised_range=(next_b + 1, j),
                    kind=kind,
                )
            )
        next_a, next_b = i + 1, j + 1
    return hunks


@dataclass(frozen=True, slots=True)
class Metrics:
    """Line-level precision/recall/F1 of a revision against its original."""

    matched: int
    original_lines: int
    revised_lines: int
    precision: Fraction
    recall: Fraction
    f1: Fraction

    def to_dict(self) -> dict:
        return {
            "matched": self.matched,
            "original_lines": self.original_lines,
            "revised_lines": self.revised_lines,
            "precision": fraction_str(self.precision),
            "recall": fraction_str(self.recall),
            "f1": fraction_str(self.f1),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Metrics":
        return cls(
            matched=data["matched"],
            original_lines=data["original_lines"],
            revised_lines=data["revised_lines"],
            precision=parse_fraction(data["precision"]),
            recall=parse_fraction(data["recall"]),
            f1=parse_fraction(data["f1"]),
        )


def f1_from_precision_recall(precision: Fraction, recall: Fraction) -> Fraction:
    if precision + recall == 0:
        return Fraction(0)
    return 2 * precision * recall / (precision + recall)


def metrics(original: str, revised: str) -> Metrics:
    """Exact-rational metrics; matched is the true LCS length."""
    a = split_normalized(original)
    b = split_normalized(revised)
    matched = len(_myers_matches(a, b))
    if not a and not b:
        one = Fraction(1)
        return Metrics(0, 0, 0, one, one, one)
    precision = Fraction(matched, len(b)) if b else Fraction(0)
    recall = Fraction(matched, len(a)) if a else Fraction(0)
    return Metrics(matched, len(a), len(b), precision, recall, f1_from_precision_recall(precision, recall))


@dataclass(frozen=True, slots=True)
class HallucinationFlag:
    """A hunk that intersects no issue window [line - W, line + W].

    ``distance`` counts the lines between the hunk and the nearest window
    edge; both fields are None when the file has no issues at all.
    """

    hunk: DiffHunk
    nearest_issue_line: int | None
    distance: int | None

    def to_dict(self) -> dict:
        return {
            "hunk": self.hunk.to_dict(),
            "nearest_issue_line": self.nearest_issue_line,
            "distance": self.distance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HallucinationFlag":
        return cls(
            hunk=DiffHunk.from_dict(data["hunk"]),
            nearest_issue_line=data["nearest_issue_line"],
            distance=data["distance"],
        )


def _window_gap(span: tuple[int, int], line: int, window: int) -> int:
    start, end = span
    low, high = line - window, line + window
    if end < low:
        return low - end
    if start > high:
        return start - high
    return 0


def flag_hallucinations(
    hunks: list[DiffHunk], issues: FileIssueSet, window: int = DEFAULT_FLAG_WINDOW
) -> list[HallucinationFlag]:
    """Flag exactly the hunks outside every issue window."""
    if window < 0:
        raise ValueError(f"window must be >= 0, got {window}")
    flags: list[HallucinationFlag] = []
    issue_lines = [issue.line for issue in issues.issues]
    for hunk in hunks:
        span = hunk.original_span
        if not issue_lines:
            flags.append(HallucinationFlag(hunk=hunk, nearest_issue_line=None, distance=None))
            continue
        gaps = [(_window_gap(span, line, window), line) for line in issue_lines]
        distance, nearest = min(gaps)
        if distance > 0:
            flags.append(HallucinationFlag(hunk=hunk, nearest_issue_line=nearest, distance=distance))
    return flags


class Decision(enum.Enum):
    PENDING = "PENDING"
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"
    EDITED = "EDITED"


@dataclass(slots=True)
class ComparisonReport:
    """Everything a reviewer needs for one file: hunks, metrics, flags."""

    file_location: str
    hunks: list[DiffHunk]
    metrics: Metrics
    flags: list[HallucinationFlag]
    decision: Decision = Decision.PENDING
    edited_content: str | None = None
    original_text: str = ""
    revised_text: str = ""
    window: int = DEFAULT_FLAG_WINDOW
    issue_lines: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.decision is Decision.EDITED and self.edited_content is None:
            raise ValueError("EDITED decision requires edited content")

    def to_dict(self) -> dict:
        return {
            "file_location": self.file_location,
            "hunks": [h.to_dict() for h in self.hunks],
            "metrics": self.metrics.to_dict(),
            "flags": [f.to_dict() for f in self.flags],
            "decision": self.decision.value,
            "edited_content": self.edited_content,
            "original_text": self.original_text,
            "revised_text": self.revised_text,
            "window": self.window,
            "issue_lines": list(self.issue_lines),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ComparisonReport":
        return cls(
            file_location=data["file_location"],
            hunks=[DiffHunk.from_dict(h) for h in data["hunks"]],
            metrics=Metrics.from_dict(data["metrics"]),
            flags=[HallucinationFlag.from_dict(f) for f in data["flags"]],
            decision=Decision(data["decision"]),
            edited_content=data.get("edited_content"),
            original_text=data.get("original_text", ""),
            revised_text=data.get("revised_text", ""),
            window=data.get("window", DEFAULT_FLAG_WINDOW),
            issue_lines=list(data.get("issue_lines", [])),
        )


def build_comparison(
    original: str,
    revised: str,
    issues: FileIssueSet,
    window: int = DEFAULT_FLAG_WINDOW,
) -> ComparisonReport:
    """Aggregate diff, metrics, and flags into a PENDING report."""
    hunks = diff_lines(original, revised)
    return ComparisonReport(
        file_location=issues.file_location,
        hunks=hunks,
        metrics=metrics(original, revised),
        flags=flag_hallucinations(hunks, issues, window),
        original_text=original,
        revised_text=revised,
        window=window,
        issue_lines=[issue.line for issue in issues.issues],
    )
