"""Seed a review store with a small, self-contained run.

Used for UI development and the browser client's integration tests: two
flagged files, three clean ones, nothing applied yet.
"""

from __future__ import annotations

from pathlib import Path

from .comparison import build_comparison
from .issues import FileIssueSet, Issue, IssueCategory
from .review import ReviewStore

DEMO_RUN_ID = "demo-run.bug"


def _issue(path: str, line: int, message: str, category: IssueCategory) -> Issue:
    return Issue(
        file_location=path,
        file_name=path.rsplit("/", 1)[-1],
        line=line,
        message=message,
        category=category,
    )


def _numbered_file(lines: int, marker_line: int, marker: str) -> str:
    rows = [f"const value{n} = {n};" for n in range(1, lines + 1)]
    rows[marker_line - 1] = marker
    return "\n".join(rows) + "\n"


def build_demo_store(base_dir: str | Path) -> tuple[Path, str]:
    """Create trees plus a registered run under *base_dir*; returns the
    store path and the run id."""
    base = Path(base_dir)
    original_root = base / "original"
    revised_root = base / "revised"
    store = ReviewStore(base / "review")

    files: dict[str, tuple[str, str, list[Issue]]] = {}

    # Clean fixes: the only change sits on the issue line.
    for idx in range(1, 4):
        path = f"src/clean{idx}.js"
        original = _numbered_file(12, 6, f"let broken{idx} = null.length;")
        revised = _numbered_file(12, 6, f"let broken{idx} = 0;")
        files[path] = (
            original,
            revised,
            [_issue(path, 6, "Null value is dereferenced.", IssueCategory.BUG)],
        )

    # Flagged: an extra edit lands far away from the only issue.
    path = "src/flagged1.js"
    original = _numbered_file(80, 4, "let total = items.length2;")
    revised_lines = _numbered_file(80, 4, "let total = items.length;").splitlines()
    revised_lines[59] = "// unexpected rewrite far from the issue"
    files[path] = (
        original,
        "\n".join(revised_lines) + "\n",
        [_issue(path, 4, "Property access typo crashes at runtime.", IssueCategory.BUG)],
    )

    path = "src/flagged2.js"
    original = _numbered_file(60, 50, "eval(userInput);")
    revised_lines = _numbered_file(60, 50, "run_sandboxed(userInput);").splitlines()
    revised_lines[4] = "let speculative = 'edit nobody asked for';"
    files[path] = (
        original,
        "\n".join(revised_lines) + "\n",
        [_issue(path, 50, "Dynamic code execution from user input.", IssueCategory.VULNERABILITY)],
    )

    comparisons = []
    for file_path, (original, revised, issues) in sorted(files.items()):
        source = original_root / file_path
        source.parent.mkdir(parents=True, exist_ok=True)
        source.write_text(original, encoding="utf-8")
        target = revised_root / file_path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(revised, encoding="utf-8")
        issue_set = FileIssueSet(file_location=file_path, issues=tuple(issues))
        comparisons.append(build_comparison(original, revised, issue_set, window=5))

    store.register_run(
        run_id=DEMO_RUN_ID,
        project_root=original_root,
        final_root=revised_root,
        comparisons=comparisons,
        label="bug",
    )
    return store.root, DEMO_RUN_ID
