"""Deterministic prompt assembly for file revisions.

A prompt carries, in fixed order: the language declaration, the task list,
one worked example per issue category present, the per-issue blocks, the
retrieved-solutions block (or its sentinel), the closing output contract,
and finally the complete original file.  Fixing the order lets golden
tests pin prompts byte for byte.
"""

from __future__ import annotations

import json
import posixpath
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import PromptError
from .issues import FileIssueSet, IssueCategory
from .rag import RetrievedContext, assemble_context

DEFAULT_LANGUAGE_TAG = "code"
DEFAULT_CONTEXT_BUDGET = 4000

EXTENSION_TAGS = {
    ".c": "c",
    ".cc": "cpp",
    ".cpp": "cpp",
    ".cs": "csharp",
    ".css": "css",
    ".go": "go",
    ".h": "c",
    ".hpp": "cpp",
    ".html": "html",
    ".java": "java",
    ".js": "javascript",
    ".json": "json",
    ".jsx": "jsx",
    ".kt": "kotlin",
    ".md": "markdown",
    ".mjs": "javascript",
    ".php": "php",
    ".py": "python",
    ".rb": "ruby",
    ".rs": "rust",
    ".sh": "shell",
    ".sql": "sql",
    ".ts": "typescript",
    ".tsx": "tsx",
    ".xml": "xml",
    ".yaml": "yaml",
    ".yml": "yaml",
}

_FILENAME_TAGS = {"dockerfile": "dockerfile", "makefile": "makefile"}


def language_for_path(path: str) -> str:
    """Infer the language tag from the file extension; unknown -> "code"."""
    leaf = posixpath.basename(path.replace("\\", "/"))
    if leaf.lower() in _FILENAME_TAGS:
        return _FILENAME_TAGS[leaf.lower()]
    _, ext = posixpath.splitext(leaf)
    return EXTENSION_TAGS.get(ext.lower(), DEFAULT_LANGUAGE_TAG)


@dataclass(frozen=True, slots=True)
class FixExample:
    """One worked fix: what was wrong, why, and the before/after snippets."""

    category: IssueCategory
    language: str
    description: str
    rationale: str
    before: str
    after: str


class ExampleBank:
    """Worked examples keyed by (category, language tag).

    Every category must have an entry for the default tag so lookups can
    always fall back.
    """

    def __init__(self, examples: list[FixExample]):
        self._entries: dict[tuple[IssueCategory, str], FixExample] = {}
        for example in examples:
            self._entries[(example.category, example.language)] = example
        missing = [
            c.value for c in IssueCategory if (c, DEFAULT_LANGUAGE_TAG) not in self._entries
        ]
        if missing:
            raise PromptError(
                f"example bank lacks default-language entries for: {', '.join(missing)}"
            )

    def lookup(self, category: IssueCategory, language: str) -> FixExample:
        entry = self._entries.get((category, language))
        if entry is None:
            entry = self._entries[(category, DEFAULT_LANGUAGE_TAG)]
        return entry


def load_example_bank(path: str | Path | None = None) -> ExampleBank:
    """Load a bank from its JSON file; None loads the shipped default."""
    if path is None:
        text = resources.files("codemend.data").joinpath("example_bank.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    try:
        payload = json.loads(text)
        examples = [
            FixExample(
                category=IssueCategory(entry["category"]),
                language=entry.get("language", DEFAULT_LANGUAGE_TAG),
                description=entry["description"],
                rationale=entry["rationale"],
                before=entry["before"],
                after=entry["after"],
            )
            for entry in payload["examples"]
        ]
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise PromptError(f"invalid example bank: {exc}") from None
    return ExampleBank(examples)


def select_examples(
    categories: set[IssueCategory], language: str, bank: ExampleBank
) -> list[FixExample]:
    """One example per category present, preferring the file's language tag
    and falling back to the default tag."""
    return [bank.lookup(c, language) for c in IssueCategory if c in categories]


@dataclass(frozen=True, slots=True)
class PromptMetadata:
    file_location: str
    issue_count: int
    categories: tuple[str, ...]
    context_included: bool


@dataclass(frozen=True, slots=True)
class Prompt:
    system_text: str
    user_text: str
    metadata: PromptMetadata


@dataclass(frozen=True, slots=True)
class PromptSize:
    chars: int
    tokens: int


SYSTEM_TEXT = (
    "You are a senior software engineer acting as an automated code-repair service. "
    "You fix issues reported by a static analyzer and always return the complete "
    "corrected file, nothing else."
)

TASKS_TEXT = (
    "Tasks:\n"
    "1. Locate each reported issue in the file below.\n"
    "2. Correct every reported issue.\n"
    "3. Preserve the file's structure, naming, and formatting everywhere else.\n"
    "4. Follow the worked examples and any retrieved solutions when shaping each fix."
)

FINAL_TEXT = (
    "Final instructions:\n"
    "- If similar issues are present on other lines, fix those as well.\n"
    "- Return the complete corrected file in its original format, without additional comments.\n"
    "- Reply with the file content only."
)

ORIGINAL_FILE_MARKER = "Original file ("


def _render_example(ordinal: int, example: FixExample) -> str:
    return (
        f"Example {ordinal} ({example.category.value}, {example.language}):\n"
        f"Issue: {example.description}\n"
        f"Why: {example.rationale}\n"
        f"Before:\n{example.before}\n"
        f"After:\n{example.after}"
    )


def _render_issue_block(ordinal: int, issue) -> str:
    block = (
        f"Issue {ordinal}: A {issue.category.value} issue was detected on line {issue.line}. "
        f"Description: {issue.message}"
    )
    if issue.suggested_solution:
        block += f"\nSuggested solution: {issue.suggested_solution}"
    return block


def build_prompt(
    file_content: str,
    issue_set: FileIssueSet,
    context: RetrievedContext,
    bank: ExampleBank,
    language: str | None = None,
    context_budget: int = DEFAULT_CONTEXT_BUDGET,
) -> Prompt:
    """Assemble the engineered prompt for one file.

    The issue set must be non-empty; the whole file rides along so a single
    request returns a complete corrected file.
    """
    if not issue_set.issues:
        raise PromptError(f"nothing to revise in {issue_set.file_location}")
    tag = language if language is not None else language_for_path(issue_set.file_location)

    categories = set(issue_set.categories())
    examples = select_examples(categories, tag, bank)
    examples_text = "Worked examples:\n\n" + "\n\n".join(
        _render_example(i, ex) for i, ex in enumerate(examples, start=1)
    )
    issues_text = "Reported issues:\n\n" + "\n\n".join(
        _render_issue_block(i, issue) for i, issue in enumerate(issue_set.issues, start=1)
    )
    context_text = "Retrieved solutions:\n\n" + assemble_context(context, context_budget)
    sections = [
        f"The file `{issue_set.file_location}` below is written in {tag}.",
        TASKS_TEXT,
        examples_text,
        issues_text,
        context_text,
        FINAL_TEXT,
        f"{ORIGINAL_FILE_MARKER}{issue_set.file_location}):\n```\n{file_content}\n```",
    ]
    metadata = PromptMetadata(
        file_location=issue_set.file_location,
        issue_count=len(issue_set.issues),
        categories=tuple(c.value for c in IssueCategory if c in categories),
        context_included=not context.empty_marker,
    )
    return Prompt(system_text=SYSTEM_TEXT, user_text="\n\n".join(sections), metadata=metadata)


def original_file_from_prompt(user_text: str) -> str:
    """Recover the embedded original file; the inverse of the final prompt
    section.  Scripted mock providers rely on this."""
    marker = user_text.rindex(ORIGINAL_FILE_MARKER)
    fence_open = user_text.index("```\n", marker) + 4
    fence_close = user_text.rindex("\n```")
    return user_text[fence_open:fence_close]


def estimate_size(prompt: Prompt) -> PromptSize:
    """Exact character count; tokens approximated as ceil(chars / 4)."""
    chars = len(prompt.system_text) + len(prompt.user_text)
    return PromptSize(chars=chars, tokens=-(-chars // 4))
