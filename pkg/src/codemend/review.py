"""Human review loop: durable decision log, gating, and final-tree apply.

State is a plain directory per run: comparison documents, an append-only
JSON-lines decision log, and the original/revised trees referenced by
path.  Effective state is always a pure fold over the log, so recovery is
re-reading a text file.
"""

from __future__ import annotations

import enum
import hashlib
import json
import shutil
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .comparison import ComparisonReport, Decision
from .errors import ConflictError, DecisionValidationError, GateError, NotFoundError

REVIEW_ALL_DEFAULT = False


class Verdict(enum.Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"
    EDIT = "EDIT"


_VERDICT_TO_DECISION = {
    Verdict.ACCEPT: Decision.ACCEPTED,
    Verdict.REJECT: Decision.REJECTED,
    Verdict.EDIT: Decision.EDITED,
}


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True, slots=True)
class ReviewDecision:
    """One reviewer verdict for one file; EDIT carries the new content."""

    file_location: str
    verdict: Verdict
    edited_content: str | None = None
    note: str | None = None
    timestamp: str = ""

    def __post_init__(self) -> None:
        if self.verdict is Verdict.EDIT and self.edited_content is None:
            raise DecisionValidationError("EDIT decision requires edited_content")
        if self.verdict is not Verdict.EDIT and self.edited_content is not None:
            raise DecisionValidationError(f"{self.verdict.value} decision forbids edited_content")
        if not self.timestamp:
            object.__setattr__(self, "timestamp", _utc_now())

    def to_dict(self) -> dict:
        return {
            "type": "decision",
            "file_location": self.file_location,
            "verdict": self.verdict.value,
            "edited_content": self.edited_content,
            "note": self.note,
            "timestamp": self.timestamp,
        }


@dataclass(slots=True)
class RunState:
    """Effective review state of a run: a fold over the decision log."""

    run_id: str
    file_status: dict[str, str]  # path -> "PENDING" | verdict value
    flagged_files: list[str]
    applied: bool
    review_all: bool = REVIEW_ALL_DEFAULT

    @property
    def pending_required(self) -> list[str]:
        """Files whose decision still blocks apply."""
        if self.review_all:
            required = list(self.file_status)
        else:
            flagged = set(self.flagged_files)
            required = [p for p in self.file_status if p in flagged]
        return sorted(p for p in required if self.file_status[p] == "PENDING")

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "file_status": dict(sorted(self.file_status.items())),
            "flagged_files": sorted(self.flagged_files),
            "applied": self.applied,
            "review_all": self.review_all,
            "pending_required": self.pending_required,
        }


def _comparison_key(path: str) -> str:
    return hashlib.sha256(path.encode("utf-8")).hexdigest()[:16]


class ReviewStore:
    """Filesystem-backed store of runs, comparisons, and decisions."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    # ------------------------------------------------------------------
    # registration

    def register_run(
        self,
        run_id: str,
        project_root: str | Path,
        final_root: str | Path,
        comparisons: list[ComparisonReport],
        label: str = "",
        review_all: bool = REVIEW_ALL_DEFAULT,
        created_at: str | None = None,
    ) -> None:
        """Create or reset a run.  Re-registering wipes prior decisions:
        a fresh pipeline run supersedes stale review state."""
        with self._lock:
            run_dir = self.root / run_id
            if run_dir.exists():
                shutil.rmtree(run_dir)
            (run_dir / "comparisons").mkdir(parents=True)
            files = []
            for report in sorted(comparisons, key=lambda r: r.file_location):
                key = _comparison_key(report.file_location)
                (run_dir / "comparisons" / f"{key}.json").write_text(
                    report.to_json(), encoding="utf-8"
                )
                files.append(
                    {
                        "path": report.file_location,
                        "key": key,
                        "flag_count": len(report.flags),
                        "hunk_count": len(report.hunks),
                    }
                )
            meta = {
                "run_id": run_id,
                "label": label,
                "project_root": str(project_root),
                "final_root": str(final_root),
                "review_all": review_all,
                "created_at": created_at if created_at is not None else _utc_now(),
            }
            (run_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
            (run_dir / "files.json").write_text(json.dumps(files, indent=2) + "\n", encoding="utf-8")
            (run_dir / "decisions.log").touch()

    # ------------------------------------------------------------------
    # reads

    def _run_dir(self, run_id: str) -> Path:
        run_dir = self.root / run_id
        if not (run_dir / "meta.json").is_file():
            raise NotFoundError(f"unknown run {run_id!r}")
        return run_dir

    def _meta(self, run_id: str) -> dict:
        return json.loads((self._run_dir(run_id) / "meta.json").read_text("utf-8"))

    def _files(self, run_id: str) -> list[dict]:
        entries = json.loads((self._run_dir(run_id) / "files.json").read_text("utf-8"))
        return sorted(entries, key=lambda e: e["path"])

    def _log_events(self, run_id: str) -> list[dict]:
        text = (self._run_dir(run_id) / "decisions.log").read_text("utf-8")
        return [json.loads(line) for line in text.splitlines() if line.strip()]

    def list_runs(self) -> list[dict]:
        """Run summaries ordered by creation time, then id."""
        summaries = []
        for meta_path in self.root.glob("*/meta.json"):
            meta = json.loads(meta_path.read_text("utf-8"))
            state = self.run_state(meta["run_id"])
            files = self._files(meta["run_id"])
            summaries.append(
                {
                    "run_id": meta["run_id"],
                    "label": meta.get("label", ""),
                    "created_at": meta.get("created_at", ""),
                    "files_total": len(files),
                    "files_decided": sum(
                        1 for status in state.file_status.values() if status != "PENDING"
                    ),
                    "flagged_total": len(state.flagged_files),
                    "pending_required": state.pending_required,
                    "applied": state.applied,
                }
            )
        summaries.sort(key=lambda s: (s["created_at"], s["run_id"]))
        return summaries

    def list_files(self, run_id: str) -> list[dict]:
        state = self.run_state(run_id)
        entries = []
        for entry in self._files(run_id):
            entries.append(
                {
                    "path": entry["path"],
                    "flag_count": entry["flag_count"],
                    "hunk_count": entry["hunk_count"],
                    "status": state.file_status[entry["path"]],
                }
            )
        return entries

    def get_comparison(self, run_id: str, path: str) -> ComparisonReport:
        """The stored comparison with the effective decision folded in."""
        entry = self._entry_for(run_id, path)
        doc = json.loads(
            (self._run_dir(run_id) / "comparisons" / f"{entry['key']}.json").read_text("utf-8")
        )
        report = ComparisonReport.from_dict(doc)
        effective = self._effective_decisions(run_id).get(path)
        if effective is not None:
            report.decision = _VERDICT_TO_DECISION[Verdict(effective["verdict"])]
            report.edited_content = effective.get("edited_content")
        return report

    def _entry_for(self, run_id: str, path: str) -> dict:
        for entry in self._files(run_id):
            if entry["path"] == path:
                return entry
        raise NotFoundError(f"unknown file {path!r} in run {run_id!r}")

    def _effective_decisions(self, run_id: str) -> dict[str, dict]:
        effective: dict[str, dict] = {}
        for event in self._log_events(run_id):
            if event.get("type") == "decision":
                effective[event["file_location"]] = event
        return effective

    def run_state(self, run_id: str) -> RunState:
        meta = self._meta(run_id)
        files = self._files(run_id)
        effective = self._effective_decisions(run_id)
        applied = any(e.get("type") == "applied" for e in self._log_events(run_id))
        status = {
            entry["path"]: effective[entry["path"]]["verdict"]
            if entry["path"] in effective
            else "PENDING"
            for entry in files
        }
        return RunState(
            run_id=run_id,
            file_status=status,
            flagged_files=[e["path"] for e in files if e["flag_count"] > 0],
            applied=applied,
            review_all=meta.get("review_all", REVIEW_ALL_DEFAULT),
        )

    # ------------------------------------------------------------------
    # writes

    def _append_event(self, run_id: str, event: dict) -> None:
        log_path = self._run_dir(run_id) / "decisions.log"
        with log_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event) + "\n")

    def record_decision(self, run_id: str, decision: ReviewDecision) -> RunState:
        """Append the decision (later decisions supersede, all retained)."""
        with self._lock:
            state = self.run_state(run_id)
            if state.applied:
                raise ConflictError(f"run {run_id!r} is already applied")
            if decision.file_location not in state.file_status:
                raise NotFoundError(
                    f"unknown file {decision.file_location!r} in run {run_id!r}"
                )
            self._append_event(run_id, decision.to_dict())
            return self.run_state(run_id)

    def apply_run(self, run_id: str) -> Path:
        """Build the final tree; idempotent.

        Revised content for ACCEPT (and unflagged undecided files), the
        original for REJECT, the reviewer's content for EDIT; files never
        revised are already verbatim in the revised tree.
        """
        with self._lock:
            meta = self._meta(run_id)
            state = self.run_state(run_id)
            pending = state.pending_required
            if pending:
                raise GateError(
                    "undecided files still require review: " + ", ".join(pending),
                    undecided=pending,
                )
            final_root = Path(meta["final_root"])
            project_root = Path(meta["project_root"])
            target = Path(str(final_root) + ".final")
            if target.exists():
                shutil.rmtree(target)
            shutil.copytree(final_root, target)
            effective = self._effective_decisions(run_id)
            for path, event in effective.items():
                verdict = Verdict(event["verdict"])
                if verdict is Verdict.REJECT:
                    shutil.copyfile(project_root / path, target / path)
                elif verdict is Verdict.EDIT:
                    (target / path).write_text(event["edited_content"], encoding="utf-8")
            if not state.applied:
                self._append_event(
                    run_id,
                    {"type": "applied", "final_tree": str(target), "timestamp": _utc_now()},
                )
            return target
