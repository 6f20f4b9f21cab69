"""Command-line entry point: ingest, plan, revise, compare, report, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .comparison import build_comparison
from .config import (
    RunConfig,
    build_analyzer,
    build_gateway,
    build_retrieval_cache,
    build_sources,
    build_stopwords,
    build_tiers,
    load_config_file,
    merge_config,
    validate_config,
)
from .errors import CodemendError
from .issues import FileIssueSet, IssueCategory, group_by_file, parse_report
from .orchestrator import Orchestrator
from .planning import plan
from .prompting import load_example_bank
from .rag import make_retriever
from .rational import format_pct
from .reporting import load_run_report, render_table, write_csv, write_figures
from .review import ReviewStore
from .server import make_server


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codemend",
        description="Revise analyzer-reported code issues with tiered model providers, "
        "measure every change, and gate suspect edits behind human review.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse and validate an issue report")
    p_ingest.add_argument("--report", required=True, help="path to the issue report")
    p_ingest.add_argument("--format", default="delimited", choices=["delimited", "structured"])
    p_ingest.set_defaults(func=_cmd_ingest)

    p_plan = sub.add_parser("plan", help="emit the revision plan as JSON")
    p_plan.add_argument("--config", help="run config JSON file")
    p_plan.add_argument("--report", help="issue report (overrides config)")
    p_plan.add_argument("--strategy", choices=["divided", "comprehensive"])
    p_plan.add_argument("--out", help="write the plan here instead of stdout")
    p_plan.set_defaults(func=_cmd_plan)

    p_revise = sub.add_parser("revise", help="run the full revision pipeline")
    _add_run_flags(p_revise)
    p_revise.set_defaults(func=_cmd_revise)

    p_compare = sub.add_parser("compare", help="compare two trees file by file")
    p_compare.add_argument("--original", required=True, help="original tree")
    p_compare.add_argument("--revised", required=True, help="revised tree")
    p_compare.add_argument("--report", help="issue report used for flag windows")
    p_compare.add_argument("--format", default="delimited", choices=["delimited", "structured"])
    p_compare.add_argument("--window", type=int, default=5)
    p_compare.add_argument("--out", help="write per-file comparison JSON documents here")
    p_compare.set_defaults(func=_cmd_compare)

    p_report = sub.add_parser("report", help="render a run report: table, CSV, figures")
    p_report.add_argument("--run", required=True, help="run-report JSON file")
    p_report.add_argument("--out", help="output directory (default: next to the run file)")
    p_report.add_argument("--no-figures", action="store_true", help="skip chart rendering")
    p_report.set_defaults(func=_cmd_report)

    p_serve = sub.add_parser("serve", help="serve the review API and UI")
    p_serve.add_argument("--store", required=True, help="review store directory")
    p_serve.add_argument("--serve-addr", default="127.0.0.1:8765", help="host:port to bind")
    p_serve.add_argument("--ui", help="static UI directory (default: ./frontend/dist if present)")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run config JSON file")
    p.add_argument("--report", help="issue report path")
    p.add_argument("--root", help="project root directory")
    p.add_argument("--strategy", choices=["divided", "comprehensive"])
    rag = p.add_mutually_exclusive_group()
    rag.add_argument("--rag", dest="rag", action="store_true", default=None)
    rag.add_argument("--no-rag", dest="rag", action="store_false", default=None)
    p.add_argument("--k", type=int, help="retrieved solutions per prompt")
    p.add_argument("--window", type=int, help="hallucination flag window in lines")
    p.add_argument("--providers", dest="profile", help="provider profile name from the config")
    p.add_argument("--out", help="output directory for mirrored trees and reports")
    p.add_argument("--store", help="review store directory")
    p.add_argument("--workers", type=int, help="concurrent file revisions per tier")
    p.add_argument("--review-all", dest="review_all", action="store_true", default=None)


def _config_from_args(args: argparse.Namespace, require_run_inputs: bool = True) -> RunConfig:
    base = load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "report",
            "root",
            "strategy",
            "rag",
            "k",
            "window",
            "profile",
            "out",
            "store",
            "workers",
            "review_all",
        )
    }
    return validate_config(merge_config(base, overrides), require_run_inputs=require_run_inputs)


# ----------------------------------------------------------------------
# subcommands


def _cmd_ingest(args: argparse.Namespace) -> int:
    path = Path(args.report)
    report = parse_report(path.read_bytes(), format=args.format, source_label=path.name)
    counts = report.count_by_category()
    print(f"parsed {len(report)} issues from {path}")
    for category in IssueCategory:
        print(f"  {category.value}: {counts[category]}")
    print(f"  files: {len(group_by_file(report))}")
    return 0


def _cmd_plan(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    report_path = Path(config.report)
    report = parse_report(
        report_path.read_bytes(), format=config.report_format, source_label=report_path.name
    )
    revision_plan = plan(
        report, config.strategy_enum(), build_tiers(config), output_root_template=config.template
    )
    payload = revision_plan.to_json()
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
        print(f"plan written to {args.out}")
    else:
        print(payload, end="")
    return 0


def _cmd_revise(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    report_path = Path(config.report)
    report = parse_report(
        report_path.read_bytes(), format=config.report_format, source_label=report_path.name
    )
    sources = build_sources(config)
    retriever = (
        make_retriever(sources, cache=build_retrieval_cache(config))
        if config.rag and sources
        else None
    )
    store = ReviewStore(config.store_dir)
    orchestrator = Orchestrator(
        project_root=config.root,
        analyzer=build_analyzer(config),
        gateway=build_gateway(config),
        bank=load_example_bank(config.example_bank),
        retriever=retriever,
        rag_enabled=config.rag,
        k=config.k,
        window=config.window,
        workers=config.workers,
        context_budget=config.context_budget,
        output_root_template=config.template,
        out_dir=config.out_dir,
        retry_policy=config.retry_policy(),
        stopwords=build_stopwords(config),
        store=store,
        review_all=config.review_all,
    )
    run_report = orchestrator.run_pipeline(report, config.strategy_enum(), build_tiers(config))
    print(render_table(run_report.to_dict()), end="")
    for leg in run_report.legs:
        stats = leg.success_stats()
        print(
            f"leg {leg.label}: {leg.issues_initial} -> {leg.issues_final} open issues "
            f"(cumulative success {format_pct(stats.cumulative)})"
        )
    print(f"run report: {orchestrator.report_path(run_report.run_id)}")
    print(f"review store: {run_report.store_dir or store.root}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    original_root = Path(args.original)
    revised_root = Path(args.revised)
    if not original_root.is_dir() or not revised_root.is_dir():
        raise CodemendError("both --original and --revised must be directories")

    issues_by_file: dict[str, FileIssueSet] = {}
    if args.report:
        report = parse_report(Path(args.report).read_bytes(), format=args.format)
        issues_by_file = {fs.file_location: fs for fs in group_by_file(report)}

    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for path in sorted(p for p in original_root.rglob("*") if p.is_file()):
        rel = path.relative_to(original_root).as_posix()
        counterpart = revised_root / rel
        if not counterpart.is_file():
            rows.append((rel, "missing in revised tree", "", "", "", ""))
            continue
        issue_set = issues_by_file.get(rel, FileIssueSet(file_location=rel, issues=()))
        comparison = build_comparison(
            path.read_text(encoding="utf-8"),
            counterpart.read_text(encoding="utf-8"),
            issue_set,
            window=args.window,
        )
        rows.append(
            (
                rel,
                str(len(comparison.hunks)),
                format_pct(comparison.metrics.precision),
                format_pct(comparison.metrics.recall),
                format_pct(comparison.metrics.f1),
                str(len(comparison.flags)) if args.report else "-",
            )
        )
        if out_dir:
            (out_dir / f"{rel.replace('/', '__')}.json").write_text(
                comparison.to_json(), encoding="utf-8"
            )
    header = ("file", "hunks", "precision", "recall", "f1", "flags")
    widths = [max(len(str(row[i])) for row in [header, *rows]) for i in range(len(header))]
    for row in [header, *rows]:
        print(" | ".join(str(cell).ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    run_path = Path(args.run)
    run = load_run_report(run_path)
    print(render_table(run), end="")
    out_dir = Path(args.out) if args.out else run_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_csv(run, out_dir / "report.csv")
    written = [csv_path]
    if not args.no_figures:
        written.extend(write_figures(run, out_dir))
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    host, _, port_text = args.serve_addr.partition(":")
    try:
        port = int(port_text) if port_text else 8765
    except ValueError:
        raise CodemendError(f"invalid --serve-addr {args.serve_addr!r}") from None
    ui_dir = Path(args.ui) if args.ui else None
    if ui_dir is None:
        default_ui = Path("frontend") / "dist"
        ui_dir = default_ui if default_ui.is_dir() else None
    store = ReviewStore(args.store)
    server = make_server(store, host=host or "127.0.0.1", port=port, ui_dir=ui_dir)
    bound_host, bound_port = server.server_address[:2]
    # Flushed immediately so wrappers watching a pipe see the bound port.
    print(
        f"review service listening on http://{bound_host}:{bound_port} (no authentication)",
        flush=True,
    )
    if ui_dir:
        print(f"serving UI from {ui_dir}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (CodemendError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
