"""Run-report rendering: summary table, CSV export, and bar-chart figures.

Consumes the persisted run-report JSON (real or synthetic), recomputes all
rates from the raw counts with exact arithmetic, and renders percentages
and dollars only at the edge.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .orchestrator import compute_success
from .rational import format_pct, format_usd, parse_fraction


def load_run_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text("utf-8"))


def _tier_cost(tier: dict) -> Fraction:
    if tier.get("cost_total") is not None:
        return parse_fraction(tier["cost_total"])
    return sum(
        (parse_fraction(r["cost"]) for r in tier.get("cost_records", [])), Fraction(0)
    )


def _leg_cost(leg: dict) -> Fraction:
    if leg.get("cost_total") is not None:
        return parse_fraction(leg["cost_total"])
    return sum((_tier_cost(t) for t in leg.get("tiers", [])), Fraction(0))


def _tier_by_name(leg: dict, name: str) -> dict | None:
    for tier in leg.get("tiers", []):
        if tier["tier"] == name:
            return tier
    return None


def tier_names(run: dict) -> list[str]:
    names = list(run.get("tier_names", []))
    if not names:
        seen: list[str] = []
        for leg in run.get("legs", []):
            for tier in leg.get("tiers", []):
                if tier["tier"] not in seen:
                    seen.append(tier["tier"])
        names = seen
    return names


def summary_grid(run: dict) -> tuple[list[str], list[str], dict[tuple[str, str], str]]:
    """Rows, leg labels, and cells of the summary table.

    The row set mirrors the classic revision-analysis table: total issues,
    per-tier resolved counts, per-tier and total success rates, average
    precision/recall/F1, and per-tier plus total cost.
    """
    legs = run.get("legs", [])
    labels = [leg["label"] for leg in legs]
    names = tier_names(run)

    rows: list[str] = ["Total issues"]
    rows += [f"Resolved by {name} only" for name in names]
    rows += ["Resolved (all tiers)", "Open after run"]
    rows += [f"{name} success rate" for name in names]
    rows += ["Total success rate", "Avg precision", "Avg recall", "Avg F1"]
    rows += [f"{name} cost (USD)" for name in names]
    rows += ["Total cost (USD)"]
    rows += [f"{name} avg cost per resolved issue" for name in names]

    cells: dict[tuple[str, str], str] = {}
    for leg in legs:
        label = leg["label"]
        initial = leg["issues_initial"]
        final = leg["issues_final"]
        cells[("Total issues", label)] = str(initial)
        cells[("Resolved (all tiers)", label)] = str(initial - final)
        cells[("Open after run", label)] = str(final)
        cells[("Total success rate", label)] = format_pct(compute_success(initial, final))

        metrics_avg = leg.get("metrics_avg") or {}
        for metric, row in (("precision", "Avg precision"), ("recall", "Avg recall"), ("f1", "Avg F1")):
            value = metrics_avg.get(metric)
            cells[(row, label)] = format_pct(parse_fraction(value)) if value is not None else "-"

        total_cost = _leg_cost(leg)
        cells[("Total cost (USD)", label)] = format_usd(total_cost)

        for name in names:
            tier = _tier_by_name(leg, name)
            if tier is None:
                for row in (
                    f"Resolved by {name} only",
                    f"{name} success rate",
                    f"{name} cost (USD)",
                    f"{name} avg cost per resolved issue",
                ):
                    cells[(row, label)] = "-"
                continue
            resolved = tier["issues_before"] - tier["issues_after"]
            cells[(f"Resolved by {name} only", label)] = str(resolved)
            cells[(f"{name} success rate", label)] = format_pct(
                compute_success(tier["issues_before"], tier["issues_after"])
            )
            cost = _tier_cost(tier)
            cells[(f"{name} cost (USD)", label)] = format_usd(cost)
            cells[(f"{name} avg cost per resolved issue", label)] = (
                format_usd(cost / resolved, places=3) if resolved > 0 else "-"
            )
    return rows, labels, cells


def render_table(run: dict) -> str:
    rows, labels, cells = summary_grid(run)
    header = ["Metric", *labels]
    grid = [header] + [[row, *(cells.get((row, label), "-") for label in labels)] for row in rows]
    widths = [max(len(line[col]) for line in grid) for col in range(len(header))]
    lines = []
    for i, line in enumerate(grid):
        lines.append(" | ".join(cell.ljust(widths[col]) for col, cell in enumerate(line)).rstrip())
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_csv(run: dict, path: str | Path) -> Path:
    rows, labels, cells = summary_grid(run)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["Metric", *labels])
        for row in rows:
            writer.writerow([row, *(cells.get((row, label), "-") for label in labels)])
    return path


def _rate_percent(before: int, after: int) -> float:
    rate = compute_success(before, after)
    return float(rate * 100) if rate is not None else 0.0


def _grouped_bars(ax, labels: list[str], series: dict[str, list[float]], ylabel: str, title: str):
    width = 0.8 / max(1, len(series))
    for offset, (name, values) in enumerate(series.items()):
        positions = [i + offset * width for i in range(len(labels))]
        bars = ax.bar(positions, values, width=width, label=name)
        ax.bar_label(bars, fmt="%.1f", fontsize=7)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(labels))])
    ax.set_xticklabels(labels, rotation=15, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)


def write_figures(run: dict, out_dir: str | Path) -> list[Path]:
    """Render the success-rate, cost, and accuracy bar charts as PNGs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    legs = run.get("legs", [])
    if not legs:
        return []
    labels = [leg["label"] for leg in legs]
    names = tier_names(run)
    written: list[Path] = []

    series = {}
    for name in names:
        values = []
        for leg in legs:
            tier = _tier_by_name(leg, name)
            values.append(
                _rate_percent(tier["issues_before"], tier["issues_after"]) if tier else 0.0
            )
        series[name] = values
    series["total"] = [_rate_percent(leg["issues_initial"], leg["issues_final"]) for leg in legs]
    fig, ax = plt.subplots(figsize=(7, 4))
    _grouped_bars(ax, labels, series, "Success rate (%)", "Success rates by leg")
    ax.set_ylim(0, 110)
    fig.tight_layout()
    path = out_dir / "success_rates.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    cost_series = {}
    for name in names:
        cost_series[name] = [
            float(_tier_cost(t)) if (t := _tier_by_name(leg, name)) else 0.0 for leg in legs
        ]
    cost_series["total"] = [float(_leg_cost(leg)) for leg in legs]
    fig, ax = plt.subplots(figsize=(7, 4))
    _grouped_bars(ax, labels, cost_series, "Cost (USD)", "Revision costs by leg")
    fig.tight_layout()
    path = out_dir / "costs.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    metric_series: dict[str, list[float]] = {"precision": [], "recall": [], "f1": []}
    has_metrics = False
    for leg in legs:
        metrics_avg = leg.get("metrics_avg") or {}
        for metric in metric_series:
            value = metrics_avg.get(metric)
            if value is not None:
                has_metrics = True
                metric_series[metric].append(float(parse_fraction(value) * 100))
            else:
                metric_series[metric].append(0.0)
    if has_metrics:
        fig, ax = plt.subplots(figsize=(7, 4))
        _grouped_bars(ax, labels, metric_series, "Score (%)", "Average revision accuracy by leg")
        ax.set_ylim(0, 110)
        fig.tight_layout()
        path = out_dir / "metrics.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
