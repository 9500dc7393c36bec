"""Ranking metrics, evaluation campaigns, and report emission.

A trial records the rank the engine gave the gold next character. MRR@k
averages reciprocal ranks (zero outside the top k); Recall@k is the
fraction of trials ranked within k. Campaigns evaluate instance sets,
optionally under seeded noise with per-trial derived generators, slice
results by position-in-word and context length, and can be differenced
into noisy-minus-clean delta reports.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .backends import BackendTransportError
from .noise import NoiseSpec, corrupt_with_rng, derived_rng
from .text import PredictionInstance
from .vocab import TokenizeError

__all__ = [
    "DEFAULT_KS",
    "TrialResult",
    "SliceMetrics",
    "MetricsReport",
    "DeltaReport",
    "CampaignError",
    "mrr_at_k",
    "recall_at_k",
    "run_campaign",
    "delta_report",
    "emit_report",
    "emit_delta",
]

DEFAULT_KS = (3, 5, 10)
TOP_K_RECORDED = 10

# Above this failed-trial fraction a campaign's numbers are meaningless.
FAILURE_ABORT_FRACTION = 0.01


@dataclass(frozen=True)
class TrialResult:
    instance: PredictionInstance
    rank: int
    top_k_chars: tuple[str, ...] = ()


class CampaignError(RuntimeError):
    """Raised when too many trials fail for the report to be trusted."""


def mrr_at_k(results: Sequence[TrialResult], k: int) -> float:
    """Mean reciprocal rank, zero when the target falls outside the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not results:
        raise ValueError("no trial results")
    return sum(1.0 / r.rank if r.rank <= k else 0.0 for r in results) / len(results)


def recall_at_k(results: Sequence[TrialResult], k: int) -> float:
    """Fraction of trials whose target ranked within the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not results:
        raise ValueError("no trial results")
    return sum(1 for r in results if r.rank <= k) / len(results)


@dataclass(frozen=True)
class SliceMetrics:
    trials: int
    mrr: dict[int, float]
    recall: dict[int, float]


@dataclass(frozen=True)
class MetricsReport:
    ks: tuple[int, ...]
    mrr: dict[int, float]
    recall: dict[int, float]
    by_position: dict[int, SliceMetrics]
    by_context: dict[int, SliceMetrics]
    trial_count: int
    failed_count: int = 0


@dataclass(frozen=True)
class DeltaReport:
    """Fieldwise noisy-minus-clean differences; negative means degradation."""

    ks: tuple[int, ...]
    mrr: dict[int, float]
    recall: dict[int, float]
    by_position: dict[int, SliceMetrics] = field(default_factory=dict)
    by_context: dict[int, SliceMetrics] = field(default_factory=dict)


def _aggregate(per_repeat: list[list[TrialResult]], ks) -> tuple[dict, dict, int]:
    reps = [r for r in per_repeat if r]
    if not reps:
        raise CampaignError("no successful trials")
    mrr = {k: sum(mrr_at_k(r, k) for r in reps) / len(reps) for k in ks}
    recall = {k: sum(recall_at_k(r, k) for r in reps) / len(reps) for k in ks}
    return mrr, recall, sum(len(r) for r in reps)


def _slices(per_repeat: list[list[TrialResult]], key_fn, ks) -> dict[int, SliceMetrics]:
    keys = sorted({key_fn(t.instance) for rep in per_repeat for t in rep})
    out = {}
    for key in keys:
        groups = [[t for t in rep if key_fn(t.instance) == key] for rep in per_repeat]
        mrr, recall, trials = _aggregate(groups, ks)
        out[key] = SliceMetrics(trials, mrr, recall)
    return out


def run_campaign(
    engine,
    instances: Sequence[PredictionInstance],
    noise: NoiseSpec | None = None,
    repeats: int = 1,
    ks: tuple[int, ...] = DEFAULT_KS,
) -> MetricsReport:
    """Evaluate every instance ``repeats`` times and average the metrics.

    With a noise spec, each (instance, repeat) pair corrupts the history
    under its own generator derived from the noise seed, so results do not
    depend on evaluation order. Trials that fail operationally (backend
    outage, untokenizable corrupted history) are excluded and counted; a
    failure fraction above 1% aborts the campaign.
    """
    if not instances:
        raise ValueError("no instances to evaluate")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    alphabet = engine.alphabet
    per_repeat: list[list[TrialResult]] = []
    failed = 0
    for rep in range(repeats):
        results: list[TrialResult] = []
        for idx, inst in enumerate(instances):
            history = inst.history
            if noise is not None and noise.rate > 0:
                rng = derived_rng(noise.seed, idx, rep)
                history = corrupt_with_rng(history, noise.rate, rng, alphabet)
            try:
                dist = engine.distribution(history)
            except (BackendTransportError, TokenizeError) as exc:
                failed += 1
                warnings.warn(f"trial {idx} repeat {rep} failed: {exc}")
                continue
            ranking = dist.ranking()
            rank = next(
                i for i, (c, _) in enumerate(ranking, start=1) if c == inst.target
            )
            top = tuple(c for c, _ in ranking[:TOP_K_RECORDED])
            results.append(TrialResult(inst, rank, top))
        per_repeat.append(results)

    total = len(instances) * repeats
    if failed > FAILURE_ABORT_FRACTION * total:
        raise CampaignError(
            f"{failed} of {total} trials failed, above the"
            f" {FAILURE_ABORT_FRACTION:.0%} abort threshold"
        )
    mrr, recall, trial_count = _aggregate(per_repeat, ks)
    return MetricsReport(
        ks=tuple(ks),
        mrr=mrr,
        recall=recall,
        by_position=_slices(per_repeat, lambda i: i.position_in_word, ks),
        by_context=_slices(per_repeat, lambda i: i.context_words, ks),
        trial_count=trial_count,
        failed_count=failed,
    )


def delta_report(clean: MetricsReport, noisy: MetricsReport) -> DeltaReport:
    """Noisy minus clean, fieldwise; degradation shows up as negative values."""
    if clean.ks != noisy.ks:
        raise ValueError("reports use different k sets")
    ks = clean.ks

    def diff_slices(a: dict[int, SliceMetrics], b: dict[int, SliceMetrics]):
        out = {}
        for key in sorted(set(a) & set(b)):
            out[key] = SliceMetrics(
                trials=min(a[key].trials, b[key].trials),
                mrr={k: b[key].mrr[k] - a[key].mrr[k] for k in ks},
                recall={k: b[key].recall[k] - a[key].recall[k] for k in ks},
            )
        return out

    return DeltaReport(
        ks=ks,
        mrr={k: noisy.mrr[k] - clean.mrr[k] for k in ks},
        recall={k: noisy.recall[k] - clean.recall[k] for k in ks},
        by_position=diff_slices(clean.by_position, noisy.by_position),
        by_context=diff_slices(clean.by_context, noisy.by_context),
    )


def _metric_columns(ks, prefix: str = "") -> list[str]:
    cols = []
    for k in sorted(ks, reverse=True):
        cols += [f"{prefix}MRR@{k}", f"{prefix}Recall@{k}"]
    return cols


def _metric_values(mrr: dict, recall: dict, ks) -> list[float]:
    vals = []
    for k in sorted(ks, reverse=True):
        vals += [mrr[k], recall[k]]
    return vals


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _pretty_table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [
        [f"{v:.4f}" if isinstance(v, float) else str(v) for v in row] for row in rows
    ]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = []
    for r, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def emit_report(
    report: MetricsReport,
    out_dir: str | Path,
    name: str = "report",
    formats: tuple[str, ...] = ("csv", "table"),
) -> dict[str, Path]:
    """Write summary, per-position, and per-context files; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ks = report.ks
    paths: dict[str, Path] = {}

    summary_header = _metric_columns(ks) + ["trials"]
    summary_row = _metric_values(report.mrr, report.recall, ks) + [report.trial_count]
    slice_specs = [
        ("by_position", "position", report.by_position),
        ("by_context", "context_words", report.by_context),
    ]
    if "csv" in formats:
        paths["summary"] = out_dir / f"{name}_summary.csv"
        _write_csv(paths["summary"], summary_header, [summary_row])
        for label, key_col, slices in slice_specs:
            rows = [
                [key, s.trials] + _metric_values(s.mrr, s.recall, ks)
                for key, s in sorted(slices.items())
            ]
            paths[label] = out_dir / f"{name}_{label}.csv"
            _write_csv(
                paths[label], [key_col, "trials"] + _metric_columns(ks), rows
            )
    if "table" in formats:
        text = _pretty_table(summary_header, [summary_row])
        for label, key_col, slices in slice_specs:
            rows = [
                [key, s.trials] + _metric_values(s.mrr, s.recall, ks)
                for key, s in sorted(slices.items())
            ]
            text += "\n" + _pretty_table([key_col, "trials"] + _metric_columns(ks), rows)
        paths["table"] = out_dir / f"{name}_table.txt"
        paths["table"].write_text(text, encoding="utf-8")
    return paths


def emit_delta(
    delta: DeltaReport, out_dir: str | Path, name: str = "report"
) -> dict[str, Path]:
    """Write the delta summary CSV (noisy minus clean)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ks = delta.ks
    path = Path(out_dir) / f"{name}_delta.csv"
    _write_csv(
        path,
        _metric_columns(ks, prefix="Δ"),
        [_metric_values(delta.mrr, delta.recall, ks)],
    )
    return {"delta": path}
