"""Evaluation reports: the full metric battery as JSON and aligned text."""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from src.evaluation.metrics import (
    FREQUENCY_BUCKETS,
    EvalBatch,
    auc_scores,
    bucket_of,
    f1_scores,
    frequency_bucketed_f1,
    mean_average_precision,
    precision_at_k,
)

logger = logging.getLogger(__name__)

DEFAULT_KS = (5, 8, 15)
MAP_DEFINITION = "instance-wise"


@dataclass
class MetricReport:
    """Every metric of one evaluation run."""

    num_documents: int
    num_codes: int
    threshold: float
    macro_auc: Optional[float]
    micro_auc: Optional[float]
    macro_f1: float
    micro_f1: float
    map: float
    precision_at_k: Dict[str, Optional[float]] = field(default_factory=dict)
    bucket_f1: Dict[str, Optional[float]] = field(default_factory=dict)
    bucket_sizes: Dict[str, int] = field(default_factory=dict)
    map_definition: str = MAP_DEFINITION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def evaluate_batch(batch: EvalBatch, ks: Sequence[int] = DEFAULT_KS, threshold: float = 0.5) -> MetricReport:
    """Compute the whole metric battery for one split."""
    scores, labels = batch.scores, batch.labels
    num_docs, num_codes = scores.shape
    if num_docs == 0:
        logger.warning("Evaluating an empty split; every metric is reported as zero or absent")

    macro_f1, micro_f1 = f1_scores(scores, labels, threshold) if num_docs else (0.0, 0.0)
    macro_auc, micro_auc = auc_scores(scores, labels)

    p_at_k: Dict[str, Optional[float]] = {}
    for k in ks:
        if k > num_codes:
            logger.warning(f"Skipping P@{k}: only {num_codes} codes")
            p_at_k[f"P@{k}"] = None
        else:
            p_at_k[f"P@{k}"] = precision_at_k(scores, labels, k)

    bucket_f1: Dict[str, Optional[float]] = {}
    bucket_sizes: Dict[str, int] = {}
    if batch.train_code_frequencies is not None and num_docs:
        bucket_f1 = frequency_bucketed_f1(scores, labels, batch.train_code_frequencies, threshold)
        names = [bucket_of(int(f)) for f in batch.train_code_frequencies]
        bucket_sizes = {name: names.count(name) for name, _, _ in FREQUENCY_BUCKETS}

    return MetricReport(
        num_documents=num_docs,
        num_codes=num_codes,
        threshold=threshold,
        macro_auc=macro_auc,
        micro_auc=micro_auc,
        macro_f1=macro_f1,
        micro_f1=micro_f1,
        map=mean_average_precision(scores, labels) if num_docs else 0.0,
        precision_at_k=p_at_k,
        bucket_f1=bucket_f1,
        bucket_sizes=bucket_sizes,
    )


def write_report(report: MetricReport, path: Path) -> Path:
    """Write the JSON report (stable key order)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json(), encoding="utf-8")
    return path


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4f}"


def format_report(report: MetricReport) -> str:
    """Aligned text rendering of a report."""
    lines = [
        f"Documents: {report.num_documents}   Codes: {report.num_codes}   Threshold: {report.threshold}",
        "",
        f"{'AUC macro':<12}{_fmt(report.macro_auc):>10}",
        f"{'AUC micro':<12}{_fmt(report.micro_auc):>10}",
        f"{'F1 macro':<12}{_fmt(report.macro_f1):>10}",
        f"{'F1 micro':<12}{_fmt(report.micro_f1):>10}",
        f"{'MAP':<12}{_fmt(report.map):>10}   ({report.map_definition})",
    ]
    for name, value in report.precision_at_k.items():
        lines.append(f"{name:<12}{_fmt(value):>10}")
    if report.bucket_f1:
        lines += ["", f"{'Frequency':<12}{'Codes':>8}{'Micro-F1':>10}"]
        for name, value in report.bucket_f1.items():
            lines.append(f"{name:<12}{report.bucket_sizes.get(name, 0):>8}{_fmt(value):>10}")
    return "\n".join(lines)


def summarize_runs(reports: Sequence[MetricReport]) -> Dict[str, Optional[float]]:
    """Median of each headline metric across runs (e.g. seeds); absent values are ignored."""
    columns: Dict[str, list] = {}
    for report in reports:
        flat = {
            "macro_auc": report.macro_auc,
            "micro_auc": report.micro_auc,
            "macro_f1": report.macro_f1,
            "micro_f1": report.micro_f1,
            "map": report.map,
            **report.precision_at_k,
            **{f"F1[{name}]": value for name, value in report.bucket_f1.items()},
        }
        for name, value in flat.items():
            columns.setdefault(name, [])
            if value is not None:
                columns[name].append(value)
    return {name: (float(np.median(values)) if values else None) for name, values in columns.items()}


def format_comparison(rows: Mapping[str, Mapping[str, Optional[float]]]) -> str:
    """Aligned table with one row per configuration and one column per metric."""
    if not rows:
        return ""
    metrics = list(next(iter(rows.values())).keys())
    width = max(14, *(len(name) + 2 for name in rows))
    header = f"{'':<{width}}" + "".join(f"{m:>12}" for m in metrics)
    body = [f"{name:<{width}}" + "".join(f"{_fmt(values.get(m)):>12}" for m in metrics) for name, values in rows.items()]
    return "\n".join([header, *body])
