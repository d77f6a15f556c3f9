"""Metrics, reports, inference and attention inspection."""

from src.evaluation.inspection import (
    EvidenceHits,
    Inspection,
    evidence_hit_rate,
    inspect_document,
    render_inspection,
    top_attended,
)
from src.evaluation.metrics import (
    FREQUENCY_BUCKETS,
    RARE_BUCKET,
    EvalBatch,
    MetricError,
    auc_scores,
    bucket_of,
    f1_scores,
    frequency_bucketed_f1,
    mean_average_precision,
    precision_at_k,
)
from src.evaluation.predict import Predictions, load_score_file, predict
from src.evaluation.report import (
    MetricReport,
    evaluate_batch,
    format_comparison,
    format_report,
    summarize_runs,
    write_report,
)

__all__ = [
    "EvidenceHits",
    "Inspection",
    "evidence_hit_rate",
    "inspect_document",
    "render_inspection",
    "top_attended",
    "FREQUENCY_BUCKETS",
    "RARE_BUCKET",
    "EvalBatch",
    "MetricError",
    "auc_scores",
    "bucket_of",
    "f1_scores",
    "frequency_bucketed_f1",
    "mean_average_precision",
    "precision_at_k",
    "Predictions",
    "load_score_file",
    "predict",
    "MetricReport",
    "evaluate_batch",
    "format_comparison",
    "format_report",
    "summarize_runs",
    "write_report",
]
