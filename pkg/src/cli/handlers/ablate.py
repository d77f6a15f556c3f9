"""Knowledge ablation across seeds."""

import argparse
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from src.cli.common import RunTracker, apply_overrides, show_progress
from src.cli.handlers.train import run_config_from_args
from src.cli.manifest import MANIFEST_FILE, RunManifest
from src.config import KNOWLEDGE_MODES
from src.database.repository import RunRepository
from src.evaluation.inspection import evidence_hit_rate
from src.evaluation.metrics import RARE_BUCKET, bucket_of
from src.evaluation.predict import predict
from src.evaluation.report import MetricReport, evaluate_batch, format_comparison, summarize_runs, write_report
from src.training.pipeline import prepare_data, train_run

logger = logging.getLogger(__name__)

SUMMARY_FILE = "ablation.json"
TABLE_FILE = "ablation.txt"
BASELINE_MODE = "none"
FULL_MODE = "desc+syn+hie"


class AblateHandler:
    """Handles ``ablate --config F --out DIR --seeds S [S ...] --modes M [M ...]``."""

    def __init__(self, repository: Optional[RunRepository] = None):
        self.repository = repository

    def run(self, args: argparse.Namespace) -> int:
        base = run_config_from_args(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        modes = args.modes or list(KNOWLEDGE_MODES)
        data = prepare_data(base)
        rare_codes = [
            code for code, freq in zip(data.kb.label_space, data.train_frequencies) if bucket_of(int(freq)) == RARE_BUCKET
        ]

        manifest = RunManifest(
            command="ablate",
            config=base.model_dump(mode="json"),
            corpus={name: str(base.corpus.split(name)) for name in ("train", "dev", "test")},
            kb=str(base.corpus.kb),
        )
        reports: Dict[str, List[MetricReport]] = {}
        hit_rates: Dict[str, List[float]] = {}
        for mode in modes:
            reports[mode], hit_rates[mode] = [], []
            for seed in args.seeds:
                config = apply_overrides(base, {"seed": seed}, knowledge=mode)
                run_dir = out_dir / mode / f"seed-{seed}"
                tracker = RunTracker(self.repository)
                tracker.start(
                    "ablate", config=config.model_dump(mode="json"), seed=seed, knowledge_mode=mode, output_dir=str(run_dir)
                )
                try:
                    artifacts = train_run(
                        config, run_dir, data=data, progress=show_progress(args.no_progress), on_epoch_end=tracker.epoch
                    )
                    test = data.encoded["test"]
                    predictions = predict(
                        artifacts.model, test, pad_id=data.tokenizer.pad_id, batch_size=config.training.eval_batch_size
                    )
                    report = evaluate_batch(
                        predictions.to_eval_batch(data.train_frequencies), threshold=config.training.threshold
                    )
                    report_path = write_report(report, run_dir / "test_report.json")
                    hits = evidence_hit_rate(
                        artifacts.model,
                        data.tokenizer,
                        data.documents["test"],
                        data.kb,
                        codes=rare_codes,
                        max_tokens=config.training.max_tokens,
                    )
                except Exception:
                    tracker.finish("failed")
                    raise
                tracker.finish("finished", summary={"micro_f1": report.micro_f1, "rare_evidence_hits": hits.rate})

                reports[mode].append(report)
                if hits.rate is not None:
                    hit_rates[mode].append(hits.rate)
                manifest.add_artifact(f"{mode}/seed-{seed}/checkpoint", artifacts.checkpoint)
                manifest.add_artifact(f"{mode}/seed-{seed}/report", report_path)
                logger.info(f"[{mode} seed={seed}] test micro-F1={report.micro_f1:.4f}")

        rows = {mode: summarize_runs(reports[mode]) for mode in modes}
        for mode in modes:
            values = hit_rates[mode]
            rows[mode]["evidence@1[rare]"] = float(np.median(values)) if values else None

        summary = {"seeds": list(args.seeds), "medians": rows}
        rare_key = f"F1[{RARE_BUCKET}]"
        if BASELINE_MODE in rows and FULL_MODE in rows:
            base_rare, full_rare = rows[BASELINE_MODE].get(rare_key), rows[FULL_MODE].get(rare_key)
            if base_rare is not None and full_rare is not None:
                summary["rare_bucket_gain"] = full_rare - base_rare
            summary["micro_f1_gain"] = rows[FULL_MODE]["micro_f1"] - rows[BASELINE_MODE]["micro_f1"]

        summary_path = out_dir / SUMMARY_FILE
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        table = format_comparison(rows)
        table_path = out_dir / TABLE_FILE
        table_path.write_text(table + "\n", encoding="utf-8")
        print(table)

        manifest.add_artifact("summary", summary_path)
        manifest.add_artifact("table", table_path)
        manifest.write(out_dir / MANIFEST_FILE)
        return 0
