"""Evaluation metrics against brute-force oracles, and metric reports."""

import json

import numpy as np
import pytest

from src.evaluation.metrics import (
    EvalBatch,
    MetricError,
    auc_scores,
    bucket_of,
    f1_scores,
    frequency_bucketed_f1,
    mean_average_precision,
    precision_at_k,
)
from src.evaluation.report import (
    evaluate_batch,
    format_comparison,
    format_report,
    summarize_runs,
    write_report,
)


def _f1_oracle(scores, labels, threshold=0.5):
    m, c = scores.shape
    per_code = []
    tp_all = fp_all = fn_all = 0
    for j in range(c):
        tp = fp = fn = 0
        for i in range(m):
            predicted = scores[i, j] >= threshold
            if predicted and labels[i, j]:
                tp += 1
            elif predicted:
                fp += 1
            elif labels[i, j]:
                fn += 1
        denominator = 2 * tp + fp + fn
        per_code.append(2 * tp / denominator if denominator else 0.0)
        tp_all, fp_all, fn_all = tp_all + tp, fp_all + fp, fn_all + fn
    denominator = 2 * tp_all + fp_all + fn_all
    return float(np.mean(per_code)), (2 * tp_all / denominator if denominator else 0.0)


def _pairwise_auc(scores, labels):
    positives = [s for s, y in zip(scores, labels) if y]
    negatives = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in positives for n in negatives)
    return wins / (len(positives) * len(negatives))


def _p_at_k_oracle(scores, labels, k):
    values = []
    for row_scores, row_labels in zip(scores, labels):
        order = sorted(range(len(row_scores)), key=lambda j: (-row_scores[j], j))
        values.append(sum(row_labels[j] for j in order[:k]) / k)
    return float(np.mean(values))


class TestPrecisionAtK:
    def test_perfect_ranking(self):
        labels = np.array([[1, 1, 0, 0], [0, 1, 1, 0]])
        scores = labels * 0.5 + 0.25
        assert precision_at_k(scores, labels, 2) == 1.0

    def test_no_positives(self):
        assert precision_at_k(np.random.default_rng(0).uniform(size=(3, 4)), np.zeros((3, 4)), 2) == 0.0

    def test_hand_built_instance(self):
        scores = np.array([[0.9, 0.2, 0.9, 0.1], [0.3, 0.8, 0.5, 0.6]])
        labels = np.array([[0, 1, 1, 0], [1, 0, 0, 1]])
        for k in range(1, 5):
            assert precision_at_k(scores, labels, k) == pytest.approx(_p_at_k_oracle(scores, labels, k))
        # tie between codes 0 and 2 resolves to code 0
        assert precision_at_k(scores[:1], labels[:1], 1) == 0.0

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(42)
        scores, labels = rng.uniform(size=(10, 12)), rng.integers(0, 2, size=(10, 12))
        assert precision_at_k(scores ** 3, labels, 5) == precision_at_k(scores, labels, 5)

    def test_k_above_label_space(self):
        with pytest.raises(MetricError):
            precision_at_k(np.zeros((1, 3)), np.zeros((1, 3)), 4)


class TestF1:
    def test_exact_predictions(self):
        labels = np.array([[1, 0, 1], [0, 1, 1]])
        assert f1_scores(labels.astype(float), labels) == (1.0, 1.0)

    def test_all_negative_predictions(self):
        labels = np.array([[1, 0], [0, 1]])
        assert f1_scores(np.zeros((2, 2)), labels)[1] == 0.0

    def test_matches_confusion_counts(self):
        rng = np.random.default_rng(42)
        scores = rng.uniform(size=(20, 30))
        labels = (rng.uniform(size=(20, 30)) < 0.2).astype(int)
        macro, micro = f1_scores(scores, labels)
        expected_macro, expected_micro = _f1_oracle(scores, labels)
        assert abs(macro - expected_macro) < 1e-9
        assert abs(micro - expected_micro) < 1e-9

    def test_micro_invariant_to_code_permutation(self):
        rng = np.random.default_rng(7)
        scores, labels = rng.uniform(size=(8, 6)), rng.integers(0, 2, size=(8, 6))
        perm = rng.permutation(6)
        assert f1_scores(scores[:, perm], labels[:, perm])[1] == pytest.approx(f1_scores(scores, labels)[1])


class TestAuc:
    def test_perfect_separation(self):
        labels = np.array([[1, 0], [0, 1], [1, 1], [0, 0]])
        assert auc_scores(labels.astype(float), labels) == (1.0, 1.0)

    def test_constant_scores(self):
        labels = np.array([[1, 0], [0, 1], [1, 0]])
        macro, micro = auc_scores(np.full((3, 2), 0.3), labels)
        assert macro == 0.5 and micro == 0.5

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(42)
        scores = rng.integers(0, 5, size=(15, 10)) / 4
        labels = rng.integers(0, 2, size=(15, 10))
        labels[:, 0] = 0
        valid = [j for j in range(10) if 0 < labels[:, j].sum() < 15]
        expected_macro = np.mean([_pairwise_auc(scores[:, j], labels[:, j]) for j in valid])
        expected_micro = _pairwise_auc(scores.ravel(), labels.ravel())
        macro, micro = auc_scores(scores, labels)
        assert abs(macro - expected_macro) < 1e-9
        assert abs(micro - expected_micro) < 1e-9

    def test_complement(self):
        rng = np.random.default_rng(3)
        scores, labels = rng.uniform(size=(12, 4)), rng.integers(0, 2, size=(12, 4))
        labels[0], labels[1] = 1, 0
        macro, micro = auc_scores(scores, labels)
        flipped_macro, flipped_micro = auc_scores(1 - scores, labels)
        assert flipped_macro == pytest.approx(1 - macro)
        assert flipped_micro == pytest.approx(1 - micro)

    def test_undefined(self):
        assert auc_scores(np.full((2, 2), 0.5), np.ones((2, 2))) == (None, None)


class TestMeanAveragePrecision:
    def test_perfect_ranking(self):
        labels = np.array([[1, 0, 1], [0, 1, 0]])
        assert mean_average_precision(labels * 0.8 + 0.1, labels) == 1.0

    def test_hand_computed(self):
        scores = np.array([[0.9, 0.5, 0.1]])
        labels = np.array([[1, 0, 1]])
        assert mean_average_precision(scores, labels) == pytest.approx(5 / 6)

    def test_documents_without_positives_excluded(self):
        scores = np.array([[0.9, 0.5, 0.1], [0.3, 0.2, 0.1]])
        labels = np.array([[1, 0, 1], [0, 0, 0]])
        assert mean_average_precision(scores, labels) == pytest.approx(5 / 6)


class TestFrequencyBuckets:
    @pytest.mark.parametrize(
        "frequency, bucket",
        [(0, None), (1, "1-10"), (10, "1-10"), (11, "11-50"), (50, "11-50"), (51, "51-100"), (101, "101-500"), (500, "101-500"), (501, ">500")],
    )
    def test_boundaries(self, frequency, bucket):
        assert bucket_of(frequency) == bucket

    def test_single_bucket_equals_global_micro(self):
        rng = np.random.default_rng(42)
        scores, labels = rng.uniform(size=(10, 5)), rng.integers(0, 2, size=(10, 5))
        result = frequency_bucketed_f1(scores, labels, np.full(5, 20))
        assert result["11-50"] == pytest.approx(f1_scores(scores, labels)[1])
        assert result["1-10"] is None and result[">500"] is None

    def test_slices(self):
        rng = np.random.default_rng(5)
        scores, labels = rng.uniform(size=(12, 6)), rng.integers(0, 2, size=(12, 6))
        frequencies = np.array([3, 700, 40, 3, 0, 40])
        result = frequency_bucketed_f1(scores, labels, frequencies)
        for bucket, columns in (("1-10", [0, 3]), (">500", [1]), ("11-50", [2, 5])):
            assert result[bucket] == pytest.approx(_f1_oracle(scores[:, columns], labels[:, columns])[1])
        assert result["51-100"] is None


class TestEvalBatch:
    def test_shape_mismatch(self):
        with pytest.raises(MetricError):
            EvalBatch(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_scores_out_of_range(self):
        with pytest.raises(MetricError):
            EvalBatch(np.full((1, 2), 1.5), np.zeros((1, 2)))

    def test_frequency_length(self):
        with pytest.raises(MetricError):
            EvalBatch(np.zeros((1, 2)), np.zeros((1, 2)), np.zeros(3))


class TestReport:
    @pytest.fixture
    def batch(self):
        rng = np.random.default_rng(42)
        labels = rng.integers(0, 2, size=(6, 5))
        labels[0] = 1
        labels[1] = 0
        return EvalBatch(rng.uniform(size=(6, 5)), labels, np.array([1, 12, 60, 200, 900]))

    def test_ks_above_label_space_reported_absent(self, batch):
        report = evaluate_batch(batch)
        assert report.precision_at_k["P@8"] is None
        assert report.precision_at_k["P@15"] is None
        assert report.precision_at_k["P@5"] == pytest.approx(precision_at_k(batch.scores, batch.labels, 5))

    def test_fields(self, batch):
        report = evaluate_batch(batch, ks=(1, 3))
        assert report.num_documents == 6 and report.num_codes == 5
        assert set(report.precision_at_k) == {"P@1", "P@3"}
        assert report.bucket_sizes == {">500": 1, "101-500": 1, "51-100": 1, "11-50": 1, "1-10": 1}
        assert report.map_definition == "instance-wise"

    def test_json_is_stable(self, batch, tmp_path):
        path = write_report(evaluate_batch(batch), tmp_path / "report.json")
        text = path.read_text(encoding="utf-8")
        assert text == evaluate_batch(batch).to_json()
        assert list(json.loads(text)) == sorted(json.loads(text))

    def test_text_rendering(self, batch):
        text = format_report(evaluate_batch(batch))
        assert "F1 micro" in text
        assert "P@8" in text and "-" in text
        assert "1-10" in text

    def test_empty_split(self):
        report = evaluate_batch(EvalBatch(np.zeros((0, 3)), np.zeros((0, 3))))
        assert report.micro_f1 == 0.0 and report.map == 0.0
        assert report.macro_auc is None

    def test_summarize_runs_takes_medians(self, batch):
        reports = [evaluate_batch(batch, ks=(1,)) for _ in range(3)]
        reports[0].micro_f1, reports[1].micro_f1, reports[2].micro_f1 = 0.1, 0.9, 0.4
        summary = summarize_runs(reports)
        assert summary["micro_f1"] == pytest.approx(0.4)
        assert "P@1" in summary and "F1[1-10]" in summary

    def test_comparison_table(self):
        table = format_comparison({"none": {"micro_f1": 0.5, "macro_auc": None}, "desc": {"micro_f1": 0.6, "macro_auc": 0.9}})
        lines = table.splitlines()
        assert len(lines) == 3
        assert lines[0].split() == ["micro_f1", "macro_auc"]
        assert lines[1].split() == ["none", "0.5000", "-"]
        assert format_comparison({}) == ""
