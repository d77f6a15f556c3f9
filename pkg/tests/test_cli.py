"""Command-line surface, driven through ``main``."""

import json

import pytest

from src.cli.manifest import load_manifest
from src.config import get_settings
from src.main import EXIT_FAILURE, EXIT_INVALID, main


def _train(run_config_file, out, *extra):
    return main(["train", "--config", str(run_config_file), "--out", str(out), "--no-progress", *extra])


@pytest.fixture
def trained(run_config_file, tmp_path):
    out = tmp_path / "run"
    assert _train(run_config_file, out) == 0
    return out


class TestGenerate:
    def test_writes_corpus_and_manifest(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"num_codes": 12, "num_train": 30, "num_dev": 5, "num_test": 5, "vocab_size": 40}))
        out = tmp_path / "synth"
        assert main(["generate", "--spec", str(spec), "--out", str(out)]) == 0
        for name in ("kb.txt", "train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json"):
            assert (out / name).is_file()
        manifest = load_manifest(out / "manifest.json")
        assert manifest.command == "generate"
        assert manifest.seed == 7
        assert set(manifest.artifacts) == {"kb", "train", "dev", "test"}
        assert manifest.finished_at is not None

    def test_invalid_spec(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"zipf_exponent": -1.0}))
        assert main(["generate", "--spec", str(spec), "--out", str(tmp_path / "x")]) == EXIT_INVALID
        assert not (tmp_path / "x").exists()

    def test_malformed_spec(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text("{not json")
        assert main(["generate", "--spec", str(spec), "--out", str(tmp_path / "x")]) == EXIT_INVALID


class TestTrain:
    def test_artifacts(self, trained):
        for name in ("config.json", "model.pt", "losses.jsonl", "dev_report.json", "manifest.json"):
            assert (trained / name).is_file()
        manifest = load_manifest(trained / "manifest.json")
        assert manifest.knowledge_mode == "desc+syn+hie"
        assert manifest.checkpoint == str(trained / "model.pt")
        assert len((trained / "losses.jsonl").read_text().splitlines()) == 4

    def test_same_seed_same_report_bytes(self, run_config_file, tmp_path):
        assert _train(run_config_file, tmp_path / "a") == 0
        assert _train(run_config_file, tmp_path / "b") == 0
        assert (tmp_path / "a" / "dev_report.json").read_bytes() == (tmp_path / "b" / "dev_report.json").read_bytes()

    def test_seed_precedence(self, run_config_file, tmp_path, monkeypatch):
        monkeypatch.setenv("GKI_SEED", "17")
        get_settings.cache_clear()
        assert _train(run_config_file, tmp_path / "env", "--epochs", "1") == 0
        assert json.loads((tmp_path / "env" / "config.json").read_text())["training"]["seed"] == 17
        assert _train(run_config_file, tmp_path / "flag", "--epochs", "1", "--seed", "5") == 0
        assert json.loads((tmp_path / "flag" / "config.json").read_text())["training"]["seed"] == 5

    def test_overrides_echoed(self, run_config_file, tmp_path):
        out = tmp_path / "baseline"
        assert _train(run_config_file, out, "--epochs", "1", "--knowledge", "none", "--lambda-sim", "0.5", "--top-k", "3") == 0
        config = json.loads((out / "config.json").read_text())
        assert config["training"]["knowledge_injection"] is False
        assert config["training"]["lambda_sim"] == 0.5
        assert config["training"]["epochs"] == 1
        assert config["top_k_codes"] == 3
        assert load_manifest(out / "manifest.json").knowledge_mode == "none"

    def test_missing_config(self, tmp_path):
        assert _train(tmp_path / "absent.json", tmp_path / "out") == EXIT_FAILURE

    def test_invalid_config(self, tmp_path, run_config_file):
        config = json.loads(run_config_file.read_text())
        config["training"]["lambda_sim"] = -1
        run_config_file.write_text(json.dumps(config))
        assert _train(run_config_file, tmp_path / "out") == EXIT_INVALID


class TestEvaluate:
    def test_checkpoint_report(self, trained, tmp_path, capsys):
        report = tmp_path / "test_report.json"
        code = main(["evaluate", "--checkpoint", str(trained / "model.pt"), "--split", "test", "--report", str(report)])
        assert code == 0
        data = json.loads(report.read_text())
        assert data["num_documents"] == 2 and data["num_codes"] == 5
        assert data["precision_at_k"]["P@5"] is not None
        assert data["precision_at_k"]["P@8"] is None
        assert (tmp_path / "test_report.manifest.json").is_file()
        assert "F1 micro" in capsys.readouterr().out

    def test_missing_checkpoint(self, tmp_path):
        code = main(["evaluate", "--checkpoint", str(tmp_path / "nope.pt"), "--report", str(tmp_path / "r.json")])
        assert code == EXIT_FAILURE

    def test_label_space_mismatch(self, trained, tmp_path):
        kb = tmp_path / "small_kb.txt"
        kb.write_text("401.9 | unspecified essential hypertension\n", encoding="utf-8")
        corpus = tmp_path / "small.jsonl"
        corpus.write_text(json.dumps({"id": "a", "text": "hypertension", "codes": ["401.9"]}) + "\n", encoding="utf-8")
        code = main([
            "evaluate", "--checkpoint", str(trained / "model.pt"), "--report", str(tmp_path / "r.json"),
            "--kb", str(kb), "--corpus", str(corpus),
        ])
        assert code == EXIT_FAILURE

    def test_perfect_score_file(self, corpus_dir, tmp_path):
        scores = tmp_path / "scores.jsonl"
        scores.write_text(
            "\n".join(
                [
                    json.dumps({"id": "s1", "scores": {"250.00": 1.0, "038.9": 1.0}}),
                    json.dumps({"id": "s2", "scores": {"V58.61": 1.0}}),
                ]
            )
            + "\n"
        )
        report = tmp_path / "perfect.json"
        code = main([
            "evaluate", "--scores", str(scores), "--kb", str(corpus_dir / "kb.txt"),
            "--corpus", str(corpus_dir / "test.jsonl"), "--train-corpus", str(corpus_dir / "train.jsonl"),
            "--report", str(report),
        ])
        assert code == 0
        data = json.loads(report.read_text())
        assert data["micro_f1"] == 1.0
        assert data["map"] == 1.0
        assert data["micro_auc"] == 1.0
        assert data["bucket_f1"]["1-10"] == 1.0

    def test_score_file_missing_document(self, corpus_dir, tmp_path):
        scores = tmp_path / "scores.jsonl"
        scores.write_text(json.dumps({"id": "s1", "scores": {}}) + "\n")
        code = main([
            "evaluate", "--scores", str(scores), "--kb", str(corpus_dir / "kb.txt"),
            "--corpus", str(corpus_dir / "test.jsonl"), "--report", str(tmp_path / "r.json"),
        ])
        assert code == EXIT_FAILURE


class TestInspect:
    def test_prints_attended_tokens(self, trained, capsys):
        code = main(["inspect", "--checkpoint", str(trained / "model.pt"), "--id", "s1", "--top-m", "2", "--threshold", "1e-9"])
        assert code == 0
        out = capsys.readouterr().out
        assert "Document s1 (8 tokens)" in out
        assert "038.9" in out

    def test_unknown_document(self, trained):
        assert main(["inspect", "--checkpoint", str(trained / "model.pt"), "--id", "nope"]) == EXIT_FAILURE


class TestSynthesize:
    def test_one_guideline_per_document(self, corpus_dir, tmp_path):
        out = tmp_path / "guidelines.jsonl"
        code = main([
            "synthesize", "--corpus", str(corpus_dir / "train.jsonl"), "--kb", str(corpus_dir / "kb.txt"),
            "--seed", "4", "--out", str(out),
        ])
        assert code == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert [r["id"] for r in records] == ["t1", "t2", "t3", "t4"]
        for record in records:
            assert sorted(s["code"] for s in record["segments"]) == sorted(record["codes"])
            assert record["guideline"] == "; ".join(s["text"] for s in record["segments"])

    def test_description_mode(self, corpus_dir, tmp_path):
        out = tmp_path / "guidelines.jsonl"
        code = main([
            "synthesize", "--corpus", str(corpus_dir / "test.jsonl"), "--kb", str(corpus_dir / "kb.txt"),
            "--knowledge", "desc", "--out", str(out),
        ])
        assert code == 0
        last = json.loads(out.read_text().splitlines()[-1])
        assert last["guideline"] == "long-term (current) use of anticoagulants"


class TestAblateAndRuns:
    def test_ablation_summary(self, run_config_file, tmp_path, capsys):
        out = tmp_path / "ablation"
        code = main([
            "ablate", "--config", str(run_config_file), "--out", str(out), "--no-progress",
            "--epochs", "1", "--seeds", "0", "--modes", "none", "desc+syn+hie",
        ])
        assert code == 0
        summary = json.loads((out / "ablation.json").read_text())
        assert summary["seeds"] == [0]
        assert set(summary["medians"]) == {"none", "desc+syn+hie"}
        assert "micro_f1_gain" in summary
        assert (out / "none" / "seed-0" / "test_report.json").is_file()
        assert (out / "ablation.txt").is_file()
        assert load_manifest(out / "manifest.json").command == "ablate"
        assert "desc+syn+hie" in capsys.readouterr().out

    def test_runs_listing(self, trained, capsys):
        capsys.readouterr()
        assert main(["runs", "--command", "train"]) == 0
        out = capsys.readouterr().out
        assert "finished" in out
        assert "desc+syn+hie" in out

    def test_runs_without_tracking(self, monkeypatch):
        monkeypatch.setenv("GKI_TRACK_RUNS", "false")
        get_settings.cache_clear()
        assert main(["runs"]) == 0
