"""Shared fixtures: a toy knowledge base, a toy corpus and tiny model settings."""

import json
from pathlib import Path

import pytest

from src.config import ModelConfig, TrainingConfig, get_settings
from src.database import repository as repository_module
from src.knowledge.knowledge_base import load_knowledge_base

TOY_KB = """\
# code | description | synonyms | hierarchy
401.9 | Unspecified essential hypertension | Primary hypertension; Hypertension NOS | 401-405:Hypertensive disease; 390-459:Diseases of the circulatory system
038.9 | Unspecified septicemia | Septicemia NOS; Blood poisoning | 001-139:Infectious and parasitic diseases; 030-041:Other bacterial diseases
250.00 | Diabetes mellitus without mention of complication | Type 2 diabetes | 240-279:Endocrine, nutritional and metabolic diseases
96.71 | Continuous invasive mechanical ventilation for less than 96 consecutive hours | Mechanical ventilation |
V58.61 | Long-term (current) use of anticoagulants
"""

TOY_DOCS = {
    "train": [
        {"id": "t1", "text": "Patient has primary hypertension and takes warfarin daily.", "codes": ["401.9", "V58.61"]},
        {"id": "t2", "text": "Admitted with sepsis, blood cultures positive. Intubated.", "codes": ["038.9", "96.71"]},
        {"id": "t3", "text": "Type 2 diabetes, diet controlled. Hypertension noted.", "codes": ["250.00", "401.9"]},
        {"id": "t4", "text": "Septicemia treated with antibiotics.", "codes": ["038.9"]},
    ],
    "dev": [
        {"id": "d1", "text": "Essential hypertension follow up.", "codes": ["401.9"]},
        {"id": "d2", "text": "Mechanical ventilation for respiratory failure.", "codes": ["96.71", "038.9"]},
    ],
    "test": [
        {
            "id": "s1",
            "text": "History of diabetes. Blood poisoning suspected.",
            "codes": ["250.00", "038.9"],
            "evidence": {"038.9": [20, 47]},
        },
        {"id": "s2", "text": "Long term anticoagulation with warfarin.", "codes": ["V58.61"]},
    ],
}


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Fresh settings per test, run registry in a temporary database."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("GKI_SEED", raising=False)
    monkeypatch.setenv("GKI_DATABASE_URL", f"sqlite:///{tmp_path / 'runs.db'}")
    monkeypatch.setenv("GKI_TRACK_RUNS", "true")
    get_settings.cache_clear()
    repository_module.close_repository()
    yield
    repository_module.close_repository()
    get_settings.cache_clear()


@pytest.fixture
def kb_file(tmp_path) -> Path:
    path = tmp_path / "kb.txt"
    path.write_text(TOY_KB, encoding="utf-8")
    return path


@pytest.fixture
def toy_kb(kb_file):
    return load_knowledge_base(kb_file)


@pytest.fixture
def corpus_dir(tmp_path, kb_file) -> Path:
    for split, docs in TOY_DOCS.items():
        lines = [json.dumps(doc) for doc in docs]
        (tmp_path / f"{split}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return tmp_path


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    return ModelConfig(hidden_dim=16, chunk_size=8, layers=1, heads=2, ffn_dim=32, dropout=0.0)


@pytest.fixture
def fast_training_config() -> TrainingConfig:
    return TrainingConfig(
        learning_rate=1e-2,
        epochs=2,
        warmup_steps=0,
        batch_size=2,
        eval_batch_size=4,
        rdrop_alpha=0.0,
        seed=3,
    )


@pytest.fixture
def run_config_file(corpus_dir, tiny_model_config, fast_training_config) -> Path:
    config = {
        "corpus": {"train": "train.jsonl", "dev": "dev.jsonl", "test": "test.jsonl", "kb": "kb.txt"},
        "model": tiny_model_config.model_dump(),
        "training": fast_training_config.model_dump(),
    }
    path = corpus_dir / "run.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path
