"""Synthetic corpus generation."""

from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.data.corpus import code_frequencies, load_corpus
from src.data.synthetic import SyntheticSpec, generate_synthetic_corpus, write_synthetic_corpus
from src.knowledge.knowledge_base import load_knowledge_base

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SMALL = SyntheticSpec(num_codes=20, num_train=60, num_dev=10, num_test=10, vocab_size=50, seed=5)


class TestGenerate:
    def test_sizes(self):
        corpus = generate_synthetic_corpus(SMALL)
        assert len(corpus.kb) == 20
        assert (len(corpus.train), len(corpus.dev), len(corpus.test)) == (60, 10, 10)

    def test_deterministic(self):
        first = generate_synthetic_corpus(SMALL)
        second = generate_synthetic_corpus(SMALL)
        assert first.train == second.train
        assert first.kb.label_space == second.kb.label_space

    def test_seed_changes_corpus(self):
        other = generate_synthetic_corpus(SMALL.model_copy(update={"seed": 6}))
        assert other.train != generate_synthetic_corpus(SMALL).train

    def test_every_code_has_an_evidence_sentence(self):
        corpus = generate_synthetic_corpus(SMALL)
        for document in corpus.train + corpus.test:
            assert set(document.evidence) == {code.value for code in document.codes}
            for value, (start, end) in document.evidence.items():
                sentence = document.text[start:end]
                synonyms = corpus.kb.entry(corpus.kb.resolve(value)).synonyms
                assert any(synonym in sentence for synonym in synonyms)
                assert sentence.endswith(" .")

    def test_codes_per_doc_range(self):
        corpus = generate_synthetic_corpus(SMALL)
        for document in corpus.train:
            assert 1 <= len(document.codes) <= 4
            assert len(set(document.codes)) == len(document.codes)

    def test_long_tail(self):
        spec = SMALL.model_copy(update={"num_train": 600})
        corpus = generate_synthetic_corpus(spec)
        counts = Counter(code for document in corpus.train for code in document.codes)
        frequencies = sorted(counts.values(), reverse=True)
        assert frequencies[0] > 5 * frequencies[-1]

    def test_hierarchy_general_first(self):
        corpus = generate_synthetic_corpus(SMALL)
        entry = corpus.kb.entry(corpus.kb.label_space[0])
        assert len(entry.hierarchy) == 2
        assert entry.hierarchy[0][0] == "001.00-001.04"

    def test_empty_train_split(self):
        corpus = generate_synthetic_corpus(SMALL.model_copy(update={"num_train": 0}))
        assert corpus.train == []


class TestReferenceSpec:
    def test_rarest_decile_is_rare(self):
        spec = SyntheticSpec.model_validate_json((CONFIGS / "reference_spec.json").read_text(encoding="utf-8"))
        corpus = generate_synthetic_corpus(spec)
        frequencies = np.sort(code_frequencies(corpus.train, corpus.kb))
        decile = frequencies[: len(frequencies) // 10]
        assert len(decile) == 10
        assert decile.max() <= 10

    def test_single_code_without_noise(self):
        spec = SyntheticSpec(
            num_codes=1, num_train=5, num_dev=1, num_test=1, noise_sentences_per_doc=(0, 0), hierarchy_depth=0
        )
        corpus = generate_synthetic_corpus(spec)
        (code,) = corpus.kb.label_space
        for document in corpus.train:
            assert document.codes == (code,)
            assert document.text.count(" .") == 1
            assert document.evidence == {code.value: (0, len(document.text))}
            assert any(synonym in document.text for synonym in corpus.kb.entry(code).synonyms)


class TestSpecValidation:
    @pytest.mark.parametrize(
        "fields",
        [
            {"zipf_exponent": 0.0},
            {"num_codes": 0},
            {"codes_per_doc": [3, 1]},
            {"codes_per_doc": [0, 2]},
            {"unknown_field": 1},
        ],
    )
    def test_rejected(self, fields):
        with pytest.raises(ValidationError):
            SyntheticSpec.model_validate(fields)


class TestWrite:
    def test_files_load_back(self, tmp_path):
        corpus = generate_synthetic_corpus(SMALL)
        paths = write_synthetic_corpus(corpus, tmp_path / "synth")
        assert set(paths) == {"kb", "train", "dev", "test"}
        kb = load_knowledge_base(paths["kb"])
        assert kb.label_space == corpus.kb.label_space
        assert load_corpus(paths["dev"], kb) == corpus.dev
